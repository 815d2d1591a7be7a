#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "layersafe/certify.hpp"
#include "layersafe/dynamics.hpp"
#include "layersafe/scenario.hpp"

namespace layersafe {

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// `# layersafe scenario <digest>` followed by the resolved config as comment lines.
std::string provenance_header(const Scenario& s);

/// Header `t,x1..xN,z1..zn,zdot1..,zsdot1..,e1..,edot1..,u1..uM,h,V,hV`, one row per
/// sample, 17 significant digits.
std::string trajectory_csv(const Trajectory& traj, std::string_view header = {});

/// One `point ...` record per lattice point followed by a summary block.
std::string certificate_text(const CertificateReport& report);

/// z1,z2[,v1,v2],verdict,in_S_V,h0,h_V0,min_h
std::string point_cloud_csv(const CertificateReport& report);

/// Stand-alone matplotlib script that plots the case-study CSVs in its directory.
std::string plot_script();

std::string format_g17(double v);

}  // namespace layersafe
