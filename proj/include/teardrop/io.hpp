#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "teardrop/analysis.hpp"

namespace teardrop::io {

using json = nlohmann::ordered_json;

// Full-precision decimal rendering (17 significant digits) used in every
// CSV so that values round-trip exactly.
std::string format_full(double value);

// Writes content to path via a temp file in the same directory plus an
// atomic rename, so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// FNV-1a 64-bit content hash, lowercase hex; used for input provenance.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string hash_file(const std::string& path);

// Table-1 constants echoed into sidecars and manifests.
json constants_json();

// Periodic-orbit export/import: exactly the keys
// {x0, z0, v0, period, closure_norm, jacobi} at 17 significant digits.
std::string orbit_json_text(const PeriodicOrbit& orbit);
PeriodicOrbit orbit_from_json_text(const std::string& text);

// Absolute trajectory: header t,x,y,z,u,v,w.
std::string absolute_trajectory_csv(const Trajectory& trajectory);
// Relative trajectory: header t,dx,dy,dz,du,dv,dw.
std::string relative_trajectory_csv(const Trajectory& trajectory);
// Sidecar naming the chief orbit, the tolerances, and the units.
json trajectory_sidecar_json(const PeriodicOrbit& chief,
                             const Tolerances& tol);

// Sweep export: header alpha,beta,dv_mps,converged,iterations,residual_norm,
// rows in grid order (alpha outer).
std::string sweep_csv(const SweepResult& sweep);
json sweep_summary_json(const SweepResult& sweep);

// Design solution export: spec, velocity offset, impulse, residual, and the
// chief orbit it was built on.
json solution_json(const TeardropSolution& solution,
                   const PeriodicOrbit& orbit);
TeardropSolution solution_from_json(const json& j,
                                    PeriodicOrbit* chief_out = nullptr);

// Family export: CSV rho_km,dv_mps,dv_x,dv_y,dv_z,residual_norm,iterations
// (impulse vector components in m/s) plus a JSON with per-member solutions.
std::string family_csv(const Family& family);
json family_json(const Family& family, const PeriodicOrbit& orbit);
Family family_from_json(const json& j, PeriodicOrbit* chief_out = nullptr);

// Drift comparison export: wide CSV
// period_index,t_j,drift_km_linear,drift_km_nonlinear,dv_mps_linear,
// dv_mps_nonlinear; long CSV model,period_index,t_j,drift_km,dv_mps; and a
// JSON summary.
std::string drift_csv(const ComparisonReport& report);
std::string drift_long_csv(const ComparisonReport& report);
json drift_summary_json(const ComparisonReport& report);

// Impulse-versus-distance table: header
// rho_km,dv_mps,dv_mps_linear,deviation_mps.
std::string dv_table_csv(const std::vector<DvRhoRow>& table);

json spectrum_json(const MonodromySpectrum& spectrum);
json monodromy_json(const PeriodicOrbit& orbit, const Stm& m,
                    const MonodromySpectrum& spectrum,
                    const Vec6& unit_vector);

// Provenance record written alongside every output set.
struct ManifestInfo {
  std::string verb;
  std::string status = "success";
  Tolerances tolerances;
  std::vector<std::pair<std::string, std::string>> input_hashes;
  double wall_seconds = 0.0;
  std::string timestamp_utc;
};
json manifest_json(const ManifestInfo& info);

}  // namespace teardrop::io
