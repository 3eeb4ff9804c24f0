#include "teardrop/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace teardrop::io {

namespace {

json vec3_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string trajectory_csv(const Trajectory& trajectory, const char* header) {
  std::string out(header);
  out.push_back('\n');
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    out += format_full(trajectory.epochs[i]);
    const Vec6 row = trajectory.states[i].vec();
    for (int c = 0; c < 6; ++c) {
      out.push_back(',');
      out += format_full(row(c));
    }
    out.push_back('\n');
  }
  return out;
}

json drift_record_json(const DriftRecord& record) {
  json j;
  j["design_model"] = to_string(record.design_model);
  j["complete"] = record.complete;
  j["periods_recorded"] = record.entries.size();
  double max_drift = 0.0;
  double total_dv = 0.0;
  for (const DriftEntry& e : record.entries) {
    max_drift = std::max(max_drift, e.drift_km);
    total_dv += e.dv_mps;
  }
  j["max_drift_km"] = max_drift;
  j["total_dv_mps"] = total_dv;
  return j;
}

}  // namespace

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp);
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw std::runtime_error("write failed: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("rename failed: " + path);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string hash_file(const std::string& path) {
  return fnv1a64_hex(read_text(path));
}

json constants_json() {
  json j;
  j["mu"] = kConstants.mass_ratio;
  j["length_unit_km"] = kConstants.length_unit_km;
  j["time_unit_s"] = kConstants.time_unit_s;
  j["earth_radius_km"] = kConstants.earth_radius_km;
  j["moon_radius_km"] = kConstants.moon_radius_km;
  j["synodic_period_s"] = kConstants.synodic_period_s;
  return j;
}

std::string orbit_json_text(const PeriodicOrbit& orbit) {
  std::string out = "{\n";
  const auto field = [&out](const char* name, double value, bool last) {
    out += "  \"";
    out += name;
    out += "\": ";
    out += format_full(value);
    out += last ? "\n" : ",\n";
  };
  field("x0", orbit.initial_state.x, false);
  field("z0", orbit.initial_state.z, false);
  field("v0", orbit.initial_state.v, false);
  field("period", orbit.period, false);
  field("closure_norm", orbit.closure_norm, false);
  field("jacobi", orbit.jacobi, true);
  out += "}\n";
  return out;
}

PeriodicOrbit orbit_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  for (const char* key :
       {"x0", "z0", "v0", "period", "closure_norm", "jacobi"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("orbit JSON missing key: ") +
                                  key);
    }
  }
  PeriodicOrbit orbit;
  orbit.initial_state = StateVector{j["x0"].get<double>(), 0.0,
                                    j["z0"].get<double>(), 0.0,
                                    j["v0"].get<double>(), 0.0};
  orbit.period = j["period"].get<double>();
  orbit.closure_norm = j["closure_norm"].get<double>();
  orbit.jacobi = j["jacobi"].get<double>();
  orbit.refined = true;
  return orbit;
}

std::string absolute_trajectory_csv(const Trajectory& trajectory) {
  return trajectory_csv(trajectory, "t,x,y,z,u,v,w");
}

std::string relative_trajectory_csv(const Trajectory& trajectory) {
  return trajectory_csv(trajectory, "t,dx,dy,dz,du,dv,dw");
}

json trajectory_sidecar_json(const PeriodicOrbit& chief,
                             const Tolerances& tol) {
  json j;
  j["chief_orbit"] = json::parse(orbit_json_text(chief));
  j["tolerances"] = {{"abs_tol", tol.abs_tol}, {"rel_tol", tol.rel_tol}};
  j["units"] = {{"time", "TU"}, {"length", "LU"}, {"velocity", "LU/TU"}};
  j["constants"] = constants_json();
  return j;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "alpha,beta,dv_mps,converged,iterations,residual_norm\n";
  for (std::size_t ai = 0; ai < sweep.alpha_grid.size(); ++ai) {
    for (std::size_t bi = 0; bi < sweep.beta_grid.size(); ++bi) {
      const TeardropSolution& s = sweep.solutions[sweep.index(ai, bi)];
      out += format_full(sweep.alpha_grid[ai]);
      out.push_back(',');
      out += format_full(sweep.beta_grid[bi]);
      out.push_back(',');
      out += format_full(s.impulse_mag_mps);
      out.push_back(',');
      out += s.converged ? '1' : '0';
      out.push_back(',');
      out += std::to_string(s.iterations);
      out.push_back(',');
      out += format_full(s.residual.norm);
      out.push_back('\n');
    }
  }
  return out;
}

json sweep_summary_json(const SweepResult& sweep) {
  json j;
  j["rho_km"] = sweep.rho_km;
  j["alpha_cells"] = sweep.alpha_grid.size();
  j["beta_cells"] = sweep.beta_grid.size();
  j["total_cells"] = sweep.solutions.size();
  j["failed_cells"] = sweep.failures.size();
  const MinImpulseCell best = min_impulse(sweep);
  j["min_impulse"] = {{"alpha", best.alpha},
                      {"beta", best.beta},
                      {"dv_mps", best.solution.impulse_mag_mps},
                      {"dv0", vec3_json(best.solution.dv0)}};
  return j;
}

json solution_json(const TeardropSolution& solution,
                   const PeriodicOrbit& orbit) {
  json j;
  j["spec"] = {{"rho_km", solution.spec.rho_km},
               {"alpha", solution.spec.alpha},
               {"beta", solution.spec.beta},
               {"revisit_period", solution.spec.revisit_period}};
  j["dv0"] = vec3_json(solution.dv0);
  j["dv_mps"] = solution.impulse_mag_mps;
  j["impulse"] = {{"vec", vec3_json(solution.impulse_vec)},
                  {"magnitude", solution.impulse_mag},
                  {"magnitude_mps", solution.impulse_mag_mps}};
  j["residual"] = {{"psi", vec3_json(solution.residual.psi)},
                   {"norm", solution.residual.norm}};
  j["converged"] = solution.converged;
  j["iterations"] = solution.iterations;
  j["chief_orbit"] = json::parse(orbit_json_text(orbit));
  return j;
}

TeardropSolution solution_from_json(const json& j, PeriodicOrbit* chief_out) {
  TeardropSolution s;
  const json& spec = j.at("spec");
  s.spec.rho_km = spec.at("rho_km").get<double>();
  s.spec.alpha = spec.at("alpha").get<double>();
  s.spec.beta = spec.at("beta").get<double>();
  s.spec.revisit_period = spec.at("revisit_period").get<double>();
  s.dv0 = vec3_from(j.at("dv0"));
  const json& imp = j.at("impulse");
  s.impulse_vec = vec3_from(imp.at("vec"));
  s.impulse_mag = imp.at("magnitude").get<double>();
  s.impulse_mag_mps = imp.at("magnitude_mps").get<double>();
  const json& res = j.at("residual");
  s.residual.psi = vec3_from(res.at("psi"));
  s.residual.norm = res.at("norm").get<double>();
  s.converged = j.at("converged").get<bool>();
  s.iterations = j.at("iterations").get<int>();
  if (chief_out != nullptr) {
    *chief_out = orbit_from_json_text(j.at("chief_orbit").dump());
  }
  return s;
}

std::string family_csv(const Family& family) {
  std::string out = "rho_km,dv_mps,dv_x,dv_y,dv_z,residual_norm,iterations\n";
  for (const TeardropSolution& m : family.members) {
    out += format_full(m.spec.rho_km);
    out.push_back(',');
    out += format_full(m.impulse_mag_mps);
    for (int c = 0; c < 3; ++c) {
      out.push_back(',');
      out += format_full(convert_units(m.impulse_vec(c), UnitKind::kVelocity,
                                       UnitDirection::kToDimensional));
    }
    out.push_back(',');
    out += format_full(m.residual.norm);
    out.push_back(',');
    out += std::to_string(m.iterations);
    out.push_back('\n');
  }
  return out;
}

json family_json(const Family& family, const PeriodicOrbit& orbit) {
  json j;
  j["config"] = {{"delta_rho_km", family.config.delta_rho_km},
                 {"max_steps", family.config.max_steps},
                 {"eps_tol", family.config.eps_tol},
                 {"retry_halving", family.config.retry_halving}};
  j["termination_reason"] = to_string(family.termination_reason);
  j["member_count"] = family.members.size();
  json members = json::array();
  for (const TeardropSolution& m : family.members) {
    members.push_back(solution_json(m, orbit));
  }
  j["members"] = std::move(members);
  return j;
}

Family family_from_json(const json& j, PeriodicOrbit* chief_out) {
  Family family;
  const json& cfg = j.at("config");
  family.config.delta_rho_km = cfg.at("delta_rho_km").get<double>();
  family.config.max_steps = cfg.at("max_steps").get<int>();
  family.config.eps_tol = cfg.at("eps_tol").get<double>();
  family.config.retry_halving = cfg.at("retry_halving").get<bool>();
  const std::string reason = j.at("termination_reason").get<std::string>();
  if (reason == "target-reached") {
    family.termination_reason = TerminationReason::kTargetReached;
  } else if (reason == "residual-exceeded") {
    family.termination_reason = TerminationReason::kResidualExceeded;
  } else if (reason == "max-steps") {
    family.termination_reason = TerminationReason::kMaxSteps;
  } else {
    throw std::invalid_argument("unknown termination reason: " + reason);
  }
  bool first = true;
  for (const json& mj : j.at("members")) {
    family.members.push_back(
        solution_from_json(mj, first ? chief_out : nullptr));
    first = false;
  }
  return family;
}

std::string drift_csv(const ComparisonReport& report) {
  std::string out =
      "period_index,t_j,drift_km_linear,drift_km_nonlinear,dv_mps_linear,"
      "dv_mps_nonlinear\n";
  const std::size_t rows =
      std::max(report.linear.entries.size(), report.nonlinear.entries.size());
  for (std::size_t k = 0; k < rows; ++k) {
    const DriftEntry* lin =
        k < report.linear.entries.size() ? &report.linear.entries[k] : nullptr;
    const DriftEntry* non = k < report.nonlinear.entries.size()
                                ? &report.nonlinear.entries[k]
                                : nullptr;
    const DriftEntry* any = lin != nullptr ? lin : non;
    out += std::to_string(any->period_index);
    out.push_back(',');
    out += format_full(any->epoch);
    out.push_back(',');
    if (lin != nullptr) out += format_full(lin->drift_km);
    out.push_back(',');
    if (non != nullptr) out += format_full(non->drift_km);
    out.push_back(',');
    if (lin != nullptr) out += format_full(lin->dv_mps);
    out.push_back(',');
    if (non != nullptr) out += format_full(non->dv_mps);
    out.push_back('\n');
  }
  return out;
}

std::string drift_long_csv(const ComparisonReport& report) {
  std::string out = "model,period_index,t_j,drift_km,dv_mps\n";
  const auto append = [&out](const DriftRecord& record) {
    const std::string name = to_string(record.design_model);
    for (const DriftEntry& e : record.entries) {
      out += name;
      out.push_back(',');
      out += std::to_string(e.period_index);
      out.push_back(',');
      out += format_full(e.epoch);
      out.push_back(',');
      out += format_full(e.drift_km);
      out.push_back(',');
      out += format_full(e.dv_mps);
      out.push_back('\n');
    }
  };
  append(report.linear);
  append(report.nonlinear);
  return out;
}

json drift_summary_json(const ComparisonReport& report) {
  json j;
  j["spec"] = {{"rho_km", report.nonlinear.spec.rho_km},
               {"alpha", report.nonlinear.spec.alpha},
               {"beta", report.nonlinear.spec.beta}};
  j["linear"] = drift_record_json(report.linear);
  j["nonlinear"] = drift_record_json(report.nonlinear);
  j["summary"] = {
      {"max_drift_ratio", report.summary.max_drift_ratio},
      {"mean_drift_ratio", report.summary.mean_drift_ratio},
      {"total_dv_linear_mps", report.summary.total_dv_linear_mps},
      {"total_dv_nonlinear_mps", report.summary.total_dv_nonlinear_mps}};
  return j;
}

std::string dv_table_csv(const std::vector<DvRhoRow>& table) {
  std::string out = "rho_km,dv_mps,dv_mps_linear,deviation_mps\n";
  for (const DvRhoRow& row : table) {
    out += format_full(row.rho_km);
    out.push_back(',');
    out += format_full(row.dv_mps);
    out.push_back(',');
    out += format_full(row.dv_mps_linear);
    out.push_back(',');
    out += format_full(row.deviation_mps);
    out.push_back('\n');
  }
  return out;
}

json spectrum_json(const MonodromySpectrum& spectrum) {
  json eigenvalues = json::array();
  for (const auto& ev : spectrum.eigenvalues) {
    eigenvalues.push_back({{"re", ev.real()}, {"im", ev.imag()}});
  }
  json j;
  j["eigenvalues"] = std::move(eigenvalues);
  j["reciprocal_pair"] = spectrum.reciprocal_pair;
  j["near_unit_pair"] = spectrum.near_unit_pair;
  j["conjugate_pair"] = spectrum.conjugate_pair;
  return j;
}

json monodromy_json(const PeriodicOrbit& orbit, const Stm& m,
                    const MonodromySpectrum& spectrum,
                    const Vec6& unit_vector) {
  json matrix = json::array();
  for (int r = 0; r < 6; ++r) {
    json row = json::array();
    for (int c = 0; c < 6; ++c) row.push_back(m.matrix(r, c));
    matrix.push_back(std::move(row));
  }
  json uv = json::array();
  for (int c = 0; c < 6; ++c) uv.push_back(unit_vector(c));
  json j;
  j["orbit"] = json::parse(orbit_json_text(orbit));
  j["matrix"] = std::move(matrix);
  j["determinant"] = m.determinant();
  j["spectrum"] = spectrum_json(spectrum);
  j["unit_eigenvector"] = std::move(uv);
  return j;
}

json manifest_json(const ManifestInfo& info) {
  json inputs = json::object();
  for (const auto& [path, hash] : info.input_hashes) {
    inputs[path] = hash;
  }
  json j;
  j["tool"] = "teardrop";
  j["version"] = "1.0.0";
  j["verb"] = info.verb;
  j["status"] = info.status;
  j["constants"] = constants_json();
  j["tolerances"] = {{"abs_tol", info.tolerances.abs_tol},
                     {"rel_tol", info.tolerances.rel_tol}};
  j["inputs"] = std::move(inputs);
  j["wall_seconds"] = info.wall_seconds;
  j["timestamp_utc"] = info.timestamp_utc;
  return j;
}

}  // namespace teardrop::io
