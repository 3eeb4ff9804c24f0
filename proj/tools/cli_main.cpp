// Command-line front end: each verb maps to one library operation and writes
// its outputs plus a provenance manifest into the output directory.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "teardrop/io.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace {

namespace fs = std::filesystem;
using teardrop::io::json;

constexpr double kDegToRad = teardrop::kPi / 180.0;

// Reads JSON config files for CLI11: top-level keys are main-app flags,
// one level of nesting addresses a subcommand's flags.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_lnames().empty() && opt->get_configurable()) {
        if (!opt->results().empty()) {
          j[opt->get_lnames()[0]] = opt->results().front();
        } else if (default_also && !opt->get_default_str().empty()) {
          j[opt->get_lnames()[0]] = opt->get_default_str();
        }
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const std::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") +
                           e.what());
    }
    if (!j.is_object()) {
      throw CLI::FileError("config root must be a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [sub_key, sub_value] : value.items()) {
          CLI::ConfigItem item;
          item.parents = {key};
          item.name = sub_key;
          item.inputs = {to_input(sub_value)};
          items.push_back(std::move(item));
        }
      } else {
        CLI::ConfigItem item;
        item.name = key;
        item.inputs = {to_input(value)};
        items.push_back(std::move(item));
      }
    }
    return items;
  }

 private:
  static std::string to_input(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    return value.dump();
  }
};

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct CommonState {
  std::string out_dir = ".";
  std::string orbit_file;  // optional precomputed orbit
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  bool degrees = false;
  std::vector<std::pair<std::string, std::string>> input_hashes;

  teardrop::Tolerances tolerances() const {
    return teardrop::Tolerances{abs_tol, rel_tol, 0.0};
  }

  double angle(double value) const {
    return degrees ? value * kDegToRad : value;
  }

  void note_input(const std::string& path) {
    input_hashes.emplace_back(path, teardrop::io::hash_file(path));
  }

  // Loads the orbit from --orbit-file when given, otherwise refines the
  // built-in initial guess.
  teardrop::PeriodicOrbit load_orbit() {
    if (!orbit_file.empty()) {
      note_input(orbit_file);
      return teardrop::io::orbit_from_json_text(
          teardrop::io::read_text(orbit_file));
    }
    return teardrop::refine_nrho(teardrop::nominal_orbit_guess(),
                                 tolerances());
  }

  std::string path_of(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }

  void write_manifest(const std::string& verb, const std::string& status,
                      double wall_seconds) const {
    teardrop::io::ManifestInfo info;
    info.verb = verb;
    info.status = status;
    info.tolerances = tolerances();
    info.input_hashes = input_hashes;
    info.wall_seconds = wall_seconds;
    info.timestamp_utc = utc_timestamp();
    teardrop::io::write_text_atomic(
        path_of(verb + "_manifest.json"),
        teardrop::io::manifest_json(info).dump(2) + "\n");
  }
};

struct VerbOptions {
  double rho_km = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_step = 0.0;
  double beta_step = 0.0;
  int periods = 10;
  int parallel = 0;
  std::string seed_file;
  std::string family_file;
  double target_rho_km = 0.0;
  teardrop::ContinuationConfig continuation;
};

int run_refine_orbit(CommonState& state) {
  const teardrop::PeriodicOrbit orbit =
      teardrop::refine_nrho(teardrop::nominal_orbit_guess(),
                            state.tolerances());
  teardrop::io::write_text_atomic(state.path_of("orbit.json"),
                                  teardrop::io::orbit_json_text(orbit));
  std::printf("refined orbit: closure %.3e, jacobi %.15f, %d iterations\n",
              orbit.closure_norm, orbit.jacobi, orbit.refine_iterations);
  return 0;
}

int run_monodromy(CommonState& state) {
  const teardrop::PeriodicOrbit orbit = state.load_orbit();
  const teardrop::Stm m = teardrop::monodromy(orbit);
  const teardrop::MonodromySpectrum spectrum = teardrop::spectrum(m);
  const teardrop::Vec6 unit_vec = teardrop::unit_eigenvector(m);
  teardrop::io::write_text_atomic(
      state.path_of("monodromy.json"),
      teardrop::io::monodromy_json(orbit, m, spectrum, unit_vec).dump(2) +
          "\n");
  std::printf("monodromy determinant %.12f\n", m.determinant());
  return 0;
}

int run_design(CommonState& state, const VerbOptions& opt) {
  const teardrop::PeriodicOrbit orbit = state.load_orbit();
  teardrop::RevisitSpec spec;
  spec.rho_km = opt.rho_km;
  spec.alpha = state.angle(opt.alpha);
  spec.beta = state.angle(opt.beta);
  spec.revisit_period = orbit.period;
  const teardrop::Vec3 dr0 =
      teardrop::revisit_position(spec.rho_km, spec.alpha, spec.beta);
  const teardrop::Vec3 guess =
      teardrop::linear_velocity_guess(dr0, teardrop::monodromy(orbit));
  const teardrop::TeardropSolution sol =
      teardrop::correct_teardrop(spec, guess, orbit);

  teardrop::io::write_text_atomic(
      state.path_of("design.json"),
      teardrop::io::solution_json(sol, orbit).dump(2) + "\n");

  // Relative trajectory of the designed formation, sampled for plotting.
  teardrop::Vec6 offset0;
  offset0 << dr0, sol.dv0;
  const auto [rel_end, rel_traj] = teardrop::nonlinear_relative(
      orbit.initial_state, teardrop::RelativeState::from(offset0),
      orbit.period, state.tolerances(), 1000, &orbit);
  (void)rel_end;
  teardrop::io::write_text_atomic(
      state.path_of("design_trajectory.csv"),
      teardrop::io::relative_trajectory_csv(rel_traj));
  teardrop::io::write_text_atomic(
      state.path_of("design_trajectory.json"),
      teardrop::io::trajectory_sidecar_json(orbit, state.tolerances())
              .dump(2) +
          "\n");

  std::printf("design: converged=%d dv=%.6e m/s residual=%.3e\n",
              sol.converged ? 1 : 0, sol.impulse_mag_mps, sol.residual.norm);
  if (!sol.converged) {
    std::fprintf(stderr, "design did not converge below 1e-9\n");
    return 1;
  }
  return 0;
}

int run_sweep(CommonState& state, const VerbOptions& opt) {
  const teardrop::PeriodicOrbit orbit = state.load_orbit();
#if defined(_OPENMP)
  if (opt.parallel > 0) omp_set_num_threads(opt.parallel);
#endif
  const teardrop::SweepResult sweep =
      teardrop::sweep_grid(opt.rho_km, state.angle(opt.alpha_step),
                           state.angle(opt.beta_step), orbit);
  teardrop::io::write_text_atomic(state.path_of("sweep.csv"),
                                  teardrop::io::sweep_csv(sweep));
  teardrop::io::write_text_atomic(
      state.path_of("sweep_summary.json"),
      teardrop::io::sweep_summary_json(sweep).dump(2) + "\n");
  std::printf("sweep: %zu cells, %zu failed\n", sweep.solutions.size(),
              sweep.failures.size());
  return 0;
}

int run_continue(CommonState& state, const VerbOptions& opt) {
  state.note_input(opt.seed_file);
  teardrop::PeriodicOrbit seed_orbit;
  const teardrop::TeardropSolution seed = teardrop::io::solution_from_json(
      json::parse(teardrop::io::read_text(opt.seed_file)), &seed_orbit);
  const teardrop::PeriodicOrbit orbit =
      teardrop::refine_nrho(teardrop::nominal_orbit_guess(),
                            state.tolerances());
  if (std::abs(orbit.initial_state.x - seed_orbit.initial_state.x) > 1e-12 ||
      std::abs(orbit.period - seed_orbit.period) > 1e-12) {
    throw std::invalid_argument(
        "seed file was built on a different chief orbit");
  }
  const teardrop::Family family =
      teardrop::continue_family(seed, opt.target_rho_km, opt.continuation,
                                orbit);
  teardrop::io::write_text_atomic(state.path_of("family.csv"),
                                  teardrop::io::family_csv(family));
  teardrop::io::write_text_atomic(
      state.path_of("family.json"),
      teardrop::io::family_json(family, orbit).dump(2) + "\n");
  std::printf("continuation: %zu members, %s\n", family.members.size(),
              teardrop::to_string(family.termination_reason).c_str());
  return 0;
}

int run_drift(CommonState& state, const VerbOptions& opt) {
  const teardrop::PeriodicOrbit orbit = state.load_orbit();
  teardrop::RevisitSpec spec;
  spec.rho_km = opt.rho_km;
  spec.alpha = state.angle(opt.alpha);
  spec.beta = state.angle(opt.beta);
  spec.revisit_period = orbit.period;
  const teardrop::ComparisonReport report =
      teardrop::compare_models(spec, opt.periods, orbit);
  teardrop::io::write_text_atomic(state.path_of("drift.csv"),
                                  teardrop::io::drift_csv(report));
  teardrop::io::write_text_atomic(state.path_of("drift_long.csv"),
                                  teardrop::io::drift_long_csv(report));
  teardrop::io::write_text_atomic(
      state.path_of("drift_summary.json"),
      teardrop::io::drift_summary_json(report).dump(2) + "\n");
  std::printf("drift: max ratio %.3e over %d periods\n",
              report.summary.max_drift_ratio, opt.periods);
  return 0;
}

int run_dv_table(CommonState& state, const VerbOptions& opt) {
  state.note_input(opt.family_file);
  teardrop::PeriodicOrbit family_orbit;
  const teardrop::Family family = teardrop::io::family_from_json(
      json::parse(teardrop::io::read_text(opt.family_file)), &family_orbit);
  const teardrop::PeriodicOrbit orbit =
      teardrop::refine_nrho(teardrop::nominal_orbit_guess(),
                            state.tolerances());
  const std::vector<teardrop::DvRhoRow> table =
      teardrop::dv_vs_rho(family, orbit);
  teardrop::io::write_text_atomic(state.path_of("dv_table.csv"),
                                  teardrop::io::dv_table_csv(table));
  std::printf("dv-table: %zu rows\n", table.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teardrop hovering-formation toolkit for the Earth-Moon "
               "9:2 synodic-resonant halo orbit"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (flags may be nested "
                                 "under a verb name; CLI flags override)");

  CommonState state;
  app.add_option("--out-dir", state.out_dir, "Output directory")
      ->envname("TEARDROP_OUT_DIR");
  app.add_option("--tol", state.abs_tol,
                 "Integration tolerance (absolute and relative)");
  app.add_flag("--degrees", state.degrees,
               "Interpret angles and angle steps in degrees");

  VerbOptions opt;

  CLI::App* refine = app.add_subcommand("refine-orbit",
                                        "Refine the reference orbit");

  CLI::App* mono = app.add_subcommand(
      "monodromy", "One-period state transition matrix and spectrum");
  mono->add_option("--orbit-file", state.orbit_file,
                   "Orbit JSON from refine-orbit");

  CLI::App* design = app.add_subcommand(
      "design", "Correct one teardrop formation design");
  design->add_option("--rho-km", opt.rho_km, "Revisit distance, km")
      ->required();
  design->add_option("--alpha", opt.alpha, "Revisit angle alpha")->required();
  design->add_option("--beta", opt.beta, "Revisit angle beta")->required();
  design->add_option("--orbit-file", state.orbit_file,
                     "Orbit JSON from refine-orbit");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Grid sweep of designs over the revisit sphere");
  sweep->add_option("--rho-km", opt.rho_km, "Revisit distance, km")
      ->required();
  sweep->add_option("--alpha-step", opt.alpha_step,
                    "Alpha grid step (must divide the full circle)")
      ->required();
  sweep->add_option("--beta-step", opt.beta_step,
                    "Beta grid step (must divide the full circle)")
      ->required();
  sweep->add_option("--parallel", opt.parallel, "Worker thread count");
  sweep->add_option("--orbit-file", state.orbit_file,
                    "Orbit JSON from refine-orbit");

  CLI::App* cont = app.add_subcommand(
      "continue", "Continue a design outward in revisit distance");
  cont->add_option("--seed-file", opt.seed_file,
                   "design.json of the converged seed")
      ->required();
  cont->add_option("--target-rho-km", opt.target_rho_km,
                   "Distance to continue to, km")
      ->required();
  cont->add_option("--delta-rho-km", opt.continuation.delta_rho_km,
                   "Continuation step, km");
  cont->add_option("--max-steps", opt.continuation.max_steps,
                   "Maximum correction attempts");
  cont->add_option("--eps-tol", opt.continuation.eps_tol,
                   "Residual tolerance for members");
  cont->add_flag("--retry-halving", opt.continuation.retry_halving,
                 "Retry failed steps with halved increments");

  CLI::App* drift = app.add_subcommand(
      "drift", "Long-horizon drift comparison of linear vs corrected designs");
  drift->add_option("--rho-km", opt.rho_km, "Revisit distance, km");
  drift->add_option("--alpha", opt.alpha, "Revisit angle alpha")->required();
  drift->add_option("--beta", opt.beta, "Revisit angle beta")->required();
  drift->add_option("--periods", opt.periods, "Revisit periods to simulate");
  drift->add_option("--orbit-file", state.orbit_file,
                    "Orbit JSON from refine-orbit");

  CLI::App* table = app.add_subcommand(
      "dv-table", "Impulse-versus-distance table for a continued family");
  table->add_option("--family-file", opt.family_file,
                    "family.json from continue")
      ->required();

  for (CLI::App* verb_app : app.get_subcommands(nullptr)) {
    verb_app->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  state.rel_tol = state.abs_tol;

  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&started]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  std::string verb;
  int code = 0;
  try {
    std::error_code dir_err;
    fs::create_directories(state.out_dir, dir_err);
    const CLI::Option* config_opt = app.get_config_ptr();
    const std::string config_path =
        (config_opt != nullptr && config_opt->count() > 0)
            ? config_opt->as<std::string>()
            : std::string();
    if (!config_path.empty()) state.note_input(config_path);

    if (refine->parsed()) {
      verb = "refine-orbit";
      code = run_refine_orbit(state);
    } else if (mono->parsed()) {
      verb = "monodromy";
      code = run_monodromy(state);
    } else if (design->parsed()) {
      verb = "design";
      code = run_design(state, opt);
    } else if (sweep->parsed()) {
      verb = "sweep";
      code = run_sweep(state, opt);
    } else if (cont->parsed()) {
      verb = "continue";
      code = run_continue(state, opt);
    } else if (drift->parsed()) {
      verb = "drift";
      code = run_drift(state, opt);
    } else if (table->parsed()) {
      verb = "dv-table";
      code = run_dv_table(state, opt);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    if (!verb.empty()) {
      try {
        state.write_manifest(verb, std::string("usage error: ") + e.what(),
                             elapsed());
      } catch (...) {
      }
    }
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (!verb.empty()) {
      try {
        state.write_manifest(verb, std::string("error: ") + e.what(),
                             elapsed());
      } catch (...) {
      }
    }
    return 1;
  }

  state.write_manifest(verb, code == 0 ? "success" : "numerical failure",
                       elapsed());
  return code;
}
