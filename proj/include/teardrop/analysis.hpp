#pragma once

#include <string>
#include <vector>

#include "teardrop/continuation.hpp"

namespace teardrop {

enum class DesignModel { kLinear, kNonlinear };

std::string to_string(DesignModel model);

// One revisit epoch of a hovering simulation.
struct DriftEntry {
  int period_index = 0;   // 1-based revisit counter
  double epoch = 0.0;     // TU since departure
  Vec3 offset = Vec3::Zero();  // actual deputy-minus-chief position, LU
  double drift_km = 0.0;  // |offset - designed offset|, km
  double dv_mps = 0.0;    // impulse magnitude applied at this revisit
};

// Uncorrected long-horizon hovering record for one designed velocity offset.
struct DriftRecord {
  DesignModel design_model = DesignModel::kNonlinear;
  RevisitSpec spec;
  Vec3 dv0_design = Vec3::Zero();
  std::vector<DriftEntry> entries;
  // False when propagation failed mid-horizon; entries then hold the periods
  // completed before the failure.
  bool complete = true;
};

struct ComparisonSummary {
  double max_drift_ratio = 0.0;   // max over periods of linear/nonlinear
  double mean_drift_ratio = 0.0;  // mean over the common period range
  double total_dv_linear_mps = 0.0;
  double total_dv_nonlinear_mps = 0.0;
};

// Side-by-side drift of the linear-designed and corrected formations.
struct ComparisonReport {
  DriftRecord linear;
  DriftRecord nonlinear;
  ComparisonSummary summary;
};

// One row of the impulse-versus-distance table.
struct DvRhoRow {
  double rho_km = 0.0;
  double dv_mps = 0.0;         // corrected design cost
  double dv_mps_linear = 0.0;  // linear-model prediction, proportional to rho
  double deviation_mps = 0.0;  // corrected minus linear
};

// Flies the deputy for n_periods revisit periods with no position control:
// at each revisit the designed impulse (computed once, at the first revisit
// of the nominal trajectory) is re-applied, and the accumulated position
// drift is recorded. The chief's revisit states use the orbit's exact
// closure so drift measures design error only.
DriftRecord simulate_hover(const RevisitSpec& spec, const Vec3& dv0_design,
                           int n_periods, const PeriodicOrbit& orbit,
                           const Tolerances& tol = {});

// Designs the formation both ways — the raw linear velocity guess and the
// differentially corrected solution — and simulates both for n_periods.
ComparisonReport compare_models(const RevisitSpec& spec, int n_periods,
                                const PeriodicOrbit& orbit);

// Tabulates corrected impulse cost against the linear-model prediction for
// every family member. The linear column is factored as rho times a
// per-kilometer cost so it is exactly proportional to rho.
std::vector<DvRhoRow> dv_vs_rho(const Family& family,
                                const PeriodicOrbit& orbit);

}  // namespace teardrop
