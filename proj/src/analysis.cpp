#include "teardrop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace teardrop {

std::string to_string(DesignModel model) {
  return model == DesignModel::kLinear ? "linear" : "nonlinear";
}

DriftRecord simulate_hover(const RevisitSpec& spec, const Vec3& dv0_design,
                           int n_periods, const PeriodicOrbit& orbit,
                           const Tolerances& tol) {
  if (n_periods < 1) {
    throw std::invalid_argument("simulate_hover: n_periods must be >= 1");
  }
  if (!orbit.refined) {
    throw std::invalid_argument("simulate_hover: orbit must be refined");
  }
  if (!dv0_design.allFinite()) {
    throw std::invalid_argument("simulate_hover: dv0 must be finite");
  }
  const Vec3 dr0 = revisit_position(spec.rho_km, spec.alpha, spec.beta);
  const Tolerances itol = detail::clamped(tol, detail::kMappingGradeTol);
  const StateVector& chief0 = orbit.initial_state;

  DriftRecord record;
  record.spec = spec;
  record.dv0_design = dv0_design;
  record.entries.reserve(static_cast<std::size_t>(n_periods));

  Vec6 state = chief0.vec();
  state.head<3>() += dr0;
  state.tail<3>() += dv0_design;

  Vec3 dv_nominal = Vec3::Zero();
  double dv_nominal_mps = 0.0;

  for (int j = 1; j <= n_periods; ++j) {
    StateVector end;
    try {
      end = propagate_state(StateVector::from(state), 0.0, orbit.period, itol);
    } catch (const std::exception&) {
      record.complete = false;
      return record;
    }
    const Vec3 offset_r = end.position() - chief0.position();
    const Vec3 offset_v = end.velocity() - chief0.velocity();
    if (j == 1) {
      // The designed per-revisit impulse, measured on the departure leg;
      // the same vector is re-applied at every later revisit.
      dv_nominal = dv0_design - offset_v;
      dv_nominal_mps = convert_units(dv_nominal.norm(), UnitKind::kVelocity,
                                     UnitDirection::kToDimensional);
    }
    DriftEntry entry;
    entry.period_index = j;
    entry.epoch = static_cast<double>(j) * orbit.period;
    entry.offset = offset_r;
    entry.drift_km = (offset_r - dr0).norm() * kKmPerLu;
    entry.dv_mps = dv_nominal_mps;
    record.entries.push_back(entry);

    state = end.vec();
    state.tail<3>() += dv_nominal;
  }
  return record;
}

ComparisonReport compare_models(const RevisitSpec& spec, int n_periods,
                                const PeriodicOrbit& orbit) {
  if (!orbit.refined) {
    throw std::invalid_argument("compare_models: orbit must be refined");
  }
  const Stm m = monodromy(orbit);
  const Vec3 dr0 = revisit_position(spec.rho_km, spec.alpha, spec.beta);
  const Vec3 dv_linear = linear_velocity_guess(dr0, m);
  const TeardropSolution sol = correct_teardrop(spec, dv_linear, orbit);
  if (!sol.converged) {
    throw CorrectionError(
        "compare_models: differential correction did not converge");
  }

  ComparisonReport report;
  report.linear = simulate_hover(spec, dv_linear, n_periods, orbit);
  report.linear.design_model = DesignModel::kLinear;
  report.nonlinear = simulate_hover(spec, sol.dv0, n_periods, orbit);
  report.nonlinear.design_model = DesignModel::kNonlinear;

  ComparisonSummary& s = report.summary;
  const std::size_t common =
      std::min(report.linear.entries.size(), report.nonlinear.entries.size());
  for (std::size_t k = 0; k < common; ++k) {
    const double ratio = report.linear.entries[k].drift_km /
                         report.nonlinear.entries[k].drift_km;
    s.max_drift_ratio = std::max(s.max_drift_ratio, ratio);
    s.mean_drift_ratio += ratio;
  }
  if (common > 0) s.mean_drift_ratio /= static_cast<double>(common);
  for (const DriftEntry& e : report.linear.entries) {
    s.total_dv_linear_mps += e.dv_mps;
  }
  for (const DriftEntry& e : report.nonlinear.entries) {
    s.total_dv_nonlinear_mps += e.dv_mps;
  }
  return report;
}

std::vector<DvRhoRow> dv_vs_rho(const Family& family,
                                const PeriodicOrbit& orbit) {
  if (family.members.empty()) {
    throw std::invalid_argument("dv_vs_rho: family must be nonempty");
  }
  if (!orbit.refined) {
    throw std::invalid_argument("dv_vs_rho: orbit must be refined");
  }
  const Stm m = monodromy(orbit);
  const RevisitSpec& anchor = family.members.front().spec;

  // Per-kilometer linear-model impulse along this (alpha, beta) direction.
  const Vec3 dr_unit = revisit_position(1.0, anchor.alpha, anchor.beta);
  const Vec3 dv_unit = linear_velocity_guess(dr_unit, m);
  const Vec3 imp_unit =
      (Mat3::Identity() - m.vv()) * dv_unit - m.vr() * dr_unit;
  const double linear_mps_per_km = convert_units(
      imp_unit.norm(), UnitKind::kVelocity, UnitDirection::kToDimensional);

  std::vector<DvRhoRow> table;
  table.reserve(family.members.size());
  for (const TeardropSolution& member : family.members) {
    DvRhoRow row;
    row.rho_km = member.spec.rho_km;
    row.dv_mps = member.impulse_mag_mps;
    row.dv_mps_linear = member.spec.rho_km * linear_mps_per_km;
    row.deviation_mps = row.dv_mps - row.dv_mps_linear;
    table.push_back(row);
  }
  return table;
}

}  // namespace teardrop
