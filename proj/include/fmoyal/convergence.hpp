#pragma once

// Convergence sweeps of a scalar computation over truncation dimensions and
// damping schedules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fmoyal/fock.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

struct Estimate {
  cd value;
  double error_estimate = 0.0;
};

using SweepTarget = std::function<Estimate(std::size_t dim, const DampingSchedule&)>;

struct SweepRow {
  std::size_t dim = 0;
  std::size_t schedule_index = 0;
  Estimate estimate;
  /// |v_k - v_{k-1}| / max(|v_k|, 1); empty on the first row.
  std::optional<double> successive_difference;
};

struct SweepReport {
  std::vector<SweepRow> by_dim;       // first schedule, every dim
  std::vector<SweepRow> by_schedule;  // largest dim, every schedule
  bool dim_monotone = true;
  bool schedule_monotone = true;
  std::vector<std::string> warnings;
};

namespace detail {

// Differences must not grow; growth below the absolute floor is noise.
inline bool fill_differences(std::vector<SweepRow>& rows, double floor = 1e-12) {
  bool monotone = true;
  std::optional<double> last;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const cd v = rows[k].estimate.value;
    const double d = std::abs(v - rows[k - 1].estimate.value) / std::max(std::abs(v), 1.0);
    rows[k].successive_difference = d;
    if (last && d > *last && d > floor) monotone = false;
    last = d;
  }
  return monotone;
}

}  // namespace detail

inline SweepReport convergence_sweep(const SweepTarget& target, std::vector<std::size_t> dims,
                                     const std::vector<DampingSchedule>& schedules) {
  if (dims.empty()) throw ValidationError("convergence sweep needs at least one dim");
  if (schedules.empty()) throw ValidationError("convergence sweep needs at least one schedule");
  std::sort(dims.begin(), dims.end());

  SweepReport r;
  for (std::size_t dim : dims) r.by_dim.push_back({dim, 0, target(dim, schedules.front()), {}});
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    r.by_schedule.push_back({dims.back(), s, target(dims.back(), schedules[s]), {}});
  }
  r.dim_monotone = detail::fill_differences(r.by_dim);
  r.schedule_monotone = detail::fill_differences(r.by_schedule);

  if (dims.size() == 1) r.warnings.push_back("single dim: no convergence estimate over dim");
  if (schedules.size() == 1) {
    r.warnings.push_back("single schedule: no convergence estimate over damping");
  }
  if (!r.dim_monotone) r.warnings.push_back("non-monotone convergence over dim");
  if (!r.schedule_monotone) r.warnings.push_back("non-monotone convergence over damping");
  return r;
}

}  // namespace fmoyal
