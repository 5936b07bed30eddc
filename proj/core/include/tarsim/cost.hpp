#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tarsim/workflow.hpp"

namespace tarsim {

/// Unit review costs per phase and relevance.
struct CostStructure {
  double phase1_pos = 1.0;
  double phase1_neg = 1.0;
  double phase2_pos = 1.0;
  double phase2_neg = 1.0;

  static constexpr CostStructure uniform() noexcept { return {1.0, 1.0, 1.0, 1.0}; }
  /// Training review ten times as expensive as second-phase review.
  static constexpr CostStructure expensive_training() noexcept { return {10.0, 10.0, 1.0, 1.0}; }

  friend bool operator==(const CostStructure&, const CostStructure&) = default;
};

inline constexpr double kExpensiveTrainingMultiplier = 10.0;

/// Preset by name ("uniform", "expensive_training").
CostStructure cost_preset(std::string_view name);

struct CostEntry {
  int iteration = 0;
  double phase1_pos = 0.0;
  double phase1_neg = 0.0;
  double phase2_pos = 0.0;
  double phase2_neg = 0.0;
  double total = 0.0;
  /// Phase one alone meets the target at this iteration.
  bool depth_zero = false;

  friend bool operator==(const CostEntry&, const CostEntry&) = default;
};

using CostDynamics = std::vector<CostEntry>;

/// Cost if review stopped training at `index` (position in record.iterations).
/// One-phase records carry no second-phase sectors.
CostEntry iteration_cost(const RunRecord& record, std::size_t index, const CostStructure& cs);

struct OptimalCost {
  double cost;
  int iteration;
};

/// Minimum total over the record's iterations, earliest on ties. A one-phase
/// run is only evaluated at its stopping iteration.
OptimalCost optimal_cost(const RunRecord& record, const CostStructure& cs);

CostDynamics cost_dynamics_table(const RunRecord& record, const CostStructure& cs);

struct RunCost {
  std::string category;
  int seed_set = 0;
  double cost = 0.0;
};

/// Per category: mean run cost / mean baseline cost; then the unweighted
/// mean over categories. Runs must pair one-to-one on (category, seed_set).
double relative_cost(std::span<const RunCost> runs, std::span<const RunCost> baseline);

/// `iteration,p1_pos,p1_neg,p2_pos,p2_neg,total,depth_zero_flag`
void write_dynamics_csv(const CostDynamics& dynamics, std::ostream& out);

}  // namespace tarsim
