#include "tarsim/cost.hpp"

#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "tarsim/error.hpp"

namespace tarsim {

CostStructure cost_preset(std::string_view name) {
  if (name == "uniform") return CostStructure::uniform();
  if (name == "expensive_training") return CostStructure::expensive_training();
  throw Error(fmt::format("unknown cost structure '{}'", name));
}

CostEntry iteration_cost(const RunRecord& record, std::size_t index, const CostStructure& cs) {
  if (index >= record.iterations.size()) {
    throw Error(fmt::format("iteration {} out of range (record has {})", index,
                            record.iterations.size()));
  }
  const auto& it = record.iterations[index];
  CostEntry entry;
  entry.iteration = it.iteration;
  const auto p1_pos = static_cast<double>(it.cumulative_positives);
  const auto p1_neg = static_cast<double>(it.cumulative_reviewed - it.cumulative_positives);
  entry.phase1_pos = p1_pos * cs.phase1_pos;
  entry.phase1_neg = p1_neg * cs.phase1_neg;
  entry.depth_zero = it.cumulative_positives >= record.required_positives;
  if (record.config.workflow == WorkflowKind::two_phase) {
    if (!it.second_phase_depth || !it.second_phase_positives) {
      throw Error(fmt::format("two-phase record lacks second-phase depth at iteration {}",
                              it.iteration));
    }
    const auto depth = static_cast<double>(*it.second_phase_depth);
    const auto pos = static_cast<double>(*it.second_phase_positives);
    entry.phase2_pos = pos * cs.phase2_pos;
    entry.phase2_neg = (depth - pos) * cs.phase2_neg;
  }
  entry.total = entry.phase1_pos + entry.phase1_neg + entry.phase2_pos + entry.phase2_neg;
  return entry;
}

OptimalCost optimal_cost(const RunRecord& record, const CostStructure& cs) {
  if (record.iterations.empty()) throw Error("optimal_cost: empty run record");
  if (record.config.workflow == WorkflowKind::one_phase) {
    const auto last = iteration_cost(record, record.iterations.size() - 1, cs);
    return {last.total, last.iteration};
  }
  OptimalCost best{0.0, -1};
  for (std::size_t i = 0; i < record.iterations.size(); ++i) {
    const auto entry = iteration_cost(record, i, cs);
    if (best.iteration < 0 || entry.total < best.cost) best = {entry.total, entry.iteration};
  }
  return best;
}

CostDynamics cost_dynamics_table(const RunRecord& record, const CostStructure& cs) {
  CostDynamics table;
  table.reserve(record.iterations.size());
  for (std::size_t i = 0; i < record.iterations.size(); ++i) {
    table.push_back(iteration_cost(record, i, cs));
  }
  return table;
}

double relative_cost(std::span<const RunCost> runs, std::span<const RunCost> baseline) {
  struct Sums {
    double run = 0.0;
    double base = 0.0;
    int n = 0;
  };
  std::map<std::pair<std::string, int>, double> base_by_key;
  for (const auto& b : baseline) {
    if (!base_by_key.emplace(std::pair{b.category, b.seed_set}, b.cost).second) {
      throw Error(fmt::format("duplicate baseline run ({}, {})", b.category, b.seed_set));
    }
  }
  if (runs.size() != baseline.size()) {
    throw Error(fmt::format("unpaired runs: {} runs vs {} baseline runs", runs.size(),
                            baseline.size()));
  }
  std::map<std::string, Sums> per_category;
  std::set<std::pair<std::string, int>> used;
  for (const auto& r : runs) {
    const std::pair key{r.category, r.seed_set};
    auto it = base_by_key.find(key);
    if (it == base_by_key.end() || !used.insert(key).second) {
      throw Error(fmt::format("unpaired run ({}, {})", r.category, r.seed_set));
    }
    auto& s = per_category[r.category];
    s.run += r.cost;
    s.base += it->second;
    ++s.n;
  }
  if (per_category.empty()) throw Error("relative_cost: no runs");
  double sum = 0.0;
  for (const auto& [category, s] : per_category) {
    if (!(s.base > 0.0)) {
      throw Error(fmt::format("baseline cost for category {} is not positive", category));
    }
    // Equal seed counts per category, so the ratio of sums is the ratio of means.
    sum += s.run / s.base;
  }
  return sum / static_cast<double>(per_category.size());
}

void write_dynamics_csv(const CostDynamics& dynamics, std::ostream& out) {
  out << "iteration,p1_pos,p1_neg,p2_pos,p2_neg,total,depth_zero_flag\n";
  for (const auto& e : dynamics) {
    out << fmt::format("{},{},{},{},{},{},{}\n", e.iteration, e.phase1_pos, e.phase1_neg,
                       e.phase2_pos, e.phase2_neg, e.total, e.depth_zero ? 1 : 0);
  }
}

}  // namespace tarsim
