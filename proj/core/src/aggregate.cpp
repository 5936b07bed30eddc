#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "tarsim/error.hpp"
#include "tarsim/runner.hpp"

namespace tarsim {
namespace {

ExperimentConfig read_run_config(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "config.json";
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

using CostsByCategory = std::map<std::string, std::vector<RunCost>>;

std::vector<RunCost> flatten(const CostsByCategory& costs,
                             const std::optional<std::vector<std::string>>& only = std::nullopt) {
  std::vector<RunCost> out;
  for (const auto& [category, runs] : costs) {
    if (only && std::find(only->begin(), only->end(), category) == only->end()) continue;
    out.insert(out.end(), runs.begin(), runs.end());
  }
  return out;
}

}  // namespace

AggregateReport aggregate(const std::filesystem::path& run_dir, FeatureMode baseline,
                          const std::optional<std::filesystem::path>& groups_csv) {
  const auto config = read_run_config(run_dir);
  const auto manifest = read_manifest(run_dir);

  AggregateReport report;
  report.baseline = baseline;

  // protocol label -> mode -> category -> runs
  std::map<std::string, std::map<FeatureMode, CostsByCategory>> costs;
  for (const auto& protocol : config.protocols) {
    for (const auto& [id, entry] : manifest.runs) {
      if (entry.status != "ok") continue;
      const auto& spec = entry.spec;
      if (spec.workflow != protocol.workflow || spec.strategy != protocol.strategy) continue;
      const auto record = read_run_record(run_dir / entry.record);
      const auto optimal = optimal_cost(record, protocol.cost);
      report.run_costs.push_back({protocol.label(), spec, optimal});
      costs[protocol.label()][spec.feature_mode][spec.category].push_back(
          {spec.category, spec.seed_set, optimal.cost});
    }
  }

  std::map<std::string, CategoryGroup> groups;
  if (groups_csv) {
    std::ifstream in(*groups_csv);
    if (!in) throw Error(fmt::format("cannot open {}", groups_csv->string()));
    groups = read_group_table(in);
  }

  for (const auto& protocol : config.protocols) {
    const auto label = protocol.label();
    auto& by_mode = costs[label];
    auto base_it = by_mode.find(baseline);
    if (base_it == by_mode.end() || base_it->second.empty()) {
      throw Error(fmt::format("missing baseline runs ({}) for protocol {}", to_string(baseline),
                              label));
    }
    const auto& base = base_it->second;
    for (auto mode : config.feature_modes) {
      auto mode_it = by_mode.find(mode);
      if (mode_it == by_mode.end()) continue;
      const auto& runs = mode_it->second;
      report.overall.push_back({mode, label, std::nullopt,
                                relative_cost(flatten(runs), flatten(base)), runs.size()});
      if (groups.empty()) continue;

      std::map<CategoryGroup, std::vector<std::string>> members;
      for (const auto& [category, ignored] : runs) {
        if (auto g = groups.find(category); g != groups.end()) members[g->second].push_back(category);
      }
      for (const auto& [group, categories] : members) {
        report.grouped.push_back({mode, label, group,
                                  relative_cost(flatten(runs, categories), flatten(base, categories)),
                                  categories.size()});
      }
    }
  }
  return report;
}

void write_aggregate_report(const AggregateReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", (out_dir / name).string()));
    return out;
  };

  std::map<std::string, std::vector<const RunCostRow*>> by_protocol;
  for (const auto& row : report.run_costs) by_protocol[row.protocol].push_back(&row);
  for (auto& [protocol, rows] : by_protocol) {
    std::sort(rows.begin(), rows.end(), [](const RunCostRow* a, const RunCostRow* b) {
      const auto& x = a->spec;
      const auto& y = b->spec;
      return std::tie(x.category, x.seed_set, x.feature_mode) <
             std::tie(y.category, y.seed_set, y.feature_mode);
    });
    auto out = open(fmt::format("run_costs_{}.csv", protocol));
    out << "category,seed_set,feature_mode,workflow,optimal_cost,argmin_iteration\n";
    for (const auto* row : rows) {
      out << fmt::format("{},{},{},{},{},{}\n", row->spec.category, row->spec.seed_set,
                         to_string(row->spec.feature_mode), to_string(row->spec.workflow),
                         row->optimal.cost, row->optimal.iteration);
    }
  }

  {
    auto out = open("relative_cost.csv");
    out << "feature_mode,protocol,relative_cost,categories\n";
    for (const auto& c : report.overall) {
      out << fmt::format("{},{},{:.6f},{}\n", to_string(c.mode), c.protocol, c.relative_cost,
                         c.categories);
    }
  }
  if (!report.grouped.empty()) {
    auto out = open("relative_cost_groups.csv");
    out << "difficulty,prevalence,feature_mode,protocol,relative_cost,categories\n";
    for (const auto& c : report.grouped) {
      out << fmt::format("{},{},{},{},{:.6f},{}\n", to_string(c.group->difficulty),
                         to_string(c.group->prevalence), to_string(c.mode), c.protocol,
                         c.relative_cost, c.categories);
    }
  }

  auto out = open("report.txt");
  out << fmt::format("Relative optimal review cost (baseline: {})\n\n", to_string(report.baseline));
  std::vector<std::string> protocols;
  std::vector<FeatureMode> modes;
  for (const auto& c : report.overall) {
    if (std::find(protocols.begin(), protocols.end(), c.protocol) == protocols.end()) {
      protocols.push_back(c.protocol);
    }
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) modes.push_back(c.mode);
  }
  out << fmt::format("{:<10}", "mode");
  for (const auto& p : protocols) out << fmt::format(" | {:>36}", p);
  out << '\n';
  for (auto mode : modes) {
    out << fmt::format("{:<10}", to_string(mode));
    for (const auto& p : protocols) {
      auto it = std::find_if(report.overall.begin(), report.overall.end(),
                             [&](const RelativeCostCell& c) { return c.mode == mode && c.protocol == p; });
      out << fmt::format(" | {:>36.4f}", it->relative_cost);
    }
    out << '\n';
  }
  if (!report.grouped.empty()) {
    out << "\nBy category group\n";
    for (const auto& c : report.grouped) {
      out << fmt::format("{:<7} {:<7} {:<7} {:<36} {:.4f} ({} categories)\n",
                         to_string(c.group->difficulty), to_string(c.group->prevalence),
                         to_string(c.mode), c.protocol, c.relative_cost, c.categories);
    }
  }
}

DynamicsOutput emit_dynamics(const std::filesystem::path& run_dir, const std::string& run_id,
                             const std::filesystem::path& out_dir,
                             const std::optional<CostStructure>& cost) {
  const auto manifest = read_manifest(run_dir);
  auto it = manifest.runs.find(run_id);
  if (it == manifest.runs.end()) throw Error(fmt::format("no run matches '{}'", run_id));
  if (it->second.status != "ok") {
    throw Error(fmt::format("run {} did not complete: {}", run_id, it->second.error));
  }
  const auto record = read_run_record(run_dir / it->second.record);
  if (record.config.workflow != WorkflowKind::two_phase) {
    throw Error(fmt::format("run {} is one-phase; cost dynamics need a two-phase run", run_id));
  }

  CostStructure cs = CostStructure::expensive_training();
  if (cost) {
    cs = *cost;
  } else {
    const auto config = read_run_config(run_dir);
    for (const auto& p : config.protocols) {
      if (p.workflow == it->second.spec.workflow && p.strategy == it->second.spec.strategy) {
        cs = p.cost;
        break;
      }
    }
  }

  const auto table = cost_dynamics_table(record, cs);
  std::filesystem::create_directories(out_dir);
  DynamicsOutput out;
  out.csv = out_dir / (run_id + ".dynamics.csv");
  out.svg = out_dir / (run_id + ".dynamics.svg");
  out.rows = table.size();
  {
    std::ofstream csv(out.csv, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(fmt::format("cannot open {} for writing", out.csv.string()));
    write_dynamics_csv(table, csv);
  }
  std::ofstream svg(out.svg, std::ios::binary | std::ios::trunc);
  if (!svg) throw Error(fmt::format("cannot open {} for writing", out.svg.string()));
  svg << render_dynamics_svg(table, run_id);
  return out;
}

}  // namespace tarsim
