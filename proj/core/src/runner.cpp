#include "tarsim/runner.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

using nlohmann::json;

constexpr int kManifestSchemaVersion = 1;

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", tmp.string()));
    out << content;
    if (!out) throw Error(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

json spec_to_json(const RunSpec& s) {
  return json{{"category", s.category},
              {"seed_set", s.seed_set},
              {"feature_mode", to_string(s.feature_mode)},
              {"workflow", to_string(s.workflow)},
              {"strategy", to_string(s.strategy)}};
}

RunSpec spec_from_json(const json& j) {
  RunSpec s;
  s.category = j.at("category").get<std::string>();
  s.seed_set = j.at("seed_set").get<int>();
  s.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
  s.workflow = parse_workflow(j.at("workflow").get<std::string>());
  s.strategy = parse_strategy(j.at("strategy").get<std::string>());
  return s;
}

std::string manifest_json(const Manifest& m) {
  json runs = json::object();
  for (const auto& [id, e] : m.runs) {
    auto j = spec_to_json(e.spec);
    j["status"] = e.status;
    j["error"] = e.error;
    j["record"] = e.record;
    runs[id] = std::move(j);
  }
  return json{{"schema_version", kManifestSchemaVersion},
              {"config_hash", m.config_hash},
              {"runs", runs}}
             .dump(2) +
         "\n";
}

struct LoadedInputs {
  LabeledCollection collection;
  std::optional<SparseMatrix> bm25;
  std::optional<SparseMatrix> splade;
};

LoadedInputs load_inputs(const ExperimentConfig& config) {
  LoadedInputs in;
  in.collection = load_labels(config.labels, load_corpus(config.corpus, config.tokenizer));
  if (config.groups) in.collection = load_groups(*config.groups, std::move(in.collection));
  for (const auto& w : in.collection.warnings()) std::cerr << "warning: " << w << '\n';

  bool needs_bm25 = false;
  bool needs_splade = false;
  for (auto m : config.feature_modes) {
    needs_bm25 |= m != FeatureMode::splade;
    needs_splade |= m != FeatureMode::bm25;
  }
  auto check_rows = [&](const SparseMatrix& m, std::string_view what) {
    if (m.n_rows() != in.collection.size()) {
      throw Error(fmt::format("{} has {} rows but the corpus has {} documents", what, m.n_rows(),
                              in.collection.size()));
    }
  };
  if (needs_bm25) {
    if (config.bm25_cache) {
      in.bm25 = read_matrix_cache(*config.bm25_cache);
      check_rows(*in.bm25, "bm25 cache");
    } else {
      in.bm25 = encode_bm25(in.collection, config.bm25).matrix;
    }
  }
  if (needs_splade) {
    if (config.splade_cache) {
      in.splade = read_matrix_cache(*config.splade_cache);
      check_rows(*in.splade, "splade cache");
      if (config.splade.l2_normalize) in.splade = l2_normalize_rows(*in.splade);
    } else {
      in.splade = load_sparse_vectors(*config.splade_vectors, in.collection, config.splade);
    }
  }
  return in;
}

std::vector<std::string> select_categories(const ExperimentConfig& config,
                                           const LabeledCollection& collection) {
  std::vector<std::string> out;
  if (config.categories.empty()) {
    for (const auto& [id, labels] : collection.categories()) out.push_back(id);
    return out;
  }
  for (const auto& id : config.categories) {
    if (!collection.categories().contains(id)) {
      throw Error(fmt::format("category {} has no usable labels", id));
    }
    out.push_back(id);
  }
  return out;
}

}  // namespace

std::string RunSpec::id() const {
  return fmt::format("{}__{}__{}-{}__s{}", category, to_string(feature_mode), to_string(workflow),
                     to_string(strategy), seed_set);
}

std::vector<RunSpec> enumerate_grid(const ExperimentConfig& config,
                                    const std::vector<std::string>& categories) {
  std::vector<std::pair<WorkflowKind, SamplingStrategy>> kinds;
  for (const auto& p : config.protocols) {
    const std::pair kind{p.workflow, p.strategy};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
  }
  std::vector<RunSpec> grid;
  for (const auto& category : categories) {
    for (auto mode : config.feature_modes) {
      for (const auto& [workflow, strategy] : kinds) {
        for (int seed = 0; seed < config.seed_sets; ++seed) {
          grid.push_back({category, seed, mode, workflow, strategy});
        }
      }
    }
  }
  return grid;
}

Manifest read_manifest(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  try {
    const auto j = json::parse(in);
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw Error("unsupported manifest schema version");
    }
    Manifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [id, e] : j.at("runs").items()) {
      ManifestEntry entry;
      entry.spec = spec_from_json(e);
      entry.status = e.at("status").get<std::string>();
      entry.error = e.at("error").get<std::string>();
      entry.record = e.at("record").get<std::string>();
      m.runs.emplace(id, std::move(entry));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t workers) {
  validate(config);
  const auto inputs = load_inputs(config);
  const auto categories = select_categories(config, inputs.collection);
  const auto grid = enumerate_grid(config, categories);

  const auto& run_dir = config.output_dir;
  std::filesystem::create_directories(run_dir / "records");
  const auto hash = config_hash(config);

  Manifest manifest;
  manifest.config_hash = hash;
  if (std::filesystem::exists(run_dir / "manifest.json")) {
    manifest = read_manifest(run_dir);
    if (manifest.config_hash != hash) {
      throw Error(fmt::format(
          "{} holds runs of a different configuration (hash {} vs {}); use a new output_dir",
          run_dir.string(), manifest.config_hash, hash));
    }
  }
  write_file_atomically(run_dir / "config.json", experiment_config_json(config));

  ExperimentSummary summary;
  summary.run_dir = run_dir;
  summary.total = grid.size();
  std::vector<RunSpec> pending;
  for (const auto& spec : grid) {
    auto it = manifest.runs.find(spec.id());
    if (it != manifest.runs.end() && it->second.status == "ok" &&
        std::filesystem::exists(run_dir / it->second.record)) {
      ++summary.skipped;
      continue;
    }
    pending.push_back(spec);
  }
  write_file_atomically(run_dir / "manifest.json", manifest_json(manifest));

  FeatureMatrices matrices{inputs.bm25 ? &*inputs.bm25 : nullptr,
                           inputs.splade ? &*inputs.splade : nullptr};
  std::mutex manifest_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const auto& spec = pending[i];
      ManifestEntry entry;
      entry.spec = spec;
      entry.record = fmt::format("records/{}.jsonl", spec.id());
      try {
        RunConfig rc;
        rc.workflow = spec.workflow;
        rc.strategy = spec.strategy;
        rc.feature_mode = spec.feature_mode;
        rc.recall_target = config.recall_target;
        rc.batch_size = config.batch_size;
        rc.max_iterations = config.max_iterations;
        rc.seed_set_id = spec.seed_set;
        rc.rng_seed = config.rng_seed;
        rc.train = config.classifier;
        rc.warm_start = config.warm_start;
        const auto record = run_tar(rc, inputs.collection, spec.category, matrices);
        write_file_atomically(run_dir / entry.record, serialize_run_record(record));
        entry.status = "ok";
      } catch (const std::exception& e) {
        entry.status = "failed";
        entry.error = e.what();
        ++failed;
      }
      std::lock_guard lock(manifest_mutex);
      manifest.runs[spec.id()] = std::move(entry);
      write_file_atomically(run_dir / "manifest.json", manifest_json(manifest));
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(workers > 0 ? workers
                                                    : static_cast<std::size_t>(config.parallelism),
                                        std::max<std::size_t>(pending.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  summary.executed = pending.size();
  summary.failed = failed;
  return summary;
}

}  // namespace tarsim
