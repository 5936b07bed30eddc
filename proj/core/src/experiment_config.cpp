#include "tarsim/experiment_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tarsim/error.hpp"
#include "tarsim/runner.hpp"

namespace tarsim {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw Error(fmt::format("config: unknown key '{}' in {}", key, where));
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

CostStructure parse_cost(const json& j, std::string& name) {
  if (j.is_string()) {
    name = j.get<std::string>();
    return cost_preset(name);
  }
  reject_unknown_keys(j, {"phase1_pos", "phase1_neg", "phase2_pos", "phase2_neg", "name"}, "cost");
  CostStructure cs{j.at("phase1_pos").get<double>(), j.at("phase1_neg").get<double>(),
                   j.at("phase2_pos").get<double>(), j.at("phase2_neg").get<double>()};
  name = j.value("name", "custom");
  return cs;
}

json cost_to_json(const Protocol& p) {
  return json{{"name", p.cost_name},
              {"phase1_pos", p.cost.phase1_pos},
              {"phase1_neg", p.cost.phase1_neg},
              {"phase2_pos", p.cost.phase2_pos},
              {"phase2_neg", p.cost.phase2_neg}};
}

json optional_path(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->generic_string()) : json(nullptr);
}

json semantic_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (auto m : c.feature_modes) modes.push_back(to_string(m));
  json protocols = json::array();
  for (const auto& p : c.protocols) {
    protocols.push_back({{"workflow", to_string(p.workflow)},
                         {"strategy", to_string(p.strategy)},
                         {"cost", cost_to_json(p)}});
  }
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"corpus", c.corpus.generic_string()},
      {"labels", c.labels.generic_string()},
      {"groups", optional_path(c.groups)},
      {"splade_vectors", optional_path(c.splade_vectors)},
      {"splade_cache", optional_path(c.splade_cache)},
      {"bm25_cache", optional_path(c.bm25_cache)},
      {"categories", c.categories},
      {"feature_modes", modes},
      {"protocols", protocols},
      {"recall_target", c.recall_target},
      {"batch_size", c.batch_size},
      {"max_iterations", c.max_iterations ? json(*c.max_iterations) : json(nullptr)},
      {"seed_sets", c.seed_sets},
      {"rng_seed", c.rng_seed},
      {"warm_start", c.warm_start},
      {"tokenizer",
       {{"lowercase", c.tokenizer.lowercase}, {"max_token_length", c.tokenizer.max_token_length}}},
      {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
      {"splade",
       {{"vocab_size", c.splade.vocab_size},
        {"top_s", c.splade.effective_top_s()},
        {"l2_normalize", c.splade.l2_normalize}}},
      {"classifier",
       {{"regularization_strength", c.classifier.regularization_strength},
        {"max_iterations", c.classifier.max_iterations},
        {"gradient_tolerance", c.classifier.gradient_tolerance},
        {"positive_class_weight", c.classifier.positive_class_weight},
        {"history", c.classifier.history}}},
  };
}

}  // namespace

std::string Protocol::label() const {
  return fmt::format("{}-{}-{}", to_string(workflow), to_string(strategy), cost_name);
}

std::string Protocol::run_key() const {
  return fmt::format("{}-{}", to_string(workflow), to_string(strategy));
}

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("config: malformed JSON: {}", e.what()));
  }
  if (!j.is_object()) throw Error("config: top level must be an object");
  reject_unknown_keys(
      j,
      {"schema_version", "corpus", "labels", "groups", "splade_vectors", "splade_cache",
       "bm25_cache", "categories", "feature_modes", "protocols", "recall_target", "batch_size",
       "max_iterations", "seed_sets", "rng_seed", "warm_start", "tokenizer", "bm25", "splade",
       "classifier", "parallelism", "output_dir"},
      "config");

  ExperimentConfig c;
  try {
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
      throw Error(fmt::format("config: unsupported schema_version {}", version));
    }
    c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
    c.labels = resolve(base_dir, j.at("labels").get<std::string>());
    auto optional_path_field = [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return resolve(base_dir, j[key].get<std::string>());
    };
    c.groups = optional_path_field("groups");
    c.splade_vectors = optional_path_field("splade_vectors");
    c.splade_cache = optional_path_field("splade_cache");
    c.bm25_cache = optional_path_field("bm25_cache");

    if (j.contains("categories")) c.categories = j["categories"].get<std::vector<std::string>>();
    if (j.contains("feature_modes")) {
      c.feature_modes.clear();
      for (const auto& m : j["feature_modes"]) {
        c.feature_modes.push_back(parse_feature_mode(m.get<std::string>()));
      }
    }
    if (j.contains("protocols")) {
      c.protocols.clear();
      for (const auto& pj : j["protocols"]) {
        reject_unknown_keys(pj, {"workflow", "strategy", "cost"}, "protocol");
        Protocol p;
        p.workflow = parse_workflow(pj.at("workflow").get<std::string>());
        RunConfig defaults;
        defaults.workflow = p.workflow;
        p.strategy = pj.contains("strategy") ? parse_strategy(pj["strategy"].get<std::string>())
                                             : defaults.effective_strategy();
        if (pj.contains("cost")) {
          p.cost = parse_cost(pj["cost"], p.cost_name);
        } else {
          p.cost_name = p.workflow == WorkflowKind::one_phase ? "uniform" : "expensive_training";
          p.cost = cost_preset(p.cost_name);
        }
        c.protocols.push_back(std::move(p));
      }
    }
    c.recall_target = j.value("recall_target", c.recall_target);
    c.batch_size = j.value("batch_size", c.batch_size);
    if (j.contains("max_iterations") && !j["max_iterations"].is_null()) {
      c.max_iterations = j["max_iterations"].get<int>();
    }
    c.seed_sets = j.value("seed_sets", c.seed_sets);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.warm_start = j.value("warm_start", c.warm_start);

    if (j.contains("tokenizer")) {
      const auto& t = j["tokenizer"];
      reject_unknown_keys(t, {"lowercase", "max_token_length"}, "tokenizer");
      c.tokenizer.lowercase = t.value("lowercase", c.tokenizer.lowercase);
      c.tokenizer.max_token_length = t.value("max_token_length", c.tokenizer.max_token_length);
    }
    if (j.contains("bm25")) {
      const auto& b = j["bm25"];
      reject_unknown_keys(b, {"k1", "b"}, "bm25");
      c.bm25.k1 = b.value("k1", c.bm25.k1);
      c.bm25.b = b.value("b", c.bm25.b);
    }
    if (j.contains("splade")) {
      const auto& s = j["splade"];
      reject_unknown_keys(s, {"vocab_size", "top_s", "l2_normalize"}, "splade");
      c.splade.vocab_size = s.value("vocab_size", c.splade.vocab_size);
      if (s.contains("top_s") && !s["top_s"].is_null()) c.splade.top_s = s["top_s"].get<std::size_t>();
      c.splade.l2_normalize = s.value("l2_normalize", c.splade.l2_normalize);
    }
    if (j.contains("classifier")) {
      const auto& t = j["classifier"];
      reject_unknown_keys(t,
                          {"regularization_strength", "max_iterations", "gradient_tolerance",
                           "positive_class_weight", "history"},
                          "classifier");
      auto& k = c.classifier;
      k.regularization_strength = t.value("regularization_strength", k.regularization_strength);
      k.max_iterations = t.value("max_iterations", k.max_iterations);
      k.gradient_tolerance = t.value("gradient_tolerance", k.gradient_tolerance);
      k.positive_class_weight = t.value("positive_class_weight", k.positive_class_weight);
      k.history = t.value("history", k.history);
    }
    c.parallelism = j.value("parallelism", c.parallelism);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
  } catch (const json::exception& e) {
    throw Error(fmt::format("config: {}", e.what()));
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str(), path.parent_path());
}

std::string experiment_config_json(const ExperimentConfig& config) {
  auto j = semantic_json(config);
  j["parallelism"] = config.parallelism;
  j["output_dir"] = config.output_dir.generic_string();
  return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
  if (!(c.recall_target > 0.0 && c.recall_target <= 1.0)) {
    throw Error("config: recall_target must lie in (0, 1]");
  }
  if (c.batch_size < 1) throw Error("config: batch_size must be at least 1");
  if (c.seed_sets < 1) throw Error("config: seed_sets must be at least 1");
  if (c.parallelism < 1) throw Error("config: parallelism must be at least 1");
  if (c.max_iterations && *c.max_iterations < 0) throw Error("config: max_iterations is negative");
  if (c.feature_modes.empty()) throw Error("config: feature_modes is empty");
  if (c.protocols.empty()) throw Error("config: protocols is empty");
  for (const auto& p : c.protocols) {
    const auto& cs = p.cost;
    if (cs.phase1_pos < 0 || cs.phase1_neg < 0 || cs.phase2_pos < 0 || cs.phase2_neg < 0) {
      throw Error(fmt::format("config: protocol {} has a negative unit cost", p.label()));
    }
  }
  if (!(c.bm25.k1 > 0.0) || !(c.bm25.b >= 0.0 && c.bm25.b <= 1.0)) {
    throw Error("config: bm25 requires k1 > 0 and 0 <= b <= 1");
  }
  if (c.splade.effective_top_s() < 1 || c.splade.effective_top_s() > c.splade.vocab_size) {
    throw Error("config: splade top_s must lie in [1, vocab_size]");
  }
  auto require_file = [](const std::filesystem::path& p, std::string_view what) {
    if (!std::filesystem::is_regular_file(p)) {
      throw Error(fmt::format("config: {} file {} does not exist", what, p.string()));
    }
  };
  require_file(c.corpus, "corpus");
  require_file(c.labels, "labels");
  if (c.groups) require_file(*c.groups, "groups");
  if (c.bm25_cache) require_file(*c.bm25_cache, "bm25_cache");
  if (c.splade_cache) require_file(*c.splade_cache, "splade_cache");
  if (c.splade_vectors) require_file(*c.splade_vectors, "splade_vectors");
  bool needs_splade = false;
  for (auto m : c.feature_modes) needs_splade |= m != FeatureMode::bm25;
  if (needs_splade && !c.splade_vectors && !c.splade_cache) {
    throw Error("config: splade or fused mode requires splade_vectors or splade_cache");
  }
}

std::string config_hash(const ExperimentConfig& config) {
  return md5_hex(semantic_json(config).dump());
}

}  // namespace tarsim
