#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tarsim/error.hpp"
#include "tarsim/workflow.hpp"

namespace tarsim {
namespace {

using nlohmann::json;

constexpr int kRecordSchemaVersion = 1;

json optional_int(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::int64_t> read_optional_int(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::int64_t>();
}

json config_to_json(const RunConfig& c) {
  const auto cap = c.effective_max_iterations();
  return json{
      {"workflow", to_string(c.workflow)},
      {"strategy", to_string(c.effective_strategy())},
      {"feature_mode", to_string(c.feature_mode)},
      {"recall_target", c.recall_target},
      {"batch_size", c.batch_size},
      {"max_iterations", cap ? json(*cap) : json(nullptr)},
      {"seed_set_id", c.seed_set_id},
      {"rng_seed", c.rng_seed},
      {"warm_start", c.warm_start},
      {"classifier",
       {{"regularization_strength", c.train.regularization_strength},
        {"max_iterations", c.train.max_iterations},
        {"gradient_tolerance", c.train.gradient_tolerance},
        {"positive_class_weight", c.train.positive_class_weight},
        {"history", c.train.history}}},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.workflow = parse_workflow(j.at("workflow").get<std::string>());
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
  c.recall_target = j.at("recall_target").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  if (!j.at("max_iterations").is_null()) c.max_iterations = j["max_iterations"].get<int>();
  c.seed_set_id = j.at("seed_set_id").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.warm_start = j.at("warm_start").get<bool>();
  const auto& t = j.at("classifier");
  c.train.regularization_strength = t.at("regularization_strength").get<double>();
  c.train.max_iterations = t.at("max_iterations").get<int>();
  c.train.gradient_tolerance = t.at("gradient_tolerance").get<double>();
  c.train.positive_class_weight = t.at("positive_class_weight").get<double>();
  c.train.history = t.at("history").get<int>();
  return c;
}

}  // namespace

void write_run_record(const RunRecord& record, std::ostream& out) {
  const json header{
      {"type", "header"},
      {"schema_version", kRecordSchemaVersion},
      {"category", record.category_id},
      {"config", config_to_json(record.config)},
      {"seed_docs", record.seed_docs},
      {"collection_size", record.collection_size},
      {"total_positives", record.total_positives},
      {"required_positives", record.required_positives},
      {"target_reached", record.target_reached},
      {"iterations", record.iterations.size()},
  };
  out << header.dump() << '\n';
  for (const auto& e : record.iterations) {
    const json line{
        {"type", "iteration"},
        {"iteration", e.iteration},
        {"batch", e.batch},
        {"batch_positives", e.batch_positives},
        {"cumulative_reviewed", e.cumulative_reviewed},
        {"cumulative_positives", e.cumulative_positives},
        {"second_phase_depth", optional_int(e.second_phase_depth)},
        {"second_phase_positives", optional_int(e.second_phase_positives)},
    };
    out << line.dump() << '\n';
  }
}

std::string serialize_run_record(const RunRecord& record) {
  std::ostringstream out;
  write_run_record(record, out);
  return out.str();
}

void write_run_record(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  write_run_record(record, out);
  if (!out) throw Error(fmt::format("write to {} failed", path.string()));
}

RunRecord read_run_record(std::istream& in) {
  RunRecord record;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (line_no == 1) {
        if (type != "header") throw Error("first line is not a header");
        if (j.at("schema_version").get<int>() != kRecordSchemaVersion) {
          throw Error("unsupported run record schema version");
        }
        record.category_id = j.at("category").get<std::string>();
        record.config = config_from_json(j.at("config"));
        record.seed_docs = j.at("seed_docs").get<std::vector<std::string>>();
        record.collection_size = j.at("collection_size").get<std::int64_t>();
        record.total_positives = j.at("total_positives").get<std::int64_t>();
        record.required_positives = j.at("required_positives").get<std::int64_t>();
        record.target_reached = j.at("target_reached").get<bool>();
        expected = j.at("iterations").get<std::size_t>();
        continue;
      }
      if (type != "iteration") throw Error(fmt::format("unexpected record type '{}'", type));
      IterationEntry e;
      e.iteration = j.at("iteration").get<int>();
      e.batch = j.at("batch").get<std::vector<std::string>>();
      e.batch_positives = j.at("batch_positives").get<std::int64_t>();
      e.cumulative_reviewed = j.at("cumulative_reviewed").get<std::int64_t>();
      e.cumulative_positives = j.at("cumulative_positives").get<std::int64_t>();
      e.second_phase_depth = read_optional_int(j, "second_phase_depth");
      e.second_phase_positives = read_optional_int(j, "second_phase_positives");
      record.iterations.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("run record line {}: {}", line_no, e.what()));
  } catch (const Error& e) {
    throw Error(fmt::format("run record line {}: {}", line_no, e.what()));
  }
  if (line_no == 0) throw Error("run record is empty");
  if (record.iterations.size() != expected) {
    throw Error(fmt::format("run record truncated: {} of {} iterations", record.iterations.size(),
                            expected));
  }
  return record;
}

RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_run_record(in);
}

}  // namespace tarsim
