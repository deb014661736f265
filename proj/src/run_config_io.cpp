#include "qicnn/run_config_io.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace qicnn {

using nlohmann::json;

namespace {

json config_json(const RunConfig& c) {
  json j;
  j["arch"] = std::string(to_string(c.variant));
  j["dataset"] = std::string(to_string(c.dataset));
  j["data_dir"] = c.data_dir;
  j["subset"] = c.subset_n ? json(*c.subset_n) : json(nullptr);
  j["test_subset"] = c.test_subset_n ? json(*c.test_subset_n) : json(nullptr);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  j["loss"] = std::string(to_string(c.loss));
  j["threads"] = c.threads;
  j["out"] = c.out_dir;
  j["checkpoint"] = c.init_checkpoint;
  j["f_complex_fc"] = c.f_complex_fc;
  j["wall_clock"] = c.wall_clock;
  return j;
}

json dataset_json(const Dataset& d) {
  json j;
  j["split"] = std::string(to_string(d.split()));
  j["size"] = d.size();
  j["label_histogram"] = d.class_histogram();
  json files = json::array();
  for (const auto& p : d.provenance) files.push_back({{"path", p.path}, {"sha256", p.sha256}});
  j["files"] = files;
  return j;
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw std::invalid_argument("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) { return config_json(config).dump(2); }

RunConfig run_config_from_json(std::string_view text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "metadata") continue;
    if (v.is_structured()) throw std::invalid_argument("config key '" + key + "' must be a scalar");
    if (key == "arch") {
      auto p = parse_variant(get_as<std::string>(v, key));
      if (!p) throw std::invalid_argument("unknown arch '" + v.get<std::string>() + "'");
      c.variant = *p;
    } else if (key == "dataset") {
      auto p = parse_dataset(get_as<std::string>(v, key));
      if (!p) throw std::invalid_argument("unknown dataset '" + v.get<std::string>() + "'");
      c.dataset = *p;
    } else if (key == "loss") {
      auto p = parse_loss(get_as<std::string>(v, key));
      if (!p) throw std::invalid_argument("unknown loss '" + v.get<std::string>() + "'");
      c.loss = *p;
    } else if (key == "data_dir") {
      c.data_dir = get_as<std::string>(v, key);
    } else if (key == "out") {
      c.out_dir = get_as<std::string>(v, key);
    } else if (key == "checkpoint") {
      c.init_checkpoint = get_as<std::string>(v, key);
    } else if (key == "subset") {
      c.subset_n = v.is_null() ? std::nullopt : std::optional(get_count(v, key));
    } else if (key == "test_subset") {
      c.test_subset_n = v.is_null() ? std::nullopt : std::optional(get_count(v, key));
    } else if (key == "epochs") {
      c.epochs = get_count(v, key);
    } else if (key == "batch_size") {
      c.batch_size = get_count(v, key);
    } else if (key == "seed") {
      c.seed = get_count(v, key);
    } else if (key == "threads") {
      c.threads = static_cast<int>(get_count(v, key));
    } else if (key == "lr") {
      if (!v.is_number()) throw std::invalid_argument("config key 'lr' must be a number");
      c.lr = v.get<double>();
    } else if (key == "f_complex_fc") {
      c.f_complex_fc = get_as<bool>(v, key);
    } else if (key == "wall_clock") {
      c.wall_clock = get_as<bool>(v, key);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  return c;
}

void write_run_metadata(const std::filesystem::path& path, const RunConfig& config,
                        const Dataset& train, const Dataset& test) {
  json j = config_json(config);
  j["metadata"] = {{"train", dataset_json(train)}, {"test", dataset_json(test)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace qicnn
