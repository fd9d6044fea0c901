// SPDX-License-Identifier: Apache-2.0
#include "tarn/config.hpp"

#include <algorithm>
#include <fstream>

#include "tarn/errors.hpp"

namespace tarn {
namespace {

using nlohmann::json;

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_object()) throw SpecError(std::string("config section '") + key + "' must be an object");
  return *it;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SpecError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw SpecError(std::string("config field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::vector<std::uint32_t> get_ids(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_array()) throw SpecError(std::string("config field '") + key + "' must be an array");
  std::vector<std::uint32_t> out;
  for (const auto& v : *it) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw SpecError(std::string("config field '") + key + "' must hold class ids");
    }
    out.push_back(v.get<std::uint32_t>());
  }
  return out;
}

std::vector<std::uint32_t> sorted(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("synthetic spec must be a JSON object");
  SyntheticSpec s;
  s.n_classes = get_count(j, "n_classes", s.n_classes);
  s.examples_per_class = get_count(j, "examples_per_class", s.examples_per_class);
  s.feature_size = get_count(j, "d_in", s.feature_size);
  if (auto it = j.find("segment_count_range"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw SpecError("segment_count_range must be [min, max]");
    const auto lo = (*it)[0].get<long long>(), hi = (*it)[1].get<long long>();
    if (lo < 1 || hi < lo) throw SpecError("segment_count_range must satisfy 1 <= min <= max");
    s.min_segments = static_cast<std::size_t>(lo);
    s.max_segments = static_cast<std::size_t>(hi);
  }
  s.cluster_separation = get_or(j, "cluster_separation", s.cluster_separation);
  s.noise_std = get_or(j, "noise_std", s.noise_std);
  const auto pattern = get_or<std::string>(j, "temporal_pattern", "static_cluster");
  if (pattern == "static_cluster") {
    s.pattern = TemporalPattern::kStaticCluster;
  } else if (pattern == "ordered_motif") {
    s.pattern = TemporalPattern::kOrderedMotif;
  } else {
    throw SpecError("unknown temporal_pattern: " + pattern);
  }
  s.motif_length = get_count(j, "motif_length", s.motif_length);
  s.semantic_size = get_count(j, "semantic_size", s.semantic_size);
  s.semantic_noise_std = get_or(j, "semantic_noise_std", s.semantic_noise_std);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  return s;
}

json to_json(const SyntheticSpec& s) {
  return json{{"n_classes", s.n_classes},
              {"examples_per_class", s.examples_per_class},
              {"d_in", s.feature_size},
              {"segment_count_range", {s.min_segments, s.max_segments}},
              {"cluster_separation", s.cluster_separation},
              {"noise_std", s.noise_std},
              {"temporal_pattern", s.pattern == TemporalPattern::kStaticCluster ? "static_cluster" : "ordered_motif"},
              {"motif_length", s.motif_length},
              {"semantic_size", s.semantic_size},
              {"semantic_noise_std", s.semantic_noise_std},
              {"seed", s.seed}};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw SpecError("override must look like key.path=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw SpecError("empty key in override path '" + path + "'");
    if (!node->is_object()) throw SpecError("override path '" + path + "' crosses a non-object value");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("run config must be a JSON object");
  RunConfig c;
  c.seed = get_or<std::uint64_t>(doc, "seed", 0);

  auto& m = c.model;
  m.mode = parse_mode(get_or<std::string>(doc, "mode", "fsl"));
  const bool fsl = m.mode == Mode::kFsl;
  m.variant = parse_variant(get_or<std::string>(doc, "variant", fsl ? "tarn" : "attn-multi"));
  m.measure = parse_measure(get_or<std::string>(doc, "measure", "EucCos"));
  m.seed = c.seed;
  const json& model = section(doc, "model");
  m.feature_size = get_count(model, "d_in", m.feature_size);
  m.visual_hidden = get_count(model, "visual_hidden", m.visual_hidden);
  m.relation_hidden = get_count(model, "relation_hidden", m.relation_hidden);
  m.nn_hidden = get_count(model, "nn_hidden", m.nn_hidden);
  m.semantic_size = get_count(model, "semantic_size", m.semantic_size);
  m.semantic_hidden = get_count(model, "semantic_hidden", m.semantic_hidden);
  const auto init = get_or<std::string>(model, "init", "glorot");
  if (init == "glorot") {
    m.init = Init::kGlorot;
  } else if (init == "zeros") {
    m.init = Init::kZeros;
  } else {
    throw SpecError("unknown init: " + init);
  }
  m.validate();

  const json& ep = section(doc, "episode");
  c.train_episode.mode = m.mode;
  c.train_episode.way = get_count(ep, "way", fsl ? 5 : 0);
  c.train_episode.shots = get_count(ep, "shots", 1);
  c.train_episode.queries = get_count(ep, "queries", fsl ? 1 : 16);
  c.eval_episode.mode = m.mode;
  c.eval_episode.way = get_count(ep, "eval_way", fsl ? c.train_episode.way : 0);
  c.eval_episode.shots = get_count(ep, "eval_shots", c.train_episode.shots);
  c.eval_episode.queries = get_count(ep, "eval_queries", c.train_episode.queries);

  c.train = fsl ? TrainConfig::fsl_defaults() : TrainConfig::zsl_defaults();
  c.train.seed = c.seed;
  const json& tr = section(doc, "train");
  if (tr.contains("optimizer")) c.train.optimizer.kind = parse_optimizer(tr["optimizer"].get<std::string>());
  c.train.optimizer.momentum = get_or(tr, "momentum", c.train.optimizer.momentum);
  c.train.optimizer.beta1 = get_or(tr, "beta1", c.train.optimizer.beta1);
  c.train.optimizer.beta2 = get_or(tr, "beta2", c.train.optimizer.beta2);
  c.train.optimizer.epsilon = get_or(tr, "epsilon", c.train.optimizer.epsilon);
  if (auto it = tr.find("lr_schedule"); it != tr.end() && !it->is_null()) {
    std::vector<std::pair<std::size_t, double>> points;
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2) throw SpecError("lr_schedule entries must be [episode, lr]");
      points.emplace_back(p[0].get<std::size_t>(), p[1].get<double>());
    }
    c.train.schedule = LrSchedule(std::move(points));
  }
  if (auto it = tr.find("lr"); it != tr.end() && !it->is_null()) {
    c.train.schedule = LrSchedule::constant(it->get<double>());
  }
  if (auto it = tr.find("grad_clip"); it != tr.end()) {
    if (it->is_null()) {
      c.train.grad_clip.reset();
    } else {
      const double clip = it->get<double>();
      if (!(clip > 0.0)) throw SpecError("grad_clip must be positive");
      c.train.grad_clip = clip;
    }
  }
  c.train.train_episodes = get_count(tr, "episodes", c.train.train_episodes);
  c.train.val_episodes = get_count(tr, "val_episodes", c.train.val_episodes);
  c.train.val_every = get_count(tr, "val_every", c.train.val_every);
  c.train.test_episodes = get_count(tr, "test_episodes", c.train.test_episodes);

  const json& data = section(doc, "data");
  if (auto it = data.find("path"); it != data.end() && !it->is_null()) {
    c.data_path = it->get<std::string>();
  }
  if (auto it = data.find("synthetic"); it != data.end() && !it->is_null()) {
    json spec = *it;
    if (!spec.contains("seed")) spec["seed"] = c.seed;
    c.synthetic = synthetic_spec_from_json(spec);
  }
  if (c.data_path && c.synthetic) throw SpecError("data.path and data.synthetic are mutually exclusive");

  const json& split = section(doc, "split");
  c.train_fraction = get_or(split, "train_fraction", fsl ? 0.6 : 0.5);
  c.val_fraction = get_or(split, "val_fraction", fsl ? 0.2 : 0.0);
  c.train_classes = get_ids(split, fsl ? "train_classes" : "seen_classes");
  c.val_classes = get_ids(split, "val_classes");
  c.test_classes = get_ids(split, fsl ? "test_classes" : "unseen_classes");
  if (c.train_classes.empty()) c.train_classes = get_ids(split, "train_classes");
  if (c.test_classes.empty()) c.test_classes = get_ids(split, "test_classes");
  if (!(c.train_fraction > 0.0) || !(c.val_fraction >= 0.0) || c.train_fraction + c.val_fraction >= 1.0) {
    throw SpecError("split fractions must satisfy train > 0, val >= 0, train + val < 1");
  }

  c.output_dir = get_or<std::string>(doc, "output_dir", c.output_dir.string());
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw SpecError("config " + path.string() + " is not valid JSON");
  return doc;
}

Dataset materialize_dataset(const RunConfig& config) {
  if (config.data_path) return load_dataset(*config.data_path);
  if (config.synthetic) return generate_synthetic(*config.synthetic);
  throw SpecError("config names no dataset (data.path or data.synthetic)");
}

TaskSetup make_task(const RunConfig& config, const Dataset& dataset) {
  TaskSetup task;
  task.dataset = &dataset;
  task.train_spec = config.train_episode;
  task.eval_spec = config.eval_episode;
  const auto ids = dataset.class_ids();
  if (!config.train_classes.empty() || !config.test_classes.empty()) {
    if (config.train_classes.empty() || config.test_classes.empty()) {
      throw SpecError("explicit class lists need both training and test classes");
    }
    task.train_classes = sorted(config.train_classes);
    task.val_classes = sorted(config.val_classes);
    task.test_classes = sorted(config.test_classes);
    for (const auto* list : {&task.train_classes, &task.val_classes, &task.test_classes}) {
      for (std::uint32_t c : *list) {
        if (!std::binary_search(ids.begin(), ids.end(), c)) {
          throw DataError("class " + std::to_string(c) + " is not present in the dataset");
        }
      }
    }
    return task;
  }
  const std::uint64_t split_seed = derive_seed(config.seed, 7);
  const ClassSplit first = split_classes(ids, config.train_fraction, split_seed);
  task.train_classes = first.seen;
  if (config.val_fraction > 0.0) {
    const double frac = config.val_fraction / (1.0 - config.train_fraction);
    const ClassSplit rest = split_classes(first.unseen, frac, derive_seed(split_seed, 1));
    task.val_classes = rest.seen;
    task.test_classes = rest.unseen;
  } else {
    task.test_classes = first.unseen;
  }
  return task;
}

}  // namespace tarn
