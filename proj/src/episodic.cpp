// SPDX-License-Identifier: Apache-2.0
#include "tarn/episodic.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "tarn/errors.hpp"

namespace tarn {
namespace {

// First `count` entries of `items` become a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

EpisodeSampler::EpisodeSampler(const Dataset& dataset, std::vector<std::uint32_t> class_pool,
                               EpisodeSpec spec)
    : dataset_(&dataset), spec_(spec) {
  if (spec.queries == 0) throw DataError("episode spec: queries must be >= 1");
  const auto by_class = dataset.videos_by_class();
  std::sort(class_pool.begin(), class_pool.end());
  class_pool.erase(std::unique(class_pool.begin(), class_pool.end()), class_pool.end());

  if (spec.mode == Mode::kFsl) {
    if (spec.way < 2) throw DataError("episode spec: way must be >= 2");
    if (spec.shots < 1) throw DataError("episode spec: shots must be >= 1");
    for (std::uint32_t c : class_pool) {
      auto it = by_class.find(c);
      if (it != by_class.end() && it->second.size() >= spec.shots + 1) {
        pool_.push_back(c);
        pool_videos_.push_back(it->second);
      }
    }
    if (pool_.size() < spec.way) {
      throw DataError("episode needs " + std::to_string(spec.way) + " classes with at least " +
                      std::to_string(spec.shots + 1) + " examples each (shots + query); the pool has " +
                      std::to_string(pool_.size()) + " of " + std::to_string(class_pool.size()));
    }
    way_ = spec.way;
  } else {
    for (std::uint32_t c : class_pool) {
      auto it = by_class.find(c);
      if (it == by_class.end() || it->second.empty()) {
        throw DataError("class " + std::to_string(c) + " has no query videos");
      }
      if (dataset.semantic_for(c) == nullptr) {
        throw DataError("class " + std::to_string(c) + " has no semantic vector");
      }
      pool_.push_back(c);
      pool_videos_.push_back(it->second);
    }
    way_ = spec.way == 0 ? pool_.size() : spec.way;
    if (way_ < 2 || way_ > pool_.size()) {
      throw DataError("zero-shot episode needs between 2 and " + std::to_string(pool_.size()) +
                      " classes, requested " + std::to_string(way_));
    }
  }
}

Episode EpisodeSampler::sample(Rng& rng) const {
  std::vector<std::size_t> order(pool_.size());
  std::iota(order.begin(), order.end(), 0);
  partial_shuffle(order, way_, rng);
  order.resize(way_);

  Episode ep;
  for (std::size_t slot : order) ep.classes.push_back(pool_[slot]);

  if (spec_.mode == Mode::kZsl) {
    std::uniform_int_distribution<std::size_t> pick_class(0, way_ - 1);
    for (std::size_t q = 0; q < spec_.queries; ++q) {
      const std::size_t label = pick_class(rng);
      const auto& videos = pool_videos_[order[label]];
      std::uniform_int_distribution<std::size_t> pick_video(0, videos.size() - 1);
      ep.queries.push_back(videos[pick_video(rng)]);
      ep.labels.push_back(label);
    }
    return ep;
  }

  // Support first; whatever remains in each class is the query candidate pool.
  std::vector<std::vector<std::size_t>> remaining;
  for (std::size_t slot : order) {
    std::vector<std::size_t> videos = pool_videos_[slot];
    partial_shuffle(videos, spec_.shots, rng);
    ep.support.emplace_back(videos.begin(), videos.begin() + static_cast<std::ptrdiff_t>(spec_.shots));
    remaining.emplace_back(videos.begin() + static_cast<std::ptrdiff_t>(spec_.shots), videos.end());
  }
  for (std::size_t q = 0; q < spec_.queries; ++q) {
    std::vector<std::size_t> open;
    for (std::size_t c = 0; c < way_; ++c)
      if (!remaining[c].empty()) open.push_back(c);
    if (open.empty()) {
      throw DataError("episode ran out of query candidates after " + std::to_string(q) + " queries");
    }
    std::uniform_int_distribution<std::size_t> pick_class(0, open.size() - 1);
    const std::size_t label = open[pick_class(rng)];
    auto& cand = remaining[label];
    std::uniform_int_distribution<std::size_t> pick_video(0, cand.size() - 1);
    const std::size_t at = pick_video(rng);
    ep.queries.push_back(cand[at]);
    ep.labels.push_back(label);
    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(at));
  }
  return ep;
}

Episode sample_episode(const Dataset& dataset, const std::vector<std::uint32_t>& class_pool,
                       const EpisodeSpec& spec, Rng& rng) {
  return EpisodeSampler(dataset, class_pool, spec).sample(rng);
}

ad::Var episode_loss(const ad::Var& raw, std::size_t true_class) {
  if (true_class >= raw.rows()) {
    throw ContractError("episode_loss: true class " + std::to_string(true_class) +
                        " outside [0, " + std::to_string(raw.rows()) + ")");
  }
  Matrix targets(raw.rows(), raw.cols());
  for (std::size_t k = 0; k < raw.cols(); ++k) targets(true_class, k) = 1.0;
  return ad::binary_cross_entropy(ad::sigmoid(raw), targets);
}

EpisodeOutput run_episode(const TarnModel& model, const Dataset& dataset, const Episode& episode) {
  EpisodeOutput out;
  std::vector<ad::Var> losses;
  if (model.config().mode == Mode::kFsl) {
    std::vector<std::vector<const Matrix*>> support;
    for (const auto& cls : episode.support) {
      auto& row = support.emplace_back();
      for (std::size_t idx : cls) row.push_back(&dataset.videos[idx].features);
    }
    for (std::size_t q = 0; q < episode.queries.size(); ++q) {
      ad::Var raw = model.score_fsl(dataset.videos[episode.queries[q]].features, support);
      losses.push_back(episode_loss(raw, episode.labels[q]));
      out.raw.push_back(raw.value());
    }
  } else {
    std::vector<const Matrix*> semantics;
    for (std::uint32_t c : episode.classes) {
      const SemanticVector* s = dataset.semantic_for(c);
      if (s == nullptr) throw DataError("class " + std::to_string(c) + " has no semantic vector");
      semantics.push_back(&s->vec);
    }
    const auto classes = model.embed_classes(semantics);
    for (std::size_t q = 0; q < episode.queries.size(); ++q) {
      ad::Var raw = model.score_zsl(dataset.videos[episode.queries[q]].features, classes);
      losses.push_back(episode_loss(raw, episode.labels[q]));
      out.raw.push_back(raw.value());
    }
  }
  out.loss = ad::row_mean(ad::concat_rows(losses));
  return out;
}

TrainConfig TrainConfig::fsl_defaults() {
  TrainConfig c;
  c.optimizer.kind = OptimizerKind::kSgdMomentum;
  c.optimizer.momentum = 0.9;
  c.schedule = LrSchedule({{1, 1e-3}, {10001, 1e-4}});
  c.train_episodes = 20000;
  c.val_episodes = 500;
  c.val_every = 500;
  c.test_episodes = 1000;
  return c;
}

TrainConfig TrainConfig::zsl_defaults() {
  TrainConfig c;
  c.optimizer.kind = OptimizerKind::kAdam;
  c.schedule = LrSchedule::constant(1e-4);
  c.grad_clip = 0.5;
  c.train_episodes = 3000;
  c.val_episodes = 100;
  c.val_every = 50;
  c.test_episodes = 100;
  return c;
}

std::uint64_t stream_seed(std::uint64_t master, RngStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

TrainResult train(TarnModel& model, const TaskSetup& task, const TrainConfig& config,
                  const GradientHook& hook, const GradientHook& after_clip) {
  if (task.dataset == nullptr) throw ContractError("train: task has no dataset");
  const Dataset& data = *task.dataset;
  if (data.feature_size != model.config().feature_size) {
    throw ShapeError("dataset d_in " + std::to_string(data.feature_size) + " does not match model d_in " +
                     std::to_string(model.config().feature_size));
  }
  EpisodeSampler sampler(data, task.train_classes, task.train_spec);
  const bool validate = !task.val_classes.empty() && config.val_episodes > 0 && config.val_every > 0;
  if (validate) EpisodeSampler(data, task.val_classes, task.eval_spec);  // fail fast on bad pools

  ParameterSet& params = model.parameters();
  Optimizer optimizer(config.optimizer);
  Rng rng(stream_seed(config.seed, RngStream::kTrain));
  TrainResult result;
  result.log.reserve(config.train_episodes);

  for (std::size_t ep = 1; ep <= config.train_episodes; ++ep) {
    const double lr = config.schedule.at(ep);
    params.zero_grad();
    const Episode episode = sampler.sample(rng);
    EpisodeOutput out = run_episode(model, data, episode);
    const double loss = out.loss.item();
    if (!std::isfinite(loss)) {
      throw NumericalError("non-finite loss at training episode " + std::to_string(ep));
    }
    ad::backward(out.loss);
    out = {};  // release the graph before the update
    if (hook) hook(params, ep);
    if (config.grad_clip) clip_grad_global_norm(params, *config.grad_clip);
    if (after_clip) after_clip(params, ep);
    optimizer.step(params, lr);

    TrainLogRow row{ep, loss, lr, std::nullopt};
    if (validate && ep % config.val_every == 0) {
      const double acc = evaluate(model, data, task.val_classes, task.eval_spec, config.val_episodes,
                                  stream_seed(config.seed, RngStream::kValidation))
                             .accuracy();
      row.val_accuracy = acc;
      if (!result.best_val_accuracy || acc > *result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_episode = ep;
        result.best_parameters = params.snapshot();
      }
    }
    result.log.push_back(row);
  }

  if (result.best_val_accuracy) {
    params.restore(result.best_parameters);
  } else {
    result.best_episode = config.train_episodes;
    result.best_parameters = params.snapshot();
  }
  return result;
}

EvalResult evaluate(const TarnModel& model, const Dataset& dataset,
                    const std::vector<std::uint32_t>& class_pool, const EpisodeSpec& spec,
                    std::size_t n_episodes, std::uint64_t seed, std::size_t threads) {
  EpisodeSampler sampler(dataset, class_pool, spec);
  Rng rng(seed);
  std::vector<Episode> episodes;
  episodes.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) episodes.push_back(sampler.sample(rng));

  std::vector<std::vector<EvalRecord>> per_episode(n_episodes);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    ad::NoGradGuard no_grad;
    try {
      for (std::size_t i = next++; i < n_episodes; i = next++) {
        const Episode& ep = episodes[i];
        EpisodeOutput out = run_episode(model, dataset, ep);
        for (std::size_t q = 0; q < ep.queries.size(); ++q) {
          RelationScores scores = aggregate_and_predict(out.raw[q]);
          per_episode[i].push_back({i, q, ep.labels[q], scores.predicted, ep.classes[ep.labels[q]],
                                    out.raw[q].cols(), std::move(scores.class_probs)});
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_episodes;
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, n_episodes));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EvalResult result;
  for (auto& recs : per_episode) {
    for (auto& r : recs) {
      result.correct += r.predicted == r.true_label ? 1 : 0;
      ++result.total;
      result.records.push_back(std::move(r));
    }
  }
  return result;
}

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log) {
  out << "episode,loss,lr,val_accuracy\n";
  for (const auto& row : log) {
    out << row.episode << ',' << format_double(row.loss) << ',' << format_double(row.lr) << ',';
    if (row.val_accuracy) out << format_double(*row.val_accuracy);
    out << '\n';
  }
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  std::size_t classes = 0;
  for (const auto& r : records) classes = std::max(classes, r.class_probs.size());
  out << "episode,query,true_class,predicted,true_class_id,shots";
  for (std::size_t c = 0; c < classes; ++c) out << ",prob_" << c;
  out << '\n';
  for (const auto& r : records) {
    out << r.episode << ',' << r.query << ',' << r.true_label << ',' << r.predicted << ','
        << r.true_class_id << ',' << r.shots;
    for (double p : r.class_probs) out << ',' << format_double(p);
    out << '\n';
  }
}

std::string encode_checkpoint(const ParameterSet& params) {
  detail::ByteWriter out;
  out.raw("TCK1");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    out.u32(static_cast<std::uint32_t>(e.name.size()));
    out.raw(e.name);
    out.u32(static_cast<std::uint32_t>(e.var.rows()));
    out.u32(static_cast<std::uint32_t>(e.var.cols()));
    for (double v : e.var.value().data()) out.f64(v);
  }
  return out.take();
}

void decode_checkpoint(const std::string& bytes, ParameterSet& params) {
  detail::ByteReader in(bytes);
  if (in.raw(4, "magic") != "TCK1") throw DataError("not a checkpoint file (bad magic)");
  if (in.u32("version") != 1) throw DataError("unsupported checkpoint version");
  const std::uint32_t count = in.u32("tensor count");
  std::vector<Matrix> values(params.size());
  std::vector<bool> seen(params.size(), false);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = in.u32("name length");
    const std::string name(in.raw(len, "tensor name"));
    const std::uint32_t rows = in.u32("rows");
    const std::uint32_t cols = in.u32("cols");
    const auto& entries = params.entries();
    auto it = std::find_if(entries.begin(), entries.end(), [&](const NamedParameter& p) { return p.name == name; });
    if (it == entries.end()) throw ShapeError("checkpoint tensor '" + name + "' does not exist in the model");
    if (it->var.rows() != rows || it->var.cols() != cols) {
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_string(rows, cols) +
                       ", model expects " + it->var.value().shape_string());
    }
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (double& v : data) v = in.f64("tensor value");
    const auto idx = static_cast<std::size_t>(it - entries.begin());
    values[idx] = Matrix(rows, cols, std::move(data));
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ShapeError("checkpoint is missing tensor '" + params.entries()[i].name + "'");
  }
  params.restore(values);
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  decode_checkpoint(ss.str(), params);
}

}  // namespace tarn
