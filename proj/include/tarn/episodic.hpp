// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tarn/data.hpp"
#include "tarn/model.hpp"
#include "tarn/optim.hpp"

namespace tarn {

struct EpisodeSpec {
  Mode mode = Mode::kFsl;
  /// Classes per episode. In ZSL, 0 means "every class in the pool".
  std::size_t way = 5;
  /// Support shots per class (FSL only).
  std::size_t shots = 1;
  /// Query items per episode.
  std::size_t queries = 1;
};

struct Episode {
  std::vector<std::uint32_t> classes;             // dataset class ids, in episode order
  std::vector<std::vector<std::size_t>> support;  // FSL: video indices [class][shot]
  std::vector<std::size_t> queries;               // video indices
  std::vector<std::size_t> labels;                // query labels in [0, classes.size())
};

/// Draws episodes from a fixed pool of classes.
///
/// Classes are chosen uniformly without replacement, support examples
/// uniformly without replacement within each class, and FSL queries are never
/// part of the support set. ZSL queries are drawn uniformly over the episode's
/// classes and the support is the class semantic vectors.
class EpisodeSampler {
 public:
  /// Throws DataError when the pool cannot satisfy the spec.
  EpisodeSampler(const Dataset& dataset, std::vector<std::uint32_t> class_pool, EpisodeSpec spec);

  Episode sample(Rng& rng) const;

  const EpisodeSpec& spec() const noexcept { return spec_; }
  std::size_t way() const noexcept { return way_; }

 private:
  const Dataset* dataset_;
  std::vector<std::uint32_t> pool_;
  std::vector<std::vector<std::size_t>> pool_videos_;
  EpisodeSpec spec_;
  std::size_t way_ = 0;
};

Episode sample_episode(const Dataset& dataset, const std::vector<std::uint32_t>& class_pool,
                       const EpisodeSpec& spec, Rng& rng);

/// Binary cross-entropy over every (class, shot) pair of a C x K score matrix:
///   L = -(1/KC) sum [t log q + (1 - t) log(1 - q)],  q = sigmoid(raw).
ad::Var episode_loss(const ad::Var& raw, std::size_t true_class);

struct EpisodeOutput {
  ad::Var loss;              // mean over the episode's queries
  std::vector<Matrix> raw;   // per-query C x K scores
};

/// Forward pass over one episode (graph recorded when gradients are enabled).
EpisodeOutput run_episode(const TarnModel& model, const Dataset& dataset, const Episode& episode);

struct TrainConfig {
  OptimizerConfig optimizer;
  LrSchedule schedule;
  std::optional<double> grad_clip;
  std::size_t train_episodes = 20000;
  std::size_t val_episodes = 500;
  std::size_t val_every = 500;
  std::size_t test_episodes = 1000;
  std::uint64_t seed = 0;

  /// SGD momentum 0.9, lr 1e-3 for episodes 1-10000 then 1e-4, 20000 train /
  /// 500 validation (every 500) / 1000 test episodes.
  static TrainConfig fsl_defaults();
  /// Adam lr 1e-4, global-norm clip 0.5, 3000 train / 100 test episodes,
  /// validation every 50 episodes when a validation pool exists.
  static TrainConfig zsl_defaults();
};

/// Class pools and episode shapes for one run.
struct TaskSetup {
  const Dataset* dataset = nullptr;
  EpisodeSpec train_spec;
  EpisodeSpec eval_spec;
  std::vector<std::uint32_t> train_classes;
  std::vector<std::uint32_t> val_classes;
  std::vector<std::uint32_t> test_classes;
};

struct TrainLogRow {
  std::size_t episode = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_accuracy;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::optional<double> best_val_accuracy;
  std::size_t best_episode = 0;
  std::vector<Matrix> best_parameters;
};

/// Independent per-purpose seeds derived from TrainConfig::seed.
enum class RngStream : std::uint64_t { kTrain = 1, kValidation = 2, kTest = 3 };
std::uint64_t stream_seed(std::uint64_t master, RngStream stream);

/// Training callback. `hook` runs after backward and before clipping (tests use
/// it to inject gradients); `after_clip` sees the gradients the optimizer uses.
using GradientHook = std::function<void(ParameterSet&, std::size_t episode)>;

/// Episodic training. Every `val_every` episodes the model is evaluated on the
/// same set of validation episodes; the parameters with the best validation
/// accuracy (earliest on ties) are restored into the model at the end. Without
/// a validation pool the final parameters are kept. Throws NumericalError on a
/// non-finite loss, naming the episode.
TrainResult train(TarnModel& model, const TaskSetup& task, const TrainConfig& config,
                  const GradientHook& hook = {}, const GradientHook& after_clip = {});

struct EvalRecord {
  std::size_t episode = 0;
  std::size_t query = 0;
  std::size_t true_label = 0;
  std::size_t predicted = 0;
  std::uint32_t true_class_id = 0;
  std::size_t shots = 0;
  std::vector<double> class_probs;
};

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<EvalRecord> records;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  /// Normal-approximation binomial 95% half-width.
  double half_width95() const {
    const double p = accuracy();
    return total == 0 ? 0.0 : 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));
  }
};

/// Evaluates frozen parameters on `n_episodes` episodes drawn with `seed`.
/// Episodes are sampled sequentially, scored on up to `threads` workers and
/// merged in episode order, so results do not depend on the thread count.
EvalResult evaluate(const TarnModel& model, const Dataset& dataset,
                    const std::vector<std::uint32_t>& class_pool, const EpisodeSpec& spec,
                    std::size_t n_episodes, std::uint64_t seed, std::size_t threads = 1);

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log);
void write_eval_csv(std::ostream& out, const std::vector<EvalRecord>& records);

/// Binary checkpoint: "TCK1", u32 version, u32 tensor count; per tensor u32
/// name length, name, u32 rows, u32 cols, rows*cols float64 (little-endian).
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
/// Loads into a model with the same layout; a missing or mis-shaped tensor
/// raises ShapeError naming it.
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);
std::string encode_checkpoint(const ParameterSet& params);
void decode_checkpoint(const std::string& bytes, ParameterSet& params);

}  // namespace tarn
