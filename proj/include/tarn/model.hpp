// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tarn/attention.hpp"
#include "tarn/comparison.hpp"
#include "tarn/embedding.hpp"
#include "tarn/relation.hpp"

namespace tarn {

enum class Mode { kFsl, kZsl };

enum class Variant {
  kTarn,          // FSL: bi-GRU, attention, per-segment comparison, GRU head
  kTarnSingle,    // FSL: uni-GRU summary vector, single comparison, FC head
  kNoAttnSingle,  // ZSL: uni-GRU summary vector vs semantic embedding
  kAttnSingle,    // ZSL: attention pools the query segments onto the semantic embedding
  kAttnMulti,     // ZSL: attention expands the semantic embedding to every query segment
};

std::string_view to_string(Mode m);
std::string_view to_string(Variant v);
Mode parse_mode(std::string_view name);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Mode mode = Mode::kFsl;
  Variant variant = Variant::kTarn;
  Measure measure = Measure::kEucCos;
  std::size_t feature_size = 4096;
  std::size_t visual_hidden = 256;
  std::size_t relation_hidden = 256;
  std::size_t nn_hidden = 512;
  std::size_t semantic_size = 115;
  std::size_t semantic_hidden = 4096;
  Init init = Init::kGlorot;
  std::uint64_t seed = 0;

  /// Throws SpecError for invalid mode/variant combinations or zero sizes.
  void validate() const;
};

class TarnModel {
 public:
  explicit TarnModel(const ModelConfig& config);

  TarnModel(const TarnModel&) = delete;
  TarnModel& operator=(const TarnModel&) = delete;
  TarnModel(TarnModel&&) = default;
  TarnModel& operator=(TarnModel&&) = default;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  /// Width of the visual embedding fed to comparison.
  std::size_t embed_width() const noexcept { return embed_width_; }

  /// Relation score of one query video against one sample video (FSL).
  ad::Var pair_score(const ad::Var& query_embedding, const ad::Var& sample_embedding) const;
  /// Visual embedding used by the active variant (N x d, or 1 x d for single variants).
  ad::Var embed_video(const Matrix& features) const;

  /// FSL raw scores: support[c][k] are the sample videos -> C x K.
  ad::Var score_fsl(const Matrix& query,
                    const std::vector<std::vector<const Matrix*>>& support) const;

  /// ZSL: embed each class semantic vector once per episode.
  std::vector<ad::Var> embed_classes(const std::vector<const Matrix*>& semantics) const;
  /// ZSL raw scores of one query against every embedded class -> C x 1.
  ad::Var score_zsl(const Matrix& query, const std::vector<ad::Var>& class_embeddings) const;

 private:
  ModelConfig config_;
  ParameterSet params_;
  std::size_t embed_width_ = 0;
  std::optional<VisualEmbedder> visual_;
  std::optional<SingleVectorEmbedder> single_;
  std::optional<SemanticEmbedder> semantic_;
  std::optional<AttentionParams> attention_;
  std::optional<Comparator> comparator_;
  std::optional<FslHead> fsl_head_;
  std::optional<PooledMlpHead> mlp_head_;
};

}  // namespace tarn
