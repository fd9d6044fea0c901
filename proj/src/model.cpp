// SPDX-License-Identifier: Apache-2.0
#include "tarn/model.hpp"

#include "tarn/errors.hpp"

namespace tarn {

std::string_view to_string(Mode m) { return m == Mode::kFsl ? "fsl" : "zsl"; }

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kTarn: return "tarn";
    case Variant::kTarnSingle: return "tarn-single";
    case Variant::kNoAttnSingle: return "no-attn-single";
    case Variant::kAttnSingle: return "attn-single";
    case Variant::kAttnMulti: return "attn-multi";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "fsl") return Mode::kFsl;
  if (name == "zsl") return Mode::kZsl;
  throw SpecError("unknown mode: " + std::string(name));
}

Variant parse_variant(std::string_view name) {
  if (name == "tarn") return Variant::kTarn;
  if (name == "tarn-single") return Variant::kTarnSingle;
  if (name == "no-attn-single") return Variant::kNoAttnSingle;
  if (name == "attn-single") return Variant::kAttnSingle;
  if (name == "attn-multi") return Variant::kAttnMulti;
  throw SpecError("unknown variant: " + std::string(name));
}

void ModelConfig::validate() const {
  const bool fsl_variant = variant == Variant::kTarn || variant == Variant::kTarnSingle;
  if ((mode == Mode::kFsl) != fsl_variant) {
    throw SpecError("variant '" + std::string(to_string(variant)) + "' is not valid in " +
                    std::string(to_string(mode)) + " mode");
  }
  if (feature_size == 0 || visual_hidden == 0 || relation_hidden == 0) {
    throw SpecError("model sizes must be positive");
  }
  if ((measure == Measure::kNN || measure == Measure::kSubMultNN) && nn_hidden == 0) {
    throw SpecError("nn_hidden must be positive for NN comparison measures");
  }
  if (mode == Mode::kZsl && (semantic_size == 0 || semantic_hidden == 0)) {
    throw SpecError("zero-shot models need positive semantic sizes");
  }
}

TarnModel::TarnModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, 0x6d6f64656cULL));
  const Init init = config_.init;
  const auto& c = config_;
  switch (c.variant) {
    case Variant::kTarn:
    case Variant::kAttnSingle:
    case Variant::kAttnMulti:
      visual_ = VisualEmbedder::create(params_, "visual", c.feature_size, c.visual_hidden, init, rng);
      embed_width_ = visual_->output_size();
      break;
    case Variant::kTarnSingle:
      single_ = SingleVectorEmbedder::create(params_, "visual", c.feature_size, c.visual_hidden,
                                             init, rng);
      embed_width_ = single_->output_size();
      break;
    case Variant::kNoAttnSingle:
      // Summary GRU as wide as the bidirectional embedding so the semantic
      // branch keeps the same output width across the zero-shot variants.
      single_ = SingleVectorEmbedder::create(params_, "visual", c.feature_size,
                                             2 * c.visual_hidden, init, rng);
      embed_width_ = single_->output_size();
      break;
  }
  if (c.mode == Mode::kZsl) {
    semantic_ = SemanticEmbedder::create(params_, "semantic", c.semantic_size, c.semantic_hidden,
                                         embed_width_, init, rng);
    if (semantic_->output_size() != embed_width_) {
      throw ShapeError("semantic embedding width differs from visual embedding width");
    }
  }
  if (c.variant == Variant::kTarn || c.variant == Variant::kAttnSingle ||
      c.variant == Variant::kAttnMulti) {
    attention_ = AttentionParams::create(params_, "attention", embed_width_, init, rng);
  }
  comparator_ = Comparator::create(params_, "compare", c.measure, embed_width_, c.nn_hidden, init, rng);
  const std::size_t w = comparator_->output_width();
  if (c.variant == Variant::kTarn) {
    fsl_head_ = FslHead::create(params_, "relation", w, c.relation_hidden, init, rng);
  } else {
    mlp_head_ = PooledMlpHead::create(params_, "relation", w, c.relation_hidden, init, rng);
  }
}

ad::Var TarnModel::embed_video(const Matrix& features) const {
  if (features.cols() != config_.feature_size) {
    throw ShapeError("video features have width " + std::to_string(features.cols()) +
                     ", model expects d_in = " + std::to_string(config_.feature_size));
  }
  auto input = ad::constant(features);
  return visual_ ? visual_->embed(input) : single_->embed(input);
}

ad::Var TarnModel::pair_score(const ad::Var& query_embedding, const ad::Var& sample_embedding) const {
  if (config_.mode != Mode::kFsl) throw ContractError("pair_score is a few-shot operation");
  if (config_.variant == Variant::kTarn) {
    auto aligned = align(sample_embedding, query_embedding, *attention_).aligned;
    return fsl_head_->score(comparator_->compare(query_embedding, aligned));
  }
  return mlp_head_->score(comparator_->compare(query_embedding, sample_embedding));
}

ad::Var TarnModel::score_fsl(const Matrix& query,
                             const std::vector<std::vector<const Matrix*>>& support) const {
  if (config_.mode != Mode::kFsl) throw ContractError("score_fsl called on a zero-shot model");
  if (support.empty()) throw ContractError("score_fsl: empty support set");
  const std::size_t shots = support.front().size();
  ad::Var q = embed_video(query);
  std::vector<ad::Var> rows;
  rows.reserve(support.size());
  for (const auto& cls : support) {
    if (cls.size() != shots || shots == 0) throw ContractError("score_fsl: ragged support set");
    std::vector<ad::Var> scores;
    scores.reserve(shots);
    for (const Matrix* sample : cls) scores.push_back(pair_score(q, embed_video(*sample)));
    rows.push_back(ad::concat_cols(scores));
  }
  return ad::concat_rows(rows);
}

std::vector<ad::Var> TarnModel::embed_classes(const std::vector<const Matrix*>& semantics) const {
  if (config_.mode != Mode::kZsl) throw ContractError("embed_classes called on a few-shot model");
  std::vector<ad::Var> out;
  out.reserve(semantics.size());
  for (const Matrix* s : semantics) out.push_back(semantic_->embed(ad::constant(*s)));
  return out;
}

ad::Var TarnModel::score_zsl(const Matrix& query,
                             const std::vector<ad::Var>& class_embeddings) const {
  using namespace ad;
  if (config_.mode != Mode::kZsl) throw ContractError("score_zsl called on a few-shot model");
  Var video = embed_video(query);
  std::vector<Var> scores;
  scores.reserve(class_embeddings.size());
  for (const Var& cls : class_embeddings) {
    Var cmp;
    switch (config_.variant) {
      case Variant::kAttnMulti:
        cmp = comparator_->compare(video, align(cls, video, *attention_).aligned);
        break;
      case Variant::kAttnSingle:
        cmp = comparator_->compare(cls, align(video, cls, *attention_).aligned);
        break;
      default:
        cmp = comparator_->compare(video, cls);
        break;
    }
    scores.push_back(mlp_head_->score(cmp));
  }
  return concat_rows(scores);
}

}  // namespace tarn
