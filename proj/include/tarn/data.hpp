// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tarn/matrix.hpp"

namespace tarn {

/// One video: N x d_in per-segment features.
struct SegmentFeatures {
  std::string video_id;
  std::uint32_t class_id = 0;
  Matrix features;

  friend bool operator==(const SegmentFeatures&, const SegmentFeatures&) = default;
};

/// Class-level semantic representation (attributes or word vector), 1 x d_sem.
struct SemanticVector {
  std::uint32_t class_id = 0;
  Matrix vec;

  friend bool operator==(const SemanticVector&, const SemanticVector&) = default;
};

struct Dataset {
  std::size_t feature_size = 0;
  std::vector<SegmentFeatures> videos;
  std::vector<SemanticVector> semantics;

  /// Sorted distinct class ids present in `videos`.
  std::vector<std::uint32_t> class_ids() const;
  /// class id -> indices into `videos`, in file order.
  std::map<std::uint32_t, std::vector<std::size_t>> videos_by_class() const;
  const SemanticVector* semantic_for(std::uint32_t class_id) const;
  std::size_t semantic_size() const { return semantics.empty() ? 0 : semantics.front().vec.cols(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// TSF: "TSF1", u32 version=1, u32 video count, u32 d_in; per video u32 id length,
// id bytes, u32 class id, u32 N, N*d_in float64. All little-endian.
// TSV: "TSV1", u32 version=1, u32 count, u32 d_sem; per entry u32 class id, d_sem float64.
std::string encode_tsf(const Dataset& dataset);
std::string encode_tsv(const std::vector<SemanticVector>& semantics);
/// Throws DataError naming the byte offset of the first problem.
Dataset decode_tsf(const std::string& bytes);
std::vector<SemanticVector> decode_tsv(const std::string& bytes);

void write_tsf(const std::filesystem::path& path, const Dataset& dataset);
void write_tsv(const std::filesystem::path& path, const std::vector<SemanticVector>& semantics);

/// Loads a TSF file plus, when present, the sibling semantic file (same stem, ".tsv").
Dataset load_dataset(const std::filesystem::path& path);
/// Writes "<stem>.tsf" and, if the dataset carries semantics, "<stem>.tsv".
void save_dataset(const std::filesystem::path& tsf_path, const Dataset& dataset);

enum class TemporalPattern { kStaticCluster, kOrderedMotif };

struct SyntheticSpec {
  std::size_t n_classes = 20;
  std::size_t examples_per_class = 30;
  std::size_t feature_size = 32;
  std::size_t min_segments = 4;
  std::size_t max_segments = 8;
  double cluster_separation = 6.0;
  double noise_std = 1.0;
  TemporalPattern pattern = TemporalPattern::kStaticCluster;
  /// Number of distinct segment clusters per ordered motif.
  std::size_t motif_length = 4;
  /// 0 disables semantic vectors.
  std::size_t semantic_size = 0;
  double semantic_noise_std = 0.1;
  std::uint64_t seed = 0;
};

/// Pure function of the spec: identical specs give bit-identical datasets.
///
/// static_cluster: every segment of class c is drawn from N(mu_c, noise_std^2 I)
/// with pairwise ||mu_c - mu_c'|| >= cluster_separation.
/// ordered_motif: classes share one set of `motif_length` cluster centres and
/// differ only in the order those clusters occur along the video. Classes come
/// in pairs whose orders are reverses of each other.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Class centres used by the generator (static_cluster: one per class;
/// ordered_motif: one per motif slot cluster).
std::vector<Matrix> synthetic_centres(const SyntheticSpec& spec);
/// Cluster index order per class for ordered_motif specs.
std::vector<std::vector<std::size_t>> synthetic_motifs(const SyntheticSpec& spec);

struct ClassSplit {
  std::vector<std::uint32_t> seen;
  std::vector<std::uint32_t> unseen;
};

/// Seeded, disjoint and exhaustive partition; |seen| = round(n * seen_fraction).
ClassSplit split_classes(const std::vector<std::uint32_t>& class_ids, double seen_fraction,
                         std::uint64_t seed);

}  // namespace tarn
