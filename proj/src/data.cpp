// SPDX-License-Identifier: Apache-2.0
#include "tarn/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tarn/errors.hpp"
#include "tarn/params.hpp"
#include "binary_io.hpp"

namespace tarn {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::uint32_t kFormatVersion = 1;

void check_header(ByteReader& in, std::string_view magic) {
  if (in.raw(4, "magic") != magic) {
    throw DataError("bad magic at byte offset 0: expected " + std::string(magic));
  }
  const std::size_t at = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kFormatVersion) {
    throw DataError("unsupported version " + std::to_string(version) + " at byte offset " +
                    std::to_string(at));
  }
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw DataError(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

// Axis-aligned centres +-a e_i, a = separation / sqrt(2), then a seeded random
// rotation. Any two distinct centres are a*sqrt(2) or 2a apart.
std::vector<Matrix> make_centres(std::size_t count, std::size_t dim, double separation, Rng& rng) {
  if (count > 2 * dim) {
    throw SpecError("cannot place " + std::to_string(count) + " centres with separation " +
                    std::to_string(separation) + " in " + std::to_string(dim) +
                    " dimensions (generator capacity is 2 * d_in)");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Random orthogonal basis via Gram-Schmidt on a Gaussian matrix.
  std::vector<std::vector<double>> basis;
  while (basis.size() < dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = gauss(rng);
    for (const auto& b : basis) {
      const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  const double a = separation / std::sqrt(2.0);
  std::vector<Matrix> centres;
  for (std::size_t c = 0; c < count; ++c) {
    const auto& axis = basis[c / 2];
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    Matrix m(1, dim);
    for (std::size_t i = 0; i < dim; ++i) m(0, i) = sign * a * axis[i];
    centres.push_back(std::move(m));
  }
  return centres;
}

void validate(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw SpecError("synthetic spec: n_classes must be >= 2");
  if (spec.examples_per_class < 1) throw SpecError("synthetic spec: examples_per_class must be >= 1");
  if (spec.feature_size < 1) throw SpecError("synthetic spec: d_in must be >= 1");
  if (spec.min_segments < 1 || spec.max_segments < spec.min_segments) {
    throw SpecError("synthetic spec: need 1 <= min_segments <= max_segments");
  }
  if (!(spec.cluster_separation > 0.0)) throw SpecError("synthetic spec: separation must be > 0");
  if (!(spec.noise_std >= 0.0)) throw SpecError("synthetic spec: noise_std must be >= 0");
  if (!(spec.semantic_noise_std >= 0.0)) throw SpecError("synthetic spec: semantic_noise_std must be >= 0");
  if (spec.pattern == TemporalPattern::kOrderedMotif) {
    if (spec.motif_length < 2) throw SpecError("synthetic spec: motif_length must be >= 2");
    if (spec.min_segments < spec.motif_length) {
      throw SpecError("synthetic spec: min_segments must be >= motif_length so every motif slot appears");
    }
    double perms = 1.0;
    for (std::size_t i = 2; i <= spec.motif_length; ++i) perms *= static_cast<double>(i);
    if (static_cast<double>(spec.n_classes) > perms) {
      throw SpecError("synthetic spec: " + std::to_string(spec.n_classes) +
                      " classes exceed the number of orderings of " +
                      std::to_string(spec.motif_length) + " motif clusters");
    }
  }
}

// Rng streams used by the generator.
enum Stream : std::uint64_t { kCentres = 1, kMotifs = 2, kVideos = 3, kSemantic = 4 };

}  // namespace

std::vector<std::uint32_t> Dataset::class_ids() const {
  std::set<std::uint32_t> ids;
  for (const auto& v : videos) ids.insert(v.class_id);
  return {ids.begin(), ids.end()};
}

std::map<std::uint32_t, std::vector<std::size_t>> Dataset::videos_by_class() const {
  std::map<std::uint32_t, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < videos.size(); ++i) out[videos[i].class_id].push_back(i);
  return out;
}

const SemanticVector* Dataset::semantic_for(std::uint32_t class_id) const {
  for (const auto& s : semantics)
    if (s.class_id == class_id) return &s;
  return nullptr;
}

std::string encode_tsf(const Dataset& dataset) {
  ByteWriter out;
  out.raw("TSF1");
  out.u32(kFormatVersion);
  out.u32(checked_u32(dataset.videos.size(), "video count"));
  out.u32(checked_u32(dataset.feature_size, "d_in"));
  for (const auto& v : dataset.videos) {
    if (v.features.cols() != dataset.feature_size) {
      throw DataError("video '" + v.video_id + "' has width " + std::to_string(v.features.cols()) +
                      ", dataset d_in is " + std::to_string(dataset.feature_size));
    }
    out.u32(checked_u32(v.video_id.size(), "id length"));
    out.raw(v.video_id);
    out.u32(v.class_id);
    out.u32(checked_u32(v.features.rows(), "segment count"));
    for (double x : v.features.data()) out.f64(x);
  }
  return out.take();
}

std::string encode_tsv(const std::vector<SemanticVector>& semantics) {
  const std::size_t width = semantics.empty() ? 0 : semantics.front().vec.cols();
  ByteWriter out;
  out.raw("TSV1");
  out.u32(kFormatVersion);
  out.u32(checked_u32(semantics.size(), "vector count"));
  out.u32(checked_u32(width, "d_sem"));
  for (const auto& s : semantics) {
    if (s.vec.rows() != 1 || s.vec.cols() != width) {
      throw DataError("semantic vector for class " + std::to_string(s.class_id) +
                      " has shape " + s.vec.shape_string());
    }
    out.u32(s.class_id);
    for (double x : s.vec.data()) out.f64(x);
  }
  return out.take();
}

Dataset decode_tsf(const std::string& bytes) {
  ByteReader in(bytes);
  check_header(in, "TSF1");
  const std::uint32_t count = in.u32("video count");
  Dataset ds;
  const std::size_t d_at = in.offset();
  ds.feature_size = in.u32("d_in");
  if (ds.feature_size == 0) throw DataError("d_in must be positive (byte offset " + std::to_string(d_at) + ")");
  ds.videos.reserve(std::min<std::size_t>(count, bytes.size() / 16));
  for (std::uint32_t i = 0; i < count; ++i) {
    SegmentFeatures v;
    const std::uint32_t id_len = in.u32("id length");
    v.video_id = std::string(in.raw(id_len, "video id"));
    v.class_id = in.u32("class id");
    const std::size_t n_at = in.offset();
    const std::uint32_t n = in.u32("segment count");
    if (n == 0) throw DataError("video with zero segments at byte offset " + std::to_string(n_at));
    std::vector<double> values(static_cast<std::size_t>(n) * ds.feature_size);
    for (double& x : values) x = in.f64("feature value");
    v.features = Matrix(n, ds.feature_size, std::move(values));
    ds.videos.push_back(std::move(v));
  }
  if (!in.at_end()) {
    throw DataError("trailing bytes after last video at byte offset " + std::to_string(in.offset()));
  }
  return ds;
}

std::vector<SemanticVector> decode_tsv(const std::string& bytes) {
  ByteReader in(bytes);
  check_header(in, "TSV1");
  const std::uint32_t count = in.u32("vector count");
  const std::size_t d_at = in.offset();
  const std::uint32_t width = in.u32("d_sem");
  if (count > 0 && width == 0) throw DataError("d_sem must be positive (byte offset " + std::to_string(d_at) + ")");
  std::vector<SemanticVector> out;
  out.reserve(std::min<std::size_t>(count, bytes.size() / 4));
  for (std::uint32_t i = 0; i < count; ++i) {
    SemanticVector s;
    s.class_id = in.u32("class id");
    std::vector<double> values(width);
    for (double& x : values) x = in.f64("semantic value");
    s.vec = Matrix(1, width, std::move(values));
    out.push_back(std::move(s));
  }
  if (!in.at_end()) {
    throw DataError("trailing bytes after last vector at byte offset " + std::to_string(in.offset()));
  }
  return out;
}

void write_tsf(const std::filesystem::path& path, const Dataset& dataset) {
  write_file(path, encode_tsf(dataset));
}

void write_tsv(const std::filesystem::path& path, const std::vector<SemanticVector>& semantics) {
  write_file(path, encode_tsv(semantics));
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;
  try {
    ds = decode_tsf(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  auto sem_path = path;
  sem_path.replace_extension(".tsv");
  if (std::filesystem::exists(sem_path)) {
    try {
      ds.semantics = decode_tsv(read_file(sem_path));
    } catch (const DataError& e) {
      throw DataError(sem_path.string() + ": " + e.what());
    }
  }
  return ds;
}

void save_dataset(const std::filesystem::path& tsf_path, const Dataset& dataset) {
  write_tsf(tsf_path, dataset);
  if (!dataset.semantics.empty()) {
    auto sem_path = tsf_path;
    sem_path.replace_extension(".tsv");
    write_tsv(sem_path, dataset.semantics);
  }
}

std::vector<Matrix> synthetic_centres(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, kCentres));
  const std::size_t count =
      spec.pattern == TemporalPattern::kStaticCluster ? spec.n_classes : spec.motif_length;
  return make_centres(count, spec.feature_size, spec.cluster_separation, rng);
}

std::vector<std::vector<std::size_t>> synthetic_motifs(const SyntheticSpec& spec) {
  validate(spec);
  if (spec.pattern != TemporalPattern::kOrderedMotif) return {};
  Rng rng(derive_seed(spec.seed, kMotifs));
  std::set<std::vector<std::size_t>> used;
  std::vector<std::vector<std::size_t>> motifs;
  std::vector<std::size_t> order(spec.motif_length);
  std::iota(order.begin(), order.end(), 0);
  while (motifs.size() < spec.n_classes) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> reversed(order.rbegin(), order.rend());
    if (used.contains(order) || used.contains(reversed)) continue;
    used.insert(order);
    used.insert(reversed);
    motifs.push_back(order);
    if (motifs.size() < spec.n_classes) motifs.push_back(reversed);
  }
  return motifs;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const auto centres = synthetic_centres(spec);
  const auto motifs = synthetic_motifs(spec);
  const bool motif = spec.pattern == TemporalPattern::kOrderedMotif;

  Rng rng(derive_seed(spec.seed, kVideos));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> seg_count(spec.min_segments, spec.max_segments);

  Dataset ds;
  ds.feature_size = spec.feature_size;
  ds.videos.reserve(spec.n_classes * spec.examples_per_class);
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t e = 0; e < spec.examples_per_class; ++e) {
      const std::size_t n = seg_count(rng);
      Matrix features(n, spec.feature_size);
      for (std::size_t t = 0; t < n; ++t) {
        const Matrix& centre = motif ? centres[motifs[c][t * spec.motif_length / n]] : centres[c];
        for (std::size_t j = 0; j < spec.feature_size; ++j)
          features(t, j) = centre(0, j) + spec.noise_std * noise(rng);
      }
      ds.videos.push_back({"c" + std::to_string(c) + "_v" + std::to_string(e),
                           static_cast<std::uint32_t>(c), std::move(features)});
    }
  }

  if (spec.semantic_size > 0) {
    Rng srng(derive_seed(spec.seed, kSemantic));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(spec.feature_size));
    Matrix projection(spec.feature_size, spec.semantic_size);
    for (double& v : projection.data()) v = noise(srng) * inv_sqrt;
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
      // Class signature: the centre, or for motifs a position-weighted sum of centres.
      Matrix signature(1, spec.feature_size);
      if (motif) {
        for (std::size_t i = 0; i < spec.motif_length; ++i) {
          const double w = static_cast<double>(i + 1) / static_cast<double>(spec.motif_length);
          for (std::size_t j = 0; j < spec.feature_size; ++j)
            signature(0, j) += w * centres[motifs[c][i]](0, j);
        }
      } else {
        signature = centres[c];
      }
      Matrix vec(1, spec.semantic_size);
      for (std::size_t k = 0; k < spec.semantic_size; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < spec.feature_size; ++j) acc += signature(0, j) * projection(j, k);
        vec(0, k) = acc + spec.semantic_noise_std * noise(srng);
      }
      ds.semantics.push_back({static_cast<std::uint32_t>(c), std::move(vec)});
    }
  }
  return ds;
}

ClassSplit split_classes(const std::vector<std::uint32_t>& class_ids, double seen_fraction,
                         std::uint64_t seed) {
  if (class_ids.size() < 2) throw SpecError("split_classes: need at least 2 classes");
  if (!(seen_fraction > 0.0 && seen_fraction < 1.0)) {
    throw SpecError("split_classes: seen_fraction must lie in (0, 1)");
  }
  const auto n = class_ids.size();
  const auto seen_count =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * seen_fraction));
  if (seen_count == 0 || seen_count == n) {
    throw SpecError("split_classes: fraction " + std::to_string(seen_fraction) + " leaves an empty side for " +
                    std::to_string(n) + " classes");
  }
  std::vector<std::uint32_t> ids = class_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw SpecError("split_classes: duplicate class ids");
  }
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ClassSplit out;
  out.seen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(seen_count));
  out.unseen.assign(ids.begin() + static_cast<std::ptrdiff_t>(seen_count), ids.end());
  std::sort(out.seen.begin(), out.seen.end());
  std::sort(out.unseen.begin(), out.unseen.end());
  return out;
}

}  // namespace tarn
