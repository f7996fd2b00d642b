#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddlab/core.hpp"
#include "ddlab/features.hpp"
#include "ddlab/random.hpp"
#include "ddlab/solver.hpp"

namespace ddlab {

// ---------------------------------------------------------------------------
// IDX container: 0x00 0x00 <type> <ndim>, ndim big-endian uint32 sizes, then
// the row-major payload. Only the unsigned-byte type (0x08) is supported.

inline constexpr std::uint8_t kIdxUnsignedByte = 0x08;

struct IdxTensor {
  std::vector<std::uint32_t> shape;
  std::vector<std::uint8_t> values;

  std::uint64_t element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1},
                           [](std::uint64_t a, std::uint32_t b) { return a * b; });
  }
};

inline IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("IDX header truncated", bytes.size());
  if (bytes[0] != 0x00) throw FormatError("bad IDX magic", 0);
  if (bytes[1] != 0x00) throw FormatError("bad IDX magic", 1);
  if (bytes[2] != kIdxUnsignedByte)
    throw FormatError("unsupported IDX type byte " + std::to_string(bytes[2]), 2);
  const std::size_t ndim = bytes[3];
  if (ndim == 0) throw FormatError("IDX tensor has zero dimensions", 3);

  const std::size_t header = 4 + 4 * ndim;
  if (bytes.size() < header) throw FormatError("IDX dimension table truncated", bytes.size());

  IdxTensor t;
  t.shape.reserve(ndim);
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    const std::size_t at = 4 + 4 * d;
    const std::uint32_t size = (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
                               (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
    count *= size;
    if (count > (std::uint64_t{1} << 40)) throw FormatError("IDX declared size is implausibly large", at);
    t.shape.push_back(size);
  }
  const std::uint64_t expected = header + count;
  if (bytes.size() < expected)
    throw FormatError("IDX payload truncated: expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(bytes.size()),
                      bytes.size());
  if (bytes.size() > expected)
    throw FormatError("IDX file has " + std::to_string(bytes.size() - expected) + " trailing bytes", expected);
  t.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

inline std::vector<std::uint8_t> encode_idx(const IdxTensor& t) {
  if (t.shape.empty() || t.shape.size() > 255) throw InputError("IDX tensors need 1..255 dimensions");
  if (t.element_count() != t.values.size()) throw InputError("IDX shape does not match value count");
  std::vector<std::uint8_t> out{0x00, 0x00, kIdxUnsignedByte, static_cast<std::uint8_t>(t.shape.size())};
  for (std::uint32_t d : t.shape) {
    out.push_back(static_cast<std::uint8_t>(d >> 24));
    out.push_back(static_cast<std::uint8_t>(d >> 16));
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d));
  }
  out.insert(out.end(), t.values.begin(), t.values.end());
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline IdxTensor load_idx(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_idx(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

/// Raw bytes to [0, 1]: one row per leading index, remaining dims flattened.
inline Matrix normalize(const IdxTensor& images) {
  if (images.shape.empty()) throw InputError("cannot normalize an empty tensor");
  const Eigen::Index n = images.shape[0];
  const Eigen::Index row = n == 0 ? 0 : static_cast<Eigen::Index>(images.values.size()) / n;
  Matrix out(n, row);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < row; ++j)
      out(i, j) = static_cast<double>(images.values[static_cast<std::size_t>(i * row + j)]) / 255.0;
  return out;
}

/// Real-valued inputs are already normalized.
inline Matrix normalize(const Matrix& inputs) { return inputs; }

// ---------------------------------------------------------------------------

struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  std::vector<int> clean_labels;
  int num_classes = 0;
  double noise_p = 0.0;
  std::uint64_t data_seed = 0;
  std::uint64_t noise_seed = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  bool flipped(std::size_t i) const { return labels[i] != clean_labels[i]; }
};

struct LabelNoiseSpec {
  double p = 0.0;
  std::uint64_t seed = 0;
};

/// Fixed labelling function: a random-feature teacher followed by argmax.
struct Teacher {
  FeatureMap features;
  Coefficients coefficients;  // features.output_dim() x C

  int num_classes() const { return static_cast<int>(coefficients.cols()); }
};

inline Teacher make_teacher(Eigen::Index input_dim, Eigen::Index teacher_dim, int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw InputError("teacher needs at least 2 classes");
  auto map = FeatureMap::sample(input_dim, teacher_dim, 1.0 / static_cast<double>(input_dim), FeatureMode::cosine,
                                derive_seed(seed, {role_tag("teacher-features")}));
  Rng rng(derive_seed(seed, {role_tag("teacher-coefficients")}));
  Coefficients a(map.output_dim(), num_classes);
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index j = 0; j < a.rows(); ++j) a(j, c) = rng.normal();

  // Each class score is made zero-mean with unit variance under x ~ N(0, I), using the closed-form
  // moments of cosine features: E cos(w.x + b) = exp(-|w|^2/2) cos b. Raw Gaussian coefficients
  // let a few classes dominate the argmax.
  const auto& w = map.weights();
  const auto& b = map.phases();
  const double s2 = map.scale() * map.scale();
  const Eigen::Index d = a.rows();
  Vector mean(d);
  for (Eigen::Index j = 0; j < d; ++j) mean(j) = map.scale() * std::exp(-0.5 * w.col(j).squaredNorm()) * std::cos(b(j));
  Matrix cov(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double second = 0.5 * s2 *
                            (std::exp(-0.5 * (w.col(j) - w.col(k)).squaredNorm()) * std::cos(b(j) - b(k)) +
                             std::exp(-0.5 * (w.col(j) + w.col(k)).squaredNorm()) * std::cos(b(j) + b(k)));
      cov(j, k) = cov(k, j) = second - mean(j) * mean(k);
    }
  const double mean_sq = mean.squaredNorm();
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    if (mean_sq > 0.0) a.col(c) -= mean * (mean.dot(a.col(c)) / mean_sq);
    const double var = a.col(c).dot(cov * a.col(c));
    if (var > 0.0) a.col(c) /= std::sqrt(var);
  }
  return {std::move(map), std::move(a)};
}

/// n standard-Gaussian inputs labelled by the teacher's argmax.
inline Dataset make_synthetic(Eigen::Index input_dim, Eigen::Index n, int num_classes, const Teacher& teacher,
                              std::uint64_t seed) {
  if (num_classes < 2) throw InputError("synthetic task needs at least 2 classes");
  if (n < 1) throw InputError("synthetic task needs n >= 1");
  if (teacher.features.input_dim() != input_dim)
    throw InputError("teacher input dimension does not match the task");
  if (teacher.coefficients.rows() != teacher.features.output_dim() || teacher.coefficients.cols() != num_classes)
    throw InputError("teacher coefficient shape is inconsistent");

  Dataset ds;
  ds.num_classes = num_classes;
  ds.data_seed = seed;
  ds.inputs.resize(n, input_dim);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < input_dim; ++j) ds.inputs(i, j) = rng.normal();
  const Matrix scores = teacher.features.apply(ds.inputs) * teacher.coefficients;
  ds.clean_labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ds.clean_labels[static_cast<std::size_t>(i)] = static_cast<int>(row_argmax(scores, i));
  ds.labels = ds.clean_labels;
  return ds;
}

/// Flip each label with probability p to a uniformly chosen wrong class.
/// Noise is drawn once from spec.seed against the clean labels, so applying it
/// again with another spec replaces (rather than compounds) earlier noise.
inline Dataset apply_label_noise(const Dataset& ds, const LabelNoiseSpec& spec) {
  if (ds.num_classes < 2) throw InputError("label noise needs at least 2 classes");
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw InputError("noise probability must lie in [0, 1]");
  Dataset out = ds;
  out.noise_p = spec.p;
  out.noise_seed = spec.seed;
  Rng rng(spec.seed);
  const auto wrong = static_cast<std::uint64_t>(ds.num_classes - 1);
  for (std::size_t i = 0; i < ds.clean_labels.size(); ++i) {
    const int clean = ds.clean_labels[i];
    int label = clean;
    if (rng.uniform() < spec.p) {
      const int k = static_cast<int>(rng.below(wrong));
      label = k >= clean ? k + 1 : k;
    }
    out.labels[i] = label;
  }
  return out;
}

inline TargetMatrix one_hot(std::span<const int> labels, int num_classes) {
  if (num_classes < 1) throw InputError("one_hot needs at least one class");
  TargetMatrix y = TargetMatrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw InputError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(num_classes) + ")");
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<Eigen::Index> seeded_permutation(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

/// First n entries of one seeded permutation, so subsets for the same seed nest.
inline Dataset subsample(const Dataset& ds, Eigen::Index n, std::uint64_t seed) {
  if (n < 0 || n > ds.size())
    throw InputError("cannot subsample " + std::to_string(n) + " of " + std::to_string(ds.size()) + " samples");
  const auto perm = seeded_permutation(ds.size(), seed);
  Dataset out;
  out.num_classes = ds.num_classes;
  out.noise_p = ds.noise_p;
  out.data_seed = ds.data_seed;
  out.noise_seed = ds.noise_seed;
  out.inputs.resize(n, ds.input_dim());
  out.labels.resize(static_cast<std::size_t>(n));
  out.clean_labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = perm[static_cast<std::size_t>(i)];
    out.inputs.row(i) = ds.inputs.row(src);
    out.labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(src)];
    out.clean_labels[static_cast<std::size_t>(i)] = ds.clean_labels[static_cast<std::size_t>(src)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fashion-MNIST

struct IdxFileInfo {
  std::string_view name;
  std::uint64_t size_bytes;  // uncompressed
};

inline constexpr std::array<IdxFileInfo, 4> kFashionMnistFiles{{
    {"train-images-idx3-ubyte", 47040016},
    {"train-labels-idx1-ubyte", 60008},
    {"t10k-images-idx3-ubyte", 7840016},
    {"t10k-labels-idx1-ubyte", 10008},
}};

enum class Split { train, test };

inline std::filesystem::path fashion_mnist_path(const std::filesystem::path& dir, Split split, bool images) {
  const std::size_t idx = (split == Split::train ? 0 : 2) + (images ? 0 : 1);
  return dir / std::string(kFashionMnistFiles[idx].name);
}

/// Every Fashion-MNIST file that is missing from dir.
inline std::vector<std::filesystem::path> missing_fashion_mnist_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> missing;
  for (const auto& f : kFashionMnistFiles) {
    auto p = dir / std::string(f.name);
    if (!std::filesystem::exists(p)) missing.push_back(p);
  }
  return missing;
}

inline std::vector<int> labels_from_idx(const IdxTensor& t, int num_classes) {
  if (t.shape.size() != 1) throw FormatError("label file must be one-dimensional", 3);
  std::vector<int> out(t.values.begin(), t.values.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] >= num_classes) throw FormatError("label out of range", 8 + i);
  return out;
}

inline Dataset load_fashion_mnist(const std::filesystem::path& dir, Split split) {
  const auto images = load_idx(fashion_mnist_path(dir, split, true));
  const auto labels = load_idx(fashion_mnist_path(dir, split, false));
  if (images.shape.size() != 3 || images.shape[1] != 28 || images.shape[2] != 28)
    throw FormatError("image file must have shape N x 28 x 28", 4);
  if (labels.shape.size() != 1 || labels.shape[0] != images.shape[0])
    throw FormatError("label count does not match image count", 4);
  Dataset ds;
  ds.num_classes = 10;
  ds.inputs = normalize(images);
  ds.clean_labels = labels_from_idx(labels, 10);
  ds.labels = ds.clean_labels;
  return ds;
}

}  // namespace ddlab
