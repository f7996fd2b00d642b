#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "ddlab/data.hpp"
#include "ddlab/task.hpp"

using namespace ddlab;

namespace {

std::vector<std::uint8_t> two_by_two() { return {0x00, 0x00, 0x08, 0x02, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4}; }

template <class F>
std::uint64_t format_error_offset(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected FormatError";
  return ~std::uint64_t{0};
}

Dataset labelled(std::vector<int> labels, int classes) {
  Dataset ds;
  ds.num_classes = classes;
  ds.inputs = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), 1);
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) ds.inputs(i, 0) = static_cast<double>(i);
  ds.clean_labels = labels;
  ds.labels = std::move(labels);
  return ds;
}

Dataset cyclic(int n, int classes) {
  std::vector<int> l(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = i % classes;
  return labelled(std::move(l), classes);
}

}  // namespace

TEST(Idx, ParsesHandBuiltTwoByTwo) {
  const auto t = parse_idx(two_by_two());
  EXPECT_EQ(t.shape, (std::vector<std::uint32_t>{2, 2}));
  EXPECT_EQ(t.values, (std::vector<std::uint8_t>{1, 2, 3, 4}));
}

TEST(Idx, EncodeParseRoundTrip) {
  IdxTensor t{{3, 1, 2}, {9, 8, 7, 6, 5, 255}};
  const auto back = parse_idx(encode_idx(t));
  EXPECT_EQ(back.shape, t.shape);
  EXPECT_EQ(back.values, t.values);
}

TEST(Idx, TruncatedByOneByte) {
  auto bytes = two_by_two();
  bytes.pop_back();
  EXPECT_EQ(format_error_offset([&] { parse_idx(bytes); }), bytes.size());
}

TEST(Idx, CorruptionsReportOffsets) {
  auto magic = two_by_two();
  magic[1] = 0x01;
  EXPECT_EQ(format_error_offset([&] { parse_idx(magic); }), 1u);
  auto first = two_by_two();
  first[0] = 0x10;
  EXPECT_EQ(format_error_offset([&] { parse_idx(first); }), 0u);
  auto type = two_by_two();
  type[2] = 0x0D;  // float
  EXPECT_EQ(format_error_offset([&] { parse_idx(type); }), 2u);
  auto dims = two_by_two();
  dims[3] = 0;
  EXPECT_EQ(format_error_offset([&] { parse_idx(dims); }), 3u);
  const std::vector<std::uint8_t> header{0x00, 0x00};
  EXPECT_EQ(format_error_offset([&] { parse_idx(header); }), 2u);
  const std::vector<std::uint8_t> table{0x00, 0x00, 0x08, 0x02, 0, 0, 0, 2, 0};
  EXPECT_EQ(format_error_offset([&] { parse_idx(table); }), 9u);
  auto trailing = two_by_two();
  trailing.push_back(0);
  EXPECT_EQ(format_error_offset([&] { parse_idx(trailing); }), 16u);
}

TEST(Idx, LoadFromFileAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "ddlab_test_idx";
  std::filesystem::create_directories(dir);
  const auto path = dir / "fixture-idx2-ubyte";
  {
    const auto bytes = two_by_two();
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_EQ(load_idx(path).values.size(), 4u);
  EXPECT_THROW(load_idx(dir / "absent"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Idx, FullSizeFashionMnistShapedFixture) {
  const auto dir = std::filesystem::temp_directory_path() / "ddlab_test_fmnist";
  std::filesystem::create_directories(dir);
  auto write = [&](Split split, bool images, std::uint32_t n) {
    IdxTensor t;
    t.shape = images ? std::vector<std::uint32_t>{n, 28, 28} : std::vector<std::uint32_t>{n};
    t.values.resize(t.element_count());
    for (std::size_t i = 0; i < t.values.size(); ++i)
      t.values[i] = static_cast<std::uint8_t>(images ? (i * 31) % 256 : i % 10);
    const auto bytes = encode_idx(t);
    std::ofstream out(fashion_mnist_path(dir, split, images), std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return bytes.size();
  };
  EXPECT_EQ(write(Split::train, true, 60000), kFashionMnistFiles[0].size_bytes);
  EXPECT_EQ(write(Split::train, false, 60000), kFashionMnistFiles[1].size_bytes);
  EXPECT_EQ(write(Split::test, true, 10000), kFashionMnistFiles[2].size_bytes);
  EXPECT_EQ(write(Split::test, false, 10000), kFashionMnistFiles[3].size_bytes);
  EXPECT_TRUE(missing_fashion_mnist_files(dir).empty());
  const auto ds = load_fashion_mnist(dir, Split::train);
  EXPECT_EQ(ds.size(), 60000);
  EXPECT_EQ(ds.input_dim(), 784);
  EXPECT_GE(ds.inputs.minCoeff(), 0.0);
  EXPECT_LE(ds.inputs.maxCoeff(), 1.0);
  EXPECT_EQ(*std::max_element(ds.labels.begin(), ds.labels.end()), 9);
  std::filesystem::remove_all(dir);
}

TEST(Idx, FashionMnistLabelOutOfRange) {
  IdxTensor t{{3}, {1, 10, 2}};
  EXPECT_EQ(format_error_offset([&] { labels_from_idx(t, 10); }), 9u);
}

TEST(Normalize, ByteScaling) {
  IdxTensor t{{1, 3}, {0, 255, 128}};
  const Matrix m = normalize(t);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_NEAR(m(0, 2), 128.0 / 255.0, 1e-12);
  const Matrix real = Matrix::Constant(2, 2, -1.5);
  EXPECT_EQ(normalize(real), real);
}

TEST(Synthetic, Deterministic) {
  const auto teacher = make_teacher(20, 50, 10, 3);
  const auto a = make_synthetic(20, 100, 10, teacher, 9);
  const auto b = make_synthetic(20, 100, 10, teacher, 9);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.labels, a.clean_labels);
}

TEST(Synthetic, RejectsSingleClassAndBadTeacher) {
  const auto teacher = make_teacher(20, 50, 10, 3);
  EXPECT_THROW(make_synthetic(20, 10, 1, teacher, 0), InputError);
  EXPECT_THROW(make_synthetic(21, 10, 10, teacher, 0), InputError);
  EXPECT_THROW(make_synthetic(20, 10, 9, teacher, 0), InputError);
}

TEST(Synthetic, ClassFrequenciesNonDegenerate) {
  const auto teacher = make_teacher(20, 50, 10, SyntheticTaskConfig{}.teacher_seed);
  const auto ds = make_synthetic(20, 5000, 10, teacher, 17);
  std::array<int, 10> counts{};
  for (int l : ds.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) {
    EXPECT_GE(c / 5000.0, 0.03);
    EXPECT_LE(c / 5000.0, 0.4);
  }
}

TEST(LabelNoise, ZeroAndOne) {
  const auto ds = cyclic(1000, 10);
  EXPECT_EQ(apply_label_noise(ds, {0.0, 5}).labels, ds.clean_labels);
  const auto all = apply_label_noise(ds, {1.0, 5});
  for (std::size_t i = 0; i < all.labels.size(); ++i) EXPECT_NE(all.labels[i], all.clean_labels[i]);
}

TEST(LabelNoise, FlipRateAndUniformWrongClass) {
  const auto ds = cyclic(10000, 10);
  const auto noisy = apply_label_noise(ds, {0.2, 77});
  std::array<int, 9> offset_counts{};
  int flipped = 0;
  for (std::size_t i = 0; i < noisy.labels.size(); ++i) {
    if (!noisy.flipped(i)) continue;
    ++flipped;
    const int shift = (noisy.labels[i] - noisy.clean_labels[i] + 10) % 10;
    ASSERT_GE(shift, 1);
    ++offset_counts[static_cast<std::size_t>(shift - 1)];
  }
  EXPECT_NEAR(flipped / 10000.0, 0.2, 0.015);
  double chi2 = 0.0;
  const double expected = flipped / 9.0;
  for (int c : offset_counts) chi2 += (c - expected) * (c - expected) / expected;
  const double critical = boost::math::quantile(boost::math::chi_squared(8), 0.99);
  EXPECT_LT(chi2, critical);
}

TEST(LabelNoise, RequiresTwoClassesAndValidP) {
  EXPECT_THROW(apply_label_noise(cyclic(5, 1), {0.1, 0}), InputError);
  EXPECT_THROW(apply_label_noise(cyclic(5, 3), {1.5, 0}), InputError);
}

TEST(LabelNoise, CleanLabelsSurviveChains) {
  const auto ds = cyclic(500, 10);
  const auto chained = subsample(apply_label_noise(apply_label_noise(ds, {0.3, 1}), {0.5, 2}), 200, 3);
  for (Eigen::Index i = 0; i < chained.size(); ++i) {
    const int original = static_cast<int>(chained.inputs(i, 0));
    EXPECT_EQ(chained.clean_labels[static_cast<std::size_t>(i)], ds.clean_labels[static_cast<std::size_t>(original)]);
  }
}

TEST(OneHot, Basics) {
  const std::vector<int> labels{0, 2};
  const Matrix y = one_hot(labels, 3);
  Matrix expected(2, 3);
  expected << 1, 0, 0, 0, 0, 1;
  EXPECT_EQ(y, expected);
  const std::vector<int> bad{3};
  EXPECT_THROW(one_hot(bad, 3), InputError);
}

TEST(OneHot, ArgmaxRoundTrip) {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back((i * 13) % 7);
  const Matrix y = one_hot(labels, 7);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index arg;
    y.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    EXPECT_EQ(arg, labels[i]);
  }
}

TEST(Subsample, FullSizeIsPermutation) {
  const auto ds = cyclic(300, 10);
  const auto s = subsample(ds, 300, 4);
  std::set<double> ids(s.inputs.col(0).data(), s.inputs.col(0).data() + 300);
  EXPECT_EQ(ids.size(), 300u);
}

TEST(Subsample, NestedPrefixes) {
  const auto ds = cyclic(1000, 10);
  const auto small = subsample(ds, 100, 21);
  const auto large = subsample(ds, 500, 21);
  std::set<double> big(large.inputs.col(0).data(), large.inputs.col(0).data() + 500);
  for (Eigen::Index i = 0; i < 100; ++i) EXPECT_TRUE(big.count(small.inputs(i, 0)));
}

TEST(Subsample, DeterministicAndBounded) {
  const auto ds = cyclic(50, 5);
  EXPECT_EQ(subsample(ds, 20, 8).inputs, subsample(ds, 20, 8).inputs);
  EXPECT_NE(subsample(ds, 20, 8).inputs, subsample(ds, 20, 9).inputs);
  EXPECT_THROW(subsample(ds, 51, 8), InputError);
}

TEST(TaskSource, SyntheticTrainSetsNestInN) {
  const auto src = TaskSource::synthetic({});
  const auto a = src.draw_train(50, 3);
  const auto b = src.draw_train(120, 3);
  EXPECT_EQ(b.inputs.topRows(50), a.inputs);
  EXPECT_NE(src.draw_test(50, 3).inputs, a.inputs);
  EXPECT_FALSE(src.train_capacity());
}
