#include <gtest/gtest.h>

#include <array>
#include <numeric>

#include "padkit/lbp.hpp"
#include "test_support.hpp"

using namespace padkit;
using namespace padkit::lbp;

namespace {

// 3x3 image whose single interior pixel has the neighborhood of the worked
// bit-rule example: top-left 120, top 90, top-right 100, right 130,
// bottom-right 100, bottom 40, bottom-left 255, left 99, center 100.
Image example_3x3() {
  return Image(3, 3, 1, std::vector<std::uint8_t>{120, 90, 100, 99, 100, 130, 255, 40, 100});
}

LbpFeature one_hot(std::size_t bin, double mass = 1.0) {
  LbpFeature f{1, 1, std::vector<double>(kBins, 0.0)};
  f.histograms[bin] = mass;
  return f;
}

}  // namespace

TEST(LbpCode, WorkedExample) {
  EXPECT_EQ(lbp_code(100, {120, 90, 100, 130, 100, 40, 255, 99}), 0b10010010);
  EXPECT_EQ(lbp_code(100, {120, 90, 100, 130, 100, 40, 255, 99}), 146);
}

TEST(LbpCode, EqualMapsToZeroAndBrighterToOne) {
  EXPECT_EQ(lbp_code(77, {77, 77, 77, 77, 77, 77, 77, 77}), 0);
  EXPECT_EQ(lbp_code(0, {255, 255, 255, 255, 255, 255, 255, 255}), 255);
  EXPECT_EQ(lbp_code(10, {11, 10, 10, 10, 10, 10, 10, 10}), 128);  // top-left is the MSB
  EXPECT_EQ(lbp_code(10, {10, 10, 10, 10, 10, 10, 10, 11}), 1);    // left is the LSB
}

TEST(CodeMap, SingleInteriorPixel) {
  const auto map = compute_code_map(example_3x3());
  EXPECT_EQ(map.width, 1u);
  EXPECT_EQ(map.height, 1u);
  EXPECT_EQ(map.codes, std::vector<std::uint8_t>{146});
}

TEST(CodeMap, ConstantImageIsAllZero) {
  const auto map = compute_code_map(Image(10, 10, 1, 42));
  EXPECT_EQ(map.width, 8u);
  EXPECT_EQ(map.height, 8u);
  for (auto c : map.codes) EXPECT_EQ(c, 0);
}

TEST(CodeMap, RejectsTinyOrColorImages) {
  EXPECT_THROW(compute_code_map(Image(2, 2, 1)), ValidationError);
  EXPECT_THROW(compute_code_map(Image(5, 2, 1)), ValidationError);
  EXPECT_THROW(compute_code_map(Image(5, 5, 3)), ValidationError);
}

TEST(CodeMap, MatchesScalarOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Image img = fixture::random_image(rng, 8 + rng.below(9), 8 + rng.below(9));
    const auto map = compute_code_map(img);
    ASSERT_EQ(map.width, img.width() - 2);
    ASSERT_EQ(map.height, img.height() - 2);
    for (std::size_t y = 0; y < map.height; ++y)
      for (std::size_t x = 0; x < map.width; ++x) ASSERT_EQ(map.at(x, y), fixture::lbp_oracle(img, x + 1, y + 1));
  }
}

TEST(CodeMap, InvariantToBrightnessOffset) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Image img(12, 10, 1);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(200));
    Image shifted = img;
    const auto offset = static_cast<std::uint8_t>(rng.below(56));
    for (auto& v : shifted.data()) v = static_cast<std::uint8_t>(v + offset);
    EXPECT_EQ(compute_code_map(img).codes, compute_code_map(shifted).codes);
  }
}

TEST(Feature, SingleHistogram) {
  const auto f = extract_feature(example_3x3(), 1, 1);
  ASSERT_EQ(f.histograms.size(), kBins);
  for (std::size_t b = 0; b < kBins; ++b) EXPECT_EQ(f.histograms[b], b == 146 ? 1.0 : 0.0);
}

TEST(Feature, ConstantImageEveryBlockBinZero) {
  for (auto [r, c] : {std::pair{1, 1}, {2, 3}, {4, 4}, {8, 8}}) {
    const auto f = extract_feature(Image(10, 10, 1, 9), r, c);
    ASSERT_EQ(f.histograms.size(), kBins * r * c);
    for (std::size_t p = 0; p < f.patches(); ++p) {
      EXPECT_EQ(f.block(p)[0], 1.0);
      EXPECT_EQ(std::accumulate(f.block(p).begin(), f.block(p).end(), 0.0), 1.0);
    }
  }
}

TEST(Feature, TwoByTwoGridUsesFourByFourBlocks) {
  Rng rng(11);
  const Image img = fixture::random_image(rng, 10, 10);
  const auto map = compute_code_map(img);
  const auto f = extract_feature(img, 2, 2);
  for (std::size_t by = 0; by < 2; ++by)
    for (std::size_t bx = 0; bx < 2; ++bx) {
      std::array<double, kBins> expect{};
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) expect[map.at(bx * 4 + x, by * 4 + y)] += 1.0 / 16.0;
      const auto block = f.block(by * 2 + bx);
      for (std::size_t b = 0; b < kBins; ++b) EXPECT_DOUBLE_EQ(block[b], expect[b]);
    }
}

TEST(Feature, LeadingBandsTakeRemainder) {
  EXPECT_EQ(band_bounds(8, 3), (std::vector<std::size_t>{0, 3, 6, 8}));
  EXPECT_EQ(band_bounds(7, 7), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(extract_feature(Image(10, 10, 1), 9, 1), ValidationError);
  EXPECT_THROW(extract_feature(Image(10, 10, 1), 0, 1), ValidationError);
}

TEST(Feature, BlocksNormalized) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(4);
    const auto f = extract_feature(fixture::random_image(rng, 9 + rng.below(20), 9 + rng.below(20)), r, c);
    ASSERT_EQ(f.histograms.size(), kBins * r * c);
    for (std::size_t p = 0; p < f.patches(); ++p) {
      EXPECT_NEAR(std::accumulate(f.block(p).begin(), f.block(p).end(), 0.0), 1.0, 1e-9);
    }
  }
}

TEST(ChiSquare, Examples) {
  const auto a = one_hot(0), b = one_hot(1);
  EXPECT_EQ(chi_square(a, a), 0.0);
  EXPECT_DOUBLE_EQ(chi_square(a, b), 2.0);
  EXPECT_EQ(chi_square(a, b), chi_square(b, a));
  LbpFeature wide{1, 2, std::vector<double>(2 * kBins, 0.0)};
  EXPECT_THROW(chi_square(a, wide), ValidationError);
}

TEST(ChiSquare, MetricProperties) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = extract_feature(fixture::random_image(rng, 12, 12), 2, 2);
    const auto b = extract_feature(fixture::random_image(rng, 12, 12), 2, 2);
    EXPECT_GE(chi_square(a, b), 0.0);
    EXPECT_EQ(chi_square(a, b), chi_square(b, a));
    EXPECT_EQ(chi_square(a, a), 0.0);
    if (a != b) {
      EXPECT_GT(chi_square(a, b), 0.0);
    }
  }
}

TEST(Classifier, ExactMatchWins) {
  LbpModel model(1, 1);
  model.add(one_hot(3), "fake");
  model.add(one_hot(146), "real");
  const auto c = model.classify(one_hot(146));
  EXPECT_EQ(c.label, "real");
  EXPECT_EQ(c.distance, 0.0);
  EXPECT_EQ(c.exemplar, 1u);
}

TEST(Classifier, NearerMassWins) {
  LbpModel model(1, 1);
  model.add(one_hot(0), "real");
  model.add(one_hot(1), "fake");
  LbpFeature q = one_hot(0, 0.9);
  q.histograms[1] = 0.1;
  // to real: 0.01/1.9 + 0.01/0.1 ~ 0.105; to fake: 0.81/0.9 + 0.81/1.1 ~ 1.636
  const auto c = model.classify(q);
  EXPECT_EQ(c.label, "real");
  EXPECT_NEAR(c.distance, 0.01 / 1.9 + 0.01 / 0.1, 1e-12);
}

TEST(Classifier, TiesGoToLowerIndex) {
  LbpModel model(1, 1);
  model.add(one_hot(0), "fake");
  model.add(one_hot(1), "real");
  LbpFeature q = one_hot(0, 0.5);
  q.histograms[1] = 0.5;
  EXPECT_EQ(model.classify(q).label, "fake");
  EXPECT_EQ(model.classify(q).exemplar, 0u);
}

TEST(Classifier, EmptyAndMismatchedGrid) {
  LbpModel model(1, 1);
  EXPECT_THROW(model.classify(one_hot(0)), ValidationError);
  EXPECT_THROW(model.add(LbpFeature{2, 2, std::vector<double>(4 * kBins)}, "x"), ValidationError);
}

TEST(Classifier, ExemplarsClassifyAsThemselves) {
  Rng rng(14);
  LbpModel model(2, 2);
  std::vector<std::pair<LbpFeature, std::string>> gallery;
  for (int i = 0; i < 40; ++i) {
    auto f = extract_feature(fixture::random_image(rng, 12, 12), 2, 2);
    const std::string label = i % 3 == 0 ? "real" : "fake";
    model.add(f, label);
    gallery.emplace_back(std::move(f), label);
  }
  for (const auto& [f, label] : gallery) {
    const auto c = model.classify(f);
    EXPECT_EQ(c.distance, 0.0);
    EXPECT_EQ(c.label, gallery[c.exemplar].second);
    EXPECT_EQ(gallery[c.exemplar].first, f);
  }
}
