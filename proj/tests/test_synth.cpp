#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "padkit/lbp.hpp"
#include "padkit/synth.hpp"
#include "test_support.hpp"

using namespace padkit;
using namespace padkit::synth;

namespace {

SynthConfig small(std::size_t count = 10, std::uint64_t seed = 3) {
  SynthConfig c;
  c.width = c.height = 64;
  c.count = count;
  c.seed = seed;
  return c;
}

// Mean absolute 4-neighbour Laplacian over interior pixels.
double laplacian_energy(const Image& img) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t y = 1; y + 1 < img.height(); ++y)
    for (std::size_t x = 1; x + 1 < img.width(); ++x) {
      const double l = 4.0 * img.at(x, y) - img.at(x - 1, y) - img.at(x + 1, y) - img.at(x, y - 1) - img.at(x, y + 1);
      sum += std::abs(l);
      ++n;
    }
  return sum / static_cast<double>(n);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(GenLive, DeterministicAndSized) {
  const auto c = small();
  const Image a = gen_live(c, 4);
  EXPECT_EQ(a, gen_live(c, 4));
  EXPECT_EQ(a.width(), 64u);
  EXPECT_EQ(a.height(), 64u);
  EXPECT_TRUE(a.is_grayscale());
  auto other = c;
  other.seed = 4;
  EXPECT_NE(a, gen_live(other, 4));
}

TEST(GenLive, IndicesDiffer) {
  const auto c = small(1, 8);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_GE(pixel_difference(gen_live(c, i), gen_live(c, i + 1)), 0.01) << i;
}

TEST(Spoofify, DownUpIsABlur) {
  auto c = small();
  c.spoof.noise_sigma = 0;
  c.spoof.halftone_amplitude = 0;
  c.spoof.blur_radius = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const Image live = gen_live(c, i);
    EXPECT_LT(laplacian_energy(spoofify(live, c, i)), laplacian_energy(live)) << i;
  }
}

TEST(Spoofify, DeterministicAndInRange) {
  auto c = small();
  c.spoof.noise_sigma = 80;  // forces clamping
  c.spoof.halftone_amplitude = 60;
  const Image live = gen_live(c, 0);
  const Image a = spoofify(live, c, 2);
  EXPECT_EQ(a, spoofify(live, c, 2));
  EXPECT_NE(a, spoofify(live, c, 3));
  EXPECT_EQ(a.width(), live.width());
  bool saw_extremes = false;
  for (auto v : a.data()) saw_extremes |= v == 0 || v == 255;
  EXPECT_TRUE(saw_extremes);
  EXPECT_THROW(spoofify(Image(16, 16, 3), c, 0), ValidationError);
}

TEST(Config, Validation) {
  auto c = small();
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(SynthConfig&)>>{
           [](SynthConfig& x) { x.count = 0; }, [](SynthConfig& x) { x.spoof.downsample = 1; },
           [](SynthConfig& x) { x.spoof.noise_sigma = -1; }, [](SynthConfig& x) { x.spoof.halftone_period = 1; }}) {
    auto bad = c;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ValidationError);
  }
  EXPECT_EQ(synth_config_from_json(nlohmann::json::parse(to_json(c).dump())), c);
}

TEST(Corpus, TenPerClass) {
  fixture::TempDir dir("corpus");
  const auto m = gen_corpus(small(10), dir.path());
  EXPECT_EQ(m.records.size(), 20u);
  EXPECT_EQ(m.classes(), (std::vector<std::string>{"fake", "real"}));
  EXPECT_TRUE(std::filesystem::exists(dir / kConfigSidecar));
  const auto side = nlohmann::json::parse(slurp(dir / kConfigSidecar));
  EXPECT_EQ(synth_config_from_json(side), small(10));
  const Image f = read_pnm(dir / "fake/fake_00000.pgm");
  const Image r = read_pnm(dir / "real/real_00000.pgm");
  EXPECT_EQ(f.width(), r.width());
  EXPECT_EQ(f.channels(), r.channels());
}

TEST(Corpus, RegenerationIsByteIdentical) {
  fixture::TempDir a("corpus_a"), b("corpus_b");
  const auto ma = gen_corpus(small(6, 21), a.path());
  const auto mb = gen_corpus(small(6, 21), b.path());
  ASSERT_EQ(ma.records, mb.records);
  for (const auto& r : ma.records) EXPECT_EQ(slurp(ma.resolve(r)), slurp(mb.resolve(r))) << r.path;
  EXPECT_EQ(slurp(a / kConfigSidecar), slurp(b / kConfigSidecar));
}

TEST(Corpus, FakesAreNotDerivedFromEmittedReals) {
  const auto c = small(20);
  for (std::size_t i = 0; i < 20; ++i) {
    auto quiet = c;
    quiet.spoof.noise_sigma = 0;
    quiet.spoof.halftone_amplitude = 0;
    const Image from_real = spoofify(gen_live(c, i), quiet, i);
    const Image from_source = spoofify(gen_live(c, c.count + i), quiet, i);
    EXPECT_GT(pixel_difference(from_real, from_source), 0.01);
  }
}

// The generator's fitness test: LBP 1x1 nearest neighbour on 100 vs 100
// held-out images at default parameters.
TEST(Corpus, SeparabilityFloor) {
  SynthConfig c;
  c.count = 200;
  c.seed = 99;
  lbp::LbpModel model(1, 1);
  for (std::size_t i = 0; i < 100; ++i) {
    model.add(lbp::extract_feature(gen_live(c, i), 1, 1), "real");
    model.add(lbp::extract_feature(spoofify(gen_live(c, c.count + i), c, i), 1, 1), "fake");
  }
  std::size_t correct = 0;
  for (std::size_t i = 100; i < 200; ++i) {
    correct += model.classify(lbp::extract_feature(gen_live(c, i), 1, 1)).label == "real";
    correct += model.classify(lbp::extract_feature(spoofify(gen_live(c, c.count + i), c, i), 1, 1)).label == "fake";
  }
  EXPECT_GE(correct / 200.0, 0.99);
}
