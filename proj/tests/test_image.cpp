#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "padkit/image.hpp"
#include "test_support.hpp"

using namespace padkit;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::vector<std::uint8_t> payload) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PnmErrc decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_pnm(bytes);
  } catch (const PnmError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode_pnm accepted malformed input";
  return PnmErrc::bad_magic;
}

}  // namespace

TEST(Pnm, DecodesMinimalGrayscale) {
  const Image img = decode_pnm(bytes_of("P5\n2 1\n255\n", {0, 255}));
  EXPECT_EQ(img.width(), 2u);
  EXPECT_EQ(img.height(), 1u);
  EXPECT_EQ(img.channels(), 1u);
  EXPECT_EQ(std::vector<std::uint8_t>(img.data().begin(), img.data().end()), (std::vector<std::uint8_t>{0, 255}));
}

TEST(Pnm, EncodesCanonicalHeaders) {
  EXPECT_EQ(encode_pnm(Image(1, 1, 1, std::vector<std::uint8_t>{7})), bytes_of("P5\n1 1\n255\n", {7}));
  EXPECT_EQ(encode_pnm(Image(1, 1, 3, std::vector<std::uint8_t>{1, 2, 3})), bytes_of("P6\n1 1\n255\n", {1, 2, 3}));
}

TEST(Pnm, ErrorsAreDistinct) {
  EXPECT_EQ(decode_error(bytes_of("P5\n2 1\n65535\n", {0, 0, 0, 0})), PnmErrc::unsupported_maxval);
  EXPECT_EQ(decode_error(bytes_of("P2\n2 1\n255\n", {0, 0})), PnmErrc::bad_magic);
  EXPECT_EQ(decode_error(bytes_of("GIF89a", {})), PnmErrc::bad_magic);
  EXPECT_EQ(decode_error(bytes_of("P5\n2 x\n255\n", {0, 0})), PnmErrc::bad_header);
  EXPECT_EQ(decode_error(bytes_of("P5\n2 1\n255\n", {0})), PnmErrc::truncated);
  EXPECT_EQ(decode_error(bytes_of("P6\n2 2\n255\n", std::vector<std::uint8_t>(11, 0))), PnmErrc::truncated);
  EXPECT_EQ(decode_error(bytes_of("P5\n2 1", {})), PnmErrc::truncated);
}

TEST(Pnm, AcceptsHeaderComments) {
  const Image img = decode_pnm(bytes_of("P5\n# made by a converter\n1 2\n255\n", {9, 8}));
  EXPECT_EQ(img.height(), 2u);
  EXPECT_EQ(img.at(0, 1), 8);
}

TEST(Pnm, RoundTripIsByteExact) {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + rng.below(20), h = 1 + rng.below(20), c = rng.below(2) ? 3 : 1;
    const Image img = fixture::random_image(rng, w, h, c);
    const auto file = encode_pnm(img);
    EXPECT_EQ(decode_pnm(file), img);
    EXPECT_EQ(encode_pnm(decode_pnm(file)), file);
  }
}

TEST(Pnm, FileRoundTrip) {
  fixture::TempDir dir("pnm");
  Rng rng(5);
  const Image img = fixture::random_image(rng, 13, 7, 3);
  write_pnm(dir / "a.ppm", img);
  EXPECT_EQ(read_pnm(dir / "a.ppm"), img);
  EXPECT_THROW(read_pnm(dir / "missing.pgm"), DataError);
}

TEST(ImageType, RejectsInconsistentData) {
  EXPECT_THROW(Image(2, 2, 1, std::vector<std::uint8_t>(3)), ValidationError);
  EXPECT_THROW(Image(2, 2, 2), ValidationError);
  EXPECT_THROW(Image(0, 2, 1), ValidationError);
}

TEST(Grayscale, Rec601Luma) {
  auto gray_of = [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return to_grayscale(Image(1, 1, 3, std::vector<std::uint8_t>{r, g, b})).at(0, 0);
  };
  EXPECT_EQ(gray_of(255, 255, 255), 255);
  EXPECT_EQ(gray_of(255, 0, 0), 76);   // 76.245
  EXPECT_EQ(gray_of(0, 255, 0), 150);  // 149.685
  EXPECT_EQ(gray_of(0, 0, 255), 29);   // 29.07
  EXPECT_EQ(gray_of(0, 0, 0), 0);
}

TEST(Grayscale, IdentityOnGrayAndIdempotent) {
  Rng rng(2);
  const Image gray = fixture::random_image(rng, 9, 4, 1);
  EXPECT_EQ(to_grayscale(gray), gray);
  const Image color = fixture::random_image(rng, 9, 4, 3);
  const Image once = to_grayscale(color);
  EXPECT_EQ(once.channels(), 1u);
  EXPECT_EQ(to_grayscale(once), once);
}

TEST(Crop, FullFrameIsIdentity) {
  Rng rng(3);
  const Image img = fixture::random_image(rng, 11, 6, 3);
  EXPECT_EQ(crop(img, Rect{0, 0, 11, 6}), img);
}

TEST(Crop, CenterOfSixBySix) {
  std::vector<std::uint8_t> data(36);
  for (std::size_t i = 0; i < 36; ++i) data[i] = static_cast<std::uint8_t>(i);
  const Image img(6, 6, 1, data);
  const Rect r = center_rect(6, 6, 4, 4);
  EXPECT_EQ(r, (Rect{1, 1, 4, 4}));
  const Image out = crop(img, r);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(out.at(x, y), (y + 1) * 6 + (x + 1));
}

TEST(Crop, OutOfBounds) {
  const Image img(6, 6, 1);
  EXPECT_THROW(crop(img, Rect{5, 5, 4, 4}), ValidationError);
  EXPECT_THROW(crop(img, Rect{0, 0, 0, 1}), ValidationError);
}

TEST(Crop, Composes) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Image img = fixture::random_image(rng, 20, 15, rng.below(2) ? 3 : 1);
    const Rect a{rng.below(8), rng.below(6), 5 + rng.below(8), 4 + rng.below(6)};
    const Rect b{rng.below(3), rng.below(2), 1 + rng.below(3), 1 + rng.below(3)};
    const Rect ab{a.x + b.x, a.y + b.y, b.w, b.h};
    EXPECT_EQ(crop(crop(img, a), b), crop(img, ab));
  }
}

TEST(CenterRect, Examples) {
  EXPECT_EQ(center_rect(140, 140, 140, 140), (Rect{0, 0, 140, 140}));
  EXPECT_EQ(center_rect(141, 141, 140, 140), (Rect{0, 0, 140, 140}));
  EXPECT_EQ(center_rect(200, 160, 140, 140), (Rect{30, 10, 140, 140}));
  EXPECT_THROW(center_rect(100, 160, 140, 140), ValidationError);
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(6);
  const Image img = fixture::random_image(rng, 17, 9, 3);
  EXPECT_EQ(resize_bilinear(img, 17, 9), img);
}

TEST(Resize, UpsamplesTwoPixels) {
  const Image img(2, 1, 1, std::vector<std::uint8_t>{0, 255});
  const Image out = resize_bilinear(img, 4, 1);
  EXPECT_EQ(std::vector<std::uint8_t>(out.data().begin(), out.data().end()),
            (std::vector<std::uint8_t>{0, 64, 191, 255}));
}

TEST(Resize, ConstantStaysConstant) {
  const Image img(7, 5, 3, 93);
  for (auto [w, h] : {std::pair{1, 1}, {3, 11}, {14, 10}, {23, 2}}) {
    const Image out = resize_bilinear(img, w, h);
    for (auto v : out.data()) EXPECT_EQ(v, 93);
  }
  EXPECT_THROW(resize_bilinear(img, 0, 3), ValidationError);
}

TEST(InputTensor, ScalesToUnitInterval) {
  const Image img(3, 2, 1, std::vector<std::uint8_t>{0, 255, 51, 1, 2, 3});
  const Tensor t = to_input_tensor(img);
  EXPECT_EQ(t.shape(), (Shape{2, 3, 1}));
  EXPECT_EQ(t[0], 0.0);
  EXPECT_EQ(t[1], 1.0);
  EXPECT_DOUBLE_EQ(t[2], 0.2);
  EXPECT_EQ(to_input_tensor(Image(140, 140, 1)).shape(), (Shape{140, 140, 1}));
  EXPECT_THROW(to_input_tensor(Image(2, 2, 3)), ValidationError);

  Rng rng(8);
  for (double v : to_input_tensor(fixture::random_image(rng, 30, 30)).values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
