#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "s2v/image.hpp"
#include "s2v/metaimage.hpp"
#include "s2v/pyramid.hpp"

namespace fs = std::filesystem;
using namespace s2v;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("s2v_imgcore_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void write_floats(const fs::path& p, std::initializer_list<float> values) {
  std::ofstream out(p, std::ios::binary);
  for (float v : values) out.write(reinterpret_cast<const char*>(&v), 4);
}

// Independent oracle: full 5x5(x5) tensor-product convolution with clamped
// borders, evaluated only at the kept (even) samples.
std::vector<double> direct_smooth_halve(const Volume3& vol, bool hx, bool hy, bool hz) {
  const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const long nx = static_cast<long>(vol.nx()), ny = static_cast<long>(vol.ny()),
             nz = static_cast<long>(vol.nz());
  const long ox = hx ? (nx + 1) / 2 : nx, oy = hy ? (ny + 1) / 2 : ny, oz = hz ? (nz + 1) / 2 : nz;
  std::vector<double> out;
  for (long z = 0; z < oz; ++z)
    for (long y = 0; y < oy; ++y)
      for (long x = 0; x < ox; ++x) {
        const long cx = hx ? 2 * x : x, cy = hy ? 2 * y : y, cz = hz ? 2 * z : z;
        double sum = 0.0;
        for (long a = -2; a <= 2; ++a)
          for (long b = -2; b <= 2; ++b)
            for (long c = -2; c <= 2; ++c) {
              const double w = (hx ? k[a + 2] : (a == 0)) * (hy ? k[b + 2] : (b == 0)) *
                               (hz ? k[c + 2] : (c == 0));
              if (w == 0.0) continue;
              const long xi = std::clamp(cx + a, 0L, nx - 1);
              const long yi = std::clamp(cy + b, 0L, ny - 1);
              const long zi = std::clamp(cz + c, 0L, nz - 1);
              sum += w * vol.at(xi, yi, zi);
            }
        out.push_back(sum);
      }
  return out;
}

}  // namespace

TEST(Volume3, IndexRoundTrip) {
  const Volume3 vol({7, 5, 3}, {1.0, 2.0, 3.0});
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const auto [x, y, z] = vol.coords(i);
    EXPECT_EQ(vol.index(x, y, z), i);
  }
}

TEST(Volume3, RejectsInvalidConstruction) {
  EXPECT_THROW(Volume3({2, 2, 2}, {1.0, 0.0, 1.0}), Error);
  EXPECT_THROW(Volume3({2, 2, 2}, {1.0, 1.0, 1.0}, std::vector<double>(7)), Error);
  std::vector<double> bad(8, 0.0);
  bad[3] = std::nan("");
  EXPECT_THROW(Volume3({2, 2, 2}, {1.0, 1.0, 1.0}, bad), Error);
}

TEST(ImageGrid2, InvalidPixelsMustBeZero) {
  EXPECT_THROW(ImageGrid2({2, 1}, {1.0, 1.0}, {1.0, 2.0}, {1, 0}), Error);
  const ImageGrid2 ok({2, 1}, {1.0, 1.0}, {1.0, 0.0}, {1, 0});
  EXPECT_EQ(ok.valid_count(), 1u);
}

TEST(MetaImage, LoadsHandWrittenFixture) {
  const auto dir = temp_dir("fixture");
  write_text(dir / "img.mhd",
             "ObjectType = Image\nNDims = 2\nDimSize = 2 2\nElementSpacing = 1 1\n"
             "ElementType = MET_FLOAT\nElementByteOrderMSB = False\nElementDataFile = img.raw\n");
  write_floats(dir / "img.raw", {1, 2, 3, 4});
  const auto image = load_image2(dir / "img.mhd");
  EXPECT_EQ(image.dims(), (Index2{2, 2}));
  EXPECT_EQ(std::vector<double>(image.data().begin(), image.data().end()),
            (std::vector<double>{1, 2, 3, 4}));
}

TEST(MetaImage, ReportsPayloadLengthMismatch) {
  const auto dir = temp_dir("mismatch");
  write_text(dir / "img.mhd",
             "ObjectType = Image\nNDims = 2\nDimSize = 2 2\nElementSpacing = 1 1\n"
             "ElementType = MET_FLOAT\nElementByteOrderMSB = False\nElementDataFile = img.raw\n");
  write_floats(dir / "img.raw", {1, 2, 3});
  try {
    load_metaimage(dir / "img.mhd");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("payload length mismatch"), std::string::npos);
  }
}

TEST(MetaImage, RejectsUnsupportedHeaders) {
  const auto dir = temp_dir("unsupported");
  write_floats(dir / "img.raw", {1, 2, 3, 4});
  write_text(dir / "nd4.mhd",
             "NDims = 4\nDimSize = 1 1 2 2\nElementType = MET_FLOAT\nElementDataFile = img.raw\n");
  write_text(dir / "short.mhd",
             "NDims = 2\nDimSize = 2 2\nElementType = MET_SHORT\nElementDataFile = img.raw\n");
  EXPECT_THROW(load_metaimage(dir / "nd4.mhd"), Error);
  EXPECT_THROW(load_metaimage(dir / "short.mhd"), Error);
  EXPECT_THROW(load_metaimage(dir / "missing.mhd"), Error);
}

TEST(MetaImage, IgnoresUnknownKeys) {
  const auto dir = temp_dir("unknown");
  write_text(dir / "img.mhd",
             "ObjectType = Image\nNDims = 2\nOffset = 5 5\nAnatomicalOrientation = RAI\n"
             "DimSize = 2 2\nElementSpacing = 0.5 2\nElementType = MET_FLOAT\n"
             "ElementByteOrderMSB = False\nElementDataFile = img.raw\n");
  write_floats(dir / "img.raw", {1, 2, 3, 4});
  const auto image = load_image2(dir / "img.mhd");
  EXPECT_EQ(image.spacing(), (Vec2{0.5, 2.0}));
}

TEST(MetaImage, WritesHeaderKeysInOrder) {
  const auto dir = temp_dir("header");
  save_metaimage(Volume3({4, 4, 4}, {1.25, 1.25, 8.0}, 7.0), dir / "vol.mhd");
  std::ifstream in(dir / "vol.mhd");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text,
            "ObjectType = Image\nNDims = 3\nDimSize = 4 4 4\nElementSpacing = 1.25 1.25 8\n"
            "ElementType = MET_FLOAT\nElementByteOrderMSB = False\nElementDataFile = vol.raw\n");
  EXPECT_EQ(fs::file_size(dir / "vol.raw"), 4u * 4 * 4 * 4);

  save_metaimage(ImageGrid2({3, 2}, {1.0, 1.0}), dir / "img.mhd");
  std::ifstream in2(dir / "img.mhd");
  std::string first, second;
  std::getline(in2, first);
  std::getline(in2, second);
  EXPECT_EQ(second, "NDims = 2");
}

TEST(MetaImage, RandomRoundTripIsExact) {
  const auto dir = temp_dir("roundtrip");
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_real_distribution<double> value(-1000.0, 1000.0);
  std::uniform_real_distribution<double> spacing(0.1, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index3 dims{dim(rng), dim(rng), dim(rng)};
    std::vector<double> data(Volume3::count(dims));
    // the payload is float32, so draw float-representable values
    for (auto& v : data) v = static_cast<float>(value(rng));
    const Volume3 vol(dims, {spacing(rng), spacing(rng), spacing(rng)}, data);
    save_metaimage(vol, dir / "v.mhd");
    EXPECT_EQ(load_volume(dir / "v.mhd"), vol);

    std::vector<double> plane(dims[0] * dims[1]);
    for (auto& v : plane) v = static_cast<float>(value(rng));
    const ImageGrid2 img({dims[0], dims[1]}, {spacing(rng), spacing(rng)}, plane);
    save_metaimage(img, dir / "i.mhd");
    EXPECT_EQ(load_image2(dir / "i.mhd"), img);
  }
}

TEST(SmoothAndHalve, ConstantStaysConstant) {
  const Volume3 vol({9, 6, 5}, {1.0, 1.0, 1.0}, 42.5);
  const auto half = smooth_and_halve(vol, Axes::xyz);
  EXPECT_EQ(half.dims(), (Index3{5, 3, 3}));
  for (double v : half.data()) EXPECT_NEAR(v, 42.5, 1e-12);

  const ImageGrid2 img({7, 4}, {1.0, 1.0}, -3.0);
  const auto ihalf = smooth_and_halve(img, Axes::xy);
  EXPECT_EQ(ihalf.dims(), (Index2{4, 2}));
  for (double v : ihalf.data()) EXPECT_NEAR(v, -3.0, 1e-12);
}

TEST(SmoothAndHalve, InPlaneHalvingOfPhantomLattice) {
  const Volume3 vol({192, 192, 11}, {1.25, 1.25, 8.0});
  const auto half = smooth_and_halve(vol, Axes::xy);
  EXPECT_EQ(half.dims(), (Index3{96, 96, 11}));
  EXPECT_EQ(half.spacing(), (Vec3{2.5, 2.5, 8.0}));
}

TEST(SmoothAndHalve, MatchesDirectConvolutionOracle) {
  for (Axes axes : {Axes::xy, Axes::xyz, Axes::x, Axes::z}) {
    std::vector<double> data(Volume3::count({9, 8, 5}), 0.0);
    Volume3 impulse({9, 8, 5}, {1.0, 1.0, 1.0}, 0.0);
    data[impulse.index(4, 3, 2)] = 1.0;
    data[impulse.index(0, 0, 0)] = 5.0;  // exercises border clamping
    data[impulse.index(8, 7, 4)] = -2.0;
    impulse = Volume3({9, 8, 5}, {1.0, 1.0, 1.0}, data);
    const auto got = smooth_and_halve(impulse, axes);
    const auto want =
        direct_smooth_halve(impulse, has_axis(axes, 0), has_axis(axes, 1), has_axis(axes, 2));
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.data()[i], want[i], 1e-12);
  }
}

TEST(SmoothAndHalve, RejectsShortAxis) {
  const Volume3 vol({4, 4, 1}, {1.0, 1.0, 1.0});
  EXPECT_THROW(smooth_and_halve(vol, Axes::z), Error);
  EXPECT_NO_THROW(smooth_and_halve(vol, Axes::xy));
}

TEST(SmoothAndHalve, ImageValidityFollowsAnchorPixel) {
  std::vector<double> data{1, 1, 1, 0, 1, 1, 1, 0};
  std::vector<std::uint8_t> valid{1, 1, 1, 0, 1, 1, 1, 0};
  const ImageGrid2 img({4, 2}, {1.0, 1.0}, data, valid);
  const auto half = smooth_and_halve(img, Axes::x);
  EXPECT_EQ(half.dims(), (Index2{2, 2}));
  for (std::size_t i = 0; i < half.size(); ++i) {
    EXPECT_TRUE(half.validity()[i]);
  }
  std::vector<std::uint8_t> valid2{0, 1, 1, 1, 1, 1, 1, 1};
  data[0] = 0.0;
  data[3] = 1.0;
  data[7] = 1.0;
  const auto half2 = smooth_and_halve(ImageGrid2({4, 2}, {1.0, 1.0}, data, valid2), Axes::x);
  EXPECT_FALSE(half2.valid(0, 0));
  EXPECT_EQ(half2.at(0, 0), 0.0);
  EXPECT_TRUE(half2.valid(1, 0));
}

TEST(BuildPyramid, PhantomLevels) {
  const Volume3 vol({192, 192, 11}, {1.25, 1.25, 8.0}, 1.0);
  const auto pyr = build_pyramid(vol, 4);
  ASSERT_EQ(pyr.size(), 4u);
  EXPECT_EQ(pyr[0].dims(), (Index3{24, 24, 11}));
  EXPECT_EQ(pyr[1].dims(), (Index3{48, 48, 11}));
  EXPECT_EQ(pyr[2].dims(), (Index3{96, 96, 11}));
  EXPECT_EQ(pyr[3].dims(), (Index3{192, 192, 11}));
  for (std::size_t l = 0; l < pyr.size(); ++l) EXPECT_EQ(pyr[l].nz(), 11u);
  EXPECT_EQ(pyr.finest(), vol);
}

TEST(BuildPyramid, SingleLevelIsIdentity) {
  const ImageGrid2 img({5, 3}, {1.0, 1.0}, 2.0);
  const auto pyr = build_pyramid(img, 1);
  ASSERT_EQ(pyr.size(), 1u);
  EXPECT_EQ(pyr[0], img);
}

TEST(BuildPyramid, LevelsAreRecursiveHalvings) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(0.0, 255.0);
  std::vector<double> data(Volume3::count({37, 22, 3}));
  for (auto& v : data) v = value(rng);
  const Volume3 vol({37, 22, 3}, {1.0, 1.5, 4.0}, data);
  const auto pyr = build_pyramid(vol, 3);
  EXPECT_EQ(pyr[1], smooth_and_halve(vol, Axes::xy));
  EXPECT_EQ(pyr[0], smooth_and_halve(smooth_and_halve(vol, Axes::xy), Axes::xy));
  EXPECT_EQ(pyr[0].dims(), (Index3{10, 6, 3}));
}

TEST(BuildPyramid, FailsWhenImageTooSmall) {
  const ImageGrid2 img({4, 4}, {1.0, 1.0});
  EXPECT_NO_THROW(build_pyramid(img, 3));  // 4 -> 2 -> 1
  EXPECT_THROW(build_pyramid(img, 4), Error);
}
