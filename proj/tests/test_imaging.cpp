#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "cdg/imaging.hpp"

using namespace cdg;

namespace {

Frame randomFrame(Index w, Index h, std::mt19937_64& gen) {
  Frame f(w, h);
  for (Index i = 0; i < f.pixels.size(); ++i) f.pixels.data()[i] = static_cast<std::uint8_t>(gen() & 0xff);
  return f;
}

// Psi written out as an explicit N x (W*H) matrix acting on the row-major vectorized image.
Eigen::MatrixXd explicitPsi(Index w, Index h, Index b) {
  const Index gw = w / b, gh = h / b;
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(gw * gh, w * h);
  for (Index py = 0; py < h; ++py)
    for (Index px = 0; px < w; ++px) psi((py / b) * gw + px / b, py * w + px) = 1.0 / double(b * b);
  return psi;
}

Frame squareFrame(Index w, Index h, Index x0, Index y0, Index size, std::uint8_t level) {
  Frame f(w, h, 10);
  f.pixels.block(y0, x0, size, size).setConstant(level);
  return f;
}

}  // namespace

TEST_CASE("frame difference is the per-pixel absolute difference") {
  std::mt19937_64 gen(3);
  const Frame a = randomFrame(37, 23, gen), b = randomFrame(37, 23, gen);
  const auto d = frameDifference(a, b);
  for (Index y = 0; y < 23; ++y)
    for (Index x = 0; x < 37; ++x) {
      const double expect = std::abs(double(b.pixels(y, x)) - double(a.pixels(y, x)));
      CHECK(d.pixels(y, x) == expect);
      CHECK(d.pixels(y, x) >= 0.0);
    }
  // symmetric, and zero for identical frames
  CHECK((frameDifference(b, a).pixels == d.pixels).all());
  CHECK((frameDifference(a, a).pixels == 0.0).all());
}

TEST_CASE("frame difference of a moved blob is supported on the union of both positions") {
  const Frame a = squareFrame(640, 480, 100, 200, 160, 200);
  const Frame b = squareFrame(640, 480, 120, 200, 160, 200);
  const auto d = frameDifference(a, b);
  for (Index y = 0; y < 480; ++y)
    for (Index x = 0; x < 640; ++x) {
      const bool inUnion = y >= 200 && y < 360 && x >= 100 && x < 280;
      if (!inUnion) CHECK(d.pixels(y, x) == 0.0);
    }
  CHECK(d.pixels.sum() > 0.0);
}

TEST_CASE("frame difference rejects mismatched shapes") {
  CHECK_THROWS_AS(frameDifference(Frame(10, 10), Frame(10, 11)), StructuralError);
}

TEST_CASE("block average equals the explicit Psi operator") {
  std::mt19937_64 gen(11);
  const Index w = 64, h = 48, b = 16;
  const Frame a = randomFrame(w, h, gen), c = randomFrame(w, h, gen);
  const auto d = frameDifference(a, c);
  const auto y = blockAverage(d, b);
  CHECK(y.gridWidth() == 4);
  CHECK(y.gridHeight() == 3);
  const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(d.pixels.data(), w * h);
  const Eigen::VectorXd expect = explicitPsi(w, h, b) * flat;
  CHECK((y.vector() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("block average at full resolution: N = 1200 with row-major order") {
  std::mt19937_64 gen(5);
  const auto d = frameDifference(randomFrame(640, 480, gen), randomFrame(640, 480, gen));
  const auto y = blockAverage(d, 16);
  REQUIRE(y.size() == 1200);
  // naive block means, vector index = row * 40 + col
  for (Index k : {0, 1, 39, 40, 613, 1199}) {
    const Index r = k / 40, c = k % 40;
    double s = 0;
    for (Index py = 0; py < 16; ++py)
      for (Index px = 0; px < 16; ++px) s += d.pixels(r * 16 + py, c * 16 + px);
    CHECK(y.vector()[k] == doctest::Approx(s / 256.0).epsilon(1e-14));
  }
}

TEST_CASE("block average is linear and preserves constants") {
  std::mt19937_64 gen(8);
  PixelGrid<double> u(32, 48), v(32, 48);
  for (Index i = 0; i < u.size(); ++i) {
    u.data()[i] = double(gen() % 1000) / 7.0;
    v.data()[i] = double(gen() % 1000) / 3.0;
  }
  const auto lhs = blockAverage((2.5 * u + v).eval(), 8);
  const MatrixRM<double> rhs = blockAverage(u, 8).values * 2.5 + blockAverage(v, 8).values;
  CHECK((lhs.values - rhs).cwiseAbs().maxCoeff() < 1e-10);
  const auto k = blockAverage(PixelGrid<double>::Constant(32, 48, 7.25).eval(), 16);
  CHECK((k.values.array() == 7.25).all());
}

TEST_CASE("block average requires divisible dimensions") {
  CHECK_THROWS_AS(blockAverage(PixelGrid<double>::Zero(30, 40).eval(), 16), StructuralError);
  CHECK_THROWS_AS(blockAverage(PixelGrid<double>::Zero(32, 32).eval(), 0), StructuralError);
}

TEST_CASE("subsample keeps the top-left pixel of each block") {
  DifferenceImage<double> d;
  d.pixels.resize(32, 32);
  for (Index i = 0; i < d.pixels.size(); ++i) d.pixels.data()[i] = double(i);
  const auto s = downsample(d, 16, Downsampling::Subsample);
  CHECK(s.values(0, 0) == 0.0);
  CHECK(s.values(0, 1) == 16.0);
  CHECK(s.values(1, 0) == 16.0 * 32);
  CHECK_THROWS_AS(subsample(d, 5), StructuralError);
}

TEST_CASE("motion energy is the vector norm, bounded by 255 sqrt(N)") {
  BlockImage<double> y;
  y.values = MatrixRM<double>::Constant(30, 40, 255.0);
  CHECK(motionEnergy(y) == doctest::Approx(maxBlockImageNorm(1200)));
  y.values.setZero();
  y.values(2, 3) = 3;
  y.values(4, 1) = 4;
  CHECK(motionEnergy(y) == doctest::Approx(5.0));
}

TEST_CASE("BlockImage vector round trip") {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(12, 0, 11);
  const auto b = BlockImage<double>::fromVector(v, 4, 3);
  CHECK(b.values(1, 0) == 4.0);
  CHECK(b.vector() == v);
  CHECK_THROWS_AS(BlockImage<double>::fromVector(v, 5, 3), StructuralError);
}

TEST_CASE("clip files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cdg_imaging_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 gen(1);
  std::vector<Frame> frames{randomFrame(48, 32, gen), randomFrame(48, 32, gen), randomFrame(48, 32, gen)};
  writeClip(dir / "clip", frames, 7.5);
  const Clip c = readClip(dir / "clip");
  REQUIRE(c.frames.size() == 3);
  CHECK(c.fps == 7.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.frames[i] == frames[i]);
  // accepts either extension
  CHECK(readClip(dir / "clip.raw").frames.size() == 3);
  const auto h = readClipHeader(dir / "clip.hdr");
  CHECK(h.width == 48);
  CHECK(h.height == 32);
  CHECK(h.frames == 3);

  SUBCASE("truncated raw file is rejected") {
    std::filesystem::resize_file(dir / "clip.raw", 48 * 32 * 2);
    CHECK_THROWS(readClip(dir / "clip"));
  }
  SUBCASE("missing files are rejected") { CHECK_THROWS(readClip(dir / "nope")); }
  SUBCASE("malformed header is rejected") {
    std::ofstream(dir / "bad.hdr") << "width 10\nheight x\n";
    CHECK_THROWS(readClipHeader(dir / "bad.hdr"));
  }
  std::filesystem::remove_all(dir);
}
