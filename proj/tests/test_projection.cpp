#include "doctest.h"

#include <random>

#include "cdg/projection.hpp"

using namespace cdg;

TEST_CASE("projection entries follow the documented bit order") {
  // Independent decoding: draw k supplies entries 64k .. 64k+63, LSB first.
  const Index m = 7, n = 50;
  const auto phi = buildProjection<double>(m, n, 99);
  std::mt19937_64 gen(99);
  std::vector<std::uint64_t> draws;
  for (Index i = 0; i < (m * n + 63) / 64; ++i) draws.push_back(gen());
  for (Index r = 0; r < m; ++r)
    for (Index c = 0; c < n; ++c) {
      const Index k = r * n + c;
      const bool bit = (draws[k / 64] >> (k % 64)) & 1u;
      CHECK(phi.entries()(r, c) == (bit ? 1.0 : -1.0));
    }
}

TEST_CASE("projection is deterministic per seed and row-nested in M") {
  const auto a = buildProjection<double>(300, 1200, 20160808);
  const auto b = buildProjection<double>(300, 1200, 20160808);
  const auto c = buildProjection<double>(300, 1200, 20160809);
  CHECK(a.entries() == b.entries());
  CHECK(a.entries() != c.entries());
  const auto small = buildProjection<double>(50, 1200, 20160808);
  CHECK(small.entries() == a.entries().topRows(50));
  CHECK((a.entries().array().abs() == 1.0).all());
  // roughly balanced signs
  const double mean = a.entries().mean();
  CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("projection rejects bad shapes") {
  CHECK_THROWS_AS(buildProjection<double>(0, 10, 1), StructuralError);
  const auto phi = buildProjection<double>(4, 10, 1);
  CHECK_THROWS_AS(project(phi, Eigen::VectorXd::Zero(9)), StructuralError);
}

TEST_CASE("project matches a naive matrix-vector product") {
  const auto phi = buildProjection<double>(40, 120, 5);
  std::mt19937_64 gen(2);
  Eigen::VectorXd y(120);
  for (auto& v : y) v = double(gen() % 255);
  const auto yh = project(phi, y);
  CHECK(yh.sourceSeed == 5);
  for (Index r = 0; r < 40; ++r) {
    double s = 0;
    for (Index c = 0; c < 120; ++c) s += phi.entries()(r, c) * y[c];
    CHECK(yh.values[r] == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("combined operator equals materialized Phi*Psi") {
  const Index w = 64, h = 32, b = 8, gw = w / b, gh = h / b;
  auto phi = std::make_shared<const ProjectionMatrix<double>>(20, gw * gh, 77);
  const auto theta = combinedOperator(phi, b, w, h);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(gw * gh, w * h);
  for (Index py = 0; py < h; ++py)
    for (Index px = 0; px < w; ++px) psi((py / b) * gw + px / b, py * w + px) = 1.0 / double(b * b);
  const Eigen::MatrixXd dense = phi->entries() * psi;
  std::mt19937_64 gen(4);
  Eigen::VectorXd Y(w * h);
  for (auto& v : Y) v = double(gen() % 256);
  const auto out = theta.apply(Y);
  CHECK((out.values - dense * Y).cwiseAbs().maxCoeff() < 1e-9);

  DifferenceImage<double> d;
  d.pixels = Eigen::Map<const PixelGrid<double>>(Y.data(), h, w);
  CHECK((theta.apply(d).values - out.values).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(theta.apply(Eigen::VectorXd::Zero(10)), StructuralError);
  CHECK_THROWS_AS(combinedOperator(phi, b, w + 8, h), StructuralError);
  CHECK_THROWS_AS(combinedOperator(phi, 7, w, h), StructuralError);
}

TEST_CASE("projection is linear") {
  const auto phi = buildProjection<double>(30, 100, 8);
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(100, -3, 5);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(100, 2, 1);
  const Eigen::VectorXd lhs = project(phi, (3.0 * u - v).eval()).values;
  const Eigen::VectorXd rhs = 3.0 * project(phi, u).values - project(phi, v).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random sign projection approximately preserves distances") {
  // E ||Phi y||^2 = M ||y||^2; with M = 400 the ratio concentrates near 1.
  const auto phi = buildProjection<double>(400, 1200, 123);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> g;
  int within = 0;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd a(1200), b(1200);
    for (auto& v : a) v = g(gen);
    for (auto& v : b) v = g(gen);
    const double ratio = project(phi, (a - b).eval()).values.squaredNorm() / (400.0 * (a - b).squaredNorm());
    if (std::abs(ratio - 1.0) < 0.25) ++within;
  }
  CHECK(within >= 48);
}

TEST_CASE("compression ratios of the default front end") {
  const auto r = compressionRatios(640, 480, 16, 400);
  CHECK(r.blockLayer == 256.0);
  CHECK(r.projectionLayer == 3.0);
  CHECK(r.overall == 768.0);
  CHECK(r.overall == r.blockLayer * r.projectionLayer);
  CHECK_THROWS_AS(compressionRatios(640, 480, 15, 400), StructuralError);
  CHECK_THROWS_AS(compressionRatios(640, 480, 16, 0), StructuralError);
}
