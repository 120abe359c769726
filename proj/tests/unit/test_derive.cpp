#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "attnfuse/derive.hpp"
#include "attnfuse/error.hpp"

using namespace attnfuse;

namespace {

std::array<Point2, 6> open_eye() { return {Point2{0, 0}, {0.5, 0.5}, {1.5, 0.5}, {2, 0}, {1.5, -0.5}, {0.5, -0.5}}; }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("eye aspect ratio") {
  SUBCASE("worked example") { CHECK(compute_ear(open_eye()) == doctest::Approx(0.5).epsilon(1e-15)); }
  SUBCASE("closed eye") {
    auto e = open_eye();
    e[1] = e[5] = {0.5, 0.0};
    e[2] = e[4] = {1.5, 0.1};
    CHECK(compute_ear(e) == 0.0);
  }
  SUBCASE("degenerate") {
    auto e = open_eye();
    e[3] = e[0];
    CHECK(kind_of([&] { compute_ear(e); }) == ErrorKind::DegenerateEye);
  }
  SUBCASE("rotation and scale invariance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::array<Point2, 6> e;
      for (auto& p : e) p = {u(rng), u(rng)};
      if (std::hypot(e[0].x - e[3].x, e[0].y - e[3].y) < 1e-3) continue;
      const double theta = u(rng), k = std::exp(u(rng)), dx = u(rng), dy = u(rng);
      std::array<Point2, 6> r;
      for (int i = 0; i < 6; ++i) {
        r[i] = {k * (std::cos(theta) * e[i].x - std::sin(theta) * e[i].y) + dx, k * (std::sin(theta) * e[i].x + std::cos(theta) * e[i].y) + dy};
      }
      CHECK(compute_ear(r) == doctest::Approx(compute_ear(e)).epsilon(1e-9));
      CHECK(compute_ear(e) >= 0.0);
    }
  }
}

TEST_CASE("head and nose sizes") {
  LandmarkFrame f;
  f.points[6] = {10, 0};
  f.points[8] = {110, 0};
  f.points[7] = {0, 20};
  f.points[9] = {0, 220};
  f.points[10] = {40, 0};
  f.points[12] = {30, 0};
  f.points[11] = {0, 5};
  f.points[13] = {0, 45};
  SUBCASE("signed differences") {
    const auto s = compute_sizes(f);
    CHECK(s.head_width == 100);
    CHECK(s.head_height == 200);
    CHECK(s.nose_width == -10);
    CHECK(s.nose_height == 40);
  }
  SUBCASE("identical points") {
    LandmarkFrame g;
    for (auto& p : g.points) p = {3, 4};
    const auto s = compute_sizes(g);
    CHECK(s.head_width == 0);
    CHECK(s.head_height == 0);
    CHECK(s.nose_width == 0);
    CHECK(s.nose_height == 0);
  }
  SUBCASE("linear in coordinates") {
    LandmarkFrame g = f;
    for (auto& p : g.points) p = {2.5 * p.x, 2.5 * p.y};
    const auto a = compute_sizes(f), b = compute_sizes(g);
    CHECK(b.head_width == doctest::Approx(2.5 * a.head_width));
    CHECK(b.nose_height == doctest::Approx(2.5 * a.nose_height));
  }
  SUBCASE("invalid frame") {
    f.valid = false;
    CHECK(kind_of([&] { compute_sizes(f); }) == ErrorKind::InvalidFrame);
  }
}

TEST_CASE("derive_frame eyes") {
  LandmarkFrame f;
  const auto eye = open_eye();
  std::copy(eye.begin(), eye.end(), f.points.begin());
  f.points[8] = {1, 0};
  auto d = derive_frame(f);
  CHECK(d.ear_right == doctest::Approx(0.5));
  CHECK(d.ear_left == d.ear_right);
  auto left = eye;
  left[1].y = 1.0;
  left[5].y = -1.0;
  f.left_eye = left;
  d = derive_frame(f);
  CHECK(d.ear_left == doctest::Approx((2.0 + 1.0) / 4.0));
}

TEST_CASE("z-score normalization") {
  SUBCASE("self statistics") {
    const std::vector<double> x{1, 2, 3};
    const auto r = zscore_normalize(x);
    double m = 0, v = 0;
    for (double e : r.values) m += e;
    m /= 3;
    for (double e : r.values) v += (e - m) * (e - m);
    CHECK(m == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::sqrt(v / 3) == doctest::Approx(1.0));
    CHECK_FALSE(r.zero_variance);
  }
  SUBCASE("constant series") {
    const std::vector<double> x{5, 5, 5};
    const auto r = zscore_normalize(x);
    CHECK(r.values == std::vector<double>{0, 0, 0});
    CHECK(r.zero_variance);
  }
  SUBCASE("given statistics") {
    const std::vector<double> x{2};
    CHECK(zscore_normalize(x, ZScoreStats{1.0, 2.0}).values == std::vector<double>{0.5});
  }
  SUBCASE("idempotent") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(40.0, 7.0);
    std::vector<double> x(200);
    for (double& e : x) e = z(rng);
    const auto once = zscore_normalize(x).values;
    const auto twice = zscore_normalize(once).values;
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(once[i] - twice[i]) < 1e-12);
  }
  SUBCASE("empty") {
    CHECK(kind_of([] { zscore_normalize(std::vector<double>{}); }) == ErrorKind::EmptyStream);
  }
}

TEST_CASE("landmark tracks") {
  std::vector<LandmarkFrame> frames;
  const auto eye = open_eye();
  for (int k = 0; k < 6; ++k) {
    LandmarkFrame f;
    f.user_id = "u01";
    f.timestamp = k * 0.5;
    std::copy(eye.begin(), eye.end(), f.points.begin());
    f.points[8] = {100.0 + k, 0};
    f.points[9] = {0, 200.0 - k};
    f.points[12] = {10.0 + 2 * k, 0};
    f.points[13] = {0, 20.0};
    f.valid = k != 3;
    frames.push_back(f);
  }
  const auto tracks = landmark_tracks(frames, [](const std::string&) { return std::string("s01"); });
  REQUIRE(tracks.size() == 3);
  for (const auto& t : tracks) {
    CHECK(t.user_id == "u01");
    CHECK(t.session_id == "s01");
    CHECK(t.frames() == 5);  // the invalid frame is skipped
  }
  const FeatureTrack* hs = nullptr;
  for (const auto& t : tracks) {
    if (t.category == Category::HS) hs = &t;
  }
  REQUIRE(hs != nullptr);
  double mean = 0.0;
  for (std::size_t i = 0; i < hs->frames(); ++i) mean += hs->frame(i)[0];
  CHECK(std::fabs(mean) < 1e-12);

  FrameFeatureStream stream;
  merge_tracks(stream, tracks);
  CHECK(stream.tracks.size() == 3);
  CHECK(kind_of([&] { merge_tracks(stream, tracks); }) == ErrorKind::InvalidSpec);
}
