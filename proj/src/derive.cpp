#include "attnfuse/derive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "attnfuse/error.hpp"

namespace attnfuse {
namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double compute_ear(std::span<const Point2, 6> eye) {
  const double horizontal = distance(eye[0], eye[3]);
  if (!(horizontal > 0.0)) throw Error(ErrorKind::DegenerateEye, "eye corners P0 and P3 coincide");
  return (distance(eye[1], eye[5]) + distance(eye[2], eye[4])) / (2.0 * horizontal);
}

HeadNoseSizes compute_sizes(const LandmarkFrame& frame) {
  if (!frame.valid) throw Error(ErrorKind::InvalidFrame, "frame at t=" + format_double(frame.timestamp) + " is flagged invalid");
  const auto& p = frame.points;
  return {p[8].x - p[6].x, p[9].y - p[7].y, p[12].x - p[10].x, p[13].y - p[11].y};
}

DerivedFrameFeatures derive_frame(const LandmarkFrame& frame) {
  DerivedFrameFeatures out;
  out.sizes = compute_sizes(frame);
  out.ear_right = compute_ear(std::span<const Point2, 6>(frame.points.data(), 6));
  out.ear_left = frame.left_eye ? compute_ear(*frame.left_eye) : out.ear_right;
  return out;
}

ZScoreResult zscore_normalize(std::span<const double> series, std::optional<ZScoreStats> stats) {
  if (series.empty()) throw Error(ErrorKind::EmptyStream, "z-score of an empty series");
  ZScoreResult out;
  if (stats) {
    out.stats = *stats;
  } else {
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double ss = 0.0;
    for (double v : series) ss += (v - mean) * (v - mean);
    out.stats = {mean, std::sqrt(ss / static_cast<double>(series.size()))};
  }
  out.values.resize(series.size(), 0.0);
  if (!(out.stats.stddev > 0.0)) {
    out.zero_variance = true;
    return out;
  }
  for (std::size_t i = 0; i < series.size(); ++i) out.values[i] = (series[i] - out.stats.mean) / out.stats.stddev;
  return out;
}

std::vector<FeatureTrack> landmark_tracks(const std::vector<LandmarkFrame>& frames,
                                          const std::function<std::string(const std::string&)>& session_of) {
  struct Acc {
    std::vector<double> ts;
    std::vector<double> ear;
    std::vector<double> hw, hh, nw, nh;
  };
  std::map<std::string, Acc> by_user;
  for (const auto& f : frames) {
    if (!f.valid) continue;
    const DerivedFrameFeatures d = derive_frame(f);
    Acc& a = by_user[f.user_id];
    a.ts.push_back(f.timestamp);
    a.ear.push_back(d.ear_right);
    a.ear.push_back(d.ear_left);
    a.hw.push_back(d.sizes.head_width);
    a.hh.push_back(d.sizes.head_height);
    a.nw.push_back(d.sizes.nose_width);
    a.nh.push_back(d.sizes.nose_height);
  }
  std::vector<FeatureTrack> out;
  for (auto& [user, a] : by_user) {
    const std::string session = session_of(user);
    FeatureTrack ear{user, session, Category::EAR, a.ts, std::move(a.ear)};
    auto interleave = [&](Category c, const std::vector<double>& c0, const std::vector<double>& c1) {
      const auto z0 = zscore_normalize(c0).values;
      const auto z1 = zscore_normalize(c1).values;
      FeatureTrack t{user, session, c, a.ts, {}};
      t.values.reserve(2 * z0.size());
      for (std::size_t i = 0; i < z0.size(); ++i) {
        t.values.push_back(z0[i]);
        t.values.push_back(z1[i]);
      }
      return t;
    };
    out.push_back(std::move(ear));
    out.push_back(interleave(Category::HS, a.hw, a.hh));
    out.push_back(interleave(Category::NS, a.nw, a.nh));
  }
  return out;
}

void merge_tracks(FrameFeatureStream& stream, std::vector<FeatureTrack> extra) {
  for (auto& t : extra) {
    if (stream.find(t.user_id, t.session_id, t.category)) {
      throw Error(ErrorKind::InvalidSpec, "track " + t.user_id + "/" + t.session_id + "/" + std::string(name(t.category)) +
                                              " present in both the feature file and the landmark file");
    }
    stream.tracks.push_back(std::move(t));
  }
  std::sort(stream.tracks.begin(), stream.tracks.end(), [](const FeatureTrack& a, const FeatureTrack& b) {
    return std::tie(a.user_id, a.session_id, a.category) < std::tie(b.user_id, b.session_id, b.category);
  });
}

}  // namespace attnfuse
