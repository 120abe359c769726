#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/ingest.hpp"

namespace attnfuse {

// Eye aspect ratio of one eye contour P0..P5 (P0/P3 the horizontal corners).
// Throws DegenerateEye when P0 == P3.
double compute_ear(std::span<const Point2, 6> eye);

struct HeadNoseSizes {
  double head_width = 0.0;
  double head_height = 0.0;
  double nose_width = 0.0;
  double nose_height = 0.0;
};

// Signed extents from the head and nose extreme points. Throws InvalidFrame
// for frames flagged invalid upstream.
HeadNoseSizes compute_sizes(const LandmarkFrame& frame);

struct DerivedFrameFeatures {
  double ear_right = 0.0;
  double ear_left = 0.0;
  HeadNoseSizes sizes;
};

// Without a left-eye block the left EAR repeats the right one.
DerivedFrameFeatures derive_frame(const LandmarkFrame& frame);

struct ZScoreStats {
  double mean = 0.0;
  double stddev = 1.0;
};

struct ZScoreResult {
  std::vector<double> values;
  ZScoreStats stats;
  bool zero_variance = false;  // set when stddev == 0; values are then all zero
};

// Population statistics are used when stats is omitted.
ZScoreResult zscore_normalize(std::span<const double> series, std::optional<ZScoreStats> stats = std::nullopt);

// Builds EAR, HS and NS feature tracks from landmark frames. Invalid frames are
// skipped; HS and NS channels are z-scored per user and session. session_of
// maps a user id to the session the landmarks belong to.
std::vector<FeatureTrack> landmark_tracks(const std::vector<LandmarkFrame>& frames,
                                          const std::function<std::string(const std::string&)>& session_of);

// Inserts tracks keeping FrameFeatureStream ordering. Throws InvalidSpec when a
// (user, session, category) track already exists.
void merge_tracks(FrameFeatureStream& stream, std::vector<FeatureTrack> extra);

}  // namespace attnfuse
