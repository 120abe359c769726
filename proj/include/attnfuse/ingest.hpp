#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnfuse/category.hpp"

namespace attnfuse {

struct FrameFeatureRecord {
  std::string user_id;
  std::string session_id;
  double timestamp = 0.0;
  Category category = Category::EB;
  std::vector<double> values;
};

// All frames of one (user, session, category), timestamps strictly increasing.
struct FeatureTrack {
  std::string user_id;
  std::string session_id;
  Category category = Category::EB;
  std::vector<double> timestamps;
  std::vector<double> values;  // frames x dimension(category), row-major

  std::size_t frames() const noexcept { return timestamps.size(); }
  std::span<const double> frame(std::size_t i) const {
    const std::size_t n = dimension(category);
    return {values.data() + i * n, n};
  }
  FrameFeatureRecord record(std::size_t i) const;
};

// Parsed frame-feature file: tracks sorted by (user, session, category).
struct FrameFeatureStream {
  std::vector<FeatureTrack> tracks;

  const FeatureTrack* find(std::string_view user, std::string_view session, Category c) const;
  std::vector<std::string> users() const;
  std::vector<std::string> sessions(std::string_view user) const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr std::size_t kLandmarkPoints = 14;

// P0..P5 are the right-eye contour, P6..P9 the head extremes, P10..P13 the
// nose extremes. The optional left-eye block carries the mirrored contour.
struct LandmarkFrame {
  std::string user_id;
  double timestamp = 0.0;
  bool valid = true;
  std::array<Point2, kLandmarkPoints> points{};
  std::optional<std::array<Point2, 6>> left_eye;
};

struct AttentionSeries {
  std::string user_id;
  std::vector<double> values;  // index i is second i, each in [0, 100]
};

FrameFeatureStream parse_frame_features(const std::filesystem::path& path);
FrameFeatureStream parse_frame_features_text(std::string_view text);
void write_frame_features(std::ostream& out, const FrameFeatureStream& stream);

// user_id defaults to the file stem.
AttentionSeries parse_attention_stream(const std::filesystem::path& path, std::string user_id = {});
AttentionSeries parse_attention_text(std::string_view text, std::string user_id);
void write_attention(std::ostream& out, const AttentionSeries& series);

std::vector<LandmarkFrame> parse_landmarks(const std::filesystem::path& path);
std::vector<LandmarkFrame> parse_landmarks_text(std::string_view text);
void write_landmarks(std::ostream& out, const std::vector<LandmarkFrame>& frames);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

}  // namespace attnfuse
