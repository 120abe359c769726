#include "attnfuse/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "attnfuse/error.hpp"

namespace attnfuse {
namespace {

struct LineCursor {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  }
};

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": " + what);
}

double field_double(std::string_view s, std::size_t line_no, const char* column) {
  auto v = to_double(s);
  if (!v) malformed(line_no, std::string("column '") + column + "' is not a finite number: '" + std::string(s) + "'");
  return *v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FrameFeatureRecord FeatureTrack::record(std::size_t i) const {
  auto f = frame(i);
  return {user_id, session_id, timestamps[i], category, std::vector<double>(f.begin(), f.end())};
}

const FeatureTrack* FrameFeatureStream::find(std::string_view user, std::string_view session, Category c) const {
  auto it = std::lower_bound(tracks.begin(), tracks.end(), std::tie(user, session, c), [](const FeatureTrack& t, const auto& key) {
    return std::tie(t.user_id, t.session_id, t.category) < std::tuple<std::string_view, std::string_view, Category>(key);
  });
  if (it == tracks.end() || it->user_id != user || it->session_id != session || it->category != c) return nullptr;
  return &*it;
}

std::vector<std::string> FrameFeatureStream::users() const {
  std::vector<std::string> out;
  for (const auto& t : tracks) {
    if (out.empty() || out.back() != t.user_id) out.push_back(t.user_id);
  }
  return out;
}

std::vector<std::string> FrameFeatureStream::sessions(std::string_view user) const {
  std::vector<std::string> out;
  for (const auto& t : tracks) {
    if (t.user_id == user && (out.empty() || out.back() != t.session_id)) out.push_back(t.session_id);
  }
  return out;
}

FrameFeatureStream parse_frame_features_text(std::string_view text) {
  using Key = std::tuple<std::string, std::string, Category>;
  std::map<Key, FeatureTrack> tracks;
  LineCursor cursor{text};
  std::string_view line;
  std::vector<std::string_view> fields;
  bool first = true;
  while (cursor.next(line)) {
    if (is_blank(line)) continue;
    split_fields(line, fields);
    if (first) {
      first = false;
      if (trim(fields[0]) == "user_id") continue;
    }
    const std::size_t ln = cursor.line_no;
    if (fields.size() < 5) malformed(ln, "expected at least 5 fields, got " + std::to_string(fields.size()));
    const std::string_view user = trim(fields[0]);
    const std::string_view session = trim(fields[1]);
    if (user.empty() || session.empty()) malformed(ln, "empty user_id or session_id");
    const double ts = field_double(fields[2], ln, "timestamp");
    if (ts < 0.0) malformed(ln, "negative timestamp");
    auto cat = parse_category(trim(fields[3]));
    if (!cat) malformed(ln, "unknown category '" + std::string(trim(fields[3])) + "'");
    const std::size_t n = fields.size() - 4;
    if (n != dimension(*cat)) {
      throw Error(ErrorKind::DimensionMismatch, "line " + std::to_string(ln) + ": category " + std::string(name(*cat)) + " expects " +
                                                    std::to_string(dimension(*cat)) + " values, got " + std::to_string(n));
    }
    Key key{std::string(user), std::string(session), *cat};
    auto [it, inserted] = tracks.try_emplace(key);
    FeatureTrack& track = it->second;
    if (inserted) {
      track.user_id = std::get<0>(key);
      track.session_id = std::get<1>(key);
      track.category = *cat;
    } else if (!(ts > track.timestamps.back())) {
      throw Error(ErrorKind::NonMonotonicTimestamp, "line " + std::to_string(ln) + ": timestamp " + format_double(ts) +
                                                        " does not increase within stream " + track.user_id + "/" +
                                                        track.session_id + "/" + std::string(name(*cat)));
    }
    track.timestamps.push_back(ts);
    for (std::size_t k = 0; k < n; ++k) {
      const double v = field_double(fields[4 + k], ln, "value");
      if (*cat == Category::EB && (v < 0.0 || v > 1.0)) {
        throw Error(ErrorKind::OutOfRange, "line " + std::to_string(ln) + ": EB value " + format_double(v) + " outside [0,1]");
      }
      track.values.push_back(v);
    }
  }
  FrameFeatureStream out;
  out.tracks.reserve(tracks.size());
  for (auto& [key, track] : tracks) out.tracks.push_back(std::move(track));
  return out;
}

FrameFeatureStream parse_frame_features(const std::filesystem::path& path) {
  return parse_frame_features_text(read_file(path));
}

void write_frame_features(std::ostream& out, const FrameFeatureStream& stream) {
  std::size_t max_dim = 1;
  for (const auto& t : stream.tracks) max_dim = std::max(max_dim, dimension(t.category));
  out << "user_id,session_id,timestamp,category";
  for (std::size_t k = 1; k <= max_dim; ++k) out << ",v" << k;
  out << '\n';
  for (const auto& t : stream.tracks) {
    for (std::size_t i = 0; i < t.frames(); ++i) {
      out << t.user_id << ',' << t.session_id << ',' << format_double(t.timestamps[i]) << ',' << name(t.category);
      for (double v : t.frame(i)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

AttentionSeries parse_attention_text(std::string_view text, std::string user_id) {
  AttentionSeries series{std::move(user_id), {}};
  LineCursor cursor{text};
  std::string_view line;
  bool first = true;
  while (cursor.next(line)) {
    if (is_blank(line)) continue;
    auto v = to_double(line);
    if (!v) {
      if (first) {
        first = false;
        continue;
      }
      malformed(cursor.line_no, "attention value is not a finite number: '" + std::string(trim(line)) + "'");
    }
    first = false;
    if (*v < 0.0 || *v > 100.0) {
      throw Error(ErrorKind::OutOfRange, "line " + std::to_string(cursor.line_no) + ": attention " + format_double(*v) + " outside [0,100]");
    }
    series.values.push_back(*v);
  }
  if (series.values.empty()) throw Error(ErrorKind::EmptyStream, "attention stream for '" + series.user_id + "' is empty");
  return series;
}

AttentionSeries parse_attention_stream(const std::filesystem::path& path, std::string user_id) {
  if (user_id.empty()) user_id = path.stem().string();
  return parse_attention_text(read_file(path), std::move(user_id));
}

void write_attention(std::ostream& out, const AttentionSeries& series) {
  for (double v : series.values) out << format_double(v) << '\n';
}

std::vector<LandmarkFrame> parse_landmarks_text(std::string_view text) {
  constexpr std::size_t kBase = 3 + 2 * kLandmarkPoints;
  constexpr std::size_t kWithLeft = kBase + 12;
  std::vector<LandmarkFrame> frames;
  std::map<std::string, double, std::less<>> last_ts;
  LineCursor cursor{text};
  std::string_view line;
  std::vector<std::string_view> fields;
  bool first = true;
  while (cursor.next(line)) {
    if (is_blank(line)) continue;
    split_fields(line, fields);
    if (first) {
      first = false;
      if (trim(fields[0]) == "user_id") continue;
    }
    const std::size_t ln = cursor.line_no;
    if (fields.size() != kBase && fields.size() != kWithLeft) {
      malformed(ln, "expected " + std::to_string(kBase) + " or " + std::to_string(kWithLeft) + " fields, got " +
                        std::to_string(fields.size()));
    }
    LandmarkFrame f;
    f.user_id = std::string(trim(fields[0]));
    if (f.user_id.empty()) malformed(ln, "empty user_id");
    f.timestamp = field_double(fields[1], ln, "timestamp");
    const std::string_view valid = trim(fields[2]);
    if (valid == "1" || valid == "true") {
      f.valid = true;
    } else if (valid == "0" || valid == "false") {
      f.valid = false;
    } else {
      malformed(ln, "valid flag must be 0 or 1, got '" + std::string(valid) + "'");
    }
    for (std::size_t p = 0; p < kLandmarkPoints; ++p) {
      f.points[p] = {field_double(fields[3 + 2 * p], ln, "x"), field_double(fields[4 + 2 * p], ln, "y")};
    }
    if (fields.size() == kWithLeft) {
      std::array<Point2, 6> left{};
      for (std::size_t p = 0; p < 6; ++p) {
        left[p] = {field_double(fields[kBase + 2 * p], ln, "x"), field_double(fields[kBase + 1 + 2 * p], ln, "y")};
      }
      f.left_eye = left;
    }
    auto it = last_ts.find(f.user_id);
    if (it != last_ts.end()) {
      if (!(f.timestamp > it->second)) {
        throw Error(ErrorKind::NonMonotonicTimestamp,
                    "line " + std::to_string(ln) + ": landmark timestamp " + format_double(f.timestamp) + " does not increase for user " + f.user_id);
      }
      it->second = f.timestamp;
    } else {
      last_ts.emplace(f.user_id, f.timestamp);
    }
    frames.push_back(std::move(f));
  }
  std::stable_sort(frames.begin(), frames.end(), [](const LandmarkFrame& a, const LandmarkFrame& b) { return a.user_id < b.user_id; });
  return frames;
}

std::vector<LandmarkFrame> parse_landmarks(const std::filesystem::path& path) { return parse_landmarks_text(read_file(path)); }

void write_landmarks(std::ostream& out, const std::vector<LandmarkFrame>& frames) {
  const bool with_left = std::any_of(frames.begin(), frames.end(), [](const LandmarkFrame& f) { return f.left_eye.has_value(); });
  out << "user_id,timestamp,valid";
  for (std::size_t p = 0; p < kLandmarkPoints; ++p) out << ",p" << p << "x,p" << p << 'y';
  if (with_left) {
    for (std::size_t p = 0; p < 6; ++p) out << ",l" << p << "x,l" << p << 'y';
  }
  out << '\n';
  for (const auto& f : frames) {
    out << f.user_id << ',' << format_double(f.timestamp) << ',' << (f.valid ? 1 : 0);
    for (const auto& p : f.points) out << ',' << format_double(p.x) << ',' << format_double(p.y);
    if (with_left) {
      const auto& left = f.left_eye ? *f.left_eye : std::array<Point2, 6>{f.points[0], f.points[1], f.points[2], f.points[3], f.points[4], f.points[5]};
      for (const auto& p : left) out << ',' << format_double(p.x) << ',' << format_double(p.y);
    }
    out << '\n';
  }
}

}  // namespace attnfuse
