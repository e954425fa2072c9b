#include "trajgan/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "trajgan/rng.hpp"

namespace trajgan {

namespace {

constexpr std::array<std::string_view, kNumModes> kModeNames = {"walk", "bike", "transit", "car"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(std::string_view field, std::size_t line, const char* name) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || !std::isfinite(v)) {
    throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(Mode m) { return kModeNames[static_cast<std::size_t>(m)]; }

std::optional<Mode> parse_mode(std::string_view s) {
  if (s.empty()) return std::nullopt;
  for (Mode m : kAllModes) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

std::optional<Mode> mode_from_index(int index) {
  if (index < 0) return std::nullopt;
  if (index >= kNumModes) throw DataError("label index out of range: " + std::to_string(index));
  return static_cast<Mode>(index);
}

std::vector<PointRecord> parse_points_csv(std::string_view text) {
  std::vector<PointRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!saw_header) {
      if (line != kPointsCsvHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kPointsCsvHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(line_no, "empty trip_id");
    const double t = parse_number(fields[1], line_no, "t_epoch_s");
    const double lat = parse_number(fields[2], line_no, "lat_deg");
    const double lon = parse_number(fields[3], line_no, "lon_deg");
    if (lat < -90.0 || lat > 90.0) throw ParseError(line_no, "latitude out of range: " + std::string(fields[2]));
    if (lon < -180.0 || lon > 180.0) throw ParseError(line_no, "longitude out of range: " + std::string(fields[3]));
    std::optional<Mode> mode;
    try {
      mode = parse_mode(fields[4]);
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back({std::string(fields[0]), geokin::from_degrees(lat, lon, t), mode});
  }
  if (!saw_header) throw ParseError(1, "missing header");
  return out;
}

std::vector<PointRecord> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open points file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_points_csv(ss.str());
}

void write_points_csv(std::ostream& os, std::span<const PointRecord> records) {
  os << kPointsCsvHeader << '\n';
  char buf[160];
  for (const PointRecord& r : records) {
    std::snprintf(buf, sizeof buf, ",%.3f,%.8f,%.8f,", r.point.t, geokin::to_degrees(r.point.lat),
                  geokin::to_degrees(r.point.lon));
    os << r.trip_id << buf;
    if (r.mode) os << to_string(*r.mode);
    os << '\n';
  }
}

std::vector<Trip> split_trips(std::span<const PointRecord> records, double gap_s) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const PointRecord*>> streams;
  for (const PointRecord& r : records) {
    auto [it, inserted] = streams.try_emplace(r.trip_id);
    if (inserted) order.push_back(r.trip_id);
    it->second.push_back(&r);
  }

  std::vector<Trip> trips;
  for (const std::string& id : order) {
    const auto& rows = streams[id];
    std::size_t piece = 0;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
      if (i < rows.size() && !(rows[i]->point.t - rows[i - 1]->point.t > gap_s)) continue;
      Trip trip;
      trip.trip_id = piece == 0 ? id : id + "#" + std::to_string(piece);
      trip.label = rows[begin]->mode;
      for (std::size_t j = begin; j < i; ++j) {
        trip.points.push_back(rows[j]->point);
        if (rows[j]->mode != trip.label) trip.label.reset();
      }
      trips.push_back(std::move(trip));
      ++piece;
      begin = i;
    }
  }
  return trips;
}

std::vector<PointRecord> to_point_records(std::span<const Trip> trips) {
  std::vector<PointRecord> out;
  for (const Trip& trip : trips) {
    for (const geokin::GpsPoint& p : trip.points) out.push_back({trip.trip_id, p, trip.label});
  }
  return out;
}

std::vector<Segment> segmentize(std::string_view trip_id, std::optional<Mode> label,
                                std::span<const geokin::ChannelVector> rows, const SegmentOptions& options) {
  if (options.seg_len == 0) throw ConfigError("seg_len must be positive");
  std::vector<Segment> out;
  for (std::size_t start = 0; start < rows.size(); start += options.seg_len) {
    const std::size_t valid = std::min(options.seg_len, rows.size() - start);
    if (valid < options.min_points) continue;
    Segment seg;
    seg.seg_len = options.seg_len;
    seg.valid_len = valid;
    seg.values.assign(options.seg_len * geokin::kNumChannels, 0.0f);
    seg.label = label;
    seg.source_trip = std::string(trip_id);
    for (std::size_t r = 0; r < valid; ++r) {
      const auto channels = rows[start + r].as_array();
      for (std::size_t c = 0; c < geokin::kNumChannels; ++c) seg.at(r, c) = static_cast<float>(channels[c]);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Segment> prepare_segments(std::span<const Trip> trips, const PrepareOptions& options,
                                      PrepareReport* report) {
  struct PerTrip {
    std::vector<Segment> segments;
    std::size_t dropped = 0;
    std::size_t discarded = 0;
    bool too_short = false;
  };
  std::vector<PerTrip> results(trips.size());

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < trips.size(); i += stride) {
      PerTrip& r = results[i];
      try {
        const auto derived = geokin::derive_channels(trips[i].points, options.kinematics);
        r.dropped = derived.dropped_points;
        r.segments = segmentize(trips[i].trip_id, trips[i].label, derived.rows, options.segments);
        std::size_t kept = 0;
        for (const Segment& s : r.segments) kept += s.valid_len;
        r.discarded = derived.rows.size() - kept;
      } catch (const geokin::TripTooShortError&) {
        r.too_short = true;
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(trips.size())));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  std::vector<Segment> out;
  PrepareReport rep;
  rep.trips = trips.size();
  for (PerTrip& r : results) {
    rep.points_dropped += r.dropped;
    rep.rows_discarded += r.discarded;
    if (r.too_short) ++rep.trips_too_short;
    for (Segment& s : r.segments) out.push_back(std::move(s));
  }
  if (report) *report = rep;
  return out;
}

NormStats fit_norm_stats(std::span<const Segment> segments) {
  std::vector<std::size_t> all(segments.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_norm_stats(segments, all);
}

NormStats fit_norm_stats(std::span<const Segment> segments, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("cannot fit normalization statistics on zero segments");
  constexpr std::size_t C = geokin::kNumChannels;
  std::array<double, C> sum{};
  std::size_t rows = 0;
  for (std::size_t idx : indices) {
    const Segment& s = segments[idx];
    for (std::size_t r = 0; r < s.valid_len; ++r) {
      for (std::size_t c = 0; c < C; ++c) sum[c] += s.at(r, c);
    }
    rows += s.valid_len;
  }
  if (rows == 0) throw DataError("cannot fit normalization statistics on empty segments");
  NormStats stats;
  for (std::size_t c = 0; c < C; ++c) stats.mean[c] = sum[c] / static_cast<double>(rows);
  // second pass for a numerically stable variance
  std::array<double, C> sq{};
  for (std::size_t idx : indices) {
    const Segment& s = segments[idx];
    for (std::size_t r = 0; r < s.valid_len; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const double d = s.at(r, c) - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    stats.stddev[c] = std::max(std::sqrt(sq[c] / static_cast<double>(rows)), kMinStddev);
  }
  return stats;
}

Segment normalize(const Segment& segment, const NormStats& stats) {
  Segment out = segment;
  std::fill(out.values.begin() + static_cast<std::ptrdiff_t>(segment.valid_len * geokin::kNumChannels),
            out.values.end(), 0.0f);
  for (std::size_t r = 0; r < segment.valid_len; ++r) {
    for (std::size_t c = 0; c < geokin::kNumChannels; ++c) {
      out.at(r, c) = static_cast<float>((segment.at(r, c) - stats.mean[c]) / stats.stddev[c]);
    }
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_segment.size(); ++i) {
    if (fold_of_segment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_segment.size(); ++i) {
    if (fold_of_segment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment assign_folds(std::span<const Segment> segments, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2");
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  std::unordered_map<std::string, std::size_t> trip_index;
  for (const Segment& s : segments) {
    if (trip_index.try_emplace(s.source_trip, fa.trip_order.size()).second) fa.trip_order.push_back(s.source_trip);
  }
  if (fa.trip_order.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("need at least k=" + std::to_string(k) + " distinct trips, have " +
                      std::to_string(fa.trip_order.size()));
  }
  std::vector<std::size_t> perm(fa.trip_order.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0xF01D));
  rng.shuffle(perm);
  fa.fold_of_trip.assign(fa.trip_order.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) fa.fold_of_trip[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

  fa.fold_of_segment.reserve(segments.size());
  for (const Segment& s : segments) fa.fold_of_segment.push_back(fa.fold_of_trip[trip_index.at(s.source_trip)]);
  return fa;
}

}  // namespace trajgan
