#include "trajgan/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajgan/error.hpp"

namespace trajgan {

using nlohmann::json;

void write_loss_csv(std::ostream& os, const LossTrace& trace) {
  os << kLossCsvHeader << '\n';
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g\n", static_cast<unsigned long long>(r.step),
                  r.supervised, r.unsupervised, r.total, r.generator);
    os << buf;
  }
}

void write_loss_csv(const std::filesystem::path& path, const LossTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_loss_csv(out, trace);
}

LossTrace read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kLossCsvHeader) throw ParseError(1, "expected header " + std::string(kLossCsvHeader));
  LossTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LossRecord r;
    double* fields[] = {&r.supervised, &r.unsupervised, &r.total, &r.generator};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto res = std::from_chars(p, end, r.step);
    bool ok = res.ec == std::errc{};
    p = res.ptr;
    for (double* f : fields) {
      if (!ok || p == end || *p != ',') {
        ok = false;
        break;
      }
      res = std::from_chars(p + 1, end, *f);
      ok = res.ec == std::errc{};
      p = res.ptr;
    }
    if (!ok || p != end) throw ParseError(line_no, "malformed loss record");
    trace.push_back(r);
  }
  return trace;
}

json metrics_to_json(const Metrics& m, ModelId model, const std::string& config_digest, std::uint64_t seed) {
  json confusion = json::array();
  for (const auto& row : m.confusion) confusion.push_back(row);
  json j{{"model", std::string(to_string(model))},
         {"fold", m.fold},
         {"accuracy", m.accuracy},
         {"correct", m.correct},
         {"total", m.total},
         {"precision", m.precision},
         {"recall", m.recall},
         {"confusion", confusion},
         {"config_digest", config_digest},
         {"seed", seed}};
  if (m.trip_accuracy) j["trip_accuracy"] = *m.trip_accuracy;
  return j;
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  try {
    m.fold = j.at("fold").get<int>();
    m.accuracy = j.at("accuracy").get<double>();
    m.correct = j.at("correct").get<std::size_t>();
    m.total = j.at("total").get<std::size_t>();
    m.precision = j.at("precision").get<std::array<double, kNumModes>>();
    m.recall = j.at("recall").get<std::array<double, kNumModes>>();
    m.confusion = j.at("confusion").get<std::array<std::array<std::size_t, kNumModes>, kNumModes>>();
    if (j.contains("trip_accuracy")) m.trip_accuracy = j.at("trip_accuracy").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("bad metrics JSON: ") + e.what());
  }
  return m;
}

json to_json(const RunManifest& m) {
  return {{"command", m.command}, {"config_digest", m.config_digest}, {"seed", m.seed},
          {"inputs", m.inputs},   {"outputs", m.outputs},             {"version", kToolVersion},
          {"duration_s", m.duration_s}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

SegmentSummary summarize(std::span<const Segment> segments) {
  constexpr std::size_t C = geokin::kNumChannels;
  constexpr std::size_t kSpeed = 1;
  SegmentSummary s;
  s.segments = segments.size();
  s.mean.assign(C, 0.0);
  s.stddev.assign(C, 0.0);
  std::size_t rows = 0;
  for (const auto& seg : segments) {
    for (std::size_t r = 0; r < seg.valid_len; ++r) {
      for (std::size_t c = 0; c < C; ++c) s.mean[c] += seg.at(r, c);
    }
    rows += seg.valid_len;
  }
  if (rows == 0) return s;
  for (double& m : s.mean) m /= static_cast<double>(rows);
  for (const auto& seg : segments) {
    for (std::size_t r = 0; r < seg.valid_len; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const double d = seg.at(r, c) - s.mean[c];
        s.stddev[c] += d * d;
      }
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(rows));

  double acc = 0.0;
  std::size_t counted = 0;
  for (const auto& seg : segments) {
    const std::size_t n = seg.valid_len;
    if (n < 3) continue;
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += seg.at(r, kSpeed);
    mean /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = seg.at(r, kSpeed) - mean;
      den += d * d;
      if (r + 1 < n) num += d * (seg.at(r + 1, kSpeed) - mean);
    }
    if (den > 0.0) {
      acc += num / den;
      ++counted;
    }
  }
  s.speed_autocorr = counted ? acc / static_cast<double>(counted) : 0.0;
  return s;
}

json to_json(const SegmentSummary& s) {
  json channels = json::object();
  for (std::size_t c = 0; c < s.mean.size(); ++c) {
    channels[std::string(geokin::kChannelNames[c])] = {{"mean", s.mean[c]}, {"stddev", s.stddev[c]}};
  }
  return {{"segments", s.segments}, {"channels", channels}, {"speed_autocorr_lag1", s.speed_autocorr}};
}

}  // namespace trajgan
