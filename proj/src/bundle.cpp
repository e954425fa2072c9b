#include "trajgan/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "trajgan/error.hpp"

namespace trajgan {

using nlohmann::json;

std::filesystem::path bundle_stem(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".f32") return std::filesystem::path(path).replace_extension();
  return path;
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_f32_blob(const std::filesystem::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<float> read_f32_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw ParseError(path.string() + ": size is not a multiple of 4");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

void write_bundle(const std::filesystem::path& path, const SegmentBundle& bundle) {
  const auto stem = bundle_stem(path);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());

  json meta;
  meta["segment_count"] = bundle.segments.size();
  meta["seg_len"] = bundle.seg_len;
  meta["channels"] = geokin::kNumChannels;
  meta["channel_order"] = geokin::kChannelNames;
  json labels = json::array(), valid = json::array(), trips = json::array();
  std::vector<float> blob;
  blob.reserve(bundle.segments.size() * bundle.seg_len * geokin::kNumChannels);
  for (const Segment& s : bundle.segments) {
    if (s.seg_len != bundle.seg_len) throw DataError("segment length does not match bundle seg_len");
    labels.push_back(label_index(s.label));
    valid.push_back(s.valid_len);
    trips.push_back(s.source_trip);
    blob.insert(blob.end(), s.values.begin(), s.values.end());
  }
  meta["labels"] = std::move(labels);
  meta["valid_lens"] = std::move(valid);
  meta["source_trips"] = std::move(trips);
  if (bundle.norm_stats) meta["norm_stats"] = {{"mean", bundle.norm_stats->mean}, {"stddev", bundle.norm_stats->stddev}};

  std::ofstream out(with_suffix(stem, ".json"));
  if (!out) throw ConfigError("cannot write " + with_suffix(stem, ".json").string());
  out << meta.dump(1) << '\n';
  write_f32_blob(with_suffix(stem, ".f32"), blob);
}

SegmentBundle read_bundle(const std::filesystem::path& path) {
  const auto stem = bundle_stem(path);
  std::ifstream in(with_suffix(stem, ".json"));
  if (!in) throw ConfigError("cannot open bundle " + with_suffix(stem, ".json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle sidecar: ") + e.what());
  }

  SegmentBundle bundle;
  std::size_t count = 0;
  std::vector<int> labels;
  std::vector<std::size_t> valid;
  std::vector<std::string> trips;
  try {
    count = meta.at("segment_count").get<std::size_t>();
    bundle.seg_len = meta.at("seg_len").get<std::size_t>();
    if (meta.at("channels").get<std::size_t>() != geokin::kNumChannels) throw ParseError("bundle: expected 5 channels");
    labels = meta.at("labels").get<std::vector<int>>();
    valid = meta.at("valid_lens").get<std::vector<std::size_t>>();
    if (meta.contains("source_trips")) {
      trips = meta["source_trips"].get<std::vector<std::string>>();
    } else {
      for (std::size_t i = 0; i < count; ++i) trips.push_back("segment-" + std::to_string(i));
    }
    if (meta.contains("norm_stats") && !meta["norm_stats"].is_null()) {
      NormStats ns;
      ns.mean = meta["norm_stats"].at("mean").get<std::array<double, geokin::kNumChannels>>();
      ns.stddev = meta["norm_stats"].at("stddev").get<std::array<double, geokin::kNumChannels>>();
      bundle.norm_stats = ns;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle sidecar: ") + e.what());
  }
  if (labels.size() != count || valid.size() != count || trips.size() != count) {
    throw ParseError("bundle sidecar: array lengths disagree with segment_count");
  }

  const auto blob = read_f32_blob(with_suffix(stem, ".f32"));
  const std::size_t per = bundle.seg_len * geokin::kNumChannels;
  if (blob.size() != count * per) throw ParseError("bundle blob size does not match sidecar");

  bundle.segments.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Segment& s = bundle.segments[i];
    s.seg_len = bundle.seg_len;
    s.valid_len = valid[i];
    if (s.valid_len > s.seg_len) throw ParseError("bundle: valid_len exceeds seg_len");
    s.label = mode_from_index(labels[i]);
    s.source_trip = trips[i];
    s.values.assign(blob.begin() + static_cast<std::ptrdiff_t>(i * per),
                    blob.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
  }
  return bundle;
}

}  // namespace trajgan
