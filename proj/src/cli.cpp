#include "trajgan/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "trajgan/bundle.hpp"
#include "trajgan/config.hpp"
#include "trajgan/error.hpp"
#include "trajgan/nn/checkpoint.hpp"
#include "trajgan/report.hpp"

namespace trajgan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string precision = "f32";
};

struct SynthArgs {
  std::string config;
  std::string out;
  std::vector<std::string> trips;
};

struct PrepareArgs {
  std::string input;
  std::string out;
  double gap_s = kDefaultGapSeconds;
  std::size_t seg_len = 70;
  std::size_t min_points = 10;
  std::string bearing_rate = "folded";
};

struct TrainArgs {
  std::string bundle;
  std::string model;
  std::string config;
  std::string out;
  std::optional<std::size_t> epochs;
  std::optional<double> label_fraction;
  std::optional<int> k;
  std::optional<int> fold;
};

struct SampleArgs {
  std::string checkpoint;
  std::size_t n = 32;
  std::string out;
  std::string reals;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json norm_stats_json(const NormStats& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

NormStats norm_stats_from(const json& j) {
  NormStats s;
  s.mean = j.at("mean").get<decltype(s.mean)>();
  s.stddev = j.at("stddev").get<decltype(s.stddev)>();
  return s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

json load_config(const std::string& path) { return path.empty() ? json::object() : read_config_file(path); }

TrainConfig train_config_for(const TrainArgs& a, const GlobalOptions& g, json* effective) {
  const json file = load_config(a.config);
  const json known = to_json(TrainConfig{});
  json train_part = json::object();
  for (const auto& [key, value] : file.items()) {
    if (known.contains(key)) train_part[key] = value;
  }
  TrainConfig c = train_config_from_json(train_part);
  if (!a.model.empty()) c.model = parse_model_id(a.model);
  if (g.seed) c.seed = *g.seed;
  if (a.epochs) c.epochs = *a.epochs;
  if (a.label_fraction) c.label_fraction = *a.label_fraction;
  if (a.k) c.k_folds = *a.k;
  if (a.fold) c.validation_fold = *a.fold;
  validate(c);
  if (effective) *effective = to_json(c);
  return c;
}

// ---- synth

int cmd_synth(const SynthArgs& a, const GlobalOptions& g, std::ostream& out) {
  Stopwatch clock;
  const json file = load_config(a.config);
  synth::SynthConfig c;
  const json known = to_json(c);
  json synth_part = json::object();
  for (const auto& [key, value] : file.items()) {
    if (known.contains(key)) synth_part[key] = value;
  }
  c = synth_config_from_json(synth_part, c);
  for (const auto& item : a.trips) {
    std::stringstream ss(item);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) throw ConfigError("--trips expects mode=count, got '" + pair + "'");
      const auto mode = parse_mode(pair.substr(0, eq));
      if (!mode) throw ConfigError("--trips: empty mode name");
      std::size_t n = 0;
      const std::string count = pair.substr(eq + 1);
      const auto [p, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
      if (ec != std::errc{} || p != count.data() + count.size()) throw ConfigError("--trips: bad count '" + count + "'");
      c.n_trips[static_cast<std::size_t>(*mode)] = n;
    }
  }
  if (g.seed) c.seed = *g.seed;
  synth::validate(c);

  const auto trips = synth::generate_corpus(c);
  const auto records = to_point_records(trips);
  {
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw DataError("cannot write " + a.out);
    write_points_csv(os, records);
  }
  RunManifest m{"synth", config_digest(to_json(c)), c.seed, {}, {a.out}, clock.seconds()};
  if (!a.config.empty()) m.inputs.push_back(a.config);
  write_json(a.out + ".manifest.json", to_json(m));
  out << "wrote " << trips.size() << " trips (" << records.size() << " points) to " << a.out << "\n";
  return kExitOk;
}

// ---- prepare

int cmd_prepare(const PrepareArgs& a, const GlobalOptions& g, std::ostream& out) {
  Stopwatch clock;
  if (!(a.gap_s > 0.0)) throw ConfigError("--gap-s must be positive");
  if (a.seg_len == 0 || a.min_points == 0 || a.min_points > a.seg_len) {
    throw ConfigError("need 0 < --min-points <= --seg-len");
  }
  PrepareOptions opts;
  opts.segments = {a.seg_len, a.min_points};
  opts.threads = std::max(1u, g.threads);
  if (a.bearing_rate == "raw") opts.kinematics.bearing_rate_mode = geokin::BearingRateMode::raw;
  else if (a.bearing_rate != "folded") throw ConfigError("--bearing-rate must be 'folded' or 'raw'");

  const auto records = read_points_csv(a.input);
  const auto trips = split_trips(records, a.gap_s);
  PrepareReport report;
  SegmentBundle bundle;
  bundle.seg_len = a.seg_len;
  bundle.segments = prepare_segments(trips, opts, &report);
  write_bundle(a.out, bundle);

  const json settings{{"gap_s", a.gap_s}, {"seg_len", a.seg_len}, {"min_points", a.min_points},
                      {"bearing_rate", a.bearing_rate}};
  const fs::path stem = bundle_stem(a.out);
  RunManifest m{"prepare", config_digest(settings), g.seed.value_or(0), {a.input},
                {stem.string() + ".json", stem.string() + ".f32"}, clock.seconds()};
  write_json(stem.string() + ".manifest.json", to_json(m));
  out << "trips " << report.trips << ", too short " << report.trips_too_short << ", points dropped "
      << report.points_dropped << ", segments " << bundle.segments.size() << "\n";
  return kExitOk;
}

// ---- train

template <typename T>
void save(const fs::path& path, nn::Network<T>& net, const json& metadata) {
  nn::CheckpointExtras extras;
  extras.metadata = metadata;
  nn::write_checkpoint(path, net, extras);
}

template <typename T>
int cmd_train(const TrainArgs& a, const GlobalOptions& g, std::ostream& out) {
  Stopwatch clock;
  if (a.model.empty()) throw ConfigError("--model is required");
  json effective;
  const TrainConfig config = train_config_for(a, g, &effective);
  const std::string digest = config_digest(effective);
  const SegmentBundle bundle = read_bundle(a.bundle);
  const auto folds = assign_folds(bundle.segments, config.k_folds, config.seed);
  const DataSplit split = make_split(bundle.segments, folds, config.validation_fold);
  const fs::path dir(a.out);
  ensure_dir(dir);

  json meta{{"model", std::string(to_string(config.model))},
            {"bundle", fs::absolute(bundle_stem(a.bundle)).string()},
            {"norm_stats", norm_stats_json(split.stats)},
            {"config_digest", digest},
            {"seed", config.seed}};
  RunManifest m{"train", digest, config.seed, {a.bundle}, {}, 0.0};
  if (!a.config.empty()) m.inputs.push_back(a.config);
  LossTrace trace;
  Metrics metrics;
  if (build_model(config.model).is_gan()) {
    auto r = train_sgan<T>(config, split);
    meta["role"] = "discriminator";
    save(dir / "discriminator", r.discriminator, meta);
    meta["role"] = "generator";
    save(dir / "generator", r.generator, meta);
    m.outputs = {(dir / "discriminator.json").string(), (dir / "generator.json").string()};
    trace = std::move(r.trace);
    metrics = r.metrics;
  } else {
    auto r = train_cnn<T>(config, split);
    meta["role"] = "classifier";
    save(dir / "classifier", r.classifier, meta);
    m.outputs = {(dir / "classifier.json").string()};
    trace = std::move(r.trace);
    metrics = r.metrics;
  }
  write_loss_csv(dir / "loss.csv", trace);
  write_json(dir / "metrics.json", metrics_to_json(metrics, config.model, digest, config.seed));
  m.outputs.push_back((dir / "loss.csv").string());
  m.outputs.push_back((dir / "metrics.json").string());
  m.duration_s = clock.seconds();
  write_json(dir / "manifest.json", to_json(m));
  out << "model " << to_string(config.model) << " fold " << config.validation_fold << " accuracy " << metrics.accuracy
      << " (" << metrics.correct << "/" << metrics.total << ")\n";
  return kExitOk;
}

// ---- crossval

template <typename T>
int cmd_crossval(const TrainArgs& a, const GlobalOptions& g, std::ostream& out) {
  Stopwatch clock;
  if (a.model.empty()) throw ConfigError("--model is required");
  json effective;
  const TrainConfig config = train_config_for(a, g, &effective);
  const std::string digest = config_digest(effective);
  const SegmentBundle bundle = read_bundle(a.bundle);
  const CrossValidation cv = cross_validate<T>(config, bundle.segments);
  const fs::path dir(a.out);
  ensure_dir(dir);

  RunManifest m{"crossval", digest, config.seed, {a.bundle}, {}, 0.0};
  if (!a.config.empty()) m.inputs.push_back(a.config);
  json folds = json::array();
  for (const auto& f : cv.folds) {
    const std::string name = "fold_" + std::to_string(f.metrics.fold);
    write_json(dir / (name + ".json"), metrics_to_json(f.metrics, config.model, digest, config.seed));
    write_loss_csv(dir / ("loss_" + name + ".csv"), f.trace);
    m.outputs.push_back((dir / (name + ".json")).string());
    m.outputs.push_back((dir / ("loss_" + name + ".csv")).string());
    folds.push_back({{"fold", f.metrics.fold}, {"accuracy", f.metrics.accuracy}, {"correct", f.metrics.correct},
                     {"total", f.metrics.total}});
  }
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& f : cv.folds) {
    correct += f.metrics.correct;
    total += f.metrics.total;
  }
  const json agg{{"model", std::string(to_string(config.model))},
                 {"k", config.k_folds},
                 {"accuracy", cv.mean_accuracy},
                 {"accuracy_std", cv.std_accuracy},
                 {"correct", correct},
                 {"total", total},
                 {"folds", folds},
                 {"config_digest", digest},
                 {"seed", config.seed}};
  write_json(dir / "aggregate.json", agg);
  m.outputs.push_back((dir / "aggregate.json").string());
  m.duration_s = clock.seconds();
  write_json(dir / "manifest.json", to_json(m));
  out << "model " << to_string(config.model) << " " << config.k_folds << "-fold accuracy " << cv.mean_accuracy
      << " +/- " << cv.std_accuracy << "\n";
  return kExitOk;
}

// ---- sample

template <typename T>
int cmd_sample(const SampleArgs& a, const GlobalOptions& g, std::ostream& out) {
  Stopwatch clock;
  if (a.n == 0) throw ConfigError("--n must be positive");
  const nn::Checkpoint ckpt = nn::read_checkpoint(a.checkpoint);
  const json& meta = ckpt.manifest.at("metadata");
  if (meta.value("role", std::string()) != "generator") throw ConfigError(a.checkpoint + " is not a generator checkpoint");
  auto gen = nn::load_network<T>(ckpt);
  const nn::Shape out_shape = gen.output_shape();
  if (out_shape.size() != 2 || out_shape[1] != geokin::kNumChannels) throw DataError("unexpected generator output shape");
  const std::uint64_t seed = g.seed.value_or(meta.value("seed", std::uint64_t{0}));

  Rng rng(mix_seed(seed, 0x5A3D));
  const auto z = sample_noise<T>(a.n, ckpt.input_shape.at(0), rng);
  const auto fakes = gen.forward(z, nn::ForwardContext{nn::Phase::eval, nullptr, false});

  SegmentBundle bundle;
  bundle.seg_len = out_shape[0];
  const std::size_t per = bundle.seg_len * geokin::kNumChannels;
  char id[32];
  for (std::size_t i = 0; i < a.n; ++i) {
    Segment s;
    s.seg_len = bundle.seg_len;
    s.valid_len = bundle.seg_len;
    s.values.resize(per);
    for (std::size_t j = 0; j < per; ++j) s.values[j] = static_cast<float>(fakes[i * per + j]);
    std::snprintf(id, sizeof id, "fake-%05zu", i);
    s.source_trip = id;
    bundle.segments.push_back(std::move(s));
  }
  if (meta.contains("norm_stats")) bundle.norm_stats = norm_stats_from(meta.at("norm_stats"));
  write_bundle(a.out, bundle);

  const fs::path stem = bundle_stem(a.out);
  json report{{"fakes", to_json(summarize(bundle.segments))}};
  std::string reals_path = a.reals;
  if (reals_path.empty()) reals_path = meta.value("bundle", std::string());
  RunManifest m{"sample", config_digest(json{{"n", a.n}, {"checkpoint", a.checkpoint}}), seed, {a.checkpoint},
                {stem.string() + ".json", stem.string() + ".f32"}, 0.0};
  if (!reals_path.empty() && fs::exists(bundle_stem(reals_path).string() + ".json")) {
    SegmentBundle reals = read_bundle(reals_path);
    if (bundle.norm_stats) {
      for (auto& s : reals.segments) s = normalize(s, *bundle.norm_stats);
    }
    report["reals"] = to_json(summarize(reals.segments));
    report["reals_bundle"] = reals_path;
    m.inputs.push_back(reals_path);
  }
  write_json(stem.string() + ".report.json", report);
  m.outputs.push_back(stem.string() + ".report.json");
  m.duration_s = clock.seconds();
  write_json(stem.string() + ".manifest.json", to_json(m));
  out << "wrote " << a.n << " generated segments to " << stem.string() << "\n";
  return kExitOk;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Travel mode inference from GPS trajectories with CNN and semi-supervised GAN models", "trajgan"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides config)");
  app.add_option("--threads", g.threads, "Worker threads for data preparation")->check(CLI::Range(1u, 256u));
  app.add_option("--precision", g.precision, "Training precision")->check(CLI::IsMember({"f32", "f64"}));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic GPS corpus");
  synth->add_option("--config", sa.config, "JSON config file");
  synth->add_option("--out", sa.out, "Output points CSV")->required();
  synth->add_option("--trips", sa.trips, "Per-mode trip counts, e.g. walk=10,car=5");

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "Derive kinematic channels and cut fixed-length segments");
  prepare->add_option("points", pa.input, "Points CSV")->required();
  prepare->add_option("--out", pa.out, "Output segment bundle")->required();
  prepare->add_option("--gap-s", pa.gap_s, "Trip-breaking time gap in seconds");
  prepare->add_option("--seg-len", pa.seg_len, "Points per segment");
  prepare->add_option("--min-points", pa.min_points, "Minimum valid points per segment");
  prepare->add_option("--bearing-rate", pa.bearing_rate, "folded or raw");

  TrainArgs ta;
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("bundle", ta.bundle, "Segment bundle")->required();
    cmd->add_option("--model", ta.model, "Model id A-E");
    cmd->add_option("--config", ta.config, "JSON config file");
    cmd->add_option("--out", ta.out, "Output directory")->required();
    cmd->add_option("--epochs", ta.epochs, "Training epochs");
    cmd->add_option("--label-fraction", ta.label_fraction, "Fraction of training segments that keep labels");
  };
  auto* train = app.add_subcommand("train", "Train one model on one fold split");
  add_train_options(train);
  train->add_option("--k", ta.k, "Number of folds used to hold out validation data");
  train->add_option("--fold", ta.fold, "Validation fold");
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  add_train_options(crossval);
  crossval->add_option("--k", ta.k, "Number of folds");

  SampleArgs sp;
  auto* sample = app.add_subcommand("sample", "Generate fake segments from a generator checkpoint");
  sample->add_option("checkpoint", sp.checkpoint, "Generator checkpoint")->required();
  sample->add_option("--n", sp.n, "Number of segments");
  sample->add_option("--out", sp.out, "Output segment bundle")->required();
  sample->add_option("--reals", sp.reals, "Real segment bundle to compare against");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;
  const bool f64 = g.precision == "f64";

  return guarded(err, [&] {
    if (*synth) return cmd_synth(sa, g, out);
    if (*prepare) return cmd_prepare(pa, g, out);
    if (*train) return f64 ? cmd_train<double>(ta, g, out) : cmd_train<float>(ta, g, out);
    if (*crossval) return f64 ? cmd_crossval<double>(ta, g, out) : cmd_crossval<float>(ta, g, out);
    return f64 ? cmd_sample<double>(sp, g, out) : cmd_sample<float>(sp, g, out);
  });
}

}  // namespace trajgan
