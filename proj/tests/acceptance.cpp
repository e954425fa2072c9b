// Acceptance gate: runs every end-to-end check and prints one PASS/FAIL
// line each. Usage: acceptance [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "trajgan/bundle.hpp"
#include "trajgan/cli.hpp"
#include "trajgan/geokin.hpp"
#include "trajgan/nn/ops.hpp"
#include "trajgan/report.hpp"
#include "trajgan/sgan_losses.hpp"
#include "trajgan/train.hpp"

using namespace trajgan;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kShapeBudgetS = 1.0;
constexpr double kGradTolerance = 1e-4;
constexpr int kGradSeeds = 5;
constexpr double kGradBudgetS = 120.0;
constexpr double kGeodesyRelTol = 1e-9;
constexpr double kBearingTolDeg = 1e-9;
constexpr double kSteadyTol = 1e-6;
constexpr double kCnnMinAccuracy = 0.90;
constexpr double kCnnBudgetS = 600.0;
constexpr double kSganMargin = 0.02;
constexpr double kSganBudgetS = 2700.0;
constexpr double kAggregateTol = 1e-12;
constexpr double kAdjointTol = 1e-10;
constexpr double kLossTol = 1e-5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  const int code = run_cli(args, out, std::cerr);
  if (code != 0) std::cerr << "command failed (" << code << "):";
  if (code != 0) {
    for (const auto& a : args) std::cerr << ' ' << a;
    std::cerr << '\n';
  }
  return code;
}

double inner(const nn::Tensor<double>& a, const nn::Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------

Outcome shape_conformance() {
  Stopwatch clock;
  const ModelSpec spec = build_model(ModelId::E);
  const auto trace = nn::trace_shapes(spec.discriminator, spec.input_shape);
  std::vector<nn::Shape> convs;
  nn::Shape flat;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (spec.discriminator[i].kind == nn::LayerKind::conv1d) convs.push_back(trace[i]);
    if (spec.discriminator[i].kind == nn::LayerKind::flatten) flat = trace[i];
  }
  auto disc = make_discriminator<float>(spec);
  auto gen = make_generator<float>(spec);
  Rng rng(1);
  disc.initialize(rng);
  gen.initialize(rng);
  const auto fake = generator_forward(spec, gen, sample_noise<float>(1, spec.noise_dim, rng), {});
  const auto logits = discriminator_forward(spec, disc, fake, {});
  const double secs = clock.seconds();
  const bool ok = convs == std::vector<nn::Shape>{{35, 128}, {18, 256}, {9, 512}} && flat == nn::Shape{4608} &&
                  trace.back() == nn::Shape{5} && fake.shape() == nn::Shape{1, 70, 5} &&
                  logits.shape() == nn::Shape{1, 5} && secs < kShapeBudgetS;
  return {ok, "conv " + nn::to_string(convs.at(0)) + ", " + nn::to_string(convs.at(1)) + ", " +
                  nn::to_string(convs.at(2)) + "; flatten " + nn::to_string(flat) + "; generator " +
                  nn::to_string(fake.shape()) + "; " + fmt("%.3f s", secs)};
}

Outcome gradient_checks() {
  Stopwatch clock;
  double worst = 0.0;
  std::string worst_what;
  std::set<std::string> kinds;
  std::size_t checks = 0;
  for (int s = 0; s < kGradSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(1000 + s);
    for (const auto& [spec, shape] : gradcheck::layer_cases()) {
      const auto r = gradcheck::check_layer(spec, shape, 3, seed);
      kinds.insert(r.what);
      ++checks;
      if (r.worst > worst) {
        worst = r.worst;
        worst_what = r.what;
      }
    }
    for (bool fm : {false, true}) {
      const auto r = gradcheck::check_composite(ModelId::D, 16, 3, seed, 4, fm);
      for (const auto* part : {&r.discriminator_total, &r.generator}) {
        kinds.insert(part->what);
        ++checks;
        if (part->worst > worst) {
          worst = part->worst;
          worst_what = part->what;
        }
      }
    }
  }
  const double secs = clock.seconds();
  const bool ok = worst < kGradTolerance && kinds.size() >= 13 && secs < kGradBudgetS;
  return {ok, std::to_string(checks) + " checks over " + std::to_string(kinds.size()) + " layer kinds/losses, " +
                  std::to_string(kGradSeeds) + " seeds; worst rel err " + fmt("%.2e", worst) + " (" + worst_what +
                  "); " + fmt("%.1f s", secs)};
}

Outcome geodesy_oracle() {
  Rng rng(777);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lat1 = std::asin(rng.uniform(-1.0, 1.0)), lat2 = std::asin(rng.uniform(-1.0, 1.0));
    const double lon1 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double lon2 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double want = oracle::sphere_distance(lat1, lon1, lat2, lon2, geokin::kEarthRadiusM);
    const double got = geokin::haversine_distance({lat1, lon1, 0}, {lat2, lon2, 0});
    worst = std::max(worst, std::abs(got - want) / want);
  }
  using geokin::from_degrees;
  const double north = geokin::bearing(from_degrees(10, 20, 0), from_degrees(11, 20, 0)).degrees;
  const double east = geokin::bearing(from_degrees(0, 20, 0), from_degrees(0, 21, 0)).degrees;
  const double south = geokin::bearing(from_degrees(10, 20, 0), from_degrees(9, 20, 0)).degrees;
  const double bearing_err = std::max({std::abs(north), std::abs(east - 90.0), std::abs(south - 180.0)});
  const bool ok = worst < kGeodesyRelTol && bearing_err < kBearingTolDeg;
  return {ok, "1000 pairs worst rel err " + fmt("%.2e", worst) + "; N/E/S bearing err " + fmt("%.2e deg", bearing_err)};
}

Outcome steady_motion() {
  double worst = 0.0;
  for (auto [dlat, dlon] : std::vector<std::pair<double, double>>{{1e-4, 0}, {0, 2e-4}, {-5e-5, 0}}) {
    std::vector<geokin::GpsPoint> pts;
    for (int i = 0; i < 120; ++i) pts.push_back(geokin::from_degrees(dlon != 0 ? 0.0 : 45.0 + dlat * i, 10 + dlon * i, i));
    const auto ch = geokin::derive_channels(pts);
    for (std::size_t i = 3; i < ch.rows.size(); ++i) {
      worst = std::max({worst, std::abs(ch.rows[i].accel), std::abs(ch.rows[i].jerk), std::abs(ch.rows[i].bearing_rate)});
    }
  }
  return {worst < kSteadyTol, "max |accel|, |jerk|, bearing rate " + fmt("%.2e", worst)};
}

struct Corpus {
  fs::path dir;
  fs::path bundle;
};

Corpus balanced_corpus(const fs::path& work) {
  Corpus c{work, work / "balanced"};
  std::ofstream(work / "synth.json") << R"({"n_trips": {"walk": 100, "bike": 100, "transit": 100, "car": 100},
  "duration_min_s": 700, "duration_max_s": 700, "seed": 7})";
  if (cli({"synth", "--config", (work / "synth.json").string(), "--out", (work / "points.csv").string()}) != 0 ||
      cli({"prepare", (work / "points.csv").string(), "--out", c.bundle.string()}) != 0) {
    throw std::runtime_error("could not build the balanced corpus");
  }
  return c;
}

struct CnnRun {
  Outcome outcome;
  std::string metrics;
  std::string losses;
};

CnnRun cnn_run(const Corpus& corpus, const std::string& name) {
  Stopwatch clock;
  const fs::path out = corpus.dir / name;
  const int code = cli({"--seed", "7", "train", corpus.bundle.string(), "--model", "A", "--epochs", "10", "--out",
                        out.string()});
  const double secs = clock.seconds();
  if (code != 0) return {{false, "train exited with " + std::to_string(code)}, "", ""};
  const auto m = read_json(out / "metrics.json");
  const double acc = m.at("accuracy").get<double>();
  const bool ok = acc >= kCnnMinAccuracy && secs <= kCnnBudgetS;
  return {{ok, "validation accuracy " + fmt("%.4f", acc) + " on " + std::to_string(m.at("total").get<int>()) +
                   " segments; " + fmt("%.0f s", secs)},
          slurp(out / "metrics.json"), slurp(out / "loss.csv")};
}

Outcome sgan_run(const Corpus& corpus) {
  Stopwatch clock;
  const fs::path d_out = corpus.dir / "sgan_d";
  const int code = cli({"--seed", "7", "train", corpus.bundle.string(), "--model", "D", "--label-fraction", "0.2",
                        "--epochs", "30", "--out", d_out.string()});
  const double secs = clock.seconds();
  if (code != 0) return {false, "train exited with " + std::to_string(code)};
  const fs::path a_out = corpus.dir / "cnn_a_20";
  if (cli({"--seed", "7", "train", corpus.bundle.string(), "--model", "A", "--label-fraction", "0.2", "--epochs", "30",
           "--out", a_out.string()}) != 0) {
    return {false, "baseline run failed"};
  }
  const std::string csv = slurp(d_out / "loss.csv");
  const bool header = csv.rfind(std::string(kLossCsvHeader) + "\n", 0) == 0;
  const auto trace = read_loss_csv(d_out / "loss.csv");
  bool finite = !trace.empty();
  bool identity = true;
  double sup_mean = 0.0, unsup_mean = 0.0;
  for (const auto& r : trace) {
    finite = finite && std::isfinite(r.supervised) && std::isfinite(r.unsupervised) && std::isfinite(r.total) &&
             std::isfinite(r.generator);
    identity = identity && r.total == r.supervised + r.unsupervised;
    sup_mean += r.supervised / static_cast<double>(trace.size());
    unsup_mean += r.unsupervised / static_cast<double>(trace.size());
  }
  const double acc_d = read_json(d_out / "metrics.json").at("accuracy").get<double>();
  const double acc_a = read_json(a_out / "metrics.json").at("accuracy").get<double>();
  const bool ok = header && finite && identity && acc_d >= acc_a - kSganMargin && secs <= kSganBudgetS;
  return {ok, "SGAN " + fmt("%.4f", acc_d) + " vs CNN " + fmt("%.4f", acc_a) + " at 20% labels; " +
                  std::to_string(trace.size()) + " steps, total identity " + (identity ? "exact" : "BROKEN") +
                  ", mean sup/unsup " + fmt("%.3f", sup_mean) + "/" + fmt("%.3f", unsup_mean) + "; " +
                  fmt("%.0f s", secs)};
}

Outcome crossval_laws(const Corpus& corpus) {
  const SegmentBundle b = read_bundle(corpus.bundle);
  TrainConfig cfg;
  cfg.model = ModelId::A;
  cfg.epochs = 1;
  cfg.seed = 7;
  const CrossValidation cv = cross_validate<float>(cfg, b.segments);
  std::vector<int> times(b.segments.size(), 0);
  for (int f = 0; f < cfg.k_folds; ++f) {
    for (std::size_t i : cv.assignment.members(f)) ++times[i];
  }
  const bool once = std::all_of(times.begin(), times.end(), [](int t) { return t == 1; });
  std::vector<std::size_t> trips(static_cast<std::size_t>(cfg.k_folds), 0);
  for (int f : cv.assignment.fold_of_trip) ++trips[static_cast<std::size_t>(f)];
  const auto [lo, hi] = std::minmax_element(trips.begin(), trips.end());
  std::size_t total = 0;
  for (const auto& f : cv.folds) total += f.metrics.total;
  double weighted = 0.0;
  for (const auto& f : cv.folds) weighted += f.metrics.accuracy * static_cast<double>(f.metrics.total) / static_cast<double>(total);
  const double err = std::abs(weighted - cv.mean_accuracy);
  const bool ok = once && total == b.segments.size() && *hi - *lo <= 1 && err < kAggregateTol &&
                  cv.folds.size() == static_cast<std::size_t>(cfg.k_folds);
  return {ok, std::string("each segment validated ") + (once ? "exactly once" : "NOT once") + "; trips per fold " +
                  std::to_string(*lo) + ".." + std::to_string(*hi) + "; aggregate " + fmt("%.6f", cv.mean_accuracy) +
                  ", |weighted mean diff| " + fmt("%.1e", err)};
}

Outcome adjoint_identity() {
  Rng rng(4242);
  const std::vector<std::array<std::size_t, 4>> chains = {
      {70, 8, 2, 35}, {35, 8, 2, 18}, {18, 8, 2, 9}, {9, 8, 2, 5}, {70, 8, 1, 70}};
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const auto [len, k, stride, short_len] = chains[static_cast<std::size_t>(draw) % chains.size()];
    const std::size_t cx = 1 + rng.below(8), cy = 1 + rng.below(8), batch = 1 + rng.below(3);
    const auto x = gradcheck::random_tensor({batch, len, cx}, rng);
    const auto y = gradcheck::random_tensor({batch, short_len, cy}, rng);
    const auto w = gradcheck::random_tensor({k, cx, cy}, rng);
    const double lhs = inner(nn::conv1d(x, w, nn::Tensor<double>(), stride), y);
    const double rhs = inner(x, nn::frac_conv1d(y, w, nn::Tensor<double>(), stride, len));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return {worst < kAdjointTol, "100 draws, worst |<Wx,y> - <x,W'y>| " + fmt("%.2e", worst)};
}

Outcome loss_references() {
  const nn::Tensor<double> uniform({4, 5}, 0.0);
  const double u = unsupervised_loss(uniform, uniform).value;
  const double s = supervised_loss(uniform, std::vector<int>{0, 1, 2, 3}).value;
  const bool ok = std::abs(u - 1.83258) < kLossTol && std::abs(s - std::log(4.0)) < kLossTol;
  return {ok, "unsupervised " + fmt("%.6f", u) + " (want 1.83258), supervised " + fmt("%.6f", s) + " (want ln 4)"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "trajgan_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << ": " << o.detail << std::endl;
  };

  report("shape conformance", shape_conformance);
  report("gradient checks", gradient_checks);
  report("geodesy oracle", geodesy_oracle);
  report("constant-velocity kinematics", steady_motion);
  report("fractional conv adjoint", adjoint_identity);
  report("loss reference values", loss_references);

  std::optional<Corpus> corpus;
  try {
    corpus = balanced_corpus(work);
    const auto b = read_bundle(corpus->bundle);
    std::array<std::size_t, kNumModes> per{};
    for (const auto& s : b.segments) ++per[static_cast<std::size_t>(label_index(s.label))];
    std::cout << "corpus: " << b.segments.size() << " segments (" << per[0] << "/" << per[1] << "/" << per[2] << "/"
              << per[3] << ")" << std::endl;
  } catch (const std::exception& e) {
    std::cout << "corpus: " << e.what() << std::endl;
  }
  CnnRun first, second;
  report("CNN end to end", [&] {
    first = cnn_run(*corpus, "cnn_a_run1");
    return first.outcome;
  });
  report("SGAN end to end", [&] { return sgan_run(*corpus); });
  report("cross-validation laws", [&] { return crossval_laws(*corpus); });
  report("determinism", [&] {
    second = cnn_run(*corpus, "cnn_a_run2");
    const bool same = !first.metrics.empty() && first.metrics == second.metrics && first.losses == second.losses;
    return Outcome{same, std::string("metrics JSON ") + (first.metrics == second.metrics ? "identical" : "DIFFERENT") +
                             ", loss CSV " + (first.losses == second.losses ? "identical" : "DIFFERENT") + " (" +
                             std::to_string(first.losses.size()) + " bytes)"};
  });

  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " checks failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
