#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "trajgan/config.hpp"
#include "trajgan/error.hpp"
#include "trajgan/report.hpp"
#include "trajgan/sgan_losses.hpp"
#include "trajgan/synth.hpp"
#include "trajgan/train.hpp"

using namespace trajgan;
using nn::Tensor;

namespace {

Tensor<double> logits_row(std::vector<double> v) {
  const std::size_t k = v.size();
  return Tensor<double>({1, k}, std::move(v));
}

// -log(1 - p_fake) computed from probabilities directly.
double direct_real_term(const Tensor<double>& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) z += std::exp(logits[row * k + j]);
  return -std::log(1.0 - std::exp(logits[row * k + k - 1]) / z);
}

std::vector<double> as_vec(const Tensor<double>& t) { return {t.data().begin(), t.data().end()}; }

template <typename F>
double logit_grad_error(const Tensor<double>& logits, const Tensor<double>& analytic, F value) {
  std::vector<double> x = as_vec(logits);
  const auto num = oracle::numeric_gradient(x, [&] { return value(Tensor<double>(logits.shape(), x)); });
  return gradcheck::norm_error(as_vec(analytic), num);
}

const std::vector<Segment>& small_corpus() {
  static const std::vector<Segment> segs = [] {
    synth::SynthConfig c;
    c.n_trips = {10, 10, 10, 10};
    c.duration_min_s = 140;
    c.duration_max_s = 150;
    return prepare_segments(synth::generate_corpus(c), PrepareOptions{});
  }();
  return segs;
}

TrainConfig quick_config(ModelId id) {
  TrainConfig c;
  c.model = id;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("supervised loss conditions on the real classes") {
  const auto uniform = Tensor<double>({2, 5}, 0.0);
  const std::vector<int> labels{0, 3};
  CHECK(supervised_loss(uniform, labels).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(supervised_loss(uniform, labels, SupervisedLossKind::plain).value ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
  // the fake logit does not affect the conditional loss
  auto shifted = uniform;
  shifted[4] = 7.0;
  CHECK(supervised_loss(shifted, labels).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const auto confident = logits_row({40, 0, 0, 0, 0});
  CHECK(supervised_loss(confident, std::vector<int>{0}).value < 1e-15);
  CHECK_THROWS_AS(supervised_loss(uniform, std::vector<int>{0, 4}), DataError);
  CHECK_THROWS_AS(supervised_loss(uniform, std::vector<int>{-1, 0}), DataError);
}

TEST_CASE("unsupervised loss reference values") {
  // all-zero logits give p_fake = 0.2 on both batches
  const auto z = Tensor<double>({3, 5}, 0.0);
  const auto u = unsupervised_loss(z, z);
  CHECK(u.value == doctest::Approx(-std::log(0.8) - std::log(0.2)).epsilon(1e-12));
  CHECK(std::abs(u.value - 1.83258) < 1e-5);
  CHECK(u.value == u.real_term + u.fake_term);
  // a perfect discriminator drives the loss to zero
  const auto real = logits_row({30, 0, 0, 0, -30});
  const auto fake = logits_row({-30, -30, -30, -30, 30});
  CHECK(unsupervised_loss(real, fake).value < 1e-12);
}

TEST_CASE("generator loss at p_fake one half") {
  const auto l = logits_row({0, 0, 0, 0, std::log(4.0)});
  CHECK(fake_probability(l)[0] == doctest::Approx(0.5));
  CHECK(std::abs(generator_loss(l).value - 0.69315) < 1e-5);
}

TEST_CASE("one-sided smoothing moves the real-data optimum to p_fake = 0.1") {
  // scan the fake logit with real logits fixed at zero
  double best_p = 0.0;
  double best = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    const double lf = -8.0 + 12.0 * i / 20000.0;
    const auto l = logits_row({0, 0, 0, 0, lf});
    const double v = unsupervised_real_term(l, 0.9).value;
    if (v < best) {
      best = v;
      best_p = fake_probability(l)[0];
    }
  }
  CHECK(best_p == doctest::Approx(0.1).epsilon(1e-3));
  // the gradient w.r.t. the fake logit vanishes exactly there
  const double lf = std::log(4.0 * 0.1 / 0.9);
  const auto at = logits_row({0, 0, 0, 0, lf});
  CHECK(std::abs(unsupervised_real_term(at, 0.9).grad[4]) < 1e-12);
}

TEST_CASE("smoothing target 1 reproduces the unsmoothed loss") {
  Rng rng(4);
  Tensor<double> l({6, 5});
  for (double& v : l.data()) v = rng.normal(0.0, 3.0);
  const auto r = unsupervised_real_term(l, 1.0);
  double want = 0.0;
  for (std::size_t b = 0; b < 6; ++b) want += direct_real_term(l, b);
  want /= 6.0;
  CHECK(std::abs(r.value - want) < 1e-12);
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor<double> l({4, 5});
    for (double& v : l.data()) v = rng.normal(0.0, 2.0);
    const std::vector<int> y{0, 1, 2, 3};
    for (auto kind : {SupervisedLossKind::conditional, SupervisedLossKind::plain}) {
      CHECK(logit_grad_error(l, supervised_loss(l, y, kind).grad,
                             [&](const Tensor<double>& t) { return supervised_loss(t, y, kind).value; }) < 1e-6);
    }
    for (double s : {1.0, 0.9}) {
      CHECK(logit_grad_error(l, unsupervised_real_term(l, s).grad,
                             [&](const Tensor<double>& t) { return unsupervised_real_term(t, s).value; }) < 1e-6);
    }
    CHECK(logit_grad_error(l, unsupervised_fake_term(l).grad,
                           [](const Tensor<double>& t) { return unsupervised_fake_term(t).value; }) < 1e-6);
    CHECK(logit_grad_error(l, generator_loss(l).grad,
                           [](const Tensor<double>& t) { return generator_loss(t).value; }) < 1e-6);
  }
}

TEST_CASE("metrics from a confusion matrix") {
  const std::vector<int> truth{0, 0, 1, 2, 3, 3};
  const auto perfect = compute_metrics(truth, truth, 2);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.fold == 2);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK((perfect.confusion[i][j] == 0) == (i != j));
  }
  const std::vector<int> pred{0, 1, 1, 2, 3, 0};
  const auto m = compute_metrics(truth, pred);
  CHECK(m.correct == 4);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.recall[0] == doctest::Approx(0.5));
  CHECK(m.precision[0] == doctest::Approx(0.5));
  CHECK(m.precision[1] == doctest::Approx(0.5));
  std::size_t sum = 0;
  for (const auto& row : m.confusion) sum += std::accumulate(row.begin(), row.end(), std::size_t{0});
  CHECK(sum == truth.size());
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST_CASE("constant car prediction on a 3845:8515:7415:15275 class mix") {
  const std::array<std::size_t, 4> counts{3845, 8515, 7415, 15275};
  std::vector<int> truth;
  for (int c = 0; c < 4; ++c) truth.insert(truth.end(), counts[static_cast<std::size_t>(c)], c);
  const std::vector<int> pred(truth.size(), 3);
  const auto m = compute_metrics(truth, pred);
  CHECK(m.accuracy == doctest::Approx(15275.0 / 35050.0).epsilon(1e-12));
  CHECK(std::abs(m.accuracy - 0.436) < 1e-3);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::size_t{0}) == counts[c]);
  }
}

TEST_CASE("label masking keeps round(fraction * n) labels, seeded") {
  const auto& segs = small_corpus();
  const auto folds = assign_folds(segs, 5, 1);
  const auto split = make_split(segs, folds, 0);
  const std::size_t n = split.train.size();
  const auto a = select_labeled(split.train, 0.2, 9);
  CHECK(a.size() == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
  CHECK(select_labeled(split.train, 0.2, 9) == a);
  CHECK(select_labeled(split.train, 0.2, 10) != a);
  CHECK(select_labeled(split.train, 1.0, 9).size() == n);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(a.back() < n);  // indices refer to the training side only
}

TEST_CASE("normalization statistics come from the training folds only") {
  const auto& segs = small_corpus();
  const auto folds = assign_folds(segs, 5, 1);
  const auto split = make_split(segs, folds, 1);
  const auto train_raw = fit_norm_stats(segs, folds.complement(1));
  const auto val_raw = fit_norm_stats(segs, folds.members(1));
  CHECK(split.stats.mean == train_raw.mean);
  CHECK(split.stats.stddev == train_raw.stddev);
  CHECK(val_raw.mean != train_raw.mean);
  CHECK(split.train.size() + split.validation.size() == segs.size());
  std::set<std::string> train_trips, val_trips;
  for (const auto& s : split.train) train_trips.insert(s.source_trip);
  for (const auto& s : split.validation) CHECK_FALSE(train_trips.contains(s.source_trip));
}

TEST_CASE("CNN training is deterministic and keeps the best epoch") {
  const auto& segs = small_corpus();
  const auto split = make_split(segs, assign_folds(segs, 5, 3), 0);
  auto cfg = quick_config(ModelId::A);
  std::vector<double> seen;
  TrainHooks hooks;
  hooks.on_epoch = [&](std::size_t, double acc) { seen.push_back(acc); };
  const auto r1 = train_cnn<float>(cfg, split, hooks);
  const auto r2 = train_cnn<float>(cfg, split);
  CHECK(seen.size() == 2);
  REQUIRE(r1.trace.size() == r2.trace.size());
  std::ostringstream a, b;
  write_loss_csv(a, r1.trace);
  write_loss_csv(b, r2.trace);
  CHECK(a.str() == b.str());
  CHECK(r1.metrics.accuracy == *std::max_element(seen.begin(), seen.end()));
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].step == i + 1);
    CHECK(std::isfinite(r1.trace[i].total));
  }
  CHECK_THROWS_AS(train_sgan<float>(cfg, split), ConfigError);
}

TEST_CASE("SGAN steps update only their own network and record total = supervised + unsupervised") {
  const auto& segs = small_corpus();
  const auto split = make_split(segs, assign_folds(segs, 5, 3), 0);
  auto cfg = quick_config(ModelId::D);
  cfg.label_fraction = 0.5;
  TrainHooks hooks;
  hooks.verify_update_partition = true;
  const auto r = train_sgan<float>(cfg, split, hooks);
  CHECK(r.partition_checks == 2 * r.trace.size());
  CHECK(r.labeled_count == static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(split.train.size()))));
  for (const auto& rec : r.trace) {
    CHECK(rec.total == rec.supervised + rec.unsupervised);
    CHECK(std::isfinite(rec.generator));
  }
  for (auto obj : {GeneratorObjective::feature_matching}) {
    cfg.generator_objective = obj;
    cfg.epochs = 1;
    const auto fm = train_sgan<double>(cfg, split, hooks);
    CHECK(fm.partition_checks == 2 * fm.trace.size());
  }
}

TEST_CASE("cross-validation partitions segments and aggregates by support") {
  const auto& segs = small_corpus();
  auto cfg = quick_config(ModelId::A);
  cfg.epochs = 1;
  const auto cv = cross_validate<float>(cfg, segs);
  REQUIRE(cv.folds.size() == 5);
  std::size_t total = 0;
  double weighted = 0.0;
  for (int f = 0; f < 5; ++f) {
    CHECK(cv.folds[static_cast<std::size_t>(f)].metrics.fold == f);
    total += cv.folds[static_cast<std::size_t>(f)].metrics.total;
  }
  for (const auto& f : cv.folds) {
    weighted += f.metrics.accuracy * static_cast<double>(f.metrics.total) / static_cast<double>(total);
  }
  CHECK(total == segs.size());
  CHECK(std::abs(cv.mean_accuracy - weighted) < 1e-12);
}

TEST_CASE("trip-level vote") {
  const auto& segs = small_corpus();
  const auto split = make_split(segs, assign_folds(segs, 5, 3), 0);
  auto cfg = quick_config(ModelId::A);
  cfg.epochs = 1;
  cfg.trip_level_vote = true;
  const auto r = train_cnn<float>(cfg, split);
  REQUIRE(r.metrics.trip_accuracy.has_value());
  CHECK(*r.metrics.trip_accuracy >= 0.0);
  CHECK(*r.metrics.trip_accuracy <= 1.0);
}

TEST_CASE("train config validation and JSON round trip") {
  TrainConfig c;
  c.model = ModelId::E;
  c.label_fraction = 0.3;
  c.adam.lr = 1e-3;
  c.generator_objective = GeneratorObjective::feature_matching;
  const auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_digest(to_json(back)) == config_digest(to_json(c)));
  CHECK_THROWS_AS(train_config_from_json({{"batch_size", 1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"label_fraction", 0.0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"epochs", "ten"}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"adam", {{"momentum", 0.9}}}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"model", "Z"}}), ConfigError);
}

TEST_CASE("synth config JSON accepts partial overrides") {
  const auto c = synth_config_from_json({{"n_trips", {{"walk", 3}}}, {"profiles", {{"car", {{"speed_mean", 15.0}}}}}});
  CHECK(c.n_trips[0] == 3);
  CHECK(c.n_trips[3] == synth::SynthConfig{}.n_trips[3]);
  CHECK(c.profiles[3].speed_mean == 15.0);
  CHECK(c.profiles[3].speed_std == synth::SynthConfig{}.profiles[3].speed_std);
  CHECK_THROWS_AS(synth_config_from_json({{"n_trips", {{"boat", 3}}}}), ConfigError);
  CHECK_THROWS_AS(synth_config_from_json({{"profiles", {{"car", {{"wheels", 4}}}}}}), ConfigError);
}

TEST_CASE("loss CSV round trips bit-exactly") {
  LossTrace t{{1, 0.1, 1.0 / 3.0, 0.1 + 1.0 / 3.0, 2e-300}, {2, 1e10, 3.14159, 1e10 + 3.14159, 0.5}};
  const auto path = std::filesystem::temp_directory_path() / "trajgan_loss.csv";
  write_loss_csv(path, t);
  const auto back = read_loss_csv(path);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].step == t[i].step);
    CHECK(back[i].supervised == t[i].supervised);
    CHECK(back[i].unsupervised == t[i].unsupervised);
    CHECK(back[i].total == t[i].total);
    CHECK(back[i].total == back[i].supervised + back[i].unsupervised);
    CHECK(back[i].generator == t[i].generator);
  }
  std::filesystem::remove(path);
}

TEST_CASE("metrics JSON round trip") {
  const auto m = compute_metrics(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 2, 2}, 4);
  const auto j = metrics_to_json(m, ModelId::B, "abc", 7);
  CHECK(j.at("model") == "B");
  CHECK(j.at("confusion").size() == 4);
  const auto back = metrics_from_json(j);
  CHECK(back.confusion == m.confusion);
  CHECK(back.accuracy == m.accuracy);
  CHECK(back.fold == 4);
}
