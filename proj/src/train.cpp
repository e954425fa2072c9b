#include "trajgan/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trajgan/error.hpp"
#include "trajgan/rng.hpp"

namespace trajgan {

namespace {

// RNG streams derived from TrainConfig::seed.
constexpr std::uint64_t kStreamDiscInit = 1;
constexpr std::uint64_t kStreamGenInit = 2;
constexpr std::uint64_t kStreamDropout = 3;
constexpr std::uint64_t kStreamShuffle = 4;
constexpr std::uint64_t kStreamNoise = 5;
constexpr std::uint64_t kStreamLabels = 0x1ABE1;

constexpr std::size_t kCollapsePatience = 100;
constexpr double kCollapseStd = 1e-4;

std::vector<int> labels_of(std::span<const Segment> segments, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(label_index(segments[i].label));
  return out;
}

void check_loss(double value, const char* what, std::uint64_t step) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string(what) + " loss is not finite at step " + std::to_string(step));
  }
}

// Draws minibatches from a shuffled index pool, reshuffling on wrap.
class BatchCycler {
 public:
  BatchCycler(std::vector<std::size_t> pool, Rng& rng) : pool_(std::move(pool)), rng_(rng) { rng_.shuffle(pool_); }

  std::vector<std::size_t> next(std::size_t n) {
    std::vector<std::size_t> out;
    out.reserve(n);
    while (out.size() < n) {
      if (cursor_ == pool_.size()) {
        rng_.shuffle(pool_);
        cursor_ = 0;
      }
      out.push_back(pool_[cursor_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> pool_;
  Rng& rng_;
  std::size_t cursor_ = 0;
};

// Epoch batches over a shuffled pool. A trailing batch of one is dropped
// because batch normalization cannot train on it.
std::vector<std::vector<std::size_t>> epoch_batches(std::vector<std::size_t> pool, std::size_t batch, Rng& rng) {
  rng.shuffle(pool);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < pool.size(); i += batch) {
    const std::size_t end = std::min(pool.size(), i + batch);
    if (end - i < 2) break;
    out.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(i), pool.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// Mean over elements of the across-batch standard deviation.
template <typename T>
double batch_spread(const nn::Tensor<T>& x) {
  const std::size_t b = x.dim(0);
  const std::size_t per = x.size() / b;
  double total = 0.0;
  for (std::size_t j = 0; j < per; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < b; ++i) mean += static_cast<double>(x[i * per + j]);
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double d = static_cast<double>(x[i * per + j]) - mean;
      var += d * d;
    }
    total += std::sqrt(var / static_cast<double>(b));
  }
  return total / static_cast<double>(per);
}

template <typename T>
void optimizer_step(nn::Network<T>& net, nn::AdamState<T>& state, double clip_norm) {
  auto params = net.parameters();
  nn::clip_gradients<T>(params, clip_norm);
  nn::adam_step<T>(params, state);
}

std::size_t labeled_count_in(std::span<const Segment> segments) {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [](const Segment& s) { return s.label.has_value(); }));
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (c.epochs == 0) throw ConfigError("epochs must be positive");
  if (!(c.label_fraction > 0.0 && c.label_fraction <= 1.0)) throw ConfigError("label_fraction must be in (0, 1]");
  if (!(c.smoothing_target > 0.0 && c.smoothing_target <= 1.0)) {
    throw ConfigError("smoothing_target must be in (0, 1]");
  }
  if (!(c.clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(c.adam.lr > 0.0) || !(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0) ||
      !(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0) || !(c.adam.epsilon > 0.0)) {
    throw ConfigError("invalid adam parameters");
  }
  if (c.k_folds < 2) throw ConfigError("k_folds must be at least 2");
  if (c.validation_fold < 0 || c.validation_fold >= c.k_folds) {
    throw ConfigError("validation_fold must be in [0, k_folds)");
  }
}

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, int fold) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("compute_metrics: size mismatch");
  if (truth.empty()) throw DataError("cannot evaluate an empty set of labeled segments");
  Metrics m;
  m.fold = fold;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= kNumModes || p < 0 || p >= kNumModes) throw std::invalid_argument("compute_metrics: bad class");
    ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  m.total = truth.size();
  for (std::size_t c = 0; c < kNumModes; ++c) {
    m.correct += m.confusion[c][c];
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t o = 0; o < kNumModes; ++o) {
      row += m.confusion[c][o];
      col += m.confusion[o][c];
    }
    m.recall[c] = row ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(row) : 0.0;
    m.precision[c] = col ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(col) : 0.0;
  }
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.total);
  return m;
}

DataSplit make_split(std::span<const Segment> segments, const FoldAssignment& folds, int fold) {
  if (folds.fold_of_segment.size() != segments.size()) {
    throw std::invalid_argument("make_split: fold assignment does not match segments");
  }
  if (fold < 0 || fold >= folds.k) throw ConfigError("fold " + std::to_string(fold) + " out of range");
  const auto train_idx = folds.complement(fold);
  const auto val_idx = folds.members(fold);
  DataSplit split;
  split.fold = fold;
  split.stats = fit_norm_stats(segments, train_idx);
  split.train.reserve(train_idx.size());
  for (std::size_t i : train_idx) split.train.push_back(normalize(segments[i], split.stats));
  split.validation.reserve(val_idx.size());
  for (std::size_t i : val_idx) split.validation.push_back(normalize(segments[i], split.stats));
  return split;
}

std::vector<std::size_t> select_labeled(std::span<const Segment> train, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label) labeled.push_back(i);
  }
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labeled.size())));
  if (keep >= labeled.size()) return labeled;
  Rng rng(mix_seed(seed, kStreamLabels));
  rng.shuffle(labeled);
  labeled.resize(keep);
  std::sort(labeled.begin(), labeled.end());
  return labeled;
}

template <typename T>
std::vector<int> predict(const ModelSpec& spec, nn::Network<T>& net, std::span<const Segment> segments,
                         std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(segments.size());
  const nn::ForwardContext ctx{nn::Phase::eval, nullptr, false};
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < segments.size(); start += batch_size) {
    const std::size_t end = std::min(segments.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto logits = discriminator_forward(spec, net, make_batch<T>(segments, idx), ctx);
    const std::size_t cols = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const T* row = logits.ptr() + b * cols;
      out.push_back(static_cast<int>(std::max_element(row, row + spec.num_classes) - row));
    }
  }
  return out;
}

template <typename T>
Metrics evaluate(const ModelSpec& spec, nn::Network<T>& net, std::span<const Segment> segments, int fold,
                 bool trip_vote) {
  std::vector<Segment> labeled;
  for (const auto& s : segments) {
    if (s.label) labeled.push_back(s);
  }
  if (labeled.empty()) throw DataError("evaluation fold has no labeled segments");
  const auto predicted = predict(spec, net, std::span<const Segment>(labeled));
  std::vector<int> truth;
  truth.reserve(labeled.size());
  for (const auto& s : labeled) truth.push_back(label_index(s.label));
  Metrics m = compute_metrics(truth, predicted, fold);
  if (trip_vote) {
    std::map<std::string, std::pair<int, std::array<std::size_t, kNumModes>>> trips;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      auto& [label, votes] = trips[labeled[i].source_trip];
      label = truth[i];
      ++votes[static_cast<std::size_t>(predicted[i])];
    }
    std::size_t hits = 0;
    for (const auto& [id, entry] : trips) {
      const auto& votes = entry.second;
      const auto winner = std::max_element(votes.begin(), votes.end()) - votes.begin();
      if (winner == entry.first) ++hits;
    }
    m.trip_accuracy = static_cast<double>(hits) / static_cast<double>(trips.size());
  }
  return m;
}

template <typename T>
CnnResult<T> train_cnn(const TrainConfig& config, const DataSplit& split, const TrainHooks& hooks) {
  validate(config);
  const ModelSpec spec = build_model(config.model, split.train.empty() ? kDefaultSegLen : split.train.front().seg_len);
  if (spec.is_gan()) throw ConfigError("train_cnn needs a CNN model (A, B or C)");

  CnnResult<T> result{make_discriminator<T>(spec), {}, {}, {}, 0};
  auto& net = result.classifier;
  Rng init_rng(mix_seed(config.seed, kStreamDiscInit));
  Rng dropout_rng(mix_seed(config.seed, kStreamDropout));
  Rng shuffle_rng(mix_seed(config.seed, kStreamShuffle));
  net.initialize(init_rng);

  const auto labeled = select_labeled(split.train, config.label_fraction, config.seed);
  result.labeled_count = labeled.size();
  if (labeled.size() < 2) throw DataError("need at least two labeled training segments");

  nn::AdamState<T> adam{config.adam};
  const nn::ForwardContext ctx{nn::Phase::train, &dropout_rng, true};
  double best = -1.0;
  std::vector<T> best_state;
  auto validate_now = [&] {
    const double acc = evaluate(spec, net, split.validation, split.fold).accuracy;
    if (acc > best) {
      best = acc;
      best_state = net.snapshot();
    }
    return acc;
  };

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : epoch_batches(labeled, config.batch_size, shuffle_rng)) {
      ++step;
      const auto x = make_batch<T>(split.train, batch);
      const auto y = labels_of(split.train, batch);
      net.zero_grad();
      const auto logits = discriminator_forward(spec, net, x, ctx);
      const auto loss = supervised_loss(logits, y, config.supervised_loss);
      check_loss(loss.value, "supervised", step);
      net.backward(loss.grad);
      optimizer_step(net, adam, config.clip_norm);
      result.trace.push_back({step, loss.value, 0.0, loss.value, 0.0});
      if (config.eval_every && step % config.eval_every == 0) validate_now();
    }
    const double acc = validate_now();
    result.epoch_accuracy.push_back(acc);
    if (hooks.on_epoch) hooks.on_epoch(epoch, acc);
  }
  net.restore(best_state);
  result.metrics = evaluate(spec, net, split.validation, split.fold, config.trip_level_vote);
  return result;
}

template <typename T>
SganResult<T> train_sgan(const TrainConfig& config, const DataSplit& split, const TrainHooks& hooks) {
  validate(config);
  const ModelSpec spec = build_model(config.model, split.train.empty() ? kDefaultSegLen : split.train.front().seg_len);
  if (!spec.is_gan()) throw ConfigError("train_sgan needs a GAN model (D or E)");

  SganResult<T> result{make_discriminator<T>(spec), make_generator<T>(spec), {}, {}, {}, 0, false, 0};
  auto& disc = result.discriminator;
  auto& gen = result.generator;
  Rng d_init(mix_seed(config.seed, kStreamDiscInit));
  Rng g_init(mix_seed(config.seed, kStreamGenInit));
  Rng dropout_rng(mix_seed(config.seed, kStreamDropout));
  Rng shuffle_rng(mix_seed(config.seed, kStreamShuffle));
  Rng noise_rng(mix_seed(config.seed, kStreamNoise));
  disc.initialize(d_init);
  gen.initialize(g_init);

  const auto labeled = select_labeled(split.train, config.label_fraction, config.seed);
  result.labeled_count = labeled.size();
  if (labeled.size() < 2) throw DataError("need at least two labeled training segments");
  if (split.train.size() < 2) throw DataError("need at least two training segments");
  std::vector<std::size_t> pool(split.train.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  BatchCycler labeled_batches(labeled, shuffle_rng);

  nn::AdamState<T> d_adam{config.adam};
  nn::AdamState<T> g_adam{config.adam};
  const nn::ForwardContext train_ctx{nn::Phase::train, &dropout_rng, true};
  const nn::ForwardContext frozen_ctx{nn::Phase::train, &dropout_rng, false};

  double best = -1.0;
  std::vector<T> best_d;
  std::vector<T> best_g;
  auto validate_now = [&] {
    const double acc = evaluate(spec, disc, split.validation, split.fold).accuracy;
    if (acc > best) {
      best = acc;
      best_d = disc.snapshot();
      best_g = gen.snapshot();
    }
    return acc;
  };

  std::size_t collapsed_steps = 0;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& unlabeled : epoch_batches(pool, config.batch_size, shuffle_rng)) {
      ++step;
      const std::size_t b = unlabeled.size();

      // Discriminator step.
      const std::uint64_t g_before = hooks.verify_update_partition ? gen.checksum() : 0;
      disc.zero_grad();
      const auto lab = labeled_batches.next(std::min(config.batch_size, labeled.size()));
      const auto lab_logits = discriminator_forward(spec, disc, make_batch<T>(split.train, lab), train_ctx);
      const auto sup = supervised_loss(lab_logits, labels_of(split.train, lab), config.supervised_loss);
      disc.backward(sup.grad);

      const auto x_real = make_batch<T>(split.train, unlabeled);
      const auto real_logits = discriminator_forward(spec, disc, x_real, train_ctx);
      const auto real = unsupervised_real_term(real_logits, config.smoothing_target);
      disc.backward(real.grad);

      const auto fake = generator_forward(spec, gen, sample_noise<T>(b, spec.noise_dim, noise_rng), train_ctx);
      const auto fake_logits = discriminator_forward(spec, disc, fake, frozen_ctx);
      const auto fake_term = unsupervised_fake_term(fake_logits);
      disc.backward(fake_term.grad);

      const double unsup = real.value + fake_term.value;
      const double total = sup.value + unsup;
      check_loss(sup.value, "supervised", step);
      check_loss(unsup, "unsupervised", step);
      optimizer_step(disc, d_adam, config.clip_norm);
      if (hooks.verify_update_partition) {
        if (gen.checksum() != g_before) throw std::logic_error("discriminator step modified generator parameters");
        ++result.partition_checks;
      }

      // Generator step.
      const std::uint64_t d_before = hooks.verify_update_partition ? disc.checksum() : 0;
      gen.zero_grad();
      const auto fake_g = generator_forward(spec, gen, sample_noise<T>(b, spec.noise_dim, noise_rng), train_ctx);
      double g_value = 0.0;
      nn::Tensor<T> grad_fake;
      if (config.generator_objective == GeneratorObjective::non_saturating) {
        const auto logits = discriminator_forward(spec, disc, fake_g, frozen_ctx);
        auto gl = generator_loss(logits);
        g_value = gl.value;
        grad_fake = disc.backward(gl.grad, nn::ParamGrad::skip);
      } else {
        const auto real_feats = disc.forward(x_real, frozen_ctx, spec.feature_depth);
        const auto fake_feats = disc.forward(fake_g, frozen_ctx, spec.feature_depth);
        auto fm = nn::feature_matching_loss(real_feats, fake_feats);
        g_value = fm.value;
        grad_fake = disc.backward(fm.grad, nn::ParamGrad::skip);
      }
      check_loss(g_value, "generator", step);
      gen.backward(grad_fake);
      optimizer_step(gen, g_adam, config.clip_norm);
      if (hooks.verify_update_partition) {
        if (disc.checksum() != d_before) throw std::logic_error("generator step modified discriminator parameters");
        ++result.partition_checks;
      }

      result.trace.push_back({step, sup.value, unsup, total, g_value});

      if (batch_spread(fake_g) < kCollapseStd) {
        if (++collapsed_steps == kCollapsePatience && !result.mode_collapse_warning) {
          result.mode_collapse_warning = true;
          std::cerr << "warning: generator output spread below " << kCollapseStd << " for " << kCollapsePatience
                    << " steps (possible mode collapse) at step " << step << "\n";
        }
      } else {
        collapsed_steps = 0;
      }
      if (config.eval_every && step % config.eval_every == 0) validate_now();
    }
    const double acc = validate_now();
    result.epoch_accuracy.push_back(acc);
    if (hooks.on_epoch) hooks.on_epoch(epoch, acc);
  }
  disc.restore(best_d);
  gen.restore(best_g);
  result.metrics = evaluate(spec, disc, split.validation, split.fold, config.trip_level_vote);
  return result;
}

void aggregate(CrossValidation& cv) {
  std::size_t correct = 0;
  std::size_t total = 0;
  double sum = 0.0;
  for (const auto& f : cv.folds) {
    correct += f.metrics.correct;
    total += f.metrics.total;
    sum += f.metrics.accuracy;
  }
  if (total == 0) throw DataError("cross-validation evaluated no segments");
  cv.mean_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  const double plain_mean = sum / static_cast<double>(cv.folds.size());
  double var = 0.0;
  for (const auto& f : cv.folds) var += (f.metrics.accuracy - plain_mean) * (f.metrics.accuracy - plain_mean);
  cv.std_accuracy = std::sqrt(var / static_cast<double>(cv.folds.size()));
}

template <typename T>
CrossValidation cross_validate(const TrainConfig& config, std::span<const Segment> segments,
                               const TrainHooks& hooks) {
  validate(config);
  CrossValidation cv;
  cv.assignment = assign_folds(segments, config.k_folds, config.seed);
  const bool gan = build_model(config.model).is_gan();
  for (int f = 0; f < config.k_folds; ++f) {
    const DataSplit split = make_split(segments, cv.assignment, f);
    if (gan) {
      auto r = train_sgan<T>(config, split, hooks);
      cv.folds.push_back({std::move(r.metrics), std::move(r.trace)});
    } else {
      auto r = train_cnn<T>(config, split, hooks);
      cv.folds.push_back({std::move(r.metrics), std::move(r.trace)});
    }
  }
  aggregate(cv);
  return cv;
}

#define TRAJGAN_INSTANTIATE_TRAIN(T)                                                                              \
  template std::vector<int> predict<T>(const ModelSpec&, nn::Network<T>&, std::span<const Segment>, std::size_t); \
  template Metrics evaluate<T>(const ModelSpec&, nn::Network<T>&, std::span<const Segment>, int, bool);           \
  template CnnResult<T> train_cnn<T>(const TrainConfig&, const DataSplit&, const TrainHooks&);                    \
  template SganResult<T> train_sgan<T>(const TrainConfig&, const DataSplit&, const TrainHooks&);                  \
  template CrossValidation cross_validate<T>(const TrainConfig&, std::span<const Segment>, const TrainHooks&);

TRAJGAN_INSTANTIATE_TRAIN(float)
TRAJGAN_INSTANTIATE_TRAIN(double)

}  // namespace trajgan
