#pragma once

// CNN and semi-supervised GAN training loops, evaluation and k-fold
// cross-validation.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "trajgan/corpus.hpp"
#include "trajgan/models.hpp"
#include "trajgan/nn/optim.hpp"
#include "trajgan/sgan_losses.hpp"

namespace trajgan {

enum class GeneratorObjective { non_saturating, feature_matching };

struct TrainConfig {
  ModelId model = ModelId::A;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double label_fraction = 1.0;
  double smoothing_target = 0.9;
  double clip_norm = 5.0;
  nn::AdamConfig adam{};
  std::uint64_t seed = 7;
  int k_folds = 5;
  int validation_fold = 0;
  std::size_t eval_every = 0;  // steps between extra validations; 0 = epoch ends only
  SupervisedLossKind supervised_loss = SupervisedLossKind::conditional;
  GeneratorObjective generator_objective = GeneratorObjective::non_saturating;
  bool trip_level_vote = false;
};

void validate(const TrainConfig& config);

struct LossRecord {
  std::uint64_t step = 0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  double total = 0.0;
  double generator = 0.0;
};

using LossTrace = std::vector<LossRecord>;

struct Metrics {
  int fold = -1;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::array<double, kNumModes> precision{};
  std::array<double, kNumModes> recall{};
  std::array<std::array<std::size_t, kNumModes>, kNumModes> confusion{};  // [true][predicted]
  std::optional<double> trip_accuracy;
};

// Throws DataError when truth is empty.
Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, int fold = -1);

// Training and validation segments for one fold, both z-scored with
// statistics fitted on the training side only.
struct DataSplit {
  int fold = 0;
  std::vector<Segment> train;
  std::vector<Segment> validation;
  NormStats stats;
};

DataSplit make_split(std::span<const Segment> segments, const FoldAssignment& folds, int fold);

// Seeded choice of round(fraction * n_labeled) labeled training segments;
// returned indices are sorted.
std::vector<std::size_t> select_labeled(std::span<const Segment> train, double fraction, std::uint64_t seed);

// Argmax over the real-class logits (a fake logit is ignored).
template <typename T>
std::vector<int> predict(const ModelSpec& spec, nn::Network<T>& net, std::span<const Segment> segments,
                         std::size_t batch_size = 64);

// Segment-level metrics over labeled segments, plus trip-level majority
// vote accuracy when requested.
template <typename T>
Metrics evaluate(const ModelSpec& spec, nn::Network<T>& net, std::span<const Segment> segments, int fold = -1,
                 bool trip_vote = false);

struct TrainHooks {
  std::function<void(std::size_t epoch, double validation_accuracy)> on_epoch;
  // Compare parameter checksums around every discriminator and generator
  // update and throw std::logic_error if the other network changed.
  bool verify_update_partition = false;
};

template <typename T>
struct CnnResult {
  nn::Network<T> classifier;
  LossTrace trace;
  Metrics metrics;
  std::vector<double> epoch_accuracy;
  std::size_t labeled_count = 0;
};

// Minibatch cross-entropy + Adam + clipping. The parameters with the best
// validation accuracy are retained.
template <typename T>
CnnResult<T> train_cnn(const TrainConfig& config, const DataSplit& split, const TrainHooks& hooks = {});

template <typename T>
struct SganResult {
  nn::Network<T> discriminator;
  nn::Network<T> generator;
  LossTrace trace;
  Metrics metrics;
  std::vector<double> epoch_accuracy;
  std::size_t labeled_count = 0;
  bool mode_collapse_warning = false;
  std::size_t partition_checks = 0;
};

// One discriminator step on supervised + unsupervised loss, then one
// generator step, per minibatch of unlabeled data.
template <typename T>
SganResult<T> train_sgan(const TrainConfig& config, const DataSplit& split, const TrainHooks& hooks = {});

struct FoldRun {
  Metrics metrics;
  LossTrace trace;
};

struct CrossValidation {
  FoldAssignment assignment;
  std::vector<FoldRun> folds;
  double mean_accuracy = 0.0;  // support-weighted
  double std_accuracy = 0.0;   // population std of fold accuracies
};

// Support-weighted mean and population std of fold accuracies.
void aggregate(CrossValidation& cv);

template <typename T>
CrossValidation cross_validate(const TrainConfig& config, std::span<const Segment> segments,
                               const TrainHooks& hooks = {});

}  // namespace trajgan
