#pragma once

// Record-level training, prediction and checkpointing for the
// domain-adversarial phase classifier.

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mbl/dataset.hpp"
#include "mbl/nn/dann.hpp"
#include "mbl/nn/trainer.hpp"

namespace mbl {

using DannModel = nn::DannModel<float>;
using nn::TrainConfig;

struct EpochLog {
  int epoch = 0;
  double loss_d = 0.0;
  double loss_a = 0.0;
  double label_flip_fraction = 0.0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  bool converged = false;

  /// CSV with header epoch,loss_d,loss_a,label_flip_fraction
  std::string to_csv() const;
};

/// Freshly initialized model for chains of n_sites spins.
DannModel make_model(int n_sites, const TrainConfig& cfg);

/// Mini-batch SGD towards the saddle point. Each step pairs a labeled batch
/// with an equally sized unlabeled batch. Stops when the fraction of
/// unlabeled records whose predicted label changed over an epoch drops below
/// cfg.stability_threshold, or after cfg.max_epochs.
TrainingLog train(DannModel& model, std::span<const EigenstateRecord> labeled,
                  std::span<const EigenstateRecord> unlabeled, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Probability that the state belongs to the MBL phase (evaluation mode).
double predict(const DannModel& model, const EigenstateRecord& record);

/// Batched prediction on raw coefficient vectors.
std::vector<double> predict_mbl(const DannModel& model, std::span<const std::vector<float>* const> states);

struct Checkpoint {
  DannModel model;
  TrainConfig config;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const DannModel& model, const TrainConfig& cfg);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mbl
