#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "txncat/adam.hpp"
#include "txncat/dataset.hpp"
#include "txncat/model.hpp"
#include "txncat/taxonomy.hpp"
#include "txncat/vocab.hpp"

namespace txncat {

/// Which descriptors feed the model. Single-input scenarios replace the other
/// descriptor with the empty sentence, leaving every shape unchanged.
enum class Scenario : std::uint8_t { kNameOnly, kActivityOnly, kBoth };

std::string scenario_name(Scenario scenario);
Scenario scenario_from_name(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  AdamConfig adam;
  std::size_t folds = 10;
  Scenario scenario = Scenario::kBoth;
  /// Minimum token frequency for vocabulary construction.
  std::size_t min_freq = 1;

  void validate() const;
};

/// A labeled transaction after tokenization, ready for the model.
struct EncodedExample {
  EncodedSentence name;
  EncodedSentence activity;
  std::size_t macro = 0;
  std::size_t micro = 0;
};

EncodedExample encode_transaction(const Transaction& txn, const Vocabulary& vocab,
                                  std::size_t max_len, Scenario scenario);

/// Encodes a labeled dataset; rows with missing labels or labels outside the
/// configured counts are data errors (row named in the message).
std::vector<EncodedExample> encode_dataset(const Dataset& dataset,
                                           const Vocabulary& vocab,
                                           const ModelConfig& config,
                                           Scenario scenario);

/// Builds the token vocabulary from both descriptors of the dataset.
Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq);

struct LossAndGrads {
  double loss = 0.0;
  /// Aligned with ModelParams::flat().
  std::vector<Matrix> grads;
};

/// Mean over the batch of the two-level loss: cross-entropy of the macro head
/// plus cross-entropy of the micro head. Sigmoid heads are normalized to sum
/// one before the cross-entropy; softmax heads are used as-is.
LossAndGrads compute_loss(std::span<const EncodedExample> batch,
                          const ModelParams& params, const ModelConfig& config);

/// Tape-level batch loss used by both compute_loss and the training loop.
ValueId batch_loss(Tape& tape, std::span<const EncodedExample> batch,
                   const BoundParams& bound, const ModelConfig& config,
                   const Matrix& pe);

/// Deterministic k folds: seeded shuffle then round-robin assignment. Folds
/// are disjoint, cover every index, and differ in size by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items,
                                                  std::size_t k,
                                                  std::uint64_t seed);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;
};

/// Shuffled mini-batch Adam over the dataset. Bit-identical results for a
/// fixed seed.
TrainResult train(const Dataset& dataset, const Taxonomy& taxonomy,
                  const Vocabulary& vocab, const ModelConfig& model_config,
                  const TrainConfig& train_config);

TrainResult train_encoded(std::span<const EncodedExample> examples,
                          const ModelConfig& model_config,
                          const TrainConfig& train_config);

}  // namespace txncat
