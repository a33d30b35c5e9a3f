#include "txncat/train.hpp"

#include <cmath>

#include "txncat/error.hpp"
#include "txncat/rng.hpp"

namespace txncat {

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kNameOnly: return "name";
    case Scenario::kActivityOnly: return "activity";
    case Scenario::kBoth: return "both";
  }
  throw ConfigError("unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "name") return Scenario::kNameOnly;
  if (name == "activity") return Scenario::kActivityOnly;
  if (name == "both") return Scenario::kBoth;
  throw ConfigError("unknown scenario '" + name + "' (name|activity|both)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train config: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train config: batch_size must be >= 1");
  if (min_freq == 0) throw ConfigError("train config: min_freq must be >= 1");
  if (folds < 2) throw ConfigError("train config: folds must be >= 2");
}

EncodedExample encode_transaction(const Transaction& txn, const Vocabulary& vocab,
                                  std::size_t max_len, Scenario scenario) {
  EncodedExample ex;
  ex.name = scenario == Scenario::kActivityOnly
                ? EncodedSentence::blank(max_len)
                : encode_text(txn.merchant_name, vocab, max_len);
  ex.activity = scenario == Scenario::kNameOnly
                    ? EncodedSentence::blank(max_len)
                    : encode_text(txn.activity, vocab, max_len);
  if (txn.macro_label) ex.macro = *txn.macro_label;
  if (txn.micro_label) ex.micro = *txn.micro_label;
  return ex;
}

std::vector<EncodedExample> encode_dataset(const Dataset& dataset,
                                           const Vocabulary& vocab,
                                           const ModelConfig& config,
                                           Scenario scenario) {
  std::vector<EncodedExample> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Transaction& txn = dataset[i];
    if (!txn.macro_label || !txn.micro_label) {
      throw DataError("row " + std::to_string(i + 1) + ": missing label");
    }
    if (*txn.macro_label >= config.macro_count ||
        *txn.micro_label >= config.micro_count) {
      throw DataError("row " + std::to_string(i + 1) + ": label out of range");
    }
    out.push_back(encode_transaction(txn, vocab, config.max_len, scenario));
  }
  return out;
}

Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq) {
  std::vector<std::string> corpus;
  corpus.reserve(dataset.size() * 2);
  for (const Transaction& txn : dataset) {
    corpus.push_back(txn.merchant_name);
    corpus.push_back(txn.activity);
  }
  return Vocabulary::build(corpus, min_freq);
}

ValueId batch_loss(Tape& tape, std::span<const EncodedExample> batch,
                   const BoundParams& bound, const ModelConfig& config,
                   const Matrix& pe) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  std::vector<ValueId> example_losses;
  example_losses.reserve(batch.size());
  for (const EncodedExample& ex : batch) {
    if (ex.macro >= config.macro_count || ex.micro >= config.micro_count) {
      throw DataError("batch_loss: label out of range");
    }
    const ForwardNodes nodes =
        model_forward(tape, ex.name, ex.activity, bound, config, pe);
    ValueId macro_probs = nodes.macro_scores;
    ValueId micro_probs = nodes.micro_scores;
    if (config.head_activation == HeadActivation::kSigmoid) {
      macro_probs = tape.normalize_rows(macro_probs);
      micro_probs = tape.normalize_rows(micro_probs);
    }
    example_losses.push_back(tape.add(tape.cross_entropy(macro_probs, ex.macro),
                                      tape.cross_entropy(micro_probs, ex.micro)));
  }
  return tape.mean_scalars(example_losses);
}

LossAndGrads compute_loss(std::span<const EncodedExample> batch,
                          const ModelParams& params, const ModelConfig& config) {
  Tape tape;
  const BoundParams bound = BoundParams::bind(tape, params);
  const Matrix pe = positional_encoding(config.max_len, config.embed_dim);
  const ValueId loss = batch_loss(tape, batch, bound, config, pe);
  tape.backward(loss);
  LossAndGrads out;
  out.loss = tape.value(loss)(0, 0);
  out.grads.reserve(bound.flat.size());
  for (const ValueId id : bound.flat) out.grads.push_back(tape.grad(id));
  return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items,
                                                  std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
  if (k > n_items) {
    throw DataError("kfold_split: k " + std::to_string(k) + " exceeds dataset of " +
                    std::to_string(n_items));
  }
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n_items; ++i) folds[i % k].push_back(order[i]);
  return folds;
}

TrainResult train_encoded(std::span<const EncodedExample> examples,
                          const ModelConfig& model_config,
                          const TrainConfig& train_config) {
  model_config.validate();
  train_config.validate();
  if (examples.empty()) throw DataError("train: empty dataset");

  TrainResult result;
  result.params = ModelParams::init(model_config, train_config.seed);
  AdamState optimizer(train_config.adam);
  const Matrix pe = positional_encoding(model_config.max_len, model_config.embed_dim);
  const std::vector<Matrix*> param_ptrs = result.params.flat();
  const Rng base_rng(train_config.seed);

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<EncodedExample> batch;

  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    Rng epoch_rng = base_rng.fork(epoch);
    epoch_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += train_config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + train_config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

      Tape tape;
      const BoundParams bound = BoundParams::bind(tape, result.params);
      const ValueId loss = batch_loss(tape, batch, bound, model_config, pe);
      const double loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch + 1));
      }
      loss_sum += loss_value * static_cast<double>(end - start);
      tape.backward(loss);

      std::vector<const Matrix*> grad_ptrs;
      grad_ptrs.reserve(bound.flat.size());
      for (const ValueId id : bound.flat) grad_ptrs.push_back(&tape.grad(id));
      optimizer.step(param_ptrs, grad_ptrs);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return result;
}

TrainResult train(const Dataset& dataset, const Taxonomy& taxonomy,
                  const Vocabulary& vocab, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
  ModelConfig config = model_config;
  config.vocab_size = vocab.size();
  config.macro_count = taxonomy.macro_count();
  config.micro_count = taxonomy.micro_count();
  const std::vector<EncodedExample> examples =
      encode_dataset(dataset, vocab, config, train_config.scenario);
  return train_encoded(examples, config, train_config);
}

}  // namespace txncat
