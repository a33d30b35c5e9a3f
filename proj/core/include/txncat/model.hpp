#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "txncat/matrix.hpp"
#include "txncat/tape.hpp"
#include "txncat/taxonomy.hpp"
#include "txncat/vocab.hpp"

namespace txncat {

enum class HeadActivation : std::uint8_t { kSigmoid, kSoftmax };

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t num_heads = 4;
  std::size_t num_layers = 2;
  std::size_t ffn_hidden = 128;  // also the fusion hidden width
  std::size_t max_len = 16;
  std::size_t vocab_size = 0;
  std::size_t macro_count = 0;
  std::size_t micro_count = 0;
  /// One encoder stack serving both descriptors (default), or two
  /// independent stacks.
  bool shared_encoder = true;
  HeadActivation head_activation = HeadActivation::kSigmoid;

  void validate() const;
};

struct EncoderLayerParams {
  Matrix attn_wq, attn_wk, attn_wv, attn_wo;        // d x d
  Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;            // d x f, 1 x f, f x d, 1 x d
  Matrix norm1_gamma, norm1_beta, norm2_gamma, norm2_beta;  // 1 x d
};

/// Every learnable weight in the model. visit() enumerates them in a fixed
/// order shared by the optimizer, the gradient map and the checkpoint format.
struct ModelParams {
  Matrix embedding;  // vocab_size x d
  std::vector<EncoderLayerParams> encoder;           // primary stack
  std::vector<EncoderLayerParams> encoder_activity;  // empty when shared
  Matrix fusion_w, fusion_b;                         // 2d x f, 1 x f
  Matrix head_macro_w, head_macro_b;                 // f x j
  Matrix head_micro_w, head_micro_b;                 // f x k

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  void visit(const std::function<void(const std::string&, Matrix&)>& fn);
  void visit(const std::function<void(const std::string&, const Matrix&)>& fn) const;
  std::vector<Matrix*> flat();
  std::vector<const Matrix*> flat() const;
};

/// Head scores for one transaction. Sigmoid heads give independent scores in
/// (0,1); softmax heads give a distribution summing to 1. The corrected
/// vector is the micro head after taxonomy-aware suppression.
struct PredictionPair {
  std::vector<double> macro_scores;
  std::vector<double> micro_scores;
  std::vector<double> micro_scores_corrected;
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

/// Sinusoidal position table: row p holds sin(p / 10000^(2i/d)) and
/// cos(p / 10000^(2i/d)) interleaved. d must be even.
Matrix positional_encoding(std::size_t max_len, std::size_t d);

inline constexpr double kLayerNormEps = 1e-5;

// ---- tape-level building blocks -----------------------------------------
// These operate on values recorded on a Tape so the same code path serves
// training (recording) and inference (non-recording).

/// Parameter leaves bound onto a tape, ordered exactly as ModelParams::flat().
struct BoundParams {
  ValueId embedding;
  std::vector<std::vector<ValueId>> encoder;  // [stack][layer * 12 + slot]
  ValueId fusion_w, fusion_b;
  ValueId head_macro_w, head_macro_b;
  ValueId head_micro_w, head_micro_b;
  std::vector<ValueId> flat;

  static BoundParams bind(Tape& tape, const ModelParams& params);
};

/// softmax(q kT / sqrt(key_dim)) v with padded key positions excluded from
/// the weights (empty mask = all keys valid).
ValueId scaled_dot_attention(Tape& tape, ValueId q, ValueId k, ValueId v,
                             std::vector<std::uint8_t> key_valid = {});

ValueId multi_head_attention(Tape& tape, ValueId x,
                             std::span<const ValueId> layer, std::size_t num_heads,
                             const std::vector<std::uint8_t>& key_valid = {});

ValueId encoder_layer(Tape& tape, ValueId x, std::span<const ValueId> layer,
                      std::size_t num_heads,
                      const std::vector<std::uint8_t>& key_valid = {});

/// Embeds the non-PAD prefix, adds positional rows, runs the encoder stack
/// and mean-pools into a single 1 x d vector. All-PAD input pools to zeros.
ValueId encode_stack(Tape& tape, const EncodedSentence& sentence,
                     const BoundParams& bound, const ModelConfig& config,
                     const Matrix& pe, bool activity_stack);

struct ForwardNodes {
  ValueId pooled_name, pooled_activity;
  ValueId fusion_hidden;
  ValueId macro_scores, micro_scores;
};

/// Full forward pass: encode both descriptors, fuse, score both heads.
ForwardNodes model_forward(Tape& tape, const EncodedSentence& name,
                           const EncodedSentence& activity,
                           const BoundParams& bound, const ModelConfig& config,
                           const Matrix& pe);

// ---- inference wrappers ---------------------------------------------------

PredictionPair model_forward(const Model& model, const EncodedSentence& name,
                             const EncodedSentence& activity);

std::pair<std::size_t, std::size_t> predict_labels(const PredictionPair& scores,
                                                   const Taxonomy& taxonomy,
                                                   bool with_tal = true);

/// (macro, micro) labels with the taxonomy-aware correction applied.
std::pair<std::size_t, std::size_t> predict(const Model& model,
                                            const EncodedSentence& name,
                                            const EncodedSentence& activity,
                                            const Taxonomy& taxonomy,
                                            bool with_tal = true);

}  // namespace txncat
