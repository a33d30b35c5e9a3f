#include "txncat/model.hpp"

#include <cmath>

#include "txncat/error.hpp"
#include "txncat/rng.hpp"

namespace txncat {

void ModelConfig::validate() const {
  if (embed_dim == 0 || num_heads == 0 || num_layers == 0 || ffn_hidden == 0 ||
      max_len == 0 || vocab_size == 0 || macro_count == 0 || micro_count == 0) {
    throw ConfigError("model config: all dimensions and counts must be >= 1");
  }
  if (embed_dim % 2 != 0) {
    throw ConfigError("model config: embed_dim must be even for the sinusoidal "
                      "position table");
  }
  if (embed_dim % num_heads != 0) {
    throw ConfigError("model config: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  }
}

Matrix positional_encoding(std::size_t max_len, std::size_t d) {
  if (d % 2 != 0) {
    throw ConfigError("positional_encoding: dimension " + std::to_string(d) +
                      " must be even");
  }
  Matrix pe(max_len, d);
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

namespace {

Matrix init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  // fan_in is the input dimension in the x.W orientation used everywhere.
  const double bound = std::sqrt(1.0 / static_cast<double>(rows));
  Matrix w(rows, cols);
  for (std::size_t i = 0; i < w.size(); ++i) w.at(i) = rng.uniform(-bound, bound);
  return w;
}

Matrix ones_row(std::size_t n) {
  Matrix m(1, n);
  m.fill(1.0);
  return m;
}

EncoderLayerParams init_layer(const ModelConfig& c, Rng& rng) {
  EncoderLayerParams layer;
  layer.attn_wq = init_weight(c.embed_dim, c.embed_dim, rng);
  layer.attn_wk = init_weight(c.embed_dim, c.embed_dim, rng);
  layer.attn_wv = init_weight(c.embed_dim, c.embed_dim, rng);
  layer.attn_wo = init_weight(c.embed_dim, c.embed_dim, rng);
  layer.ffn_w1 = init_weight(c.embed_dim, c.ffn_hidden, rng);
  layer.ffn_b1 = Matrix(1, c.ffn_hidden);
  layer.ffn_w2 = init_weight(c.ffn_hidden, c.embed_dim, rng);
  layer.ffn_b2 = Matrix(1, c.embed_dim);
  layer.norm1_gamma = ones_row(c.embed_dim);
  layer.norm1_beta = Matrix(1, c.embed_dim);
  layer.norm2_gamma = ones_row(c.embed_dim);
  layer.norm2_beta = Matrix(1, c.embed_dim);
  return layer;
}

template <typename Self, typename Fn>
void visit_params(Self& self, const Fn& fn) {
  fn("embedding", self.embedding);
  const auto visit_stack = [&](auto& stack, const std::string& prefix) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      const std::string base = prefix + "." + std::to_string(l) + ".";
      fn(base + "attn_wq", stack[l].attn_wq);
      fn(base + "attn_wk", stack[l].attn_wk);
      fn(base + "attn_wv", stack[l].attn_wv);
      fn(base + "attn_wo", stack[l].attn_wo);
      fn(base + "ffn_w1", stack[l].ffn_w1);
      fn(base + "ffn_b1", stack[l].ffn_b1);
      fn(base + "ffn_w2", stack[l].ffn_w2);
      fn(base + "ffn_b2", stack[l].ffn_b2);
      fn(base + "norm1_gamma", stack[l].norm1_gamma);
      fn(base + "norm1_beta", stack[l].norm1_beta);
      fn(base + "norm2_gamma", stack[l].norm2_gamma);
      fn(base + "norm2_beta", stack[l].norm2_beta);
    }
  };
  visit_stack(self.encoder, "encoder");
  visit_stack(self.encoder_activity, "encoder_activity");
  fn("fusion_w", self.fusion_w);
  fn("fusion_b", self.fusion_b);
  fn("head_macro_w", self.head_macro_w);
  fn("head_macro_b", self.head_macro_b);
  fn("head_micro_w", self.head_micro_w);
  fn("head_micro_b", self.head_micro_b);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams p;
  // The embedding bound follows the embedding width, not the vocab size.
  {
    const double bound = std::sqrt(1.0 / static_cast<double>(config.embed_dim));
    p.embedding = Matrix(config.vocab_size, config.embed_dim);
    for (std::size_t i = 0; i < p.embedding.size(); ++i)
      p.embedding.at(i) = rng.uniform(-bound, bound);
  }
  for (std::size_t l = 0; l < config.num_layers; ++l)
    p.encoder.push_back(init_layer(config, rng));
  if (!config.shared_encoder) {
    for (std::size_t l = 0; l < config.num_layers; ++l)
      p.encoder_activity.push_back(init_layer(config, rng));
  }
  p.fusion_w = init_weight(2 * config.embed_dim, config.ffn_hidden, rng);
  p.fusion_b = Matrix(1, config.ffn_hidden);
  p.head_macro_w = init_weight(config.ffn_hidden, config.macro_count, rng);
  p.head_macro_b = Matrix(1, config.macro_count);
  p.head_micro_w = init_weight(config.ffn_hidden, config.micro_count, rng);
  p.head_micro_b = Matrix(1, config.micro_count);
  return p;
}

void ModelParams::visit(const std::function<void(const std::string&, Matrix&)>& fn) {
  visit_params(*this, fn);
}

void ModelParams::visit(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  visit_params(*this, fn);
}

std::vector<Matrix*> ModelParams::flat() {
  std::vector<Matrix*> out;
  visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> ModelParams::flat() const {
  std::vector<const Matrix*> out;
  visit([&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

BoundParams BoundParams::bind(Tape& tape, const ModelParams& params) {
  BoundParams bound;
  params.visit([&](const std::string&, const Matrix& m) {
    bound.flat.push_back(tape.param(m));
  });
  std::size_t next = 0;
  bound.embedding = bound.flat[next++];
  bound.encoder.emplace_back();
  for (std::size_t i = 0; i < params.encoder.size() * 12; ++i)
    bound.encoder[0].push_back(bound.flat[next++]);
  if (!params.encoder_activity.empty()) {
    bound.encoder.emplace_back();
    for (std::size_t i = 0; i < params.encoder_activity.size() * 12; ++i)
      bound.encoder[1].push_back(bound.flat[next++]);
  }
  bound.fusion_w = bound.flat[next++];
  bound.fusion_b = bound.flat[next++];
  bound.head_macro_w = bound.flat[next++];
  bound.head_macro_b = bound.flat[next++];
  bound.head_micro_w = bound.flat[next++];
  bound.head_micro_b = bound.flat[next++];
  return bound;
}

ValueId scaled_dot_attention(Tape& tape, ValueId q, ValueId k, ValueId v,
                             std::vector<std::uint8_t> key_valid) {
  const std::size_t key_dim = tape.value(q).cols();
  if (tape.value(k).cols() != key_dim) {
    throw ShapeError("attention: query/key dims disagree (" +
                     tape.value(q).shape_str() + " vs " +
                     tape.value(k).shape_str() + ")");
  }
  if (tape.value(k).rows() != tape.value(v).rows()) {
    throw ShapeError("attention: key/value row counts disagree (" +
                     tape.value(k).shape_str() + " vs " +
                     tape.value(v).shape_str() + ")");
  }
  if (!key_valid.empty() && key_valid.size() != tape.value(k).rows()) {
    throw ShapeError("attention: mask length " + std::to_string(key_valid.size()) +
                     " does not match keys " + tape.value(k).shape_str());
  }
  const ValueId scores =
      tape.scale(tape.matmul(q, tape.transpose(k)),
                 1.0 / std::sqrt(static_cast<double>(key_dim)));
  const ValueId weights = tape.softmax_rows(scores, std::move(key_valid));
  return tape.matmul(weights, v);
}

namespace {

// Slot order inside a bound layer, matching the visit order.
enum LayerSlot {
  kWq = 0, kWk, kWv, kWo, kFfnW1, kFfnB1, kFfnW2, kFfnB2,
  kNorm1Gamma, kNorm1Beta, kNorm2Gamma, kNorm2Beta,
};

}  // namespace

ValueId multi_head_attention(Tape& tape, ValueId x, std::span<const ValueId> layer,
                             std::size_t num_heads,
                             const std::vector<std::uint8_t>& key_valid) {
  const std::size_t d = tape.value(x).cols();
  if (d % num_heads != 0) {
    throw ShapeError("multi_head_attention: width " + std::to_string(d) +
                     " not divisible by " + std::to_string(num_heads) + " heads");
  }
  const std::size_t head_dim = d / num_heads;
  const ValueId q = tape.matmul(x, layer[kWq]);
  const ValueId k = tape.matmul(x, layer[kWk]);
  const ValueId v = tape.matmul(x, layer[kWv]);
  std::vector<ValueId> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t off = h * head_dim;
    heads.push_back(scaled_dot_attention(tape, tape.slice_cols(q, off, head_dim),
                                         tape.slice_cols(k, off, head_dim),
                                         tape.slice_cols(v, off, head_dim),
                                         key_valid));
  }
  return tape.matmul(tape.concat_cols(heads), layer[kWo]);
}

ValueId encoder_layer(Tape& tape, ValueId x, std::span<const ValueId> layer,
                      std::size_t num_heads,
                      const std::vector<std::uint8_t>& key_valid) {
  const ValueId attn = multi_head_attention(tape, x, layer, num_heads, key_valid);
  const ValueId x1 = tape.layer_norm(tape.add(x, attn), layer[kNorm1Gamma],
                                     layer[kNorm1Beta], kLayerNormEps);
  const ValueId hidden = tape.relu(
      tape.add_row_broadcast(tape.matmul(x1, layer[kFfnW1]), layer[kFfnB1]));
  const ValueId ffn =
      tape.add_row_broadcast(tape.matmul(hidden, layer[kFfnW2]), layer[kFfnB2]);
  return tape.layer_norm(tape.add(x1, ffn), layer[kNorm2Gamma],
                         layer[kNorm2Beta], kLayerNormEps);
}

ValueId encode_stack(Tape& tape, const EncodedSentence& sentence,
                     const BoundParams& bound, const ModelConfig& config,
                     const Matrix& pe, bool activity_stack) {
  if (sentence.empty()) {
    return tape.constant(Matrix(1, config.embed_dim));
  }
  if (sentence.true_length > pe.rows()) {
    throw ShapeError("encode_stack: sentence length " +
                     std::to_string(sentence.true_length) +
                     " exceeds position table " + pe.shape_str());
  }
  // Only the non-PAD prefix is processed. PAD keys are invisible to real
  // tokens and PAD outputs are never pooled, so this matches the masked
  // full-length computation exactly.
  const std::size_t len = sentence.true_length;
  std::vector<std::uint32_t> ids(sentence.ids.begin(), sentence.ids.begin() + len);
  Matrix positions(len, config.embed_dim);
  for (std::size_t p = 0; p < len; ++p)
    for (std::size_t j = 0; j < config.embed_dim; ++j) positions(p, j) = pe(p, j);

  ValueId x = tape.add(tape.embedding_rows(bound.embedding, std::move(ids)),
                       tape.constant(std::move(positions)));
  const std::size_t stack =
      (activity_stack && bound.encoder.size() > 1) ? 1 : 0;
  const std::size_t layers = bound.encoder[stack].size() / 12;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::span<const ValueId> layer{bound.encoder[stack].data() + l * 12, 12};
    x = encoder_layer(tape, x, layer, config.num_heads);
  }
  return tape.mean_rows(x);
}

ForwardNodes model_forward(Tape& tape, const EncodedSentence& name,
                           const EncodedSentence& activity,
                           const BoundParams& bound, const ModelConfig& config,
                           const Matrix& pe) {
  ForwardNodes nodes;
  nodes.pooled_name = encode_stack(tape, name, bound, config, pe, false);
  nodes.pooled_activity = encode_stack(tape, activity, bound, config, pe, true);
  const std::vector<ValueId> pooled{nodes.pooled_name, nodes.pooled_activity};
  const ValueId fused = tape.concat_cols(pooled);
  nodes.fusion_hidden = tape.relu(
      tape.add_row_broadcast(tape.matmul(fused, bound.fusion_w), bound.fusion_b));
  const ValueId macro_pre = tape.add_row_broadcast(
      tape.matmul(nodes.fusion_hidden, bound.head_macro_w), bound.head_macro_b);
  const ValueId micro_pre = tape.add_row_broadcast(
      tape.matmul(nodes.fusion_hidden, bound.head_micro_w), bound.head_micro_b);
  if (config.head_activation == HeadActivation::kSigmoid) {
    nodes.macro_scores = tape.sigmoid(macro_pre);
    nodes.micro_scores = tape.sigmoid(micro_pre);
  } else {
    nodes.macro_scores = tape.softmax_rows(macro_pre);
    nodes.micro_scores = tape.softmax_rows(micro_pre);
  }
  return nodes;
}

PredictionPair model_forward(const Model& model, const EncodedSentence& name,
                             const EncodedSentence& activity) {
  Tape tape(false);
  const BoundParams bound = BoundParams::bind(tape, model.params);
  const Matrix pe = positional_encoding(model.config.max_len, model.config.embed_dim);
  const ForwardNodes nodes =
      model_forward(tape, name, activity, bound, model.config, pe);
  PredictionPair pair;
  const Matrix& a = tape.value(nodes.macro_scores);
  const Matrix& b = tape.value(nodes.micro_scores);
  pair.macro_scores.assign(a.data(), a.data() + a.size());
  pair.micro_scores.assign(b.data(), b.data() + b.size());
  return pair;
}

std::pair<std::size_t, std::size_t> predict_labels(const PredictionPair& scores,
                                                   const Taxonomy& taxonomy,
                                                   bool with_tal) {
  const std::size_t macro = argmax(scores.macro_scores);
  if (!with_tal) return {macro, argmax(scores.micro_scores)};
  const std::vector<double> corrected =
      taxonomy_attention(scores.macro_scores, scores.micro_scores, taxonomy);
  return {macro, constrained_micro_argmax(corrected, taxonomy, macro)};
}

std::pair<std::size_t, std::size_t> predict(const Model& model,
                                            const EncodedSentence& name,
                                            const EncodedSentence& activity,
                                            const Taxonomy& taxonomy,
                                            bool with_tal) {
  return predict_labels(model_forward(model, name, activity), taxonomy, with_tal);
}

}  // namespace txncat
