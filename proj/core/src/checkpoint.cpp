#include "txncat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "txncat/error.hpp"

namespace txncat {

namespace {

constexpr const char* kMagic = "txncat-checkpoint v1";

std::uint64_t to_little_endian(double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  return bits;
}

double from_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  return std::bit_cast<double>(bits);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t parse_hex64(const std::string& s, const std::string& what) {
  if (s.size() != 16) throw ValidationError("checkpoint: bad " + what + " hash");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw ValidationError("checkpoint: bad " + what + " hash");
  }
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  try {
    return std::stoul(s);
  } catch (const std::exception&) {
    throw ValidationError("checkpoint: bad " + what + " value '" + s + "'");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  const ModelConfig& c = checkpoint.model.config;
  std::ostringstream header;
  header << kMagic << '\n'
         << "embed_dim " << c.embed_dim << '\n'
         << "num_heads " << c.num_heads << '\n'
         << "num_layers " << c.num_layers << '\n'
         << "ffn_hidden " << c.ffn_hidden << '\n'
         << "max_len " << c.max_len << '\n'
         << "vocab_size " << c.vocab_size << '\n'
         << "macro_count " << c.macro_count << '\n'
         << "micro_count " << c.micro_count << '\n'
         << "shared_encoder " << (c.shared_encoder ? 1 : 0) << '\n'
         << "head_activation "
         << (c.head_activation == HeadActivation::kSigmoid ? "sigmoid" : "softmax")
         << '\n'
         << "vocab_hash " << hex64(checkpoint.vocab_hash) << '\n'
         << "taxonomy_hash " << hex64(checkpoint.taxonomy_hash) << '\n';
  checkpoint.model.params.visit([&](const std::string& name, const Matrix& m) {
    header << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  });
  header << "data\n";

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << header.str();
    checkpoint.model.params.visit([&](const std::string&, const Matrix& m) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint64_t bits = to_little_endian(m.at(i));
        out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
      }
    });
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw ValidationError("checkpoint: bad magic line (expected '" +
                          std::string(kMagic) + "')");
  }

  Checkpoint ckpt;
  ModelConfig& c = ckpt.model.config;
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> tensors;
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "tensor") {
      std::string name, rows, cols;
      fields >> name >> rows >> cols;
      tensors.emplace_back(name, std::make_pair(parse_count(rows, "tensor rows"),
                                                parse_count(cols, "tensor cols")));
      continue;
    }
    std::string value;
    fields >> value;
    if (key == "embed_dim") c.embed_dim = parse_count(value, key);
    else if (key == "num_heads") c.num_heads = parse_count(value, key);
    else if (key == "num_layers") c.num_layers = parse_count(value, key);
    else if (key == "ffn_hidden") c.ffn_hidden = parse_count(value, key);
    else if (key == "max_len") c.max_len = parse_count(value, key);
    else if (key == "vocab_size") c.vocab_size = parse_count(value, key);
    else if (key == "macro_count") c.macro_count = parse_count(value, key);
    else if (key == "micro_count") c.micro_count = parse_count(value, key);
    else if (key == "shared_encoder") c.shared_encoder = value == "1";
    else if (key == "head_activation") {
      if (value == "sigmoid") c.head_activation = HeadActivation::kSigmoid;
      else if (value == "softmax") c.head_activation = HeadActivation::kSoftmax;
      else throw ValidationError("checkpoint: unknown head_activation '" + value + "'");
    } else if (key == "vocab_hash") ckpt.vocab_hash = parse_hex64(value, "vocab");
    else if (key == "taxonomy_hash") ckpt.taxonomy_hash = parse_hex64(value, "taxonomy");
    else throw ValidationError("checkpoint: unknown header key '" + key + "'");
  }
  if (line != "data") throw ValidationError("checkpoint: missing data section");
  c.validate();

  // Allocate parameters from the config, then require the tensor manifest to
  // match in name, order and shape before reading any bytes.
  ckpt.model.params = ModelParams::init(c, 0);
  std::size_t idx = 0;
  ckpt.model.params.visit([&](const std::string& name, const Matrix& m) {
    if (idx >= tensors.size()) {
      throw ValidationError("checkpoint: missing tensor '" + name + "'");
    }
    const auto& [got_name, shape] = tensors[idx++];
    if (got_name != name || shape.first != m.rows() || shape.second != m.cols()) {
      throw ValidationError("checkpoint: tensor " + std::to_string(idx - 1) +
                            " is '" + got_name + "' " +
                            std::to_string(shape.first) + "x" +
                            std::to_string(shape.second) + ", expected '" + name +
                            "' " + m.shape_str());
    }
  });
  if (idx != tensors.size()) {
    throw ValidationError("checkpoint: " + std::to_string(tensors.size() - idx) +
                          " unexpected trailing tensors");
  }

  ckpt.model.params.visit([&](const std::string& name, Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::uint64_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
        throw ValidationError("checkpoint: truncated data for tensor '" + name + "'");
      }
      m.at(i) = from_little_endian(bits);
    }
  });
  return ckpt;
}

}  // namespace txncat
