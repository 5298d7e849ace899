// SPDX-License-Identifier: Apache-2.0
#include "acnet/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "acnet/errors.hpp"

namespace acnet {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    }
    at_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    }
    at_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }

  bool exhausted() const { return at_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (at_ + n > bytes_.size()) throw IoError(what_ + ": truncated file");
  }
  const std::string& bytes_;
  std::string what_;
  std::size_t at_ = 0;
};

constexpr std::uint32_t kMatrixVersion = 1;
constexpr std::uint32_t kF64Tag = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + " (" + ec.message() + ")");
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  out.reserve(20 + m.size() * 8);
  out += "ACNM";
  append_u32(out, kMatrixVersion);
  append_u32(out, kF64Tag);
  append_u32(out, static_cast<std::uint32_t>(m.rows()));
  append_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) append_f64(out, m.data()[i]);
  atomic_write_bytes(path, out);
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  Reader r(bytes, path.string());
  if (r.raw(4) != "ACNM") throw IoError(path.string() + ": not a matrix file");
  if (r.u32() != kMatrixVersion) throw IoError(path.string() + ": unsupported version");
  if (r.u32() != kF64Tag) throw IoError(path.string() + ": unsupported dtype");
  const int rows = static_cast<int>(r.u32());
  const int cols = static_cast<int>(r.u32());
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  if (!r.exhausted()) throw IoError(path.string() + ": trailing bytes");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const GroundingModel& model) {
  nlohmann::json cfg;
  const ModelConfig& c = model.config();
  cfg["n_clips"] = c.n_clips;
  cfg["feature_dim"] = c.feature_dim;
  cfg["sentence_dim"] = c.sentence_dim;
  cfg["hidden_dim"] = c.hidden_dim;
  cfg["heads"] = c.heads;
  cfg["conv_layers"] = c.conv_layers;
  cfg["conv_kernel"] = c.conv_kernel;
  cfg["mlp_depth"] = c.mlp_depth;
  cfg["cga_enabled"] = c.cga_enabled;
  const std::string cfg_text = cfg.dump();

  std::string out;
  out += "ACNC";
  append_u32(out, kCheckpointVersion);
  append_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out += cfg_text;
  append_u32(out, static_cast<std::uint32_t>(model.params().items().size()));
  for (const auto& [name, var] : model.params().items()) {
    append_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Matrix& m = var.value();
    append_u32(out, static_cast<std::uint32_t>(m.rows()));
    append_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) append_f64(out, m.data()[i]);
  }
  atomic_write_bytes(path, out);
}

std::unique_ptr<GroundingModel> load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  Reader r(bytes, path.string());
  if (r.raw(4) != "ACNC") throw IoError(path.string() + ": not a checkpoint");
  if (r.u32() != kCheckpointVersion) throw IoError(path.string() + ": unsupported version");
  const std::uint32_t cfg_len = r.u32();
  nlohmann::json cfg = nlohmann::json::parse(r.raw(cfg_len), nullptr, false);
  if (cfg.is_discarded()) throw IoError(path.string() + ": bad embedded config");

  ModelConfig c;
  c.n_clips = cfg.at("n_clips").get<int>();
  c.feature_dim = cfg.at("feature_dim").get<int>();
  c.sentence_dim = cfg.at("sentence_dim").get<int>();
  c.hidden_dim = cfg.at("hidden_dim").get<int>();
  c.heads = cfg.at("heads").get<int>();
  c.conv_layers = cfg.at("conv_layers").get<int>();
  c.conv_kernel = cfg.at("conv_kernel").get<int>();
  c.mlp_depth = cfg.at("mlp_depth").get<int>();
  c.cga_enabled = cfg.at("cga_enabled").get<bool>();

  auto model = std::make_unique<GroundingModel>(c, 0);
  const std::uint32_t count = r.u32();
  if (count != model->params().items().size()) {
    throw IoError(path.string() + ": parameter count does not match config");
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.raw(name_len);
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    ad::Var* var = model->params().find(name);
    if (var == nullptr) throw IoError(path.string() + ": unknown parameter " + name);
    Matrix& value = var->mutable_value();
    if (value.rows() != rows || value.cols() != cols) {
      throw IoError(path.string() + ": shape mismatch for " + name);
    }
    for (std::size_t i = 0; i < value.size(); ++i) value.data()[i] = r.f64();
  }
  if (!r.exhausted()) throw IoError(path.string() + ": trailing bytes");
  return model;
}

}  // namespace acnet
