#include "vsal/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vsal/error.hpp"

namespace vsal::nn {

namespace {

constexpr char kMagic[8] = {'V', 'S', 'A', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& where) : data_(data), where_(where) {}

  std::uint64_t uint(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += bytes;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("truncated checkpoint " + where_);
  }
  const std::string& data_;
  std::string where_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, const Mat*>> all_params(const Models& m) {
  std::vector<std::pair<std::string, const Mat*>> out;
  for (const ParamSet* p : {&m.gen.params, &m.dis.params, &m.cls.params})
    for (std::size_t k = 0; k < p->size(); ++k) out.emplace_back(p->names[k], &p->values[k]);
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& cfg, const Models& m) {
  const std::string text = cfg.canonical();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u64(out, fnv1a(text));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  const auto params = all_params(m);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, mat] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(mat->rows()));
    put_u32(out, static_cast<std::uint32_t>(mat->cols()));
    for (Eigen::Index k = 0; k < mat->size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(mat->data()[k]));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();
  Reader r(data, path.string());
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw IoError("not a checkpoint: " + path.string());
  }
  const auto version = r.uint(4);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t digest = r.uint(8);
  const std::string text = r.bytes(r.uint(4));
  if (fnv1a(text) != digest) throw IoError("config digest mismatch in " + path.string());

  Checkpoint ck;
  ck.config = parse_run_config(text);
  ck.models = Models::init(ck.config.gen, ck.config.dis, ck.config.cls, 0);
  std::vector<std::pair<std::string, Mat*>> slots;
  for (ParamSet* p : {&ck.models.gen.params, &ck.models.dis.params, &ck.models.cls.params})
    for (std::size_t k = 0; k < p->size(); ++k) slots.emplace_back(p->names[k], &p->values[k]);

  const auto count = r.uint(4);
  if (count != slots.size()) throw IoError("parameter count mismatch in " + path.string());
  for (auto& [name, mat] : slots) {
    const std::string stored = r.bytes(r.uint(4));
    if (stored != name) throw IoError("expected parameter " + name + ", found " + stored);
    const auto rows = r.uint(4), cols = r.uint(4);
    if (static_cast<Eigen::Index>(rows) != mat->rows() || static_cast<Eigen::Index>(cols) != mat->cols()) {
      throw IoError("shape mismatch for parameter " + name);
    }
    for (Eigen::Index k = 0; k < mat->size(); ++k) mat->data()[k] = std::bit_cast<double>(r.uint(8));
  }
  if (!r.done()) throw IoError("trailing bytes in checkpoint " + path.string());
  return ck;
}

}  // namespace vsal::nn
