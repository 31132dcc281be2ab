#include "hyperpp/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace hyperpp {

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xff));
    u = static_cast<U>(u >> 8);
  }
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, std::string_view s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

  std::string str() {
    const auto n = le<std::uint32_t>();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }

  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

const Vector* Checkpoint::find_aux(std::string_view name) const noexcept {
  for (const auto& [n, v] : aux) {
    if (n == name) return &v;
  }
  return nullptr;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic);
  put_le(out, kCheckpointVersion);
  put_le(out, ckpt.config_hash);
  const auto& layout = ckpt.params.layout();
  put_le(out, static_cast<std::uint32_t>(layout.size()));
  for (const auto& s : layout) {
    put_str(out, s.name);
    put_le(out, static_cast<std::int64_t>(s.offset));
    put_le(out, static_cast<std::int64_t>(s.rows));
    put_le(out, static_cast<std::int64_t>(s.cols));
  }
  put_le(out, static_cast<std::uint64_t>(ckpt.params.values.size()));
  for (Eigen::Index i = 0; i < ckpt.params.values.size(); ++i) put_f64(out, ckpt.params.values[i]);
  put_le(out, static_cast<std::uint32_t>(ckpt.aux.size()));
  for (const auto& [name, v] : ckpt.aux) {
    put_str(out, name);
    put_le(out, static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader rd(bytes);
  if (rd.raw(kCheckpointMagic.size()) != kCheckpointMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = rd.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_hash = rd.le<std::uint64_t>();
  const auto slices = rd.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < slices; ++i) {
    std::string name = rd.str();
    const auto offset = rd.le<std::int64_t>();
    const auto rows = rd.le<std::int64_t>();
    const auto cols = rd.le<std::int64_t>();
    if (offset != ck.params.size()) throw CheckpointError("layout table is not contiguous at '" + name + "'");
    try {
      ck.params.add(std::move(name), rows, cols);
    } catch (const ContractError& e) {
      throw CheckpointError(std::string("bad layout table: ") + e.what());
    }
  }
  const auto n = rd.le<std::uint64_t>();
  if (n != static_cast<std::uint64_t>(ck.params.size())) throw CheckpointError("value count does not match layout");
  for (Eigen::Index i = 0; i < ck.params.size(); ++i) ck.params.values[i] = rd.f64();
  const auto naux = rd.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < naux; ++i) {
    std::string name = rd.str();
    const auto len = rd.le<std::uint64_t>();
    if (len > bytes.size() / 8) throw CheckpointError("aux vector '" + name + "' longer than the file");
    Vector v(static_cast<Eigen::Index>(len));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rd.f64();
    ck.aux.emplace_back(std::move(name), std::move(v));
  }
  if (!rd.done()) throw CheckpointError("trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path);
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace hyperpp
