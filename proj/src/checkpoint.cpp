#include "cliniseq/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "cliniseq/corpus_io.hpp"
#include "cliniseq/error.hpp"

namespace cliniseq::ckpt {

bool Checkpoint::has(std::string_view name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

const Tensor& Checkpoint::tensor(std::string_view name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CompatibilityError("checkpoint has no tensor '" + std::string(name) + "'");
}

void Checkpoint::add(std::string name, Tensor t) {
  if (has(name)) throw InputError("duplicate tensor name '" + name + "'");
  tensors.emplace_back(std::move(name), std::move(t));
}

std::optional<std::string> Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) return std::nullopt;
  return it->second;
}

const std::string& Checkpoint::require_meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw CompatibilityError("checkpoint metadata lacks '" + key + "'");
  return it->second;
}

double Checkpoint::meta_real(const std::string& key) const {
  try {
    return corpus::parse_real(require_meta(key));
  } catch (const InputError& e) {
    throw CompatibilityError("checkpoint metadata '" + key + "': " + e.what());
  }
}

std::size_t Checkpoint::meta_size(const std::string& key) const {
  const double v = meta_real(key);
  if (v < 0 || v != std::floor(v)) throw CompatibilityError("checkpoint metadata '" + key + "' is not a count");
  return static_cast<std::size_t>(v);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_bytes(std::string& out, std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw InputError("checkpoint field too long");
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

std::uint32_t to_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw InputError("checkpoint dimension too large");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CompatibilityError("checkpoint truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Checkpoint& c) {
  std::string out(kMagic);
  put_u32(out, kFormatVersion);
  std::string meta;
  for (const auto& [k, v] : c.metadata) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw InputError("checkpoint metadata key/value not representable: '" + k + "'");
    meta += k + '=' + v + '\n';
  }
  put_bytes(out, meta);
  put_u32(out, to_u32(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_bytes(out, name);
    put_u32(out, to_u32(t.rank()));
    for (auto d : t.dims()) put_u32(out, to_u32(d));
    for (double v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Checkpoint deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(kMagic.size()) != kMagic) throw CompatibilityError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw CompatibilityError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  std::string_view meta = r.bytes(r.u32());
  while (!meta.empty()) {
    const std::size_t nl = meta.find('\n');
    if (nl == std::string_view::npos) throw CompatibilityError("checkpoint metadata line not terminated");
    const std::string_view line = meta.substr(0, nl);
    meta.remove_prefix(nl + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) throw CompatibilityError("checkpoint metadata line lacks key=");
    c.metadata[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.bytes(r.u32()));
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> dims(rank);
    std::size_t size = 1;
    for (auto& d : dims) {
      d = r.u32();
      size *= d;
    }
    if (size > bytes.size() / 4) throw CompatibilityError("checkpoint tensor '" + name + "' exceeds payload");
    std::vector<double> values(size);
    for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(r.u32()));
    if (c.has(name)) throw CompatibilityError("duplicate tensor '" + name + "' in checkpoint");
    c.tensors.emplace_back(std::move(name), Tensor(std::move(dims), std::move(values)));
  }
  if (!r.done()) throw CompatibilityError("trailing bytes after checkpoint payload");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  corpus::write_file(path, serialize(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize(corpus::read_file(path)); }

Tensor round_to_f32(const Tensor& t) {
  std::vector<double> values(t.values().begin(), t.values().end());
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
  return Tensor(t.dims(), std::move(values));
}

}  // namespace cliniseq::ckpt
