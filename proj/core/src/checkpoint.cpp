#include "basisgen/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace basisgen {

namespace {

constexpr char kMagic[4] = {'B', 'G', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw TensorError("checkpoint: truncated input");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw TensorError("checkpoint: truncated input");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void Checkpoint::put(const std::string& name, const Tensor& t) {
  for (auto& e : entries_) {
    if (e.first == name) {
      e.second = t;
      return;
    }
  }
  entries_.emplace_back(name, t);
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw TensorError("checkpoint: no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TensorError("checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  for (const auto& [name, t] : entries_) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) {
      write_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    }
    for (std::int64_t i = 0; i < t.size(); ++i) write_f64(out, t[i]);
  }
  if (!out) throw TensorError("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw TensorError("checkpoint: unknown magic in '" + path + "' (expected BGT1)");
  }
  Checkpoint cp;
  while (true) {
    in.peek();
    if (in.eof()) break;
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw TensorError("checkpoint: truncated name");
    const std::uint32_t ndim = read_u32(in);
    Shape shape(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<std::int64_t>(read_u32(in));
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = read_f64(in);
    cp.entries_.emplace_back(std::move(name), std::move(t));
  }
  return cp;
}

}  // namespace basisgen
