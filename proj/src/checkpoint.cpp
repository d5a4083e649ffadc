#include "decom/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace decom {

namespace {

constexpr const char* kHeader = "DECOM-CKPT v1";

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void Checkpoint::add(const std::string& name, std::vector<Tensor> tensors) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("checkpoint: duplicate entry '" + name + "'");
  }
  entries.emplace_back(name, std::move(tensors));
}

const std::vector<Tensor>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, ts] : entries)
    if (n == name) return &ts;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os << kHeader << "\n";
  write_u32(os, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, tensors] : ckpt.entries) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor& t : tensors) {
      t.check_invariant();
      write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
      for (int d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
      for (double d : t.data) write_f64(os, d);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string header;
  std::getline(is, header);
  if (header != kHeader) {
    throw std::runtime_error("checkpoint: bad header in '" + path + "' (got '" + header + "')");
  }
  Checkpoint ckpt;
  const std::uint32_t n_entries = read_u32(is);
  for (std::uint32_t e = 0; e < n_entries; ++e) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated name");
    const std::uint32_t n_tensors = read_u32(is);
    std::vector<Tensor> tensors;
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
      const std::uint32_t ndim = read_u32(is);
      Tensor tensor;
      std::int64_t numel = 1;
      for (std::uint32_t d = 0; d < ndim; ++d) {
        const std::uint32_t dim = read_u32(is);
        if (dim == 0) throw std::runtime_error("checkpoint: zero dimension");
        tensor.shape.push_back(static_cast<int>(dim));
        numel *= dim;
      }
      tensor.data.resize(static_cast<std::size_t>(numel));
      for (auto& d : tensor.data) d = read_f64(is);
      tensors.push_back(std::move(tensor));
    }
    ckpt.entries.emplace_back(std::move(name), std::move(tensors));
  }
  return ckpt;
}

}  // namespace decom
