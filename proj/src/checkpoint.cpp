#include "mgnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace mgnet::tk {

namespace {

constexpr char kMagic[] = "MGNETCKPT";
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ofstream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw ParseError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw ParseError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::ifstream& in) {
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     std::span<const Parameter> params) {
  std::unordered_set<std::string> names;
  for (const Parameter& p : params)
    if (!names.insert(p.name).second)
      throw ContractError("duplicate parameter name '" + p.name + "'");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape& shape = p.tensor.shape();
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::int64_t d : shape) put_u64(out, static_cast<std::uint64_t>(d));
    for (double v : p.tensor.data()) put_f64(out, v);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Parameter> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic) - 1];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ParseError("not a checkpoint file: " + path.string());
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t count = get_u32(in);
  std::vector<Parameter> params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw ParseError("truncated checkpoint");
    const std::uint32_t ndim = get_u32(in);
    Shape shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape[d] = static_cast<std::int64_t>(get_u64(in));
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
    for (double& v : data) v = get_f64(in);
    params.push_back(
        {std::move(name), Tensor::from_data(std::move(shape), std::move(data), true)});
  }
  return params;
}

void load_checkpoint_into(const std::filesystem::path& path,
                          std::span<Parameter> params) {
  auto loaded = load_checkpoint(path);
  if (loaded.size() != params.size())
    throw ContractError("checkpoint has " + std::to_string(loaded.size()) +
                        " parameters, model expects " +
                        std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (loaded[i].name != params[i].name)
      throw ContractError("checkpoint parameter '" + loaded[i].name +
                          "' does not match model parameter '" +
                          params[i].name + "'");
    if (loaded[i].tensor.shape() != params[i].tensor.shape())
      throw ContractError("shape mismatch for parameter '" + loaded[i].name + "'");
    std::copy(loaded[i].tensor.data().begin(), loaded[i].tensor.data().end(),
              params[i].tensor.mutable_data().begin());
  }
}

}  // namespace mgnet::tk
