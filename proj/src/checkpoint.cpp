#include "varbg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace varbg::ae {

namespace {

constexpr std::array<char, 4> magic = {'V', 'B', 'A', 'E'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error(path.string() + ": cannot open checkpoint for writing");
  }

  void u32(std::uint32_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error(path_.string() + ": checkpoint write failed");
  }

 private:
  template <typename U>
  void le(U v) {
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(bytes, sizeof(U));
  }

  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error(path.string() + ": cannot open checkpoint");
  }

  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  void raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw std::runtime_error(path_.string() + ": invalid checkpoint (" + reason + ")");
  }

 private:
  template <typename U>
  U le() {
    unsigned char bytes[sizeof(U)];
    in_.read(reinterpret_cast<char*>(bytes), sizeof(U));
    if (!in_) fail("truncated file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
    return v;
  }

  std::ifstream in_;
  std::filesystem::path path_;
};

void write_shape(Writer& w, const TensorShape& s) {
  w.u32(static_cast<std::uint32_t>(s.channels));
  w.u32(static_cast<std::uint32_t>(s.height));
  w.u32(static_cast<std::uint32_t>(s.width));
}

TensorShape read_shape(Reader& r) {
  TensorShape s;
  s.channels = static_cast<int>(r.u32());
  s.height = static_cast<int>(r.u32());
  s.width = static_cast<int>(r.u32());
  return s;
}

template <typename Scalar>
void write_layers(Writer& w, const NetworkSpec& spec, const std::vector<LayerParams<Scalar>>& layers) {
  for (std::size_t l = 0; l < spec.size(); ++l) {
    if (!spec[l].has_params()) continue;
    const auto& p = layers[l];
    w.u32(static_cast<std::uint32_t>(p.weight.rows()));
    w.u32(static_cast<std::uint32_t>(p.weight.cols()));
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) w.f32(static_cast<float>(p.weight.data()[i]));
    w.u32(static_cast<std::uint32_t>(p.bias.size()));
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) w.f32(static_cast<float>(p.bias[i]));
  }
}

template <typename Scalar>
void read_layers(Reader& r, const NetworkSpec& spec, std::vector<LayerParams<Scalar>>& layers) {
  for (std::size_t l = 0; l < spec.size(); ++l) {
    if (!spec[l].has_params()) continue;
    auto& p = layers[l];
    const auto rows = r.u32(), cols = r.u32();
    if (rows != p.weight.rows() || cols != p.weight.cols()) r.fail("weight shape mismatch at layer " + std::to_string(l));
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = static_cast<Scalar>(r.f32());
    if (r.u32() != p.bias.size()) r.fail("bias shape mismatch at layer " + std::to_string(l));
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = static_cast<Scalar>(r.f32());
  }
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const NetworkParams<Scalar>& params) {
  Writer w(path);
  w.raw(magic.data(), magic.size());
  w.u32(checkpoint_version);
  w.u32(static_cast<std::uint32_t>(params.spec.size()));
  for (const auto& s : params.spec) {
    w.u32(static_cast<std::uint32_t>(s.kind));
    write_shape(w, s.in);
    write_shape(w, s.out);
    w.u32(static_cast<std::uint32_t>(s.kernel));
    w.u32(static_cast<std::uint32_t>(s.stride));
    w.u32(static_cast<std::uint32_t>(s.padding));
    w.u32(static_cast<std::uint32_t>(s.output_padding));
  }
  w.i64(params.step);
  write_layers(w, params.spec, params.layers);
  write_layers(w, params.spec, params.first_moment);
  write_layers(w, params.spec, params.second_moment);
  w.finish();
}

template <typename Scalar>
NetworkParams<Scalar> load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 4> head{};
  r.raw(head.data(), head.size());
  if (head != magic) r.fail("bad magic");
  if (const auto version = r.u32(); version != checkpoint_version) r.fail("unsupported version " + std::to_string(version));
  const auto count = r.u32();
  if (count == 0 || count > 4096) r.fail("bad layer count");
  NetworkSpec spec;
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerSpec s{};
    const auto kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayerKind::reshape)) r.fail("bad layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.in = read_shape(r);
    s.out = read_shape(r);
    s.kernel = static_cast<int>(r.u32());
    s.stride = static_cast<int>(r.u32());
    s.padding = static_cast<int>(r.u32());
    s.output_padding = static_cast<int>(r.u32());
    spec.push_back(s);
  }
  // Allocates tensors of the right shapes; contents are overwritten below.
  NetworkParams<Scalar> params = xavier_init<Scalar>(std::move(spec), 0);
  params.step = r.i64();
  if (params.step < 0) r.fail("negative step counter");
  read_layers(r, params.spec, params.layers);
  read_layers(r, params.spec, params.first_moment);
  read_layers(r, params.spec, params.second_moment);
  return params;
}

template void save_checkpoint<float>(const std::filesystem::path&, const NetworkParams<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const NetworkParams<double>&);
template NetworkParams<float> load_checkpoint<float>(const std::filesystem::path&);
template NetworkParams<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace varbg::ae
