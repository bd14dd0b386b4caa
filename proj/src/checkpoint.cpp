#include "dppo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dppo {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'P', 'P', 'O'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxSaneDim = 1u << 24;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : stream_(path, std::ios::binary | std::ios::trunc) {
    if (!stream_) throw FormatError("checkpoint: cannot open '" + path.string() +
                                    "' for writing");
  }

  void bytes(const void* data, std::size_t n) {
    stream_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void doubles(const Vector& v) {
    bytes(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  void check() {
    if (!stream_) throw FormatError("checkpoint: write failed");
  }

 private:
  std::ofstream stream_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : stream_(path, std::ios::binary), path_(path.string()) {
    if (!stream_)
      throw FormatError("checkpoint: cannot open '" + path_ + "' for reading");
  }

  void bytes(void* data, std::size_t n) {
    stream_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(stream_.gcount()) != n)
      throw FormatError("checkpoint: truncated file '" + path_ + "' at offset " +
                        std::to_string(offset_));
    offset_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v = 0;
    bytes(&v, sizeof v);
    return v;
  }
  Vector doubles(std::uint64_t count) {
    Vector v(static_cast<Eigen::Index>(count));
    bytes(v.data(), count * sizeof(double));
    return v;
  }
  bool at_eof() {
    stream_.peek();
    return stream_.eof();
  }
  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::ifstream stream_;
  std::string path_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const ParameterVector& params, const AdamState* adam,
                     const std::filesystem::path& path) {
  const auto& arch = params.architecture();
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(arch.input_dim));
  w.u32(static_cast<std::uint32_t>(arch.trunk_widths.size()));
  for (const int width : arch.trunk_widths) w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(arch.action_count));
  w.u32(static_cast<std::uint32_t>(arch.activation));
  w.u64(static_cast<std::uint64_t>(params.values().size()));
  w.doubles(params.values());

  w.u32(adam != nullptr ? 1 : 0);
  if (adam != nullptr) {
    if (adam->first_moment.size() != params.values().size())
      throw InputError("checkpoint: optimizer state length mismatch");
    w.u64(static_cast<std::uint64_t>(adam->step_count));
    w.f64(adam->beta1);
    w.f64(adam->beta2);
    w.f64(adam->epsilon);
    w.u64(static_cast<std::uint64_t>(adam->first_moment.size()));
    w.doubles(adam->first_moment);
    w.u64(static_cast<std::uint64_t>(adam->second_moment.size()));
    w.doubles(adam->second_moment);
  }
  w.check();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);

  char magic[4] = {};
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("checkpoint: bad magic bytes at offset 0 in '" + r.path() + "'");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) +
                      " at offset 4 (expected " + std::to_string(kVersion) + ")");

  NetworkArchitecture arch;
  arch.input_dim = static_cast<int>(r.u32());
  const std::uint32_t trunk_count = r.u32();
  if (trunk_count > 64)
    throw FormatError("checkpoint: implausible trunk layer count at offset " +
                      std::to_string(r.offset() - 4));
  for (std::uint32_t i = 0; i < trunk_count; ++i) {
    const std::uint32_t width = r.u32();
    if (width == 0 || width > kMaxSaneDim)
      throw FormatError("checkpoint: implausible layer width at offset " +
                        std::to_string(r.offset() - 4));
    arch.trunk_widths.push_back(static_cast<int>(width));
  }
  arch.action_count = static_cast<int>(r.u32());
  const std::uint32_t activation_code = r.u32();
  if (activation_code > 1)
    throw FormatError("checkpoint: unknown activation code at offset " +
                      std::to_string(r.offset() - 4));
  arch.activation = static_cast<Activation>(activation_code);
  arch.validate();

  const std::uint64_t count = r.u64();
  if (count != static_cast<std::uint64_t>(arch.parameter_count()))
    throw FormatError("checkpoint: parameter count " + std::to_string(count) +
                      " does not match architecture " + arch.describe() +
                      " (expects " + std::to_string(arch.parameter_count()) + ")");
  Vector values = r.doubles(count);

  Checkpoint ckpt{ParameterVector(arch, std::move(values)), std::nullopt};

  const std::uint32_t has_adam = r.u32();
  if (has_adam > 1)
    throw FormatError("checkpoint: bad optimizer-state flag at offset " +
                      std::to_string(r.offset() - 4));
  if (has_adam == 1) {
    AdamState adam;
    adam.step_count = static_cast<std::int64_t>(r.u64());
    adam.beta1 = r.f64();
    adam.beta2 = r.f64();
    adam.epsilon = r.f64();
    const std::uint64_t m_count = r.u64();
    if (m_count != count)
      throw FormatError("checkpoint: first-moment count mismatch at offset " +
                        std::to_string(r.offset() - 8));
    adam.first_moment = r.doubles(m_count);
    const std::uint64_t v_count = r.u64();
    if (v_count != count)
      throw FormatError("checkpoint: second-moment count mismatch at offset " +
                        std::to_string(r.offset() - 8));
    adam.second_moment = r.doubles(v_count);
    ckpt.adam = std::move(adam);
  }

  if (!r.at_eof())
    throw FormatError("checkpoint: trailing data at offset " +
                      std::to_string(r.offset()) + " in '" + r.path() + "'");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const NetworkArchitecture& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.params.architecture() == expected))
    throw FormatError("checkpoint: architecture mismatch; file holds " +
                      ckpt.params.architecture().describe() + ", expected " +
                      expected.describe());
  return ckpt;
}

}  // namespace dppo
