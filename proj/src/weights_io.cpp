#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mca/errors.hpp"
#include "mca/policy.hpp"
#include "mca/util.hpp"

namespace mca {

static_assert(std::endian::native == std::endian::little, "weight files are written in host byte order");

namespace {

constexpr char kMagic[4] = {'M', 'C', 'A', 'W'};
constexpr std::uint16_t kVersionMajor = 1;
constexpr std::uint16_t kVersionMinor = 0;
constexpr std::uint16_t kVersionPatch = 0;

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_vec(const VecX& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(v(i));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > end_) throw CorruptFile("weight file truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  VecX get_vec(std::uint32_t n) {
    VecX v(n);
    for (std::uint32_t i = 0; i < n; ++i) v(i) = get<double>();
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

Activation activation_from(std::uint8_t tag) {
  if (tag > 1) throw CorruptFile("unknown activation tag " + std::to_string(tag));
  return static_cast<Activation>(tag);
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const MlpNetwork& net, const NormalizationSpec& spec) {
  spec.validate();
  Writer w;
  for (char c : kMagic) w.put<char>(c);
  w.put<std::uint16_t>(kVersionMajor);
  w.put<std::uint16_t>(kVersionMinor);
  w.put<std::uint16_t>(kVersionPatch);
  w.put<std::uint32_t>(spec.layout_version);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.hidden));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.output));
  w.put<std::uint8_t>(net.log_std.size() > 0 ? 1 : 0);
  w.put<std::uint8_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weight.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weight.cols()));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.obs_offset.size()));
  w.put_vec(spec.obs_offset);
  w.put_vec(spec.obs_scale);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.action_scale.size()));
  w.put_vec(spec.action_scale);
  for (double p : net.parameters()) w.put<double>(p);
  w.put<std::uint64_t>(fnv1a64(std::span<const std::uint8_t>(w.bytes)));
  return std::move(w.bytes);
}

WeightFile deserialize_weights(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kHeader = 4 + 3 * 2 + 4;
  if (bytes.size() < kHeader + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CorruptFile("not a weight file (bad magic or too short)");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (fnv1a64(std::span<const std::uint8_t>(bytes.data(), body)) != stored)
    throw CorruptFile("weight file checksum mismatch");

  Reader r(bytes, body);
  for (int i = 0; i < 4; ++i) r.get<char>();
  const auto major = r.get<std::uint16_t>();
  const auto minor = r.get<std::uint16_t>();
  const auto patch = r.get<std::uint16_t>();
  if (major != kVersionMajor)
    throw VersionMismatch("weight file version " + std::to_string(major) + "." + std::to_string(minor) + "." +
                          std::to_string(patch) + " is not supported");
  const auto layout = r.get<std::uint32_t>();
  if (layout != kObservationLayoutVersion)
    throw VersionMismatch("weight file observation layout " + std::to_string(layout) + ", expected " +
                          std::to_string(kObservationLayoutVersion));

  WeightFile f;
  f.network.hidden = activation_from(r.get<std::uint8_t>());
  f.network.output = activation_from(r.get<std::uint8_t>());
  const bool has_log_std = r.get<std::uint8_t>() != 0;
  r.get<std::uint8_t>();
  const auto n_layers = r.get<std::uint32_t>();
  if (n_layers == 0 || n_layers > 64) throw CorruptFile("implausible layer count");
  std::uint32_t prev_out = 0;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 16)) throw CorruptFile("implausible layer shape");
    if (i > 0 && cols != prev_out) throw CorruptFile("inconsistent layer shapes");
    prev_out = rows;
    f.network.layers.push_back({MatX::Zero(rows, cols), VecX::Zero(rows)});
  }
  if (has_log_std) f.network.log_std = VecX::Zero(prev_out);

  const auto n_obs = r.get<std::uint32_t>();
  if (n_obs != kObservationSize) throw CorruptFile("normalization block has the wrong size");
  f.normalization.layout_version = layout;
  f.normalization.obs_offset = r.get_vec(n_obs);
  f.normalization.obs_scale = r.get_vec(n_obs);
  const auto n_act = r.get<std::uint32_t>();
  if (n_act != kActionSize) throw CorruptFile("action scale block has the wrong size");
  f.normalization.action_scale = r.get_vec(n_act);

  std::vector<double> params(f.network.parameter_count());
  for (double& p : params) p = r.get<double>();
  if (r.pos() != body) throw CorruptFile("trailing bytes in weight file");
  f.network.set_parameters(params);
  return f;
}

void save_weights(const MlpNetwork& net, const NormalizationSpec& spec, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(net, spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

WeightFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

}  // namespace mca
