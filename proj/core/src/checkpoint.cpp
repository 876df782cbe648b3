#include "rtgr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace rtgr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'R', 'T', 'G', 'R', 'C', 'K', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void write_pod(std::ofstream& out, const V& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& in, const std::string& path) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) fail("checkpoint: '" + path + "' truncated");
  return v;
}

template <typename T>
char dtype_code() {
  return sizeof(T) == 4 ? 'f' : 'd';
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config,
                     NetworkT<T>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("checkpoint: cannot write '" + path.string() + "'");

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  const char dtype = dtype_code<T>();
  out.put(dtype);
  out.put(0);
  out.put(0);
  out.put(0);

  const std::string cfg_text = config.to_string();
  write_pod(out, static_cast<std::uint64_t>(cfg_text.size()));
  out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

  std::uint32_t count = 0;
  net.visit([&count](const std::string&, TensorT<T>&) { ++count; });
  write_pod(out, count);

  net.visit([&out](const std::string& name, TensorT<T>& t) {
    write_pod(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(static_cast<char>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) write_pod(out, static_cast<std::uint64_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(T)));
  });
  if (!out) fail("checkpoint: short write to '" + path.string() + "'");
}

template <typename T>
NetworkT<T> load_checkpoint(const std::filesystem::path& path, ExperimentConfig* config_out) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("checkpoint: cannot open '" + name + "'");

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail("checkpoint: '" + name + "' is not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in, name);
  if (version != kVersion)
    fail("checkpoint: '" + name + "' has version " + std::to_string(version) + ", expected " +
         std::to_string(kVersion));
  const char dtype = static_cast<char>(in.get());
  in.get();
  in.get();
  in.get();
  if (dtype != 'f' && dtype != 'd') fail("checkpoint: '" + name + "' has unknown dtype");

  const auto cfg_len = read_pod<std::uint64_t>(in, name);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) fail("checkpoint: '" + name + "' truncated config");
  const ExperimentConfig config = ExperimentConfig::parse(cfg_text);
  if (config_out) *config_out = config;

  struct Stored {
    Shape shape;
    std::vector<double> values;
  };
  std::map<std::string, Stored> stored;
  const auto count = read_pod<std::uint32_t>(in, name);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint16_t>(in, name);
    std::string tensor_name(name_len, '\0');
    in.read(tensor_name.data(), name_len);
    const auto rank = static_cast<std::size_t>(read_pod<std::uint8_t>(in, name));
    Stored s;
    for (std::size_t r = 0; r < rank; ++r)
      s.shape.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(in, name)));
    const std::size_t numel = shape_numel(s.shape);
    s.values.resize(numel);
    if (dtype == 'd') {
      in.read(reinterpret_cast<char*>(s.values.data()),
              static_cast<std::streamsize>(numel * sizeof(double)));
    } else {
      std::vector<float> tmp(numel);
      in.read(reinterpret_cast<char*>(tmp.data()),
              static_cast<std::streamsize>(numel * sizeof(float)));
      for (std::size_t k = 0; k < numel; ++k) s.values[k] = tmp[k];
    }
    if (!in) fail("checkpoint: '" + name + "' truncated tensor '" + tensor_name + "'");
    stored.emplace(std::move(tensor_name), std::move(s));
  }

  NetworkT<T> net = NetworkT<T>::init(config.model, /*seed=*/0);
  net.visit([&](const std::string& tensor_name, TensorT<T>& t) {
    const auto it = stored.find(tensor_name);
    if (it == stored.end())
      fail("checkpoint: '" + name + "' is missing tensor '" + tensor_name + "'");
    if (it->second.shape != t.shape())
      fail("checkpoint: tensor '" + tensor_name + "' has shape " + shape_str(it->second.shape) +
           " but the model expects " + shape_str(t.shape()));
    for (std::size_t k = 0; k < t.numel(); ++k) t[k] = static_cast<T>(it->second.values[k]);
    stored.erase(it);
  });
  if (!stored.empty())
    fail("checkpoint: '" + name + "' holds unknown tensor '" + stored.begin()->first + "'");
  return net;
}

template void save_checkpoint<float>(const std::filesystem::path&, const ExperimentConfig&,
                                     NetworkT<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ExperimentConfig&,
                                      NetworkT<double>&);
template NetworkT<float> load_checkpoint<float>(const std::filesystem::path&, ExperimentConfig*);
template NetworkT<double> load_checkpoint<double>(const std::filesystem::path&, ExperimentConfig*);

}  // namespace rtgr
