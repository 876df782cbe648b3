#pragma once

#include <filesystem>
#include <string>

#include "rtgr/config.hpp"

namespace rtgr {

/// Little-endian binary checkpoint:
///   magic "RTGRCKP\0", u32 version (1), u8 dtype ('f' or 'd'), u8[3] pad,
///   u64 config length + config text (the canonical experiment config),
///   u32 tensor count, then per tensor:
///     u16 name length + name bytes, u8 rank, u64 dims[rank], raw values.
/// Reader and writer share this layout; loading converts between float and
/// double when the stored dtype differs from the requested one.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config,
                     NetworkT<T>& net);

/// Rebuilds the network from the embedded config and fills every parameter.
/// A tensor whose stored shape disagrees with the model errors with the
/// tensor's name; missing or extra tensors are errors too.
template <typename T>
NetworkT<T> load_checkpoint(const std::filesystem::path& path, ExperimentConfig* config_out);

extern template void save_checkpoint<float>(const std::filesystem::path&, const ExperimentConfig&,
                                            NetworkT<float>&);
extern template void save_checkpoint<double>(const std::filesystem::path&, const ExperimentConfig&,
                                             NetworkT<double>&);
extern template NetworkT<float> load_checkpoint<float>(const std::filesystem::path&,
                                                       ExperimentConfig*);
extern template NetworkT<double> load_checkpoint<double>(const std::filesystem::path&,
                                                         ExperimentConfig*);

}  // namespace rtgr
