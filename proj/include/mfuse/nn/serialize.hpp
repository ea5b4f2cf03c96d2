#pragma once

#include "mfuse/nn/layers.hpp"

#include <filesystem>
#include <iosfwd>

namespace mfuse::nn {

/// Flat parameter container, all integers little-endian:
///
///   magic     8 bytes  "MFUSEPRM"
///   version   u32      1
///   count     u32      number of manifest entries
///   entries   count x { u16 name_len, name bytes, u8 kind, u8 trainable,
///                       u8 rank (= 4), 4 x u32 dims (n, c, h, w) }
///   values    f64 IEEE-754 for every entry, in manifest order
///
/// kind: 0 conv2d, 1 batchnorm2d, 2 dense.
void save_params(std::ostream& out, const ParamList& params);
void save_params(const std::filesystem::path& path, const ParamList& params);

/// Loads into `params`, whose manifest (names, kinds, shapes) must match
/// the stored one exactly. Throws std::runtime_error on any mismatch.
void load_params(std::istream& in, const ParamList& params);
void load_params(const std::filesystem::path& path, const ParamList& params);

} // namespace mfuse::nn
