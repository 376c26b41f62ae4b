#pragma once

#include <string>

#include "bokehkit/net/tensor.hpp"

namespace bokehkit {

// BKW1 container: magic "BKW1", then little-endian u32 tensor count, then per
// tensor a u16 name length, the UTF-8 name, a u8 rank, rank u32 dims, and the
// float32 payload row-major.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

}  // namespace bokehkit
