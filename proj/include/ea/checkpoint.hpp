#pragma once

#include <string>

#include "ea/kv.hpp"
#include "ea/model.hpp"

namespace ea {

// Named-tensor container: shape header per tensor, 64-bit little-endian
// floats. A key=value sidecar at <path>.meta carries the model config and
// run fingerprint.
void save_checkpoint(const std::string& path, const ParamStore& params, const KvMap& meta);
ParamStore load_checkpoint(const std::string& path, KvMap* meta = nullptr);

}  // namespace ea
