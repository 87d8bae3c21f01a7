#pragma once

#include <string>

#include "cmdrnn/model.hpp"

namespace cmdrnn {

// Versioned textual container: model spec, target statistics, then every
// parameter tensor with its shape. Values are written as C hexfloats, so a
// save -> load -> save cycle is byte-identical.
void save_checkpoint(Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace cmdrnn
