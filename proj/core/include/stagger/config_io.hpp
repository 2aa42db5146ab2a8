#pragma once

#include <string>

#include "stagger/core.hpp"

namespace stagger {

/// Parses an EngineConfig from a JSON document. Keys mirror the struct
/// fields exactly (snake_case); unknown keys are a hard error so typos
/// cannot silently fall back to defaults. Missing keys keep their
/// defaults. The result is validated before being returned.
EngineConfig config_from_json_text(const std::string& text);

EngineConfig load_config(const std::string& path);

std::string config_to_json_text(const EngineConfig& cfg);

}  // namespace stagger
