#pragma once

// Preset files compiled into the library (generated at configure time).

#include <cstddef>
#include <string_view>

namespace ipop::config::detail {

struct EmbeddedPreset {
    std::string_view name;
    std::string_view text;
};

extern const EmbeddedPreset kEmbeddedPresets[];
extern const std::size_t kEmbeddedPresetCount;

}  // namespace ipop::config::detail
