#pragma once

#include <string_view>

namespace hpd {

// Configuration bundle of the "paper" pipeline preset (presets/paper.json).
std::string_view paper_preset_asset();

}  // namespace hpd
