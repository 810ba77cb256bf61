#pragma once

namespace torwalk {
inline constexpr const char* kVersion = "torwalk 0.1.0";
}
