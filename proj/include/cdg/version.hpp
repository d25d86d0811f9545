#pragma once

namespace cdg {
inline constexpr const char* kVersion = "0.1.0";
}
