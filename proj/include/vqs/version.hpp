#pragma once

namespace vqs {
inline constexpr const char* kVersion = "0.1.0";
}
