#pragma once

namespace fiberband {
inline constexpr const char* kVersion = "1.0.0";
}
