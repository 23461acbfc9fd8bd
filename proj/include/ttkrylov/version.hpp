#pragma once

namespace ttk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ttk
