#pragma once

namespace veritopic {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace veritopic
