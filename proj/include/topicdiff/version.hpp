#pragma once

namespace topicdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace topicdiff
