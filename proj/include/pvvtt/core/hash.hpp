#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pvvtt {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

inline std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

} // namespace pvvtt
