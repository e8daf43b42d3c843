#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace avs {

/// 64-bit FNV-1a. Used for content fingerprints in manifests and model ids.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v);

}  // namespace avs
