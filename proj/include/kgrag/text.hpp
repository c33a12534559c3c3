#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag::text {

/// Strip leading/trailing ASCII whitespace.
std::string_view trim(std::string_view s) noexcept;

/// Lowercased alphanumeric runs. Anything else (punctuation, '.', '_', '→')
/// separates tokens, so "film.director" yields {"film", "director"}.
std::vector<std::string> tokenize(std::string_view s);

/// Casefold, drop punctuation, collapse whitespace. Used for answer matching.
std::string normalize(std::string_view s);

/// True when `needle`'s tokens occur as a contiguous run inside `haystack`.
bool contains_tokens(const std::vector<std::string>& haystack,
                     const std::vector<std::string>& needle) noexcept;

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash, so hashed
/// feature indices survive a model dump/load.
std::uint64_t fnv1a(std::string_view s) noexcept;

std::vector<std::string> split(std::string_view s, std::string_view sep);

} // namespace kgrag::text
