#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tqa {

/// Trim and collapse internal whitespace runs to a single space.
std::string normalize(std::string_view text);

/// Case-insensitive identity of a normalized sentence.
std::string text_key(std::string_view text);

/// Lowercase, split on any run of non-alphanumeric bytes. Bytes >= 0x80 are
/// kept inside terms so UTF-8 words survive intact. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

/// FNV-1a, 64 bit. Stable across platforms; used for state fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

std::string hex64(std::uint64_t value);

}  // namespace tqa
