#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medlit {

/// A token together with its byte range in the source text.
struct TokenSpan {
    std::string token;
    std::size_t begin = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
};

/// Lowercases ASCII letters and splits on every character that is not an
/// ASCII letter or digit. Bytes >= 0x80 (UTF-8 sequences) are kept inside
/// tokens so non-English words are not shredded.
std::vector<std::string> tokenize(std::string_view text);

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace medlit
