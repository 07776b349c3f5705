#include "medlit/text.hpp"

namespace medlit {
namespace {

constexpr bool is_token_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

constexpr char lower(char c) noexcept {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

template <typename Visit>
void scan_tokens(std::string_view text, Visit&& visit) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && !is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        const std::size_t start = i;
        while (i < n && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
        visit(start, i);
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    scan_tokens(text, [&](std::size_t b, std::size_t e) {
        std::string tok(text.substr(b, e - b));
        for (char& c : tok) c = lower(c);
        out.push_back(std::move(tok));
    });
    return out;
}

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
    std::vector<TokenSpan> out;
    scan_tokens(text, [&](std::size_t b, std::size_t e) {
        std::string tok(text.substr(b, e - b));
        for (char& c : tok) c = lower(c);
        out.push_back(TokenSpan{std::move(tok), b, e});
    });
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    scan_tokens(text, [&](std::size_t, std::size_t) { ++n; });
    return n;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(std::string_view text) {
    const auto ws = " \t\r\n\f\v";
    const auto b = text.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = text.find_last_not_of(ws);
    return std::string(text.substr(b, e - b + 1));
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = lower(c);
    return out;
}

}  // namespace medlit
