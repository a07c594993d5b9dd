#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace selficl {

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> whitespace_tokens(std::string_view s);
std::string lower_ascii(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// crude but deterministic token count used when the backend does not
// report usage: whitespace separated tokens
std::size_t approx_token_count(std::string_view s);

// stable hashing, same values on every platform
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// per purpose sub-seed, stable across platforms and runs
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

std::string sha256_hex(std::string_view data);

// "1234.5" -> "1234.50", always two decimals, no thousands separators
std::string format_fixed(double value, int decimals);
std::string format_currency(double usd);
std::string format_pct(double pct);

std::string read_file(const std::string& path);
// write to <path>.tmp then rename so readers never see a half written file
void atomic_write_file(const std::string& path, std::string_view content);

}  // namespace selficl
