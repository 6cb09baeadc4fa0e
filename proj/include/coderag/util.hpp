#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace coderag::util {

// 64-bit FNV-1a; used for content hashes, cache keys and config fingerprints.
std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t value);

// Replaces every invalid UTF-8 byte with U+FFFD. Valid sequences pass through.
std::string sanitize_utf8(std::string_view bytes);

// Number of Unicode scalar values in a valid UTF-8 string.
std::uint64_t count_scalars(std::string_view utf8);

// Splits on '\n'. A trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string join_lines(const std::vector<std::string_view>& lines);

std::string_view trim(std::string_view s);

// Glob matching for repository file selection. A pattern without '/' is
// matched against the file name, one with '/' against the whole relative
// path. '*' stops at '/', '**' crosses it, '?' matches one character.
bool glob_match(std::string_view pattern, std::string_view path);

std::string read_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory and renames into place.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions are rethrown
// on the calling thread after all workers join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace coderag::util
