#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hpd {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename, so readers never see a partial
// file.
void write_file(const std::filesystem::path& path, std::string_view content);

namespace utf8 {

// Decodes UTF-8; invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);
std::size_t length(std::string_view text);

}  // namespace utf8

std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);

// Writes "warning: <message>" to stderr unless warnings are silenced.
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads. The
// body must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Thread-safe counter that copies by value, so classes holding one stay
// copyable and movable.
class Counter {
 public:
  Counter() = default;
  Counter(const Counter& other) : value_(other.get()) {}
  Counter& operator=(const Counter& other) {
    value_.store(other.get());
    return *this;
  }
  void increment() noexcept { value_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t get() const noexcept { return value_.load(); }

 private:
  std::atomic<std::size_t> value_{0};
};

// Seconds since the epoch, or SOURCE_DATE_EPOCH when that is set so reruns
// can produce byte-identical artifacts.
std::int64_t timestamp_now();

}  // namespace hpd
