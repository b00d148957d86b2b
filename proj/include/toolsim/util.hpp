#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace toolsim {

using json = nlohmann::json;

// --- string helpers ---

std::string trim(std::string_view s);
std::string rtrim(std::string_view s);

// Strips trailing whitespace from every line and from the end of the text.
// Line endings are normalized to '\n'. This is the normalization applied
// before digesting prompts, so fixture keys survive trailing-whitespace drift.
std::string normalize_for_digest(std::string_view text);

// Whitespace-delimited word count.
std::size_t word_count(std::string_view text);

// --- digests ---

// FNV-1a 64-bit over the raw bytes, as 16 lowercase hex chars.
std::string fnv1a_hex(std::string_view bytes);

// Digest of (role tag, normalized prompt); the fixture key.
std::string prompt_digest(std::string_view role_tag, std::string_view prompt);

// Digest of a JSON value's canonical dump (sorted keys, compact).
std::string json_digest(const json& value);

// --- deterministic RNG ---

// splitmix64-based generator. std::uniform_int_distribution is
// implementation-defined, so bounded draws go through this class to keep
// samples identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// Seed derived from a base seed plus context strings/indices.
std::uint64_t derive_seed(std::uint64_t base, std::string_view context, std::uint64_t index = 0);

// --- files ---

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::vector<std::string> read_lines(const std::string& path);

// --- clocks ---

// Timestamp source, injectable so scripted runs are bit-reproducible.
using ClockFn = std::function<std::string()>;

ClockFn system_clock_utc();
ClockFn fixed_clock(std::string timestamp = "1970-01-01T00:00:00Z");

// --- rounding ---

// Round half away from zero to two decimals.
double round2(double x);

// --- fenced blocks ---

// First fenced code block (``` ... ```). If language tags are given, a block
// whose info string matches one of them is preferred over an untagged block.
std::optional<std::string> extract_fenced_block(std::string_view text,
                                                const std::vector<std::string>& languages = {});

// --- ${placeholder} substitution ---

// Replaces every ${key} with vars.at(key). Throws std::runtime_error naming
// the placeholder if one has no value.
std::string substitute(std::string_view templ, const std::map<std::string, std::string>& vars);

}  // namespace toolsim
