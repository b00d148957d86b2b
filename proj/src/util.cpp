#include "toolsim/util.hpp"

#include <cmath>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace toolsim {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string rtrim(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && is_space(s[e - 1])) --e;
  return std::string(s.substr(0, e));
}

std::string normalize_for_digest(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::string line;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out += rtrim(line);
      if (i != text.size()) out += '\n';
      line.clear();
    } else {
      line += text[i];
    }
  }
  while (!out.empty() && (out.back() == '\n' || is_space(out.back()))) out.pop_back();
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string prompt_digest(std::string_view role_tag, std::string_view prompt) {
  std::string keyed(role_tag);
  keyed += '|';
  keyed += normalize_for_digest(prompt);
  return fnv1a_hex(keyed);
}

std::string json_digest(const json& value) { return fnv1a_hex(value.dump()); }

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
  // rejection sampling to avoid modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view context, std::uint64_t index) {
  std::string material = std::to_string(base);
  material += '|';
  material += context;
  material += '|';
  material += std::to_string(index);
  const std::string hex = fnv1a_hex(material);
  return std::stoull(hex, nullptr, 16);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<std::string> lines;
  std::string line;
  for (char c : content) {
    if (c == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
      line.clear();
    } else {
      line += c;
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

ClockFn system_clock_utc() {
  return [] {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  };
}

ClockFn fixed_clock(std::string timestamp) {
  return [timestamp = std::move(timestamp)] { return timestamp; };
}

double round2(double x) {
  return std::round(x * 100.0) / 100.0;
}

std::optional<std::string> extract_fenced_block(std::string_view text,
                                                const std::vector<std::string>& languages) {
  struct Block {
    std::string info;
    std::string body;
  };
  std::vector<Block> blocks;

  std::vector<std::string> lines;
  {
    std::string line;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '\n') {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
        line.clear();
      } else {
        line += text[i];
      }
    }
  }

  bool open = false;
  Block current;
  for (const auto& line : lines) {
    const std::string stripped = trim(line);
    if (stripped.rfind("```", 0) == 0) {
      if (!open) {
        open = true;
        current = Block{trim(stripped.substr(3)), ""};
      } else {
        if (!current.body.empty() && current.body.back() == '\n') current.body.pop_back();
        blocks.push_back(current);
        open = false;
      }
      continue;
    }
    if (open) {
      current.body += line;
      current.body += '\n';
    }
  }

  if (blocks.empty()) return std::nullopt;
  for (const auto& lang : languages) {
    for (const auto& b : blocks) {
      if (b.info == lang) return b.body;
    }
  }
  return blocks.front().body;
}

std::string substitute(std::string_view templ, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(templ.size());
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '$' && i + 1 < templ.size() && templ[i + 1] == '{') {
      const std::size_t close = templ.find('}', i + 2);
      if (close == std::string_view::npos) {
        throw std::runtime_error("unterminated placeholder in template");
      }
      const std::string key(templ.substr(i + 2, close - i - 2));
      auto it = vars.find(key);
      if (it == vars.end()) {
        throw std::runtime_error("no value for placeholder ${" + key + "}");
      }
      out += it->second;
      i = close + 1;
    } else {
      out += templ[i];
      ++i;
    }
  }
  return out;
}

}  // namespace toolsim
