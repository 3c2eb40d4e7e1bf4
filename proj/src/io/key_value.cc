#include "mvsflow/io/key_value.h"

#include <charconv>
#include <set>

#include "mvsflow/error.h"

namespace mvsflow::io {
namespace {

bool IsKeyChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.' || c == '-';
}

bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

std::vector<KeyValueEntry> ParseKeyValue(std::string_view text, const std::string& source) {
  std::vector<KeyValueEntry> entries;
  std::set<std::string, std::less<>> seen;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    size_t b = pos;
    while (b < end && IsSpace(text[b])) ++b;
    size_t e = end;
    while (e > b && IsSpace(text[e - 1])) --e;
    if (b < e && text[b] != '#') {
      const size_t eq = text.find('=', b);
      MVSFLOW_CHECK(eq != std::string_view::npos && eq < e, ErrorCode::kParseError,
                    source + ": expected key = value at byte offset " + std::to_string(b));
      size_t ke = eq;
      while (ke > b && IsSpace(text[ke - 1])) --ke;
      MVSFLOW_CHECK(ke > b, ErrorCode::kParseError,
                    source + ": empty key at byte offset " + std::to_string(b));
      for (size_t i = b; i < ke; ++i) {
        MVSFLOW_CHECK(IsKeyChar(text[i]), ErrorCode::kParseError,
                      source + ": invalid key character at byte offset " + std::to_string(i));
      }
      size_t vb = eq + 1;
      while (vb < e && IsSpace(text[vb])) ++vb;
      KeyValueEntry entry{std::string(text.substr(b, ke - b)), std::string(text.substr(vb, e - vb)), b};
      MVSFLOW_CHECK(seen.insert(entry.key).second, ErrorCode::kParseError,
                    source + ": duplicate key '" + entry.key + "' at byte offset " +
                        std::to_string(b));
      entries.push_back(std::move(entry));
    }
    pos = end + 1;
  }
  return entries;
}

std::string FormatKeyValue(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mvsflow::io
