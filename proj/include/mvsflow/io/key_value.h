#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mvsflow::io {

struct KeyValueEntry {
  std::string key;
  std::string value;
  size_t offset = 0;  // byte offset of the key in the text
};

// One `key = value` per line; blank lines and lines starting with '#' are
// skipped, surrounding whitespace is trimmed. Keys use [A-Za-z0-9_.-].
// Throws ParseError with the byte offset for malformed lines and duplicate
// keys; `source` names the text in messages.
std::vector<KeyValueEntry> ParseKeyValue(std::string_view text, const std::string& source);

std::string FormatKeyValue(const std::vector<std::pair<std::string, std::string>>& entries);

// Shortest decimal form that round-trips the double.
std::string FormatDouble(double v);

}  // namespace mvsflow::io
