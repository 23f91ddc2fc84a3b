#pragma once

// Minimal TOML-subset parser for experiment configs. Supported grammar
// (documented in the README):
//   - full-line and trailing '#' comments
//   - [section] and [dotted.section] headers
//   - key = "string" (\" \\ \n \t \r \uXXXX escapes), integer, float,
//     true/false, or a flat array of those scalars
// Keys flatten to "section.key".

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace mmrag::minitoml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::int64_t, double, bool, std::string, Array> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
};

using Table = std::map<std::string, Value>;

/// Throws mmrag::ConfigInvalid on grammar errors (field path = "line N").
Table parse(const std::string& text);

Table parse_file(const std::string& path);

/// Serializes a string with the escapes the parser understands.
std::string quote(const std::string& s);

} // namespace mmrag::minitoml
