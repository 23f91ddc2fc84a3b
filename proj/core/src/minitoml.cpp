#include "minitoml.hpp"

#include "mmrag/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmrag::minitoml {

namespace {

struct Cursor {
    const std::string& line;
    std::size_t pos = 0;
    std::size_t line_number;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigInvalid("line " + std::to_string(line_number), what);
    }
    bool done() const { return pos >= line.size(); }
    char peek() const { return line[pos]; }
    void skip_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t'))
            ++pos;
    }
};

std::string parse_string(Cursor& c) {
    // opening quote already consumed
    std::string out;
    while (true) {
        if (c.done())
            c.fail("unterminated string");
        char ch = c.line[c.pos++];
        if (ch == '"')
            return out;
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        if (c.done())
            c.fail("dangling escape");
        char esc = c.line[c.pos++];
        switch (esc) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'u': {
            if (c.pos + 4 > c.line.size())
                c.fail("truncated \\u escape");
            unsigned code = 0;
            for (int i = 0; i < 4; ++i) {
                char h = c.line[c.pos++];
                code <<= 4;
                if (h >= '0' && h <= '9') code |= static_cast<unsigned>(h - '0');
                else if (h >= 'a' && h <= 'f') code |= static_cast<unsigned>(h - 'a' + 10);
                else if (h >= 'A' && h <= 'F') code |= static_cast<unsigned>(h - 'A' + 10);
                else c.fail("bad \\u escape");
            }
            // UTF-8 encode (BMP only; configs do not need surrogate pairs)
            if (code < 0x80) {
                out.push_back(static_cast<char>(code));
            } else if (code < 0x800) {
                out.push_back(static_cast<char>(0xC0 | (code >> 6)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else {
                out.push_back(static_cast<char>(0xE0 | (code >> 12)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            }
            break;
        }
        default:
            c.fail(std::string("unknown escape \\") + esc);
        }
    }
}

Value parse_scalar(Cursor& c) {
    c.skip_ws();
    if (c.done())
        c.fail("missing value");
    char ch = c.peek();
    if (ch == '"') {
        ++c.pos;
        return Value{parse_string(c)};
    }
    std::size_t start = c.pos;
    while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '#' &&
           c.peek() != ' ' && c.peek() != '\t')
        ++c.pos;
    std::string token = c.line.substr(start, c.pos - start);
    if (token == "true") return Value{true};
    if (token == "false") return Value{false};
    if (token.empty())
        c.fail("missing value");

    bool looks_float = token.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (looks_float) {
            double d = std::stod(token, &used);
            if (used != token.size())
                c.fail("bad number \"" + token + "\"");
            return Value{d};
        }
        std::int64_t i = std::stoll(token, &used);
        if (used != token.size())
            c.fail("bad number \"" + token + "\"");
        return Value{i};
    } catch (const std::logic_error&) {
        c.fail("bad value \"" + token + "\"");
    }
}

Value parse_value(Cursor& c) {
    c.skip_ws();
    if (c.done())
        c.fail("missing value");
    if (c.peek() != '[')
        return parse_scalar(c);

    ++c.pos; // '['
    Array items;
    c.skip_ws();
    if (!c.done() && c.peek() == ']') {
        ++c.pos;
        return Value{items};
    }
    while (true) {
        items.push_back(parse_scalar(c));
        c.skip_ws();
        if (c.done())
            c.fail("unterminated array");
        char ch = c.line[c.pos++];
        if (ch == ']')
            return Value{items};
        if (ch != ',')
            c.fail("expected ',' or ']' in array");
        c.skip_ws();
        if (!c.done() && c.peek() == ']') { // trailing comma
            ++c.pos;
            return Value{items};
        }
    }
}

bool is_bare_key_char(char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
}

} // namespace

Table parse(const std::string& text) {
    Table table;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        Cursor c{line, 0, line_number};
        c.skip_ws();
        if (c.done() || c.peek() == '#')
            continue;

        if (c.peek() == '[') {
            ++c.pos;
            std::size_t start = c.pos;
            while (!c.done() && c.peek() != ']')
                ++c.pos;
            if (c.done())
                c.fail("unterminated section header");
            section = line.substr(start, c.pos - start);
            ++c.pos;
            c.skip_ws();
            if (!c.done() && c.peek() != '#')
                c.fail("trailing characters after section header");
            if (section.empty())
                c.fail("empty section name");
            continue;
        }

        std::size_t start = c.pos;
        while (!c.done() && is_bare_key_char(c.peek()))
            ++c.pos;
        std::string key = line.substr(start, c.pos - start);
        if (key.empty())
            c.fail("expected key");
        c.skip_ws();
        if (c.done() || c.peek() != '=')
            c.fail("expected '=' after key \"" + key + "\"");
        ++c.pos;
        Value value = parse_value(c);
        c.skip_ws();
        if (!c.done() && c.peek() != '#')
            c.fail("trailing characters after value for key \"" + key + "\"");

        std::string full = section.empty() ? key : section + "." + key;
        if (table.count(full))
            throw ConfigInvalid(full, "duplicate key");
        table.emplace(std::move(full), std::move(value));
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigInvalid(path, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (unsigned char ch : s) {
        switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (ch < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                out += buf;
            } else {
                out.push_back(static_cast<char>(ch));
            }
        }
    }
    out += "\"";
    return out;
}

} // namespace mmrag::minitoml
