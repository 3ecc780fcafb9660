#include "streammark/xml.hpp"

#include <cctype>

namespace streammark {

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;
  bool failed = false;

  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool consume(const char* lit) {
    size_t n = std::char_traits<char>::length(lit);
    if (s.compare(pos, n, lit) != 0) return false;
    pos += n;
    return true;
  }

  void skip_until(const char* lit) {
    size_t at = s.find(lit, pos);
    if (at == std::string::npos) {
      failed = true;
      pos = s.size();
      return;
    }
    pos = at + std::char_traits<char>::length(lit);
  }

  std::string read_name() {
    size_t start = pos;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                      s[pos] == '_' || s[pos] == '-' || s[pos] == ':' ||
                      s[pos] == '.'))
      ++pos;
    if (pos == start) failed = true;
    return s.substr(start, pos - start);
  }

  // Past the '<name', over attributes, to '>' or '/>'. Returns false for a
  // self-closing element.
  bool read_tag_rest() {
    while (!eof()) {
      if (peek() == '>') {
        ++pos;
        return true;
      }
      if (peek() == '/') {
        ++pos;
        if (eof() || peek() != '>') {
          failed = true;
          return false;
        }
        ++pos;
        return false;
      }
      ++pos;  // attributes are ignored
    }
    failed = true;
    return false;
  }

  std::string decode_entities(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
      if (text[i] != '&') {
        out.push_back(text[i]);
        continue;
      }
      if (text.compare(i, 5, "&amp;") == 0) { out.push_back('&'); i += 4; }
      else if (text.compare(i, 4, "&lt;") == 0) { out.push_back('<'); i += 3; }
      else if (text.compare(i, 4, "&gt;") == 0) { out.push_back('>'); i += 3; }
      else if (text.compare(i, 6, "&quot;") == 0) { out.push_back('"'); i += 5; }
      else if (text.compare(i, 6, "&apos;") == 0) { out.push_back('\''); i += 5; }
      else { failed = true; return out; }
    }
    return out;
  }

  // Parses one element (cursor on '<'); collects leaves into out.
  // Returns true if the element had child elements.
  void parse_element(std::vector<Field>& out) {
    if (failed || eof() || peek() != '<') {
      failed = true;
      return;
    }
    ++pos;
    std::string name = read_name();
    if (failed) return;
    bool has_body = read_tag_rest();
    if (failed) return;
    if (!has_body) {
      out.push_back(Field{name, std::string()});  // self-closing: empty leaf
      return;
    }
    std::string text;
    bool has_children = false;
    while (!failed) {
      if (eof()) {
        failed = true;
        return;
      }
      if (peek() == '<') {
        if (consume("<!--")) {
          skip_until("-->");
          continue;
        }
        if (s.compare(pos, 2, "</") == 0) {
          pos += 2;
          std::string close = read_name();
          skip_ws();
          if (failed || eof() || peek() != '>' || close != name) {
            failed = true;
            return;
          }
          ++pos;
          break;
        }
        has_children = true;
        parse_element(out);
        continue;
      }
      size_t next = s.find('<', pos);
      if (next == std::string::npos) {
        failed = true;
        return;
      }
      text += s.substr(pos, next - pos);
      pos = next;
    }
    if (failed) return;
    if (!has_children) {
      // Trim surrounding whitespace from the character data.
      size_t b = text.find_first_not_of(" \t\r\n");
      size_t e = text.find_last_not_of(" \t\r\n");
      std::string trimmed = b == std::string::npos ? "" : text.substr(b, e - b + 1);
      std::string decoded = decode_entities(trimmed);
      if (failed) return;
      // Last occurrence wins for duplicate leaf names.
      for (auto& f : out)
        if (f.name == name) {
          f.value = std::move(decoded);
          return;
        }
      out.push_back(Field{name, std::move(decoded)});
    }
  }
};

}  // namespace

std::optional<std::vector<Field>> parse_xml_leaves(const std::string& doc) {
  Parser p{doc};
  p.skip_ws();
  if (p.consume("<?")) p.skip_until("?>");
  p.skip_ws();
  while (!p.failed && p.consume("<!--")) {
    p.skip_until("-->");
    p.skip_ws();
  }
  std::vector<Field> out;
  p.parse_element(out);
  if (p.failed) return std::nullopt;
  p.skip_ws();
  if (!p.eof()) return std::nullopt;  // trailing garbage
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fields_to_xml(const std::vector<Field>& fields,
                          const std::string& root) {
  std::string out = "<" + root + ">";
  for (const auto& f : fields) {
    out += "<" + f.name + ">";
    out += xml_escape(Message::render_value(f.value));
    out += "</" + f.name + ">";
  }
  out += "</" + root + ">";
  return out;
}

}  // namespace streammark
