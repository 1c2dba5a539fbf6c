#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tablekg/errors.hpp"
#include "tablekg/text.hpp"

namespace tkg {

struct Iri {
  std::string value;

  Iri() = default;
  explicit Iri(std::string v) : value(std::move(v)) {
    if (!looks_absolute(value)) throw InvalidIri("not an absolute IRI: " + value);
  }

  static bool looks_absolute(std::string_view s) {
    // scheme ":" rest, no whitespace/control/angle characters
    std::size_t i = 0;
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '+' || s[i] == '-' ||
            s[i] == '.')) {
      ++i;
    }
    if (i >= s.size() || s[i] != ':') return false;
    for (char c : s) {
      const auto u = static_cast<unsigned char>(c);
      if (u <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' ||
          c == '|' || c == '^' || c == '`' || c == '\\') {
        return false;
      }
    }
    return true;
  }

  friend auto operator<=>(const Iri&, const Iri&) = default;
};

struct BlankNode {
  std::string label;
  friend auto operator<=>(const BlankNode&, const BlankNode&) = default;
};

struct Literal {
  std::string lexical;
  std::optional<Iri> datatype;       // absent = xsd:string (or langString)
  std::optional<std::string> lang;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

using Term = std::variant<Iri, BlankNode, Literal>;

struct Quad {
  Term subject;   // Iri or BlankNode
  Iri predicate;
  Term object;
  std::optional<Iri> graph;  // absent = default graph
  friend auto operator<=>(const Quad&, const Quad&) = default;
};

namespace vocab {
inline const std::string kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline const std::string kXsd = "http://www.w3.org/2001/XMLSchema#";
inline const std::string kProvO = "http://www.w3.org/ns/prov#";
inline const std::string kShacl = "http://www.w3.org/ns/shacl#";
// Pipeline provenance payload vocabulary (fixed, independent of the base IRI).
inline const std::string kTableProv = "https://w3id.org/tablekg/provenance#";

inline Iri rdf_type() { return Iri(kRdf + "type"); }
inline Iri xsd_integer() { return Iri(kXsd + "integer"); }
inline Iri xsd_string() { return Iri(kXsd + "string"); }
}  // namespace vocab

inline Term iri(std::string v) { return Iri(std::move(v)); }
inline Term lit(std::string lexical) { return Literal{std::move(lexical), std::nullopt, std::nullopt}; }
inline Term typed_lit(std::string lexical, Iri datatype) {
  return Literal{std::move(lexical), std::move(datatype), std::nullopt};
}
inline Term int_lit(long long v) {
  return Literal{std::to_string(v), vocab::xsd_integer(), std::nullopt};
}

enum class QuadFormat { TriG, NQuads };

using PrefixMap = std::vector<std::pair<std::string, std::string>>;  // prefix -> IRI

inline PrefixMap default_prefixes() {
  return {{"rdf", vocab::kRdf}, {"xsd", vocab::kXsd}};
}

namespace detail {

inline std::string escape_literal(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline bool pn_local_safe(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

inline std::string format_iri(const Iri& iri, const PrefixMap* prefixes) {
  if (prefixes) {
    for (const auto& [prefix, ns] : *prefixes) {
      if (iri.value.size() > ns.size() && iri.value.starts_with(ns) &&
          pn_local_safe(std::string_view(iri.value).substr(ns.size()))) {
        return prefix + ":" + iri.value.substr(ns.size());
      }
    }
  }
  return "<" + iri.value + ">";
}

inline std::string format_term(const Term& t, const PrefixMap* prefixes) {
  if (const auto* i = std::get_if<Iri>(&t)) return format_iri(*i, prefixes);
  if (const auto* b = std::get_if<BlankNode>(&t)) return "_:" + b->label;
  const auto& l = std::get<Literal>(t);
  std::string out = "\"" + escape_literal(l.lexical) + "\"";
  if (l.lang) {
    out += "@" + *l.lang;
  } else if (l.datatype && l.datatype->value != vocab::kXsd + "string") {
    out += "^^" + format_iri(*l.datatype, prefixes);
  }
  return out;
}

inline int term_rank(const Term& t) { return static_cast<int>(t.index()); }

inline std::string term_sort_key(const Term& t) {
  if (const auto* i = std::get_if<Iri>(&t)) return i->value;
  if (const auto* b = std::get_if<BlankNode>(&t)) return b->label;
  const auto& l = std::get<Literal>(t);
  return l.lexical + "\x01" + (l.datatype ? l.datatype->value : "") + "\x01" +
         l.lang.value_or("");
}

inline bool quad_order(const Quad& a, const Quad& b) {
  const auto key = [](const Quad& q) {
    return std::tuple(q.graph ? q.graph->value : std::string(), term_rank(q.subject),
                      term_sort_key(q.subject), q.predicate.value, term_rank(q.object),
                      term_sort_key(q.object));
  };
  return key(a) < key(b);
}

}  // namespace detail

// Deterministic serialization: quads are deduplicated and ordered by
// (graph, subject, predicate, object). TriG output groups named graphs into
// GRAPH blocks and compresses IRIs with the given prefixes.
inline std::string serialize_quads(std::vector<Quad> quads, QuadFormat format,
                                   const PrefixMap& prefixes = default_prefixes()) {
  std::sort(quads.begin(), quads.end(), detail::quad_order);
  quads.erase(std::unique(quads.begin(), quads.end()), quads.end());

  std::string out;
  if (format == QuadFormat::NQuads) {
    for (const auto& q : quads) {
      out += detail::format_term(q.subject, nullptr);
      out += ' ';
      out += detail::format_iri(q.predicate, nullptr);
      out += ' ';
      out += detail::format_term(q.object, nullptr);
      if (q.graph) {
        out += ' ';
        out += detail::format_iri(*q.graph, nullptr);
      }
      out += " .\n";
    }
    return out;
  }

  for (const auto& [prefix, ns] : prefixes) {
    out += "@prefix " + prefix + ": <" + ns + "> .\n";
  }
  if (!prefixes.empty()) out += "\n";

  std::optional<std::string> open_graph;
  bool in_block = false;
  auto close_block = [&] {
    if (in_block) out += "}\n";
    in_block = false;
  };
  bool first = true;
  for (const auto& q : quads) {
    const std::optional<std::string> g = q.graph ? std::optional(q.graph->value) : std::nullopt;
    if (first || g != open_graph) {
      close_block();
      if (!first) out += "\n";
      if (g) {
        out += "GRAPH " + detail::format_iri(*q.graph, &prefixes) + " {\n";
        in_block = true;
      }
      open_graph = g;
      first = false;
    }
    if (in_block) out += "  ";
    out += detail::format_term(q.subject, &prefixes) + " " +
           detail::format_iri(q.predicate, &prefixes) + " " +
           detail::format_term(q.object, &prefixes) + " .\n";
  }
  close_block();
  return out;
}

// ---------------------------------------------------------------------------
// Parsing: N-Quads (full) and the Turtle subset needed by shapes files.

namespace detail {

class RdfLexer {
 public:
  explicit RdfLexer(std::string_view text) : text_(text) {}

  void skip_ws(bool also_comments = true) {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#' && also_comments) {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void advance() { ++pos_; }

  bool consume(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') ++line;
    }
    throw Error("line " + std::to_string(line) + ": " + message);
  }

  std::string parse_iri_raw() {
    skip_ws();
    if (peek() != '<') fail("expected '<'");
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '>') {
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) fail("unterminated IRI");
    ++pos_;
    return out;
  }

  Iri parse_iri_ref() {
    try {
      return Iri(parse_iri_raw());
    } catch (const InvalidIri& e) {
      fail(e.what());
    }
  }

  std::string parse_string() {
    skip_ws();
    if (peek() != '"') fail("expected '\"'");
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'u':
          case 'U': {
            const std::size_t width = e == 'u' ? 4 : 8;
            if (pos_ + width > text_.size()) fail("bad unicode escape");
            char32_t code = 0;
            for (std::size_t k = 0; k < width; ++k) {
              const char h = text_[pos_++];
              code <<= 4;
              if (h >= '0' && h <= '9') {
                code += static_cast<char32_t>(h - '0');
              } else if (h >= 'a' && h <= 'f') {
                code += static_cast<char32_t>(h - 'a' + 10);
              } else if (h >= 'A' && h <= 'F') {
                code += static_cast<char32_t>(h - 'A' + 10);
              } else {
                fail("bad hex digit in unicode escape");
              }
            }
            out += utf8_encode(std::u32string(1, code));
            break;
          }
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string parse_name_token() {
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.' || c == '%') {
        out += c;
        ++pos_;
      } else {
        break;
      }
    }
    // A trailing '.' is a statement terminator, not part of the name.
    while (!out.empty() && out.back() == '.') {
      out.pop_back();
      --pos_;
    }
    return out;
  }

  std::size_t pos_ = 0;
  std::string_view text_;
};

}  // namespace detail

inline std::vector<Quad> parse_nquads(std::string_view text) {
  detail::RdfLexer lex(text);
  std::vector<Quad> quads;
  auto parse_term = [&](bool allow_literal) -> Term {
    lex.skip_ws();
    const char c = lex.peek();
    if (c == '<') return lex.parse_iri_ref();
    if (c == '_') {
      lex.advance();
      if (lex.peek() != ':') lex.fail("expected ':' after '_'");
      lex.advance();
      return BlankNode{lex.parse_name_token()};
    }
    if (c == '"' && allow_literal) {
      Literal l{lex.parse_string(), std::nullopt, std::nullopt};
      if (lex.peek() == '@') {
        lex.advance();
        l.lang = lex.parse_name_token();
      } else if (lex.consume("^^")) {
        l.datatype = lex.parse_iri_ref();
      }
      return l;
    }
    lex.fail("unexpected term start");
  };

  while (!lex.eof()) {
    Quad q;
    q.subject = parse_term(false);
    lex.skip_ws();
    if (lex.peek() != '<') lex.fail("predicate must be an IRI");
    q.predicate = lex.parse_iri_ref();
    q.object = parse_term(true);
    lex.skip_ws();
    if (lex.peek() == '<' || lex.peek() == '_') {
      const Term g = parse_term(false);
      if (const auto* gi = std::get_if<Iri>(&g)) {
        q.graph = *gi;
      } else {
        lex.fail("blank node graph labels are not supported");
      }
    }
    if (!lex.consume(".")) lex.fail("expected '.' at end of statement");
    quads.push_back(std::move(q));
  }
  return quads;
}

// Turtle subset: @prefix/@base, 'a', ';' and ',' lists, [ ... ] blank nodes,
// string/integer/boolean/decimal literals, prefixed names and IRIs. Collections
// and multi-line strings are not supported.
class TurtleParser {
 public:
  explicit TurtleParser(std::string_view text) : lex_(text) {}

  std::vector<Quad> parse() {
    while (!lex_.eof()) {
      if (lex_.consume("@prefix") || lex_.consume("PREFIX")) {
        parse_prefix();
      } else if (lex_.consume("@base") || lex_.consume("BASE")) {
        base_ = lex_.parse_iri_ref().value;
        lex_.consume(".");
      } else {
        parse_statement();
      }
    }
    return std::move(quads_);
  }

 private:
  void parse_prefix() {
    lex_.skip_ws();
    std::string prefix = lex_.parse_name_token();
    if (lex_.peek() != ':') lex_.fail("expected ':' in prefix declaration");
    lex_.advance();
    const Iri ns = lex_.parse_iri_ref();
    prefixes_[prefix] = ns.value;
    lex_.consume(".");
  }

  Term parse_subject() {
    lex_.skip_ws();
    const char c = lex_.peek();
    if (c == '[') return parse_blank_node_props();
    if (c == '_') {
      lex_.advance();
      if (lex_.peek() != ':') lex_.fail("expected ':' after '_'");
      lex_.advance();
      return BlankNode{lex_.parse_name_token()};
    }
    return parse_iri_or_pname();
  }

  Iri parse_iri_or_pname() {
    lex_.skip_ws();
    if (lex_.peek() == '<') {
      std::string raw = lex_.parse_iri_raw();
      if (!Iri::looks_absolute(raw) && !base_.empty()) raw = base_ + raw;
      try {
        return Iri(std::move(raw));
      } catch (const InvalidIri& e) {
        lex_.fail(e.what());
      }
    }
    const std::string prefix = lex_.parse_name_token();
    if (lex_.peek() != ':') lex_.fail("expected prefixed name");
    lex_.advance();
    const std::string local = lex_.parse_name_token();
    const auto it = prefixes_.find(prefix);
    if (it == prefixes_.end()) lex_.fail("unknown prefix '" + prefix + "'");
    return Iri(it->second + local);
  }

  Term parse_object() {
    lex_.skip_ws();
    const char c = lex_.peek();
    if (c == '[') return parse_blank_node_props();
    if (c == '"') {
      Literal l{lex_.parse_string(), std::nullopt, std::nullopt};
      if (lex_.peek() == '@') {
        lex_.advance();
        l.lang = lex_.parse_name_token();
      } else if (lex_.consume("^^")) {
        l.datatype = parse_iri_or_pname();
      }
      return l;
    }
    if (c == '_') {
      lex_.advance();
      if (lex_.peek() != ':') lex_.fail("expected ':' after '_'");
      lex_.advance();
      return BlankNode{lex_.parse_name_token()};
    }
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      num += c;
      lex_.advance();
      bool is_decimal = false;
      while (std::isdigit(static_cast<unsigned char>(lex_.peek())) || lex_.peek() == '.') {
        if (lex_.peek() == '.') {
          // '.' followed by a non-digit terminates the statement instead
          const std::size_t save = lex_.pos_;
          lex_.advance();
          if (!std::isdigit(static_cast<unsigned char>(lex_.peek()))) {
            lex_.pos_ = save;
            break;
          }
          is_decimal = true;
          num += '.';
          continue;
        }
        num += lex_.peek();
        lex_.advance();
      }
      return Literal{num,
                     Iri(vocab::kXsd + (is_decimal ? "decimal" : "integer")),
                     std::nullopt};
    }
    if (lex_.consume("true")) {
      return Literal{"true", Iri(vocab::kXsd + "boolean"), std::nullopt};
    }
    if (lex_.consume("false")) {
      return Literal{"false", Iri(vocab::kXsd + "boolean"), std::nullopt};
    }
    return parse_iri_or_pname();
  }

  Term parse_blank_node_props() {
    lex_.advance();  // '['
    BlankNode node{"anon" + std::to_string(anon_counter_++)};
    lex_.skip_ws();
    if (lex_.peek() != ']') parse_predicate_object_list(node);
    lex_.skip_ws();
    if (lex_.peek() != ']') lex_.fail("expected ']'");
    lex_.advance();
    return node;
  }

  void parse_predicate_object_list(const Term& subject) {
    while (true) {
      lex_.skip_ws();
      Iri predicate = consume_type_keyword() ? Iri(vocab::kRdf + "type")
                                             : parse_iri_or_pname();
      while (true) {
        const Term object = parse_object();
        quads_.push_back(Quad{subject, predicate, object, std::nullopt});
        if (!lex_.consume(",")) break;
      }
      if (!lex_.consume(";")) break;
      lex_.skip_ws();
      if (lex_.peek() == ']' || lex_.peek() == '.') break;  // trailing ';'
    }
  }

  bool consume_type_keyword() {
    lex_.skip_ws();
    if (lex_.peek() != 'a') return false;
    const std::size_t save = lex_.pos_;
    lex_.advance();
    const char next = lex_.peek();
    if (std::isspace(static_cast<unsigned char>(next)) || next == '<' || next == '[') {
      return true;
    }
    lex_.pos_ = save;
    return false;
  }

  void parse_statement() {
    const Term subject = parse_subject();
    parse_predicate_object_list(subject);
    if (!lex_.consume(".")) lex_.fail("expected '.' at end of statement");
  }

  detail::RdfLexer lex_;
  std::map<std::string, std::string> prefixes_;
  std::string base_;
  std::vector<Quad> quads_;
  int anon_counter_ = 0;
};

inline std::vector<Quad> parse_turtle(std::string_view text) {
  return TurtleParser(text).parse();
}

}  // namespace tkg
