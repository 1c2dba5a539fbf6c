#pragma once

#include <expat.h>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/errors.hpp"

// Thin DOM on top of expat, namespace-aware. Only what PageXML needs.

namespace tkg::detail {

struct XmlNode {
  std::string ns;    // namespace URI, empty if none
  std::string name;  // local name
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;
  std::string text;  // concatenated character data directly inside this element

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  const XmlNode* child(std::string_view local_name) const {
    for (const auto& c : children) {
      if (c.name == local_name) return &c;
    }
    return nullptr;
  }
};

inline XmlNode parse_xml(std::string_view bytes) {
  struct State {
    XmlNode root;
    std::vector<XmlNode*> stack;
  } state;
  state.root.name.clear();
  state.stack.push_back(&state.root);

  // Separator between namespace URI and local name in expat callbacks.
  constexpr char kSep = '\x01';
  XML_Parser parser = XML_ParserCreateNS(nullptr, kSep);
  if (!parser) throw Error("could not create XML parser");
  struct Guard {
    XML_Parser p;
    ~Guard() { XML_ParserFree(p); }
  } guard{parser};

  XML_SetUserData(parser, &state);
  XML_SetElementHandler(
      parser,
      [](void* ud, const XML_Char* qname, const XML_Char** atts) {
        auto* st = static_cast<State*>(ud);
        XmlNode node;
        std::string_view full(qname);
        if (const auto pos = full.find(kSep); pos != std::string_view::npos) {
          node.ns = std::string(full.substr(0, pos));
          node.name = std::string(full.substr(pos + 1));
        } else {
          node.name = std::string(full);
        }
        for (const XML_Char** a = atts; *a; a += 2) {
          std::string_view key(a[0]);
          if (const auto pos = key.find(kSep); pos != std::string_view::npos) {
            key = key.substr(pos + 1);
          }
          node.attrs.emplace_back(std::string(key), std::string(a[1]));
        }
        st->stack.back()->children.push_back(std::move(node));
        st->stack.push_back(&st->stack.back()->children.back());
      },
      [](void* ud, const XML_Char*) {
        static_cast<State*>(ud)->stack.pop_back();
      });
  XML_SetCharacterDataHandler(parser, [](void* ud, const XML_Char* s, int len) {
    auto* st = static_cast<State*>(ud);
    st->stack.back()->text.append(s, static_cast<std::size_t>(len));
  });

  const auto status = XML_Parse(parser, bytes.data(), static_cast<int>(bytes.size()),
                                /*isFinal=*/1);
  if (status != XML_STATUS_OK) {
    throw MalformedXml(std::string("XML parse error at line ") +
                       std::to_string(XML_GetCurrentLineNumber(parser)) + ": " +
                       XML_ErrorString(XML_GetErrorCode(parser)));
  }
  if (state.root.children.size() != 1) {
    throw MalformedXml("expected exactly one XML root element");
  }
  return std::move(state.root.children.front());
}

inline std::string xml_escape(std::string_view s, bool attribute = false) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace tkg::detail
