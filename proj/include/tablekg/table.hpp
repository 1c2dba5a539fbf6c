#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/detail/xml.hpp"
#include "tablekg/errors.hpp"
#include "tablekg/text.hpp"

namespace tkg {

struct TableCell {
  int row = 0;
  int col = 0;
  int row_span = 1;
  int col_span = 1;
  std::string text;
  std::optional<std::string> source_cell_id;  // PageXML cell id, when known
  friend bool operator==(const TableCell&, const TableCell&) = default;
};

// Grid of cells. Sparse tables are allowed: not every slot must be covered,
// but distinct cells may not overlap.
struct LogicalTable {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<TableCell> cells;
  friend bool operator==(const LogicalTable&, const LogicalTable&) = default;

  void validate() const {
    std::set<std::pair<int, int>> occupied;
    for (const auto& c : cells) {
      if (c.row_span < 1 || c.col_span < 1) throw Error("table cell has span < 1");
      if (c.row < 0 || c.col < 0 || c.row + c.row_span > n_rows ||
          c.col + c.col_span > n_cols) {
        throw Error("table cell does not fit inside the grid");
      }
      for (int r = c.row; r < c.row + c.row_span; ++r) {
        for (int k = c.col; k < c.col + c.col_span; ++k) {
          if (!occupied.insert({r, k}).second) {
            throw OverlappingCells("cells overlap at (" + std::to_string(r) + "," +
                                   std::to_string(k) + ")");
          }
        }
      }
    }
  }

  // Cells anchored at the given row, ordered by column.
  std::vector<const TableCell*> row_cells(int row) const {
    std::vector<const TableCell*> out;
    for (const auto& c : cells) {
      if (c.row == row) out.push_back(&c);
    }
    std::sort(out.begin(), out.end(),
              [](const auto* a, const auto* b) { return a->col < b->col; });
    return out;
  }
};

struct TreeNode {
  std::string tag;
  int col_span = 1;
  int row_span = 1;
  std::string text;
  std::vector<TreeNode> children;
};
using TableTree = TreeNode;

inline std::size_t node_count(const TreeNode& n) {
  std::size_t total = 1;
  for (const auto& c : n.children) total += node_count(c);
  return total;
}

// Concatenated text of one row with per-cell character ranges. Offsets count
// Unicode code points; separator spaces belong to no segment.
struct RowText {
  struct Segment {
    std::string cell_id;
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const Segment&, const Segment&) = default;
  };
  int row = 0;
  std::string text;
  std::vector<Segment> segments;
};

// Fallback identifier for cells with no PageXML source id.
inline std::string grid_cell_id(int row, int col) {
  return "r" + std::to_string(row) + "c" + std::to_string(col);
}

inline RowText row_text(const LogicalTable& table, int row) {
  if (row < 0 || row >= table.n_rows) {
    throw RowOutOfRange("row " + std::to_string(row) + " outside table with " +
                        std::to_string(table.n_rows) + " rows");
  }
  RowText out;
  out.row = row;
  std::size_t cp = 0;
  bool first = true;
  for (const TableCell* cell : table.row_cells(row)) {
    if (!first) {
      out.text += ' ';
      ++cp;
    }
    first = false;
    const std::size_t len = utf8_length(cell->text);
    out.segments.push_back(
        {cell->source_cell_id.value_or(grid_cell_id(cell->row, cell->col)), cp, cp + len});
    out.text += cell->text;
    cp += len;
  }
  return out;
}

inline TableTree to_tree(const LogicalTable& table) {
  TreeNode root{"table", 1, 1, {}, {}};
  root.children.resize(static_cast<std::size_t>(table.n_rows),
                       TreeNode{"tr", 1, 1, {}, {}});
  for (int r = 0; r < table.n_rows; ++r) {
    for (const TableCell* cell : table.row_cells(r)) {
      root.children[static_cast<std::size_t>(r)].children.push_back(
          TreeNode{"td", cell->col_span, cell->row_span, cell->text, {}});
    }
  }
  return root;
}

inline std::string to_html(const LogicalTable& table) {
  std::string out = "<table>";
  for (int r = 0; r < table.n_rows; ++r) {
    out += "<tr>";
    for (const TableCell* cell : table.row_cells(r)) {
      out += "<td";
      if (cell->source_cell_id) {
        out += " id=\"" + detail::xml_escape(*cell->source_cell_id, true) + "\"";
      }
      if (cell->col_span > 1) out += " colspan=\"" + std::to_string(cell->col_span) + "\"";
      if (cell->row_span > 1) out += " rowspan=\"" + std::to_string(cell->row_span) + "\"";
      out += ">";
      out += detail::xml_escape(cell->text);
      out += "</td>";
    }
    out += "</tr>";
  }
  out += "</table>";
  return out;
}

namespace detail {

struct HtmlTag {
  std::string name;                                        // lowercased
  std::vector<std::pair<std::string, std::string>> attrs;  // keys lowercased
  bool closing = false;
  std::size_t end = 0;  // byte offset just past '>'

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

inline std::string html_unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += s[i++];
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") {
      out += '&';
    } else if (ent == "lt") {
      out += '<';
    } else if (ent == "gt") {
      out += '>';
    } else if (ent == "quot") {
      out += '"';
    } else if (ent == "apos") {
      out += '\'';
    } else if (!ent.empty() && ent[0] == '#') {
      char32_t code = 0;
      try {
        code = static_cast<char32_t>(
            (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                : std::stoul(std::string(ent.substr(1))));
      } catch (const std::exception&) {
        out += s[i++];
        continue;
      }
      out += utf8_encode(std::u32string(1, code));
    } else {
      out += s[i++];
      continue;
    }
    i = semi + 1;
  }
  return out;
}

// Finds the next tag at or after `pos`; tolerates unquoted and single-quoted
// attribute values, and skips comments and declarations.
inline std::optional<HtmlTag> next_tag(std::string_view html, std::size_t pos) {
  std::size_t lt;
  while (true) {
    lt = html.find('<', pos);
    if (lt == std::string_view::npos) return std::nullopt;
    if (html.substr(lt).starts_with("<!--")) {
      const auto end = html.find("-->", lt + 4);
      if (end == std::string_view::npos) return std::nullopt;
      pos = end + 3;
      continue;
    }
    if (lt + 1 < html.size() && (html[lt + 1] == '!' || html[lt + 1] == '?')) {
      const auto end = html.find('>', lt);
      if (end == std::string_view::npos) return std::nullopt;
      pos = end + 1;
      continue;
    }
    break;
  }
  HtmlTag tag;
  std::size_t i = lt + 1;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  while (i < html.size() && std::isalnum(static_cast<unsigned char>(html[i]))) {
    tag.name += static_cast<char>(std::tolower(static_cast<unsigned char>(html[i++])));
  }
  while (i < html.size() && html[i] != '>') {
    while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
    if (i >= html.size() || html[i] == '>' || html[i] == '/') {
      if (i < html.size() && html[i] == '/') ++i;
      continue;
    }
    std::string key, value;
    while (i < html.size() && html[i] != '=' && html[i] != '>' &&
           !std::isspace(static_cast<unsigned char>(html[i]))) {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(html[i++])));
    }
    while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        const char quote = html[i++];
        const auto close = html.find(quote, i);
        if (close == std::string_view::npos) return std::nullopt;
        value = std::string(html.substr(i, close - i));
        i = close + 1;
      } else {
        while (i < html.size() && html[i] != '>' &&
               !std::isspace(static_cast<unsigned char>(html[i]))) {
          value += html[i++];
        }
      }
    }
    if (!key.empty()) tag.attrs.emplace_back(key, html_unescape(value));
  }
  if (i >= html.size()) return std::nullopt;
  tag.end = i + 1;
  return tag;
}

}  // namespace detail

// Parses the first <table> element. Cells are placed with the HTML table
// algorithm: each <td> takes the first free slot at or right of the cursor,
// then occupies its full span rectangle; claiming an already-occupied slot
// (possible with conflicting rowspans) is an OverlappingCells error.
inline LogicalTable from_html(std::string_view html) {
  std::size_t pos = 0;
  std::optional<detail::HtmlTag> tag;
  while ((tag = detail::next_tag(html, pos))) {
    if (tag->name == "table" && !tag->closing) break;
    pos = tag->end;
  }
  if (!tag) throw NoTable("no <table> element found");
  pos = tag->end;

  LogicalTable table;
  std::set<std::pair<int, int>> occupied;
  int row = -1;
  int cursor = 0;

  auto parse_span = [](const detail::HtmlTag& t, const char* key) {
    const std::string* v = t.attr(key);
    if (!v) return 1;
    try {
      return std::max(1, std::stoi(*v));
    } catch (const std::exception&) {
      return 1;
    }
  };

  while ((tag = detail::next_tag(html, pos))) {
    if (tag->closing && tag->name == "table") break;
    if (tag->name == "tr" && !tag->closing) {
      ++row;
      cursor = 0;
      pos = tag->end;
      continue;
    }
    if ((tag->name == "td" || tag->name == "th") && !tag->closing) {
      if (row < 0) throw NoTable("<td> outside of a <tr>");
      const int col_span = parse_span(*tag, "colspan");
      const int row_span = parse_span(*tag, "rowspan");
      while (occupied.count({row, cursor})) ++cursor;
      for (int r = row; r < row + row_span; ++r) {
        for (int k = cursor; k < cursor + col_span; ++k) {
          if (!occupied.insert({r, k}).second) {
            throw OverlappingCells("cell spans collide at (" + std::to_string(r) + "," +
                                   std::to_string(k) + ")");
          }
        }
      }
      const auto text_end = html.find('<', tag->end);
      const std::string raw(html.substr(
          tag->end, text_end == std::string_view::npos ? 0 : text_end - tag->end));
      TableCell cell{row,
                     cursor,
                     row_span,
                     col_span,
                     detail::html_unescape(raw),
                     std::nullopt};
      if (const std::string* id = tag->attr("id")) cell.source_cell_id = *id;
      table.cells.push_back(std::move(cell));
      cursor += col_span;
    }
    pos = tag->end;
  }
  for (const auto& [r, c] : occupied) {
    table.n_rows = std::max(table.n_rows, r + 1);
    table.n_cols = std::max(table.n_cols, c + 1);
  }
  if (row >= 0) table.n_rows = std::max(table.n_rows, row + 1);
  table.validate();
  return table;
}

}  // namespace tkg
