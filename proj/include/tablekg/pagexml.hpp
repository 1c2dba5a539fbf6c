#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/detail/xml.hpp"
#include "tablekg/errors.hpp"
#include "tablekg/geometry.hpp"
#include "tablekg/text.hpp"

namespace tkg {

inline constexpr std::string_view kPageNs2013 =
    "http://schema.primaresearch.org/PAGE/gts/pagecontent/2013-07-15";
inline constexpr std::string_view kPageNs2019 =
    "http://schema.primaresearch.org/PAGE/gts/pagecontent/2019-07-15";

struct CellRegion {
  std::string id;
  Polygon outline;
  int row_index = 0;
  int col_index = 0;
  int row_span = 1;
  int col_span = 1;
  friend bool operator==(const CellRegion&, const CellRegion&) = default;
};

struct TextLine {
  std::string id;
  Polygon outline;
  std::optional<std::vector<Point>> baseline;
  std::string text;
  friend bool operator==(const TextLine&, const TextLine&) = default;
};

// Parsed layout + transcription for one page image. `cell_text` maps a cell id
// to its assigned text-line ids in reading order; it is empty until
// reconstruction fills it (or the source file already nests lines in cells).
struct PageDocument {
  std::string image_ref;
  int image_width = 0;
  int image_height = 0;
  std::vector<CellRegion> cells;
  std::vector<TextLine> lines;
  std::map<std::string, std::vector<std::string>> cell_text;

  friend bool operator==(const PageDocument&, const PageDocument&) = default;

  const CellRegion* find_cell(std::string_view id) const {
    for (const auto& c : cells) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }
  const TextLine* find_line(std::string_view id) const {
    for (const auto& l : lines) {
      if (l.id == id) return &l;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string format_coord(double v) {
  const double r = std::round(v);
  char buf[40];
  if (std::abs(v - r) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(r));
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", v);
  }
  return buf;
}

inline std::string format_points(const std::vector<Point>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += format_coord(pts[i].x);
    out += ',';
    out += format_coord(pts[i].y);
  }
  return out;
}

inline std::vector<Point> parse_points(const std::string& s, const char* what) {
  std::vector<Point> pts;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    const auto comma = tok.find(',');
    if (comma == std::string::npos) {
      throw MalformedXml(std::string("bad point token '") + tok + "' in " + what);
    }
    try {
      pts.push_back({std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1))});
    } catch (const std::exception&) {
      throw MalformedXml(std::string("bad coordinate in ") + what);
    }
  }
  return pts;
}

inline Polygon parse_outline(const XmlNode& elem, const char* what) {
  const XmlNode* coords = elem.child("Coords");
  const std::string* points = coords ? coords->attr("points") : nullptr;
  if (!points || points->empty()) {
    throw MissingCoords(std::string(what) + " has no Coords point list");
  }
  auto pts = parse_points(*points, what);
  if (pts.size() < 3) {
    throw MissingCoords(std::string(what) + " Coords has fewer than 3 points");
  }
  return Polygon(std::move(pts));
}

inline int parse_int_attr(const XmlNode& elem, const char* key, const char* what,
                          std::optional<int> fallback = std::nullopt) {
  const std::string* v = elem.attr(key);
  if (!v) {
    if (fallback) return *fallback;
    throw MalformedXml(std::string(what) + " is missing attribute '" + key + "'");
  }
  try {
    return std::stoi(*v);
  } catch (const std::exception&) {
    throw MalformedXml(std::string(what) + " attribute '" + key + "' is not an integer");
  }
}

inline TextLine parse_text_line(const XmlNode& elem) {
  const std::string* id = elem.attr("id");
  if (!id) throw MalformedXml("TextLine is missing an id");
  TextLine line{*id, parse_outline(elem, "TextLine"), std::nullopt, ""};
  if (const XmlNode* bl = elem.child("Baseline")) {
    if (const std::string* pts = bl->attr("points")) {
      line.baseline = parse_points(*pts, "Baseline");
    }
  }
  if (const XmlNode* te = elem.child("TextEquiv")) {
    if (const XmlNode* uni = te->child("Unicode")) {
      line.text = nfc(uni->text);
    }
  }
  return line;
}

}  // namespace detail

// Region structure is flattened on parse; counts let callers log what the
// document model drops.
struct PageParseStats {
  std::size_t table_regions = 0;
  std::size_t text_regions = 0;   // flattened into the line list
  std::size_t other_regions = 0;  // ignored entirely
};

// Parses the PageXML subset: TableRegion/TableCell with row, col, rowSpan,
// colSpan attributes, and TextLine with Coords/Baseline/TextEquiv. Lines may
// live inside TextRegions or be nested in TableCells (then they populate
// cell_text). Accepts the 2013 and 2019 PAGE namespaces. Cells come back
// sorted by (row, col), lines sorted by id.
inline PageDocument parse_page(std::string_view xml_bytes,
                               PageParseStats* stats = nullptr) {
  const detail::XmlNode root = detail::parse_xml(xml_bytes);
  if (root.name != "PcGts") throw MalformedXml("root element is not PcGts");
  if (!root.ns.empty() && root.ns != kPageNs2013 && root.ns != kPageNs2019) {
    throw MalformedXml("unsupported PAGE namespace: " + root.ns);
  }
  const detail::XmlNode* page = root.child("Page");
  if (!page) throw MalformedXml("PcGts has no Page element");

  PageDocument doc;
  if (const std::string* v = page->attr("imageFilename")) doc.image_ref = *v;
  doc.image_width = detail::parse_int_attr(*page, "imageWidth", "Page", 0);
  doc.image_height = detail::parse_int_attr(*page, "imageHeight", "Page", 0);

  std::set<std::string> cell_ids, line_ids;
  std::set<std::pair<int, int>> grid_slots;
  auto add_line = [&](TextLine line) {
    if (!line_ids.insert(line.id).second) {
      throw DuplicateId("duplicate TextLine id: " + line.id);
    }
    doc.lines.push_back(std::move(line));
  };

  for (const auto& region : page->children) {
    if (region.name == "TableRegion") {
      if (stats) stats->table_regions += 1;
      for (const auto& elem : region.children) {
        if (elem.name != "TableCell") continue;
        const std::string* id = elem.attr("id");
        if (!id) throw MalformedXml("TableCell is missing an id");
        CellRegion cell{*id, detail::parse_outline(elem, "TableCell"),
                        detail::parse_int_attr(elem, "row", "TableCell"),
                        detail::parse_int_attr(elem, "col", "TableCell"),
                        detail::parse_int_attr(elem, "rowSpan", "TableCell", 1),
                        detail::parse_int_attr(elem, "colSpan", "TableCell", 1)};
        if (cell.row_span < 1 || cell.col_span < 1) {
          throw MalformedXml("TableCell " + cell.id + " has span < 1");
        }
        if (!cell_ids.insert(cell.id).second) {
          throw DuplicateId("duplicate TableCell id: " + cell.id);
        }
        if (!grid_slots.insert({cell.row_index, cell.col_index}).second) {
          throw DuplicateId("duplicate grid position for cell " + cell.id);
        }
        for (const auto& sub : elem.children) {
          if (sub.name != "TextLine") continue;
          TextLine line = detail::parse_text_line(sub);
          doc.cell_text[cell.id].push_back(line.id);
          add_line(std::move(line));
        }
        doc.cells.push_back(std::move(cell));
      }
    } else if (region.name == "TextRegion") {
      if (stats) stats->text_regions += 1;
      for (const auto& elem : region.children) {
        if (elem.name == "TextLine") add_line(detail::parse_text_line(elem));
      }
    } else if (region.name.ends_with("Region")) {
      if (stats) stats->other_regions += 1;
    }
  }

  std::sort(doc.cells.begin(), doc.cells.end(), [](const auto& a, const auto& b) {
    return std::pair(a.row_index, a.col_index) < std::pair(b.row_index, b.col_index);
  });
  std::sort(doc.lines.begin(), doc.lines.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return doc;
}

// Deterministic serialization to the 2019 namespace. Cells are ordered by
// (row, col); lines assigned via cell_text are nested inside their cell in
// reading order, the rest go to a trailing TextRegion ordered by id.
inline std::string serialize_page(const PageDocument& doc) {
  for (const auto& [cell_id, ids] : doc.cell_text) {
    if (!doc.find_cell(cell_id)) throw Error("cell_text references unknown cell " + cell_id);
    for (const auto& lid : ids) {
      if (!doc.find_line(lid)) throw Error("cell_text references unknown line " + lid);
    }
  }

  std::set<std::string> nested;
  for (const auto& [_, ids] : doc.cell_text) nested.insert(ids.begin(), ids.end());

  std::string out;
  auto esc = [](std::string_view s) { return detail::xml_escape(s, true); };
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<PcGts xmlns=\"";
  out += kPageNs2019;
  out += "\">\n";
  out += "  <Page imageFilename=\"" + esc(doc.image_ref) + "\" imageWidth=\"" +
         std::to_string(doc.image_width) + "\" imageHeight=\"" +
         std::to_string(doc.image_height) + "\">\n";

  auto emit_line = [&](const TextLine& line, const std::string& indent) {
    out += indent + "<TextLine id=\"" + esc(line.id) + "\">\n";
    out += indent + "  <Coords points=\"" + detail::format_points(line.outline.vertices()) +
           "\"/>\n";
    if (line.baseline) {
      out += indent + "  <Baseline points=\"" + detail::format_points(*line.baseline) +
             "\"/>\n";
    }
    out += indent + "  <TextEquiv><Unicode>" + detail::xml_escape(line.text) +
           "</Unicode></TextEquiv>\n";
    out += indent + "</TextLine>\n";
  };

  std::vector<const CellRegion*> cells;
  cells.reserve(doc.cells.size());
  for (const auto& c : doc.cells) cells.push_back(&c);
  std::sort(cells.begin(), cells.end(), [](const auto* a, const auto* b) {
    return std::pair(a->row_index, a->col_index) < std::pair(b->row_index, b->col_index);
  });

  if (!cells.empty()) {
    BoundingBox bb = cells.front()->outline.bbox();
    for (const auto* c : cells) {
      const BoundingBox b = c->outline.bbox();
      bb.min_x = std::min(bb.min_x, b.min_x);
      bb.min_y = std::min(bb.min_y, b.min_y);
      bb.max_x = std::max(bb.max_x, b.max_x);
      bb.max_y = std::max(bb.max_y, b.max_y);
    }
    out += "    <TableRegion id=\"table_1\">\n";
    out += "      <Coords points=\"" +
           detail::format_points({{bb.min_x, bb.min_y},
                                  {bb.max_x, bb.min_y},
                                  {bb.max_x, bb.max_y},
                                  {bb.min_x, bb.max_y}}) +
           "\"/>\n";
    for (const auto* c : cells) {
      out += "      <TableCell id=\"" + esc(c->id) + "\" row=\"" +
             std::to_string(c->row_index) + "\" col=\"" + std::to_string(c->col_index) +
             "\" rowSpan=\"" + std::to_string(c->row_span) + "\" colSpan=\"" +
             std::to_string(c->col_span) + "\">\n";
      out += "        <Coords points=\"" + detail::format_points(c->outline.vertices()) +
             "\"/>\n";
      if (auto it = doc.cell_text.find(c->id); it != doc.cell_text.end()) {
        for (const auto& lid : it->second) emit_line(*doc.find_line(lid), "        ");
      }
      out += "      </TableCell>\n";
    }
    out += "    </TableRegion>\n";
  }

  std::vector<const TextLine*> free_lines;
  for (const auto& l : doc.lines) {
    if (!nested.count(l.id)) free_lines.push_back(&l);
  }
  std::sort(free_lines.begin(), free_lines.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  if (!free_lines.empty()) {
    BoundingBox bb = free_lines.front()->outline.bbox();
    for (const auto* l : free_lines) {
      const BoundingBox b = l->outline.bbox();
      bb.min_x = std::min(bb.min_x, b.min_x);
      bb.min_y = std::min(bb.min_y, b.min_y);
      bb.max_x = std::max(bb.max_x, b.max_x);
      bb.max_y = std::max(bb.max_y, b.max_y);
    }
    out += "    <TextRegion id=\"region_lines\">\n";
    out += "      <Coords points=\"" +
           detail::format_points({{bb.min_x, bb.min_y},
                                  {bb.max_x, bb.min_y},
                                  {bb.max_x, bb.max_y},
                                  {bb.min_x, bb.max_y}}) +
           "\"/>\n";
    for (const auto* l : free_lines) emit_line(*l, "      ");
    out += "    </TextRegion>\n";
  }

  out += "  </Page>\n";
  out += "</PcGts>\n";
  return out;
}

}  // namespace tkg
