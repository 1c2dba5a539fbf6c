#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tablekg/geometry.hpp"
#include "tablekg/pagexml.hpp"
#include "tablekg/table.hpp"

namespace tkg {

struct LineAssignment {
  std::map<std::string, std::string> line_to_cell;
  std::vector<std::string> unassigned;        // line ids below threshold everywhere
  std::map<std::string, double> max_ratio;    // best overlap ratio seen per line
};

// What the overlap ratio is measured against. Line means "a line belongs to
// the cell containing most of it"; Cell measures how much of the cell the
// line covers instead.
enum class OverlapBasis { Line, Cell };

// Assigns each text line to the cell with the highest overlap ratio, provided
// that ratio reaches the threshold. Ties go to the lexicographically smaller
// cell id. Lines below the threshold for every cell are reported, not dropped.
inline LineAssignment assign_lines(const std::vector<CellRegion>& cells,
                                   const std::vector<TextLine>& lines,
                                   double threshold = 0.2,
                                   OverlapBasis basis = OverlapBasis::Line) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("assignment threshold must be in (0,1]");
  }
  LineAssignment result;
  for (const auto& line : lines) {
    const CellRegion* best = nullptr;
    double best_ratio = 0.0;
    double seen_max = 0.0;
    for (const auto& cell : cells) {
      const double ratio = basis == OverlapBasis::Line
                               ? overlap_ratio(line.outline, cell.outline)
                               : std::clamp(intersection_area(line.outline, cell.outline) /
                                                std::max(polygon_area(cell.outline), 1e-12),
                                            0.0, 1.0);
      seen_max = std::max(seen_max, ratio);
      if (ratio < threshold) continue;
      if (!best || ratio > best_ratio ||
          (ratio == best_ratio && cell.id < best->id)) {
        best = &cell;
        best_ratio = ratio;
      }
    }
    result.max_ratio[line.id] = seen_max;
    if (best) {
      result.line_to_cell[line.id] = best->id;
    } else {
      result.unassigned.push_back(line.id);
    }
  }
  return result;
}

namespace detail {

inline bool reading_order_less(const TextLine& a, const TextLine& b) {
  const Point ca = a.outline.centroid();
  const Point cb = b.outline.centroid();
  // Centroid y then x; baseline decides near-ties (within one pixel).
  if (std::abs(ca.y - cb.y) > 1.0) return ca.y < cb.y;
  if (std::abs(ca.x - cb.x) > 1.0) return ca.x < cb.x;
  if (a.baseline && b.baseline && !a.baseline->empty() && !b.baseline->empty()) {
    const Point ba = a.baseline->front();
    const Point bb = b.baseline->front();
    if (ba.y != bb.y) return ba.y < bb.y;
    if (ba.x != bb.x) return ba.x < bb.x;
  }
  return a.id < b.id;
}

}  // namespace detail

// Grid view of a page whose cell_text is already filled: cell text is the
// assigned lines joined by newlines, in stored order.
inline LogicalTable table_from_page(const PageDocument& doc) {
  LogicalTable table;
  for (const auto& cell : doc.cells) {
    std::string text;
    if (auto it = doc.cell_text.find(cell.id); it != doc.cell_text.end()) {
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        const TextLine* line = doc.find_line(it->second[i]);
        if (!line) throw Error("cell_text references unknown line " + it->second[i]);
        if (i) text += '\n';
        text += line->text;
      }
    }
    table.cells.push_back(TableCell{cell.row_index, cell.col_index, cell.row_span,
                                    cell.col_span, std::move(text), cell.id});
    table.n_rows = std::max(table.n_rows, cell.row_index + cell.row_span);
    table.n_cols = std::max(table.n_cols, cell.col_index + cell.col_span);
  }
  table.validate();
  return table;
}

struct ReconstructResult {
  PageDocument page;   // input document with cell_text filled
  LogicalTable table;  // grid view with aggregated text
};

// Fills cell_text from an assignment and builds the logical table. Lines in a
// cell are ordered top-to-bottom (centroid y, then x) and joined by newlines.
inline ReconstructResult build_table(const PageDocument& doc,
                                     const LineAssignment& assignment) {
  ReconstructResult out{doc, {}};
  out.page.cell_text.clear();

  std::map<std::string, std::vector<const TextLine*>> per_cell;
  for (const auto& [line_id, cell_id] : assignment.line_to_cell) {
    const TextLine* line = doc.find_line(line_id);
    if (!line) throw Error("assignment references unknown line " + line_id);
    if (!doc.find_cell(cell_id)) throw Error("assignment references unknown cell " + cell_id);
    per_cell[cell_id].push_back(line);
  }
  for (auto& [cell_id, cell_lines] : per_cell) {
    std::sort(cell_lines.begin(), cell_lines.end(),
              [](const TextLine* a, const TextLine* b) {
                return detail::reading_order_less(*a, *b);
              });
    auto& ids = out.page.cell_text[cell_id];
    for (const TextLine* l : cell_lines) ids.push_back(l->id);
  }

  out.table = table_from_page(out.page);
  return out;
}

}  // namespace tkg
