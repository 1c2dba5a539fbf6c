#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/errors.hpp"
#include "tablekg/table.hpp"
#include "tablekg/text.hpp"

namespace tkg {

enum class ValueKind { Literal, NamedEntity };

struct AttributeSpec {
  std::string name;
  std::optional<int> column;        // rule backend: cell position in the row
  std::optional<std::string> pattern;  // rule backend: first regex match wins
  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

struct PropertySpec {
  std::string name;
  ValueKind kind = ValueKind::Literal;
  std::vector<AttributeSpec> attributes;  // named-entity kind only
  std::optional<int> column;
  std::optional<std::string> pattern;
  friend bool operator==(const PropertySpec&, const PropertySpec&) = default;
};

struct ExtractionSchema {
  std::string entity_type;
  std::vector<PropertySpec> properties;

  const PropertySpec* find_property(std::string_view name) const {
    for (const auto& p : properties) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }
  void validate() const {
    std::vector<std::string_view> seen;
    for (const auto& p : properties) {
      if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) {
        throw Error("duplicate property name in schema: " + p.name);
      }
      seen.push_back(p.name);
      if (p.kind == ValueKind::Literal && !p.attributes.empty()) {
        throw Error("literal property '" + p.name + "' cannot have nested attributes");
      }
    }
  }
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive; offsets count Unicode code points
  friend bool operator==(const Span&, const Span&) = default;
};

struct ValueProvenance {
  int row_index = 0;
  std::optional<std::string> cell_id;
  std::optional<Span> span;  // into the row text
  friend bool operator==(const ValueProvenance&, const ValueProvenance&) = default;
};

struct AttributeValue {
  std::string name;
  std::string value;
  ValueProvenance provenance;
  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
};

struct PropertyValue {
  std::string property;
  ValueKind kind = ValueKind::Literal;
  std::string value;                      // literal kind
  std::vector<AttributeValue> attributes; // named-entity kind
  ValueProvenance provenance;
  friend bool operator==(const PropertyValue&, const PropertyValue&) = default;
};

struct EntityRecord {
  std::string entity_type;
  int row_index = 0;
  std::vector<PropertyValue> values;
  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

// One backend proposal: a property path ("name" or "birth.date"), the value
// text, and optionally where in the row text it was found.
struct Candidate {
  std::string property;
  std::string value;
  std::optional<Span> span;
};

// Row-level extraction interface. Implementations must be safe for concurrent
// extract_row calls. Returned spans index into row.text (code points).
class ExtractorBackend {
 public:
  virtual ~ExtractorBackend() = default;
  virtual std::vector<Candidate> extract_row(const RowText& row,
                                             const ExtractionSchema& schema) = 0;
};

// Deterministic stand-in for an LLM extractor: resolves column bindings to the
// row's cell segments and patterns to their first regex match. Bindings are
// compiled once from the schema given at construction.
class RuleBackend : public ExtractorBackend {
 public:
  explicit RuleBackend(const ExtractionSchema& schema) : schema_(schema) {
    auto compile = [](const std::string& owner, const std::optional<std::string>& pattern)
        -> std::optional<std::regex> {
      if (!pattern) return std::nullopt;
      try {
        return std::regex(*pattern);
      } catch (const std::regex_error& e) {
        throw InvalidPattern("bad pattern for '" + owner + "': " + e.what());
      }
    };
    for (const auto& p : schema.properties) {
      regexes_.push_back(compile(p.name, p.pattern));
      std::vector<std::optional<std::regex>> attr_regexes;
      for (const auto& a : p.attributes) {
        attr_regexes.push_back(compile(p.name + "." + a.name, a.pattern));
      }
      attr_regexes_.push_back(std::move(attr_regexes));
    }
  }

  std::vector<Candidate> extract_row(const RowText& row,
                                     const ExtractionSchema& schema) override {
    if (schema.properties.size() != schema_.properties.size()) {
      throw BackendFailure("rule backend called with a different schema");
    }
    std::vector<Candidate> out;
    for (std::size_t pi = 0; pi < schema_.properties.size(); ++pi) {
      const PropertySpec& prop = schema_.properties[pi];
      if (prop.kind == ValueKind::Literal) {
        if (auto c = bind(row, prop.name, prop.column, regexes_[pi])) {
          out.push_back(std::move(*c));
        }
      } else {
        for (std::size_t ai = 0; ai < prop.attributes.size(); ++ai) {
          const AttributeSpec& attr = prop.attributes[ai];
          if (auto c = bind(row, prop.name + "." + attr.name, attr.column,
                            attr_regexes_[pi][ai])) {
            out.push_back(std::move(*c));
          }
        }
      }
    }
    return out;
  }

 private:
  static std::optional<Candidate> bind(const RowText& row, std::string path,
                                       std::optional<int> column,
                                       const std::optional<std::regex>& re) {
    if (column) {
      if (*column < 0 || static_cast<std::size_t>(*column) >= row.segments.size()) {
        return std::nullopt;
      }
      const RowText::Segment& seg = row.segments[static_cast<std::size_t>(*column)];
      return Candidate{std::move(path), utf8_substr(row.text, seg.start, seg.end),
                       Span{seg.start, seg.end}};
    }
    if (re) {
      std::smatch m;
      if (!std::regex_search(row.text, m, *re)) return std::nullopt;
      const auto byte_start = static_cast<std::size_t>(m.position(0));
      const std::size_t cp_start = utf8_cp_offset(row.text, byte_start);
      const std::size_t cp_len = utf8_length(m.str(0));
      return Candidate{std::move(path), m.str(0), Span{cp_start, cp_start + cp_len}};
    }
    return std::nullopt;
  }

  ExtractionSchema schema_;
  std::vector<std::optional<std::regex>> regexes_;
  std::vector<std::vector<std::optional<std::regex>>> attr_regexes_;
};

struct ExtractionOptions {
  std::vector<std::string> placeholders{"not mentioned", "unknown", "n/a"};
  bool per_cell = false;  // run the backend once per cell instead of per row
};

struct ExtractionResult {
  std::vector<EntityRecord> records;
  std::vector<std::string> warnings;
  std::vector<int> failed_rows;        // backend failures, skipped
  std::vector<int> empty_record_rows;  // rows whose record had no surviving values
};

namespace detail {

inline bool is_placeholder(std::string_view value,
                           const std::vector<std::string>& placeholders) {
  const std::string folded = fold_case(collapse_whitespace(value));
  if (folded.empty()) return true;
  for (const auto& p : placeholders) {
    if (folded == fold_case(collapse_whitespace(p))) return true;
  }
  return false;
}

}  // namespace detail

// Maps a value's span back to the single cell segment that contains it. When
// the backend gave no span, falls back to an exact substring search of the
// value in the row text (first occurrence; multiple occurrences are reported).
inline EntityRecord restore_cell_provenance(EntityRecord record, const RowText& row,
                                            std::vector<std::string>* warnings = nullptr) {
  if (record.row_index != row.row) {
    throw Error("record row " + std::to_string(record.row_index) +
                " does not match row text " + std::to_string(row.row));
  }
  const std::u32string row_u32 = utf8_decode(row.text);
  auto fix = [&](const std::string& value, ValueProvenance& prov) {
    if (!prov.span && !value.empty()) {
      const std::u32string needle = utf8_decode(value);
      const auto at = row_u32.find(needle);
      if (at != std::u32string::npos) {
        prov.span = Span{at, at + needle.size()};
        if (warnings && row_u32.find(needle, at + 1) != std::u32string::npos) {
          warnings->push_back("value '" + value + "' occurs more than once in row " +
                              std::to_string(row.row) + "; using earliest match");
        }
      }
    }
    prov.cell_id.reset();
    if (!prov.span) return;
    for (const auto& seg : row.segments) {
      if (seg.start <= prov.span->start && prov.span->end <= seg.end) {
        prov.cell_id = seg.cell_id;
        return;
      }
    }
  };
  for (PropertyValue& v : record.values) {
    if (v.kind == ValueKind::Literal) {
      fix(v.value, v.provenance);
    } else {
      fix(v.value, v.provenance);
      for (AttributeValue& a : v.attributes) fix(a.value, a.provenance);
    }
  }
  return record;
}

// Structural invariant of value provenance: a cell id implies a span, and the
// span lies inside that cell's segment of the row text.
inline void validate_record_provenance(const EntityRecord& record, const RowText& row) {
  auto check = [&](const ValueProvenance& prov, const std::string& what) {
    if (!prov.cell_id) return;
    if (!prov.span) {
      throw Error(what + " has a cell id without a span");
    }
    for (const auto& seg : row.segments) {
      if (seg.cell_id == *prov.cell_id) {
        if (seg.start <= prov.span->start && prov.span->end <= seg.end) return;
      }
    }
    throw Error(what + " span does not lie inside its cell segment");
  };
  for (const auto& v : record.values) {
    check(v.provenance, "value '" + v.property + "'");
    for (const auto& a : v.attributes) {
      check(a.provenance, "value '" + v.property + "." + a.name + "'");
    }
  }
}

// Runs the backend row by row (one candidate record per non-empty row) and
// assembles provenance-carrying entity records. Rows where the backend fails
// are skipped and reported; records with no surviving values are dropped from
// the output but logged.
inline ExtractionResult extract_document(const LogicalTable& table,
                                         const ExtractionSchema& schema,
                                         ExtractorBackend& backend,
                                         const ExtractionOptions& options = {}) {
  schema.validate();
  ExtractionResult result;

  for (int row = 0; row < table.n_rows; ++row) {
    const RowText rt = row_text(table, row);
    if (collapse_whitespace(rt.text).empty()) continue;  // blank or cell-less row

    std::vector<Candidate> candidates;
    try {
      if (options.per_cell) {
        for (const auto& seg : rt.segments) {
          RowText cell_view;
          cell_view.row = row;
          cell_view.text = utf8_substr(rt.text, seg.start, seg.end);
          cell_view.segments = {{seg.cell_id, 0, seg.end - seg.start}};
          for (Candidate c : backend.extract_row(cell_view, schema)) {
            if (c.span) c.span = Span{c.span->start + seg.start, c.span->end + seg.start};
            candidates.push_back(std::move(c));
          }
        }
      } else {
        candidates = backend.extract_row(rt, schema);
      }
    } catch (const BackendFailure& e) {
      result.failed_rows.push_back(row);
      result.warnings.push_back("row " + std::to_string(row) + ": " + e.what());
      continue;
    }

    EntityRecord record{schema.entity_type, row, {}};
    auto find_value = [&](std::string_view prop) -> PropertyValue* {
      for (auto& v : record.values) {
        if (v.property == prop) return &v;
      }
      return nullptr;
    };

    for (Candidate& cand : candidates) {
      const auto dot = cand.property.find('.');
      const std::string prop_name = cand.property.substr(0, dot);
      const PropertySpec* spec = schema.find_property(prop_name);
      if (!spec) {
        result.warnings.push_back("row " + std::to_string(row) + ": property '" +
                                  cand.property + "' not in schema; discarded");
        continue;
      }
      if (detail::is_placeholder(cand.value, options.placeholders)) continue;
      ValueProvenance prov{row, std::nullopt, cand.span};

      if (spec->kind == ValueKind::Literal) {
        if (dot != std::string::npos) {
          result.warnings.push_back("row " + std::to_string(row) + ": literal property '" +
                                    prop_name + "' cannot take attribute path '" +
                                    cand.property + "'; discarded");
          continue;
        }
        if (find_value(prop_name)) {
          result.warnings.push_back("row " + std::to_string(row) + ": duplicate value for '" +
                                    prop_name + "'; keeping the first");
          continue;
        }
        record.values.push_back(
            {prop_name, ValueKind::Literal, std::move(cand.value), {}, prov});
      } else {
        if (dot == std::string::npos) {
          result.warnings.push_back("row " + std::to_string(row) +
                                    ": named-entity property '" + prop_name +
                                    "' needs an attribute path; discarded");
          continue;
        }
        const std::string attr_name = cand.property.substr(dot + 1);
        const auto attr_known =
            std::any_of(spec->attributes.begin(), spec->attributes.end(),
                        [&](const AttributeSpec& a) { return a.name == attr_name; });
        if (!attr_known) {
          result.warnings.push_back("row " + std::to_string(row) + ": attribute '" +
                                    cand.property + "' not in schema; discarded");
          continue;
        }
        PropertyValue* nested = find_value(prop_name);
        if (!nested) {
          record.values.push_back({prop_name,
                                   ValueKind::NamedEntity,
                                   "",
                                   {},
                                   ValueProvenance{row, std::nullopt, std::nullopt}});
          nested = &record.values.back();
        }
        const auto dup = std::any_of(nested->attributes.begin(), nested->attributes.end(),
                                     [&](const AttributeValue& a) { return a.name == attr_name; });
        if (dup) {
          result.warnings.push_back("row " + std::to_string(row) + ": duplicate value for '" +
                                    cand.property + "'; keeping the first");
          continue;
        }
        nested->attributes.push_back({attr_name, std::move(cand.value), prov});
      }
    }

    if (record.values.empty()) {
      result.empty_record_rows.push_back(row);
      continue;
    }
    EntityRecord restored = restore_cell_provenance(std::move(record), rt, &result.warnings);
    validate_record_provenance(restored, rt);
    result.records.push_back(std::move(restored));
  }
  return result;
}

// Flattens a record to (property path, value, has cell provenance) units:
// literal values and named-entity attributes each count once.
struct FlatValue {
  std::string path;
  std::string value;
  bool has_cell = false;
};

inline std::vector<FlatValue> flatten_values(const EntityRecord& record) {
  std::vector<FlatValue> out;
  for (const auto& v : record.values) {
    if (v.kind == ValueKind::Literal) {
      out.push_back({v.property, v.value, v.provenance.cell_id.has_value()});
    } else {
      for (const auto& a : v.attributes) {
        out.push_back({v.property + "." + a.name, a.value, a.provenance.cell_id.has_value()});
      }
    }
  }
  return out;
}

// Minimal schema implied by a record set: the union of property names with
// their kinds and observed attribute names. Lets the KG stage run on record
// files whose original schema is not at hand.
inline ExtractionSchema schema_from_records(const std::vector<EntityRecord>& records) {
  ExtractionSchema schema;
  for (const auto& r : records) {
    if (schema.entity_type.empty()) schema.entity_type = r.entity_type;
    for (const auto& v : r.values) {
      PropertySpec* spec = nullptr;
      for (auto& p : schema.properties) {
        if (p.name == v.property) spec = &p;
      }
      if (!spec) {
        schema.properties.push_back({v.property, v.kind, {}, std::nullopt, std::nullopt});
        spec = &schema.properties.back();
      }
      for (const auto& a : v.attributes) {
        const auto known = std::any_of(spec->attributes.begin(), spec->attributes.end(),
                                       [&](const AttributeSpec& s) { return s.name == a.name; });
        if (!known) spec->attributes.push_back({a.name, std::nullopt, std::nullopt});
      }
    }
  }
  return schema;
}

struct ProvenanceStats {
  std::size_t instances = 0;       // records with at least one value
  std::size_t total_values = 0;    // flattened non-empty property values
  double values_per_instance = 0;  // total_values / instances
  std::size_t cell_provenanced = 0;
  double cell_ratio = 0;  // cell_provenanced / total_values
};

inline ProvenanceStats provenance_stats(const std::vector<EntityRecord>& records) {
  ProvenanceStats s;
  for (const auto& r : records) {
    const auto flat = flatten_values(r);
    if (flat.empty()) continue;
    s.instances += 1;
    s.total_values += flat.size();
    for (const auto& f : flat) {
      if (f.has_cell) s.cell_provenanced += 1;
    }
  }
  if (s.instances > 0) {
    s.values_per_instance =
        static_cast<double>(s.total_values) / static_cast<double>(s.instances);
  }
  if (s.total_values > 0) {
    s.cell_ratio =
        static_cast<double>(s.cell_provenanced) / static_cast<double>(s.total_values);
  }
  return s;
}

}  // namespace tkg
