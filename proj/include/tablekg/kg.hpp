#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/extract.hpp"
#include "tablekg/pagexml.hpp"
#include "tablekg/rdf.hpp"

namespace tkg {

struct NamespaceConfig {
  Iri base{std::string("https://example.org/tables/")};
  Iri schema_prefix{std::string("https://example.org/schema#")};
  Iri prov_prefix{std::string(vocab::kProvO)};  // vocabulary of the derivation property

  PrefixMap prefixes() const {
    return {{"rdf", vocab::kRdf},
            {"xsd", vocab::kXsd},
            {"prov", prov_prefix.value},
            {"s", schema_prefix.value},
            {"tp", vocab::kTableProv}};
  }
};

// Percent-free slug for IRI path segments: keeps unreserved characters,
// replaces everything else with '_'.
inline std::string slugify(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
        c == '.' || c == '~') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

inline Iri mint_entity_iri(const EntityRecord& record, std::string_view document,
                           const Iri& base) {
  return Iri(base.value + slugify(document) + "/row-" + std::to_string(record.row_index));
}

enum class ContextKind { Row, Cell, Span };

struct GraphContext {
  ContextKind kind = ContextKind::Row;
  std::string document;
  int row_index = 0;
  std::optional<std::string> cell_id;
  std::optional<Span> span;
  Iri graph_iri;
};

namespace detail {

inline Iri row_graph_iri(const NamespaceConfig& ns, std::string_view doc, int row) {
  return Iri(ns.base.value + slugify(doc) + "/prov/row/" + std::to_string(row));
}
inline Iri cell_graph_iri(const NamespaceConfig& ns, std::string_view doc,
                          std::string_view cell_id) {
  return Iri(ns.base.value + slugify(doc) + "/prov/cell/" + slugify(cell_id));
}
inline Iri span_graph_iri(const NamespaceConfig& ns, std::string_view doc, const Span& s) {
  return Iri(ns.base.value + slugify(doc) + "/prov/span/" + std::to_string(s.start) + "-" +
             std::to_string(s.end));
}

}  // namespace detail

struct AssertionGraph {
  std::vector<Quad> quads;
  std::vector<GraphContext> contexts;  // deduplicated by graph IRI
};

// Builds the assertion graph: one type quad per entity (row graph only) and
// one quad per property value, replicated into the row graph plus the cell
// and span graphs its provenance supports. Nested named-entity values become
// deterministic blank nodes with one quad per attribute.
inline AssertionGraph build_assertion_graph(const std::vector<EntityRecord>& records,
                                            const ExtractionSchema& schema,
                                            std::string_view document,
                                            const NamespaceConfig& ns,
                                            bool default_graph_union = false) {
  AssertionGraph out;
  std::map<std::string, GraphContext> contexts;  // graph IRI -> context

  auto graphs_for = [&](const ValueProvenance& prov) {
    std::vector<Iri> graphs;
    const Iri row_g = detail::row_graph_iri(ns, document, prov.row_index);
    contexts.try_emplace(row_g.value, GraphContext{ContextKind::Row, std::string(document),
                                                   prov.row_index, std::nullopt,
                                                   std::nullopt, row_g});
    graphs.push_back(row_g);
    if (prov.cell_id) {
      const Iri g = detail::cell_graph_iri(ns, document, *prov.cell_id);
      contexts.try_emplace(g.value, GraphContext{ContextKind::Cell, std::string(document),
                                                 prov.row_index, prov.cell_id, std::nullopt,
                                                 g});
      graphs.push_back(g);
    }
    if (prov.span) {
      const Iri g = detail::span_graph_iri(ns, document, *prov.span);
      contexts.try_emplace(g.value, GraphContext{ContextKind::Span, std::string(document),
                                                 prov.row_index, std::nullopt, prov.span,
                                                 g});
      graphs.push_back(g);
    }
    return graphs;
  };

  auto emit = [&](const Term& subject, const Iri& predicate, const Term& object,
                  const std::vector<Iri>& graphs) {
    for (const Iri& g : graphs) out.quads.push_back({subject, predicate, object, g});
    if (default_graph_union) {
      out.quads.push_back({subject, predicate, object, std::nullopt});
    }
  };

  for (const EntityRecord& record : records) {
    const Iri entity = mint_entity_iri(record, document, ns.base);
    const std::vector<Iri> row_only =
        graphs_for(ValueProvenance{record.row_index, std::nullopt, std::nullopt});
    emit(entity, vocab::rdf_type(), Iri(ns.schema_prefix.value + slugify(record.entity_type)),
         row_only);

    std::map<std::string, int> ordinals;
    for (const PropertyValue& value : record.values) {
      const PropertySpec* spec = schema.find_property(value.property);
      if (!spec || spec->kind != value.kind) {
        throw SchemaViolation("property '" + value.property + "' of row " +
                              std::to_string(record.row_index) +
                              " does not match the schema");
      }
      const Iri predicate(ns.schema_prefix.value + slugify(value.property));
      if (value.kind == ValueKind::Literal) {
        emit(entity, predicate, lit(value.value), graphs_for(value.provenance));
      } else {
        const int ordinal = ordinals[value.property]++;
        BlankNode node{"b_" + slugify(document) + "_row" +
                       std::to_string(record.row_index) + "_" + slugify(value.property) +
                       "_" + std::to_string(ordinal)};
        emit(entity, predicate, node, graphs_for(value.provenance));
        for (const AttributeValue& attr : value.attributes) {
          const auto known =
              std::any_of(spec->attributes.begin(), spec->attributes.end(),
                          [&](const AttributeSpec& a) { return a.name == attr.name; });
          if (!known) {
            throw SchemaViolation("attribute '" + value.property + "." + attr.name +
                                  "' of row " + std::to_string(record.row_index) +
                                  " is not in the schema");
          }
          emit(node, Iri(ns.schema_prefix.value + slugify(attr.name)), lit(attr.value),
               graphs_for(attr.provenance));
        }
      }
    }
  }

  for (auto& [_, ctx] : contexts) out.contexts.push_back(std::move(ctx));
  return out;
}

// Describes every named graph used by the assertion quads: its kind, its
// evidence payload (row index, cell id + outline coordinates, or span
// offsets), and a derivation link to the source image.
inline std::vector<Quad> build_provenance_graph(const std::vector<GraphContext>& contexts,
                                                const PageDocument& page,
                                                const NamespaceConfig& ns) {
  const Iri derived_from(ns.prov_prefix.value + "wasDerivedFrom");
  const Iri image_iri = Iri::looks_absolute(page.image_ref)
                            ? Iri(page.image_ref)
                            : Iri(ns.base.value + slugify(page.image_ref));
  std::vector<Quad> quads;
  for (const GraphContext& ctx : contexts) {
    const Iri& node = ctx.graph_iri;
    switch (ctx.kind) {
      case ContextKind::Row:
        quads.push_back({node, vocab::rdf_type(), iri(vocab::kTableProv + "RowProvenance"),
                         std::nullopt});
        quads.push_back({node, Iri(vocab::kTableProv + "rowIndex"),
                         int_lit(ctx.row_index), std::nullopt});
        break;
      case ContextKind::Cell: {
        if (!ctx.cell_id) throw Error("cell context without cell id");
        const CellRegion* cell = page.find_cell(*ctx.cell_id);
        if (!cell) throw UnknownCell("cell " + *ctx.cell_id + " not found in page document");
        quads.push_back({node, vocab::rdf_type(), iri(vocab::kTableProv + "CellProvenance"),
                         std::nullopt});
        quads.push_back({node, Iri(vocab::kTableProv + "cellId"), lit(*ctx.cell_id),
                         std::nullopt});
        quads.push_back({node, Iri(vocab::kTableProv + "coordinates"),
                         lit(detail::format_points(cell->outline.vertices())),
                         std::nullopt});
        break;
      }
      case ContextKind::Span:
        if (!ctx.span) throw Error("span context without span");
        quads.push_back({node, vocab::rdf_type(), iri(vocab::kTableProv + "SpanProvenance"),
                         std::nullopt});
        quads.push_back({node, Iri(vocab::kTableProv + "spanStart"),
                         int_lit(static_cast<long long>(ctx.span->start)), std::nullopt});
        quads.push_back({node, Iri(vocab::kTableProv + "spanEnd"),
                         int_lit(static_cast<long long>(ctx.span->end)), std::nullopt});
        break;
    }
    quads.push_back({node, derived_from, image_iri, std::nullopt});
  }
  return quads;
}

// Drops cell ids that do not resolve in the page document, so downstream
// provenance never dangles; returns the ids that were dropped.
inline std::vector<std::string> drop_dangling_cell_ids(std::vector<EntityRecord>& records,
                                                       const PageDocument& page) {
  std::set<std::string> dropped;
  auto fix = [&](ValueProvenance& prov) {
    if (prov.cell_id && !page.find_cell(*prov.cell_id)) {
      dropped.insert(*prov.cell_id);
      prov.cell_id.reset();
    }
  };
  for (auto& r : records) {
    for (auto& v : r.values) {
      fix(v.provenance);
      for (auto& a : v.attributes) fix(a.provenance);
    }
  }
  return {dropped.begin(), dropped.end()};
}

}  // namespace tkg
