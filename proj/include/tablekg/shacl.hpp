#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tablekg/rdf.hpp"

namespace tkg {

enum class NodeKind { Iri, Literal, BlankNode };

struct PropertyConstraint {
  Iri path;
  std::optional<int> min_count;
  std::optional<int> max_count;
  std::optional<Iri> datatype;
  std::optional<NodeKind> node_kind;
  std::optional<Iri> cls;
};

struct ShapeSpec {
  Iri shape;
  Iri target_class;
  std::vector<PropertyConstraint> constraints;
};

struct Violation {
  Term focus;
  Iri shape;
  std::string constraint;
  std::string message;
};

struct ValidationReport {
  bool conforms = true;
  std::vector<Violation> violations;
};

namespace detail {

inline const std::string& sh() { return vocab::kShacl; }

struct TripleIndex {
  // subject key -> predicate -> objects
  std::map<std::string, std::map<std::string, std::vector<Term>>> by_subject;

  static std::string subject_key(const Term& t) {
    if (const auto* i = std::get_if<Iri>(&t)) return "i:" + i->value;
    if (const auto* b = std::get_if<BlankNode>(&t)) return "b:" + b->label;
    return "l:" + std::get<Literal>(t).lexical;
  }

  explicit TripleIndex(const std::vector<Quad>& quads) {
    for (const auto& q : quads) {
      by_subject[subject_key(q.subject)][q.predicate.value].push_back(q.object);
    }
  }

  const std::vector<Term>* objects(const Term& subject, const std::string& predicate) const {
    const auto s = by_subject.find(subject_key(subject));
    if (s == by_subject.end()) return nullptr;
    const auto p = s->second.find(predicate);
    if (p == s->second.end()) return nullptr;
    return &p->second;
  }
};

}  // namespace detail

// Parses node shapes from Turtle. Supported constraint components: targetClass,
// path, minCount, maxCount, datatype, nodeKind, class. Anything else in the
// SHACL namespace is rejected loudly.
inline std::vector<ShapeSpec> load_shapes(std::string_view turtle) {
  std::vector<Quad> triples;
  try {
    triples = parse_turtle(turtle);
  } catch (const Error& e) {
    throw MalformedShapes(std::string("cannot parse shapes document: ") + e.what());
  }
  const detail::TripleIndex index(triples);
  const std::string& sh = detail::sh();

  auto as_int = [](const Term& t, const char* what) {
    const auto* l = std::get_if<Literal>(&t);
    if (!l) throw MalformedShapes(std::string(what) + " must be an integer literal");
    try {
      return std::stoi(l->lexical);
    } catch (const std::exception&) {
      throw MalformedShapes(std::string(what) + " must be an integer literal");
    }
  };
  auto as_iri = [](const Term& t, const char* what) {
    const auto* i = std::get_if<Iri>(&t);
    if (!i) throw MalformedShapes(std::string(what) + " must be an IRI");
    return *i;
  };

  // Collect shape subjects: anything typed sh:NodeShape or carrying sh:targetClass.
  std::vector<std::pair<Term, std::string>> shape_subjects;  // (term, sort key)
  std::set<std::string> seen;
  for (const auto& q : triples) {
    const bool is_node_shape =
        q.predicate.value == vocab::kRdf + "type" &&
        std::holds_alternative<Iri>(q.object) &&
        std::get<Iri>(q.object).value == sh + "NodeShape";
    const bool has_target = q.predicate.value == sh + "targetClass";
    if ((is_node_shape || has_target) &&
        seen.insert(detail::TripleIndex::subject_key(q.subject)).second) {
      shape_subjects.emplace_back(q.subject, detail::TripleIndex::subject_key(q.subject));
    }
  }
  std::sort(shape_subjects.begin(), shape_subjects.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });

  std::vector<ShapeSpec> shapes;
  for (const auto& [subject, key] : shape_subjects) {
    const auto* targets = index.objects(subject, sh + "targetClass");
    if (!targets || targets->empty()) {
      throw MalformedShapes("node shape without sh:targetClass");
    }
    ShapeSpec spec{std::holds_alternative<Iri>(subject)
                       ? std::get<Iri>(subject)
                       : Iri("urn:tablekg:shape:" + std::get<BlankNode>(subject).label),
                   as_iri(targets->front(), "sh:targetClass"), {}};

    // Reject unsupported components on the node shape itself.
    const auto& preds = index.by_subject.at(key);
    for (const auto& [pred, _] : preds) {
      if (!pred.starts_with(sh)) continue;
      const std::string local = pred.substr(sh.size());
      if (local != "targetClass" && local != "property") {
        throw UnsupportedConstraint("unsupported SHACL component sh:" + local);
      }
    }

    if (const auto* props = index.objects(subject, sh + "property")) {
      for (const Term& prop_node : *props) {
        PropertyConstraint constraint;
        const auto prop_key = detail::TripleIndex::subject_key(prop_node);
        const auto it = index.by_subject.find(prop_key);
        if (it == index.by_subject.end()) {
          throw MalformedShapes("property shape without any constraint");
        }
        bool has_path = false;
        for (const auto& [pred, objects] : it->second) {
          if (!pred.starts_with(sh)) continue;
          const std::string local = pred.substr(sh.size());
          const Term& value = objects.front();
          if (local == "path") {
            constraint.path = as_iri(value, "sh:path");
            has_path = true;
          } else if (local == "minCount") {
            constraint.min_count = as_int(value, "sh:minCount");
          } else if (local == "maxCount") {
            constraint.max_count = as_int(value, "sh:maxCount");
          } else if (local == "datatype") {
            constraint.datatype = as_iri(value, "sh:datatype");
          } else if (local == "class") {
            constraint.cls = as_iri(value, "sh:class");
          } else if (local == "nodeKind") {
            const Iri kind = as_iri(value, "sh:nodeKind");
            if (kind.value == sh + "IRI") {
              constraint.node_kind = NodeKind::Iri;
            } else if (kind.value == sh + "Literal") {
              constraint.node_kind = NodeKind::Literal;
            } else if (kind.value == sh + "BlankNode") {
              constraint.node_kind = NodeKind::BlankNode;
            } else {
              throw UnsupportedConstraint("unsupported sh:nodeKind value " + kind.value);
            }
          } else {
            throw UnsupportedConstraint("unsupported SHACL component sh:" + local);
          }
        }
        if (!has_path) throw MalformedShapes("property shape without sh:path");
        if (constraint.min_count && constraint.max_count &&
            *constraint.min_count > *constraint.max_count) {
          throw MalformedShapes("sh:minCount exceeds sh:maxCount");
        }
        spec.constraints.push_back(std::move(constraint));
      }
    }
    if (spec.constraints.empty()) {
      throw MalformedShapes("shape " + spec.shape.value + " declares no constraints");
    }
    shapes.push_back(std::move(spec));
  }
  return shapes;
}

// Validates the union graph (graph boundaries ignored). Focus nodes are the
// subjects with an rdf:type matching a shape's target class.
inline ValidationReport validate(const std::vector<Quad>& data,
                                 const std::vector<ShapeSpec>& shapes) {
  const detail::TripleIndex index(data);
  ValidationReport report;

  auto type_of_matches = [&](const Term& value, const Iri& cls) {
    const auto* types = index.objects(value, vocab::kRdf + "type");
    if (!types) return false;
    return std::any_of(types->begin(), types->end(), [&](const Term& t) {
      const auto* i = std::get_if<Iri>(&t);
      return i && i->value == cls.value;
    });
  };

  for (const ShapeSpec& shape : shapes) {
    // Deterministic focus-node order.
    std::vector<std::pair<std::string, Term>> focus_nodes;
    std::set<std::string> seen;
    for (const auto& q : data) {
      if (q.predicate.value != vocab::kRdf + "type") continue;
      const auto* obj = std::get_if<Iri>(&q.object);
      if (!obj || obj->value != shape.target_class.value) continue;
      const auto key = detail::TripleIndex::subject_key(q.subject);
      if (seen.insert(key).second) focus_nodes.emplace_back(key, q.subject);
    }
    std::sort(focus_nodes.begin(), focus_nodes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    for (const auto& [key, focus] : focus_nodes) {
      for (const PropertyConstraint& c : shape.constraints) {
        static const std::vector<Term> kNone;
        const auto* values_ptr = index.objects(focus, c.path.value);
        const std::vector<Term>& values = values_ptr ? *values_ptr : kNone;
        const auto count = static_cast<int>(values.size());
        if (c.min_count && count < *c.min_count) {
          report.violations.push_back(
              {focus, shape.shape, "minCount",
               c.path.value + ": expected at least " + std::to_string(*c.min_count) +
                   " values, found " + std::to_string(count)});
        }
        if (c.max_count && count > *c.max_count) {
          report.violations.push_back(
              {focus, shape.shape, "maxCount",
               c.path.value + ": expected at most " + std::to_string(*c.max_count) +
                   " values, found " + std::to_string(count)});
        }
        for (const Term& value : values) {
          if (c.datatype) {
            const auto* l = std::get_if<Literal>(&value);
            const std::string actual =
                !l ? "" : (l->datatype ? l->datatype->value
                                       : (l->lang ? vocab::kRdf + "langString"
                                                  : vocab::kXsd + "string"));
            if (actual != c.datatype->value) {
              report.violations.push_back({focus, shape.shape, "datatype",
                                           c.path.value + ": value does not have datatype " +
                                               c.datatype->value});
            }
          }
          if (c.node_kind) {
            const bool ok = (*c.node_kind == NodeKind::Iri &&
                             std::holds_alternative<Iri>(value)) ||
                            (*c.node_kind == NodeKind::Literal &&
                             std::holds_alternative<Literal>(value)) ||
                            (*c.node_kind == NodeKind::BlankNode &&
                             std::holds_alternative<BlankNode>(value));
            if (!ok) {
              report.violations.push_back({focus, shape.shape, "nodeKind",
                                           c.path.value + ": value has the wrong node kind"});
            }
          }
          if (c.cls && !type_of_matches(value, *c.cls)) {
            report.violations.push_back(
                {focus, shape.shape, "class",
                 c.path.value + ": value is not an instance of " + c.cls->value});
          }
        }
      }
    }
  }
  report.conforms = report.violations.empty();
  return report;
}

// Shapes for the provenance graph this pipeline emits; also shipped as
// data/schema/provenance_shapes.ttl.
inline std::string_view default_provenance_shapes() {
  return R"(@prefix sh: <http://www.w3.org/ns/shacl#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
@prefix prov: <http://www.w3.org/ns/prov#> .
@prefix tp: <https://w3id.org/tablekg/provenance#> .
@prefix shp: <https://w3id.org/tablekg/shapes#> .

shp:RowProvenanceShape a sh:NodeShape ;
    sh:targetClass tp:RowProvenance ;
    sh:property [ sh:path tp:rowIndex ; sh:minCount 1 ; sh:maxCount 1 ;
                  sh:datatype xsd:integer ] ;
    sh:property [ sh:path prov:wasDerivedFrom ; sh:minCount 1 ; sh:nodeKind sh:IRI ] .

shp:CellProvenanceShape a sh:NodeShape ;
    sh:targetClass tp:CellProvenance ;
    sh:property [ sh:path tp:cellId ; sh:minCount 1 ; sh:maxCount 1 ;
                  sh:datatype xsd:string ] ;
    sh:property [ sh:path tp:coordinates ; sh:minCount 1 ; sh:maxCount 1 ;
                  sh:datatype xsd:string ] ;
    sh:property [ sh:path prov:wasDerivedFrom ; sh:minCount 1 ; sh:nodeKind sh:IRI ] .

shp:SpanProvenanceShape a sh:NodeShape ;
    sh:targetClass tp:SpanProvenance ;
    sh:property [ sh:path tp:spanStart ; sh:minCount 1 ; sh:maxCount 1 ;
                  sh:datatype xsd:integer ] ;
    sh:property [ sh:path tp:spanEnd ; sh:minCount 1 ; sh:maxCount 1 ;
                  sh:datatype xsd:integer ] ;
    sh:property [ sh:path prov:wasDerivedFrom ; sh:minCount 1 ; sh:nodeKind sh:IRI ] .
)";
}

inline std::string format_report(const ValidationReport& report) {
  std::string out = report.conforms ? "conforms: true\n" : "conforms: false\n";
  for (const auto& v : report.violations) {
    out += "violation\t" + detail::TripleIndex::subject_key(v.focus).substr(2) + "\t" +
           v.shape.value + "\t" + v.constraint + "\t" + v.message + "\n";
  }
  return out;
}

}  // namespace tkg
