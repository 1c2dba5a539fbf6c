#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tablekg/extract.hpp"
#include "tablekg/kg.hpp"

// JSON formats for the external interfaces: the extraction schema file, the
// normalized per-document record file, and the namespaces configuration.

namespace tkg {

using Json = nlohmann::ordered_json;

inline Json schema_to_json(const ExtractionSchema& schema) {
  Json j;
  j["entity_type"] = schema.entity_type;
  j["properties"] = Json::array();
  for (const auto& p : schema.properties) {
    Json pj;
    pj["name"] = p.name;
    pj["kind"] = p.kind == ValueKind::Literal ? "literal" : "named_entity";
    if (p.column) pj["column"] = *p.column;
    if (p.pattern) pj["pattern"] = *p.pattern;
    if (!p.attributes.empty()) {
      pj["attributes"] = Json::array();
      for (const auto& a : p.attributes) {
        Json aj;
        aj["name"] = a.name;
        if (a.column) aj["column"] = *a.column;
        if (a.pattern) aj["pattern"] = *a.pattern;
        pj["attributes"].push_back(aj);
      }
    }
    j["properties"].push_back(pj);
  }
  return j;
}

inline ExtractionSchema schema_from_json(const Json& j) {
  try {
    ExtractionSchema schema;
    schema.entity_type = j.at("entity_type").get<std::string>();
    for (const auto& pj : j.at("properties")) {
      PropertySpec p;
      p.name = pj.at("name").get<std::string>();
      const std::string kind = pj.value("kind", "literal");
      if (kind == "literal") {
        p.kind = ValueKind::Literal;
      } else if (kind == "named_entity") {
        p.kind = ValueKind::NamedEntity;
      } else {
        throw Error("unknown property kind '" + kind + "'");
      }
      if (pj.contains("column")) p.column = pj.at("column").get<int>();
      if (pj.contains("pattern")) p.pattern = pj.at("pattern").get<std::string>();
      if (pj.contains("attributes")) {
        for (const auto& aj : pj.at("attributes")) {
          AttributeSpec a;
          a.name = aj.at("name").get<std::string>();
          if (aj.contains("column")) a.column = aj.at("column").get<int>();
          if (aj.contains("pattern")) a.pattern = aj.at("pattern").get<std::string>();
          p.attributes.push_back(std::move(a));
        }
      }
      schema.properties.push_back(std::move(p));
    }
    schema.validate();
    return schema;
  } catch (const Json::exception& e) {
    throw Error(std::string("bad schema file: ") + e.what());
  }
}

inline ExtractionSchema parse_schema(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(std::string("bad schema file: ") + e.what());
  }
  return schema_from_json(j);
}

namespace detail {

inline Json provenance_to_json(const ValueProvenance& p) {
  Json j;
  j["row_index"] = p.row_index;
  if (p.cell_id) j["cell_id"] = *p.cell_id;
  if (p.span) j["span"] = Json::array({p.span->start, p.span->end});
  return j;
}

inline ValueProvenance provenance_from_json(const Json& j) {
  ValueProvenance p;
  p.row_index = j.at("row_index").get<int>();
  if (j.contains("cell_id")) p.cell_id = j.at("cell_id").get<std::string>();
  if (j.contains("span")) {
    p.span = Span{j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
  }
  return p;
}

}  // namespace detail

// One normalized record file per document image.
inline Json records_to_json(std::string_view document, const std::vector<EntityRecord>& records) {
  Json j;
  j["document"] = std::string(document);
  j["records"] = Json::array();
  for (const auto& r : records) {
    Json rj;
    rj["entity_type"] = r.entity_type;
    rj["row_index"] = r.row_index;
    rj["values"] = Json::array();
    for (const auto& v : r.values) {
      Json vj;
      vj["property"] = v.property;
      if (v.kind == ValueKind::Literal) {
        vj["value"] = v.value;
      } else {
        Json nested;
        if (!v.value.empty()) nested["value"] = v.value;
        nested["attributes"] = Json::array();
        for (const auto& a : v.attributes) {
          Json aj;
          aj["name"] = a.name;
          aj["value"] = a.value;
          aj["provenance"] = detail::provenance_to_json(a.provenance);
          nested["attributes"].push_back(aj);
        }
        vj["value"] = nested;
      }
      vj["provenance"] = detail::provenance_to_json(v.provenance);
      rj["values"].push_back(vj);
    }
    j["records"].push_back(rj);
  }
  return j;
}

struct RecordFile {
  std::string document;
  std::vector<EntityRecord> records;
};

inline RecordFile records_from_json(const Json& j) {
  try {
    RecordFile out;
    out.document = j.value("document", "");
    for (const auto& rj : j.at("records")) {
      EntityRecord r;
      r.entity_type = rj.value("entity_type", "");
      r.row_index = rj.at("row_index").get<int>();
      for (const auto& vj : rj.at("values")) {
        PropertyValue v;
        v.property = vj.at("property").get<std::string>();
        v.provenance = detail::provenance_from_json(vj.at("provenance"));
        const auto& value = vj.at("value");
        if (value.is_object()) {
          v.kind = ValueKind::NamedEntity;
          v.value = value.value("value", "");
          if (value.contains("attributes")) {
            for (const auto& aj : value.at("attributes")) {
              AttributeValue a;
              a.name = aj.at("name").get<std::string>();
              a.value = aj.at("value").get<std::string>();
              a.provenance = detail::provenance_from_json(aj.at("provenance"));
              v.attributes.push_back(std::move(a));
            }
          }
        } else {
          v.kind = ValueKind::Literal;
          v.value = value.get<std::string>();
        }
        r.values.push_back(std::move(v));
      }
      out.records.push_back(std::move(r));
    }
    return out;
  } catch (const Json::exception& e) {
    throw Error(std::string("bad record file: ") + e.what());
  }
}

inline RecordFile parse_records(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(std::string("bad record file: ") + e.what());
  }
  return records_from_json(j);
}

inline NamespaceConfig namespaces_from_json(const Json& j) {
  try {
    NamespaceConfig ns;
    if (j.contains("base")) ns.base = Iri(j.at("base").get<std::string>());
    if (j.contains("schema")) ns.schema_prefix = Iri(j.at("schema").get<std::string>());
    if (j.contains("prov")) ns.prov_prefix = Iri(j.at("prov").get<std::string>());
    return ns;
  } catch (const Json::exception& e) {
    throw Error(std::string("bad namespaces file: ") + e.what());
  }
}

inline Json namespaces_to_json(const NamespaceConfig& ns) {
  Json j;
  j["base"] = ns.base.value;
  j["schema"] = ns.schema_prefix.value;
  j["prov"] = ns.prov_prefix.value;
  return j;
}

}  // namespace tkg
