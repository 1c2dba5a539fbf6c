#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>

#include "tablekg/extract.hpp"
#include "tablekg/records_io.hpp"

namespace tkg {

// Wire contract for external (LLM-style) extractors. One POST per row:
//   request  {"schema": <schema descriptor>, "model": "...", "text": "<row text>"}
//   response [{"property": "p" | "p.attr", "value": "...", "span": [start, end]?}, ...]
// Offsets count Unicode code points into the row text. Malformed entries are
// discarded with a warning; transport or parse failures raise BackendFailure.
class HttpBackend : public ExtractorBackend {
 public:
  HttpBackend(std::string endpoint, std::string model, double timeout_seconds = 30.0,
              std::string path = "/extract")
      : endpoint_(std::move(endpoint)), model_(std::move(model)),
        timeout_(timeout_seconds), path_(std::move(path)) {}

  std::vector<Candidate> extract_row(const RowText& row,
                                     const ExtractionSchema& schema) override {
    Json request;
    request["schema"] = schema_to_json(schema);
    request["model"] = model_;
    request["text"] = row.text;

    httplib::Client client(endpoint_);
    const auto seconds = static_cast<time_t>(timeout_);
    const auto micros = static_cast<time_t>((timeout_ - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);

    const httplib::Result res = client.Post(path_, request.dump(), "application/json");
    if (!res) {
      throw BackendFailure("extraction endpoint unreachable: " + endpoint_ + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
      throw BackendFailure("extraction endpoint returned HTTP " +
                           std::to_string(res->status));
    }
    Json body;
    try {
      body = Json::parse(res->body);
    } catch (const Json::exception& e) {
      throw BackendFailure(std::string("malformed backend response: ") + e.what());
    }
    if (!body.is_array()) {
      throw BackendFailure("backend response is not a JSON array");
    }

    const std::size_t row_len = utf8_length(row.text);
    std::vector<Candidate> out;
    for (const auto& entry : body) {
      if (!entry.is_object() || !entry.contains("property") || !entry.contains("value") ||
          !entry.at("property").is_string() || !entry.at("value").is_string()) {
        warn("discarded malformed backend entry: " + entry.dump());
        continue;
      }
      Candidate c{entry.at("property").get<std::string>(),
                  entry.at("value").get<std::string>(), std::nullopt};
      if (entry.contains("span")) {
        const auto& span = entry.at("span");
        if (span.is_array() && span.size() == 2 && span.at(0).is_number_unsigned() &&
            span.at(1).is_number_unsigned()) {
          const auto start = span.at(0).get<std::size_t>();
          const auto end = span.at(1).get<std::size_t>();
          if (start <= end && end <= row_len) {
            c.span = Span{start, end};
          } else {
            warn("discarded out-of-range span for property '" + c.property + "'");
          }
        } else {
          warn("discarded malformed span for property '" + c.property + "'");
        }
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  // Accumulated non-fatal issues (per-entry discards).
  std::vector<std::string> warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
  }

 private:
  void warn(std::string message) {
    std::lock_guard lock(mutex_);
    warnings_.push_back(std::move(message));
  }

  std::string endpoint_;
  std::string model_;
  double timeout_;
  std::string path_;
  mutable std::mutex mutex_;
  std::vector<std::string> warnings_;
};

}  // namespace tkg
