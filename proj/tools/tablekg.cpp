// tablekg: provenance-aware pipeline from PageXML table layouts to RDF
// knowledge graphs, with stage-wise evaluation tooling.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tablekg/extract.hpp"
#include "tablekg/http_backend.hpp"
#include "tablekg/kg.hpp"
#include "tablekg/metrics.hpp"
#include "tablekg/pagexml.hpp"
#include "tablekg/reconstruct.hpp"
#include "tablekg/records_io.hpp"
#include "tablekg/shacl.hpp"
#include "tablekg/table.hpp"

namespace fs = std::filesystem;
using tkg::Json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitThresholdBreached = 1;
constexpr int kExitInputError = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tkg::Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tkg::Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Key used to pair prediction/ground-truth/record files: the basename without
// its extension and without a trailing .merged/.records/.gt marker.
std::string doc_stem(const fs::path& path) {
  std::string stem = path.stem().string();
  for (const char* suffix : {".merged", ".records", ".gt"}) {
    if (stem.size() > std::strlen(suffix) && stem.ends_with(suffix)) {
      stem.resize(stem.size() - std::strlen(suffix));
    }
  }
  return stem;
}

std::vector<fs::path> list_files(const fs::path& dir,
                                 const std::set<std::string>& extensions) {
  if (!fs::is_directory(dir)) throw tkg::Error(dir.string() + " is not a directory");
  // the tool's own report files are never evaluation inputs
  static const std::set<std::string> reserved = {
      "run_summary.json", "stats.json", "eval-cells.json", "eval-table.json",
      "eval-ie.json"};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && extensions.count(entry.path().extension().string()) &&
        !reserved.count(entry.path().filename().string())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: one optional JSON file, flags win over file values.

struct RunConfig {
  double threshold = 0.2;
  double sim_threshold = 0.6;
  std::vector<std::string> placeholders{"not mentioned", "unknown", "n/a"};
  tkg::NamespaceConfig namespaces;
  unsigned jobs = 0;  // 0 = hardware concurrency
  bool default_graph_union = false;
};

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw tkg::Error("bad config file: " + std::string(e.what()));
  }
  if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
  if (j.contains("sim_threshold")) cfg.sim_threshold = j.at("sim_threshold").get<double>();
  if (j.contains("placeholders")) {
    cfg.placeholders = j.at("placeholders").get<std::vector<std::string>>();
  }
  if (j.contains("namespaces")) cfg.namespaces = tkg::namespaces_from_json(j.at("namespaces"));
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<unsigned>();
  if (j.contains("default_graph_union")) {
    cfg.default_graph_union = j.at("default_graph_union").get<bool>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Bounded worker pool over documents. Output files are per-document, so the
// only shared state is the error/warning collection.

struct WorkLog {
  std::mutex mutex;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  void error(const std::string& m) {
    std::lock_guard lock(mutex);
    errors.push_back(m);
  }
  void warn(const std::string& m) {
    std::lock_guard lock(mutex);
    warnings.push_back(m);
  }
};

template <typename Fn>
void for_each_parallel(std::size_t n_items, unsigned jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, n_items)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n_items; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

void write_run_summary(const fs::path& out_dir, const std::string& command,
                       const Json& parameters, const std::vector<std::string>& inputs,
                       const std::vector<std::string>& outputs, const WorkLog& log) {
  Json j;
  j["tool"] = "tablekg";
  j["version"] = kVersion;
  j["command"] = command;
  j["parameters"] = parameters;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["errors"] = log.errors;
  j["warnings"] = log.warnings;
  write_file(out_dir / "run_summary.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// reconstruct

int cmd_reconstruct(const std::vector<std::string>& pages, const std::string& cells_path,
                    const std::string& lines_path, double threshold,
                    tkg::OverlapBasis basis, const std::string& out_dir_arg,
                    const std::string& out_file, const std::string& html_file,
                    unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  WorkLog log;
  std::vector<std::string> outputs;
  std::mutex outputs_mutex;

  struct Input {
    std::string name;      // document stem
    std::string page_path;
    std::string cells_path;  // set in two-file mode
    std::string lines_path;
  };
  std::vector<Input> inputs;
  if (!cells_path.empty() || !lines_path.empty()) {
    if (cells_path.empty() || lines_path.empty()) {
      std::cerr << "error: --cells and --lines must be given together\n";
      return kExitInputError;
    }
    inputs.push_back({doc_stem(cells_path), "", cells_path, lines_path});
  }
  for (const auto& p : pages) inputs.push_back({doc_stem(p), p, "", ""});
  if (inputs.empty()) {
    write_run_summary(out_dir, "reconstruct", {{"threshold", threshold}}, {}, {}, log);
    return kExitOk;  // nothing to do
  }

  for_each_parallel(inputs.size(), jobs, [&](std::size_t i) {
    const Input& input = inputs[i];
    try {
      tkg::PageDocument doc;
      tkg::PageParseStats parse_stats;
      if (!input.page_path.empty()) {
        doc = tkg::parse_page(read_file(input.page_path), &parse_stats);
      } else {
        doc = tkg::parse_page(read_file(input.cells_path), &parse_stats);
        tkg::PageDocument htr = tkg::parse_page(read_file(input.lines_path), &parse_stats);
        doc.lines = std::move(htr.lines);
        doc.cell_text.clear();
        if (doc.image_ref.empty()) doc.image_ref = htr.image_ref;
      }
      if (parse_stats.text_regions + parse_stats.other_regions > 0) {
        log.warn(input.name + ": flattened " + std::to_string(parse_stats.text_regions) +
                 " text region(s), ignored " + std::to_string(parse_stats.other_regions) +
                 " other region(s)");
      }
      const tkg::LineAssignment assignment =
          tkg::assign_lines(doc.cells, doc.lines, threshold, basis);
      const tkg::ReconstructResult result = tkg::build_table(doc, assignment);

      const fs::path merged = out_file.empty()
                                  ? out_dir / (input.name + ".merged.xml")
                                  : fs::path(out_file);
      const fs::path html = html_file.empty() ? out_dir / (input.name + ".html")
                                              : fs::path(html_file);
      const fs::path unassigned = out_dir / (input.name + ".unassigned.txt");
      write_file(merged, tkg::serialize_page(result.page));
      write_file(html, tkg::to_html(result.table) + "\n");
      std::string report;
      for (const auto& id : assignment.unassigned) {
        report += id + "\t" + format_ratio(assignment.max_ratio.at(id)) + "\n";
      }
      write_file(unassigned, report);
      for (const auto& id : assignment.unassigned) {
        log.warn(input.name + ": line " + id + " unassigned (max overlap " +
                 format_ratio(assignment.max_ratio.at(id)) + ")");
      }
      std::lock_guard lock(outputs_mutex);
      outputs.push_back(merged.string());
      outputs.push_back(html.string());
      outputs.push_back(unassigned.string());
    } catch (const std::exception& e) {
      log.error(input.name + ": " + e.what());
    }
  });

  std::sort(outputs.begin(), outputs.end());
  std::vector<std::string> input_names;
  for (const auto& in : inputs) {
    input_names.push_back(in.page_path.empty() ? in.cells_path + "+" + in.lines_path
                                               : in.page_path);
  }
  write_run_summary(out_dir, "reconstruct",
                    {{"threshold", threshold},
                     {"overlap_basis", basis == tkg::OverlapBasis::Line ? "line" : "cell"}},
                    input_names, outputs, log);
  if (!log.errors.empty()) {
    for (const auto& e : log.errors) std::cerr << "error: " << e << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const std::vector<std::string>& in_paths, const std::string& schema_path,
                const std::string& backend_name, const std::string& endpoint,
                const std::string& model, double timeout, bool per_cell,
                const std::string& out_dir_arg, const RunConfig& cfg, unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  tkg::ExtractionSchema schema;
  std::unique_ptr<tkg::ExtractorBackend> backend;
  try {
    schema = tkg::parse_schema(read_file(schema_path));
    if (backend_name == "rule") {
      backend = std::make_unique<tkg::RuleBackend>(schema);
    } else if (backend_name == "http") {
      if (endpoint.empty()) throw tkg::Error("--endpoint is required for the http backend");
      backend = std::make_unique<tkg::HttpBackend>(endpoint, model, timeout);
    } else {
      throw tkg::Error("unknown backend '" + backend_name + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  tkg::ExtractionOptions options;
  options.placeholders = cfg.placeholders;
  options.per_cell = per_cell;

  WorkLog log;
  std::vector<std::string> outputs;
  std::mutex outputs_mutex;

  for_each_parallel(in_paths.size(), jobs, [&](std::size_t i) {
    const fs::path in_path(in_paths[i]);
    const std::string name = doc_stem(in_path);
    try {
      tkg::LogicalTable table;
      std::string document = in_path.filename().string();
      if (in_path.extension() == ".html" || in_path.extension() == ".htm") {
        table = tkg::from_html(read_file(in_path));
      } else {
        const tkg::PageDocument page = tkg::parse_page(read_file(in_path));
        table = tkg::table_from_page(page);
        if (!page.image_ref.empty()) document = page.image_ref;
      }
      const tkg::ExtractionResult result =
          tkg::extract_document(table, schema, *backend, options);
      for (const auto& w : result.warnings) log.warn(name + ": " + w);
      for (int row : result.failed_rows) {
        log.warn(name + ": row " + std::to_string(row) + " failed, skipped");
      }
      for (int row : result.empty_record_rows) {
        log.warn(name + ": row " + std::to_string(row) + " produced no values");
      }
      const fs::path out = out_dir / (name + ".records.json");
      write_file(out, tkg::records_to_json(document, result.records).dump(2) + "\n");
      std::lock_guard lock(outputs_mutex);
      outputs.push_back(out.string());
    } catch (const std::exception& e) {
      log.error(name + ": " + e.what());
    }
  });

  std::sort(outputs.begin(), outputs.end());
  write_run_summary(out_dir, "extract",
                    {{"schema", schema_path},
                     {"backend", backend_name},
                     {"per_cell", per_cell},
                     {"placeholders", cfg.placeholders}},
                    in_paths, outputs, log);
  if (!log.errors.empty()) {
    for (const auto& e : log.errors) std::cerr << "error: " << e << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build-kg

int cmd_build_kg(const std::vector<std::string>& record_paths, const std::string& pages_dir,
                 const std::string& namespaces_path, const std::string& shapes_path,
                 const std::string& schema_path, const std::string& out_dir_arg,
                 const RunConfig& cfg, unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  tkg::NamespaceConfig ns = cfg.namespaces;
  std::vector<tkg::ShapeSpec> shapes;
  std::optional<tkg::ExtractionSchema> schema;
  try {
    if (!namespaces_path.empty()) {
      ns = tkg::namespaces_from_json(Json::parse(read_file(namespaces_path)));
    }
    shapes = tkg::load_shapes(shapes_path.empty() ? tkg::default_provenance_shapes()
                                                  : std::string_view(read_file(shapes_path)));
    if (!schema_path.empty()) schema = tkg::parse_schema(read_file(schema_path));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  WorkLog log;
  std::vector<std::string> outputs;
  std::mutex shared_mutex;
  std::vector<tkg::Quad> corpus;
  bool all_conform = true;

  for_each_parallel(record_paths.size(), jobs, [&](std::size_t i) {
    const fs::path record_path(record_paths[i]);
    const std::string name = doc_stem(record_path);
    try {
      tkg::RecordFile records = tkg::parse_records(read_file(record_path));
      if (records.document.empty()) records.document = name;

      // Page lookup for cell coordinates: <stem>.merged.xml or <stem>.xml in
      // --pages; records without a resolvable page keep row/span provenance.
      tkg::PageDocument page;
      page.image_ref = records.document;
      if (!pages_dir.empty()) {
        const fs::path base = fs::path(pages_dir);
        bool found = false;
        for (const auto& candidate :
             {base / (name + ".merged.xml"), base / (name + ".xml"),
              base / (records.document + ".xml")}) {
          if (fs::exists(candidate)) {
            page = tkg::parse_page(read_file(candidate));
            if (page.image_ref.empty()) page.image_ref = records.document;
            found = true;
            break;
          }
        }
        if (!found) {
          log.warn(name + ": no PageXML found under " + pages_dir +
                   "; cell coordinates unavailable");
        }
      }

      const std::vector<std::string> dangling =
          tkg::drop_dangling_cell_ids(records.records, page);
      for (const auto& id : dangling) {
        log.warn(name + ": cell id '" + id +
                 "' not present in the page; using row-level provenance");
      }

      const tkg::ExtractionSchema effective_schema =
          schema ? *schema : tkg::schema_from_records(records.records);
      tkg::AssertionGraph assertion = tkg::build_assertion_graph(
          records.records, effective_schema, records.document, ns,
          cfg.default_graph_union);
      const std::vector<tkg::Quad> provenance =
          tkg::build_provenance_graph(assertion.contexts, page, ns);

      std::vector<tkg::Quad> combined = assertion.quads;
      combined.insert(combined.end(), provenance.begin(), provenance.end());

      const tkg::ValidationReport report = tkg::validate(provenance, shapes);

      const fs::path trig = out_dir / (name + ".trig");
      const fs::path nq = out_dir / (name + ".nq");
      write_file(trig, tkg::serialize_quads(combined, tkg::QuadFormat::TriG, ns.prefixes()));
      write_file(nq, tkg::serialize_quads(combined, tkg::QuadFormat::NQuads));

      std::lock_guard lock(shared_mutex);
      outputs.push_back(trig.string());
      outputs.push_back(nq.string());
      corpus.insert(corpus.end(), combined.begin(), combined.end());
      if (!report.conforms) {
        all_conform = false;
        log.warn(name + ": provenance graph does not conform (" +
                 std::to_string(report.violations.size()) + " violations)");
      }
    } catch (const std::exception& e) {
      log.error(name + ": " + e.what());
    }
  });

  const fs::path corpus_trig = out_dir / "corpus.trig";
  const fs::path corpus_nq = out_dir / "corpus.nq";
  write_file(corpus_trig, tkg::serialize_quads(corpus, tkg::QuadFormat::TriG, ns.prefixes()));
  write_file(corpus_nq, tkg::serialize_quads(corpus, tkg::QuadFormat::NQuads));
  outputs.push_back(corpus_trig.string());
  outputs.push_back(corpus_nq.string());
  std::sort(outputs.begin(), outputs.end());

  Json params;
  params["namespaces"] = tkg::namespaces_to_json(ns);
  params["shapes"] = shapes_path.empty() ? "<builtin>" : shapes_path;
  params["default_graph_union"] = cfg.default_graph_union;
  params["provenance_conforms"] = all_conform;
  write_run_summary(out_dir, "build-kg", params, record_paths, outputs, log);

  std::cout << "provenance conforms: " << (all_conform ? "true" : "false") << "\n";
  if (!log.errors.empty()) {
    for (const auto& e : log.errors) std::cerr << "error: " << e << "\n";
    return kExitInputError;
  }
  return all_conform ? kExitOk : kExitThresholdBreached;
}

// ---------------------------------------------------------------------------
// eval-cells / eval-table / eval-ie

struct PairedFiles {
  std::vector<std::pair<fs::path, fs::path>> pairs;  // (pred, gt) by shared stem
  std::vector<std::string> unmatched;
  std::vector<std::string> duplicates;  // same stem twice in one directory
};

PairedFiles pair_by_stem(const fs::path& pred_dir, const fs::path& gt_dir,
                         const std::set<std::string>& extensions) {
  PairedFiles out;
  std::map<std::string, fs::path> pred, gt;
  // alphabetically first file wins when stems collide (e.g. x.html next to
  // x.merged.xml); the collision is reported
  auto collect = [&](const fs::path& dir, std::map<std::string, fs::path>& into) {
    for (const auto& p : list_files(dir, extensions)) {
      if (!into.emplace(doc_stem(p), p).second) {
        out.duplicates.push_back("ignoring " + p.string() + " (same document as " +
                                 into.at(doc_stem(p)).string() + ")");
      }
    }
  };
  collect(pred_dir, pred);
  collect(gt_dir, gt);
  for (const auto& [stem, path] : pred) {
    if (auto it = gt.find(stem); it != gt.end()) {
      out.pairs.emplace_back(path, it->second);
    } else {
      out.unmatched.push_back("prediction without ground truth: " + path.string());
    }
  }
  for (const auto& [stem, path] : gt) {
    if (!pred.count(stem)) {
      out.unmatched.push_back("ground truth without prediction: " + path.string());
    }
  }
  return out;
}

struct EvalRow {
  std::string name;
  std::vector<double> scores;
};

int emit_eval_report(const std::string& command, const fs::path& out_dir,
                     const std::vector<std::string>& columns, std::vector<EvalRow> rows,
                     WorkLog& log, double fail_below, Json extra_params = Json::object()) {
  std::sort(rows.begin(), rows.end(),
            [](const EvalRow& a, const EvalRow& b) { return a.name < b.name; });
  EvalRow mean{"mean", std::vector<double>(columns.size(), 0.0)};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) mean.scores[c] += r.scores[c];
  }
  if (!rows.empty()) {
    for (auto& v : mean.scores) v /= static_cast<double>(rows.size());
  }

  std::string tsv = "image";
  for (const auto& c : columns) tsv += "\t" + c;
  tsv += "\n";
  Json per_image = Json::array();
  auto add_row = [&](const EvalRow& r) {
    tsv += r.name;
    Json jr;
    jr["image"] = r.name;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      tsv += "\t" + format_ratio(r.scores[c]);
      jr[columns[c]] = r.scores[c];
    }
    tsv += "\n";
    per_image.push_back(jr);
  };
  for (const auto& r : rows) add_row(r);
  add_row(mean);

  Json report;
  report["tool"] = "tablekg";
  report["version"] = kVersion;
  report["command"] = command;
  report["per_image"] = per_image;

  write_file(out_dir / (command + ".tsv"), tsv);
  write_file(out_dir / (command + ".json"), report.dump(2) + "\n");
  std::cout << tsv;

  extra_params["fail_below"] = fail_below;
  write_run_summary(out_dir, command, extra_params, {},
                    {(out_dir / (command + ".tsv")).string(),
                     (out_dir / (command + ".json")).string()},
                    log);
  if (!log.errors.empty()) {
    for (const auto& e : log.errors) std::cerr << "error: " << e << "\n";
    return kExitInputError;
  }
  if (fail_below > 0.0 && !mean.scores.empty() && mean.scores.front() < fail_below) {
    std::cerr << "mean " << columns.front() << " " << format_ratio(mean.scores.front())
              << " below threshold " << format_ratio(fail_below) << "\n";
    return kExitThresholdBreached;
  }
  return kExitOk;
}

std::vector<tkg::Polygon> cell_outlines(const tkg::PageDocument& page) {
  std::vector<tkg::Polygon> out;
  out.reserve(page.cells.size());
  for (const auto& c : page.cells) out.push_back(c.outline);
  return out;
}

int cmd_eval_cells(const std::string& pred_dir, const std::string& gt_dir,
                   const std::string& out_dir_arg, double fail_below, unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  WorkLog log;
  PairedFiles paired;
  try {
    paired = pair_by_stem(pred_dir, gt_dir, {".xml"});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  for (const auto& m : paired.unmatched) log.error(m);
  for (const auto& m : paired.duplicates) log.warn(m);

  std::vector<EvalRow> rows(paired.pairs.size());
  for_each_parallel(paired.pairs.size(), jobs, [&](std::size_t i) {
    const auto& [pred_path, gt_path] = paired.pairs[i];
    try {
      const auto pred = cell_outlines(tkg::parse_page(read_file(pred_path)));
      const auto gt = cell_outlines(tkg::parse_page(read_file(gt_path)));
      rows[i] = {doc_stem(pred_path), {tkg::mean_average_precision(pred, gt)}};
    } catch (const std::exception& e) {
      log.error(doc_stem(pred_path) + ": " + e.what());
    }
  });
  std::erase_if(rows, [](const EvalRow& r) { return r.name.empty(); });
  return emit_eval_report("eval-cells", out_dir, {"map"}, std::move(rows), log, fail_below);
}

tkg::LogicalTable load_table(const fs::path& path) {
  if (path.extension() == ".html" || path.extension() == ".htm") {
    return tkg::from_html(read_file(path));
  }
  return tkg::table_from_page(tkg::parse_page(read_file(path)));
}

int cmd_eval_table(const std::string& pred_dir, const std::string& gt_dir,
                   const std::string& out_dir_arg, double fail_below, unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  WorkLog log;
  PairedFiles paired;
  try {
    paired = pair_by_stem(pred_dir, gt_dir, {".html", ".htm", ".xml"});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  for (const auto& m : paired.unmatched) log.error(m);
  for (const auto& m : paired.duplicates) log.warn(m);

  std::vector<EvalRow> rows(paired.pairs.size());
  for_each_parallel(paired.pairs.size(), jobs, [&](std::size_t i) {
    const auto& [pred_path, gt_path] = paired.pairs[i];
    try {
      const tkg::LogicalTable pred = load_table(pred_path);
      const tkg::LogicalTable gt = load_table(gt_path);
      const double ted =
          tkg::ted_score(pred, gt, {tkg::CostMode::StructContent});
      const double ted_struct = tkg::ted_score(pred, gt, {tkg::CostMode::StructOnly});
      rows[i] = {doc_stem(pred_path), {ted, ted_struct}};
    } catch (const std::exception& e) {
      log.error(doc_stem(pred_path) + ": " + e.what());
    }
  });
  std::erase_if(rows, [](const EvalRow& r) { return r.name.empty(); });
  return emit_eval_report("eval-table", out_dir, {"ted", "ted_struct"}, std::move(rows),
                          log, fail_below);
}

int cmd_eval_ie(const std::string& pred_dir, const std::string& gt_dir,
                const std::string& out_dir_arg, double sim_threshold, double fail_below,
                unsigned jobs) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  WorkLog log;
  PairedFiles paired;
  try {
    paired = pair_by_stem(pred_dir, gt_dir, {".json"});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  for (const auto& m : paired.unmatched) log.error(m);
  for (const auto& m : paired.duplicates) log.warn(m);

  std::vector<EvalRow> rows(paired.pairs.size());
  for_each_parallel(paired.pairs.size(), jobs, [&](std::size_t i) {
    const auto& [pred_path, gt_path] = paired.pairs[i];
    try {
      const tkg::RecordFile pred = tkg::parse_records(read_file(pred_path));
      const tkg::RecordFile gt = tkg::parse_records(read_file(gt_path));
      const tkg::IeScores s = tkg::ie_scores(pred.records, gt.records, sim_threshold);
      rows[i] = {doc_stem(pred_path), {s.f1, s.precision, s.recall}};
    } catch (const std::exception& e) {
      log.error(doc_stem(pred_path) + ": " + e.what());
    }
  });
  std::erase_if(rows, [](const EvalRow& r) { return r.name.empty(); });
  return emit_eval_report("eval-ie", out_dir, {"f1", "precision", "recall"},
                          std::move(rows), log, fail_below);
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::vector<std::string>& record_paths, const std::string& out_dir_arg) {
  const fs::path out_dir = out_dir_arg.empty() ? fs::path(".") : fs::path(out_dir_arg);
  WorkLog log;
  std::string tsv =
      "file\tinstances\tproperties\tproperties_per_instance\tcell_provenanced\t"
      "cell_provenance_ratio\n";
  Json per_file = Json::array();
  std::vector<tkg::EntityRecord> all;
  for (const auto& path : record_paths) {
    try {
      const tkg::RecordFile file = tkg::parse_records(read_file(path));
      const tkg::ProvenanceStats s = tkg::provenance_stats(file.records);
      all.insert(all.end(), file.records.begin(), file.records.end());
      tsv += doc_stem(path) + "\t" + std::to_string(s.instances) + "\t" +
             std::to_string(s.total_values) + "\t" + format_ratio(s.values_per_instance) +
             "\t" + std::to_string(s.cell_provenanced) + "\t" + format_ratio(s.cell_ratio) +
             "\n";
      Json j;
      j["file"] = doc_stem(path);
      j["instances"] = s.instances;
      j["properties"] = s.total_values;
      j["properties_per_instance"] = s.values_per_instance;
      j["cell_provenanced"] = s.cell_provenanced;
      j["cell_provenance_ratio"] = s.cell_ratio;
      per_file.push_back(j);
    } catch (const std::exception& e) {
      log.error(path + ": " + e.what());
    }
  }
  const tkg::ProvenanceStats total = tkg::provenance_stats(all);
  tsv += "total\t" + std::to_string(total.instances) + "\t" +
         std::to_string(total.total_values) + "\t" + format_ratio(total.values_per_instance) +
         "\t" + std::to_string(total.cell_provenanced) + "\t" +
         format_ratio(total.cell_ratio) + "\n";

  Json report;
  report["per_file"] = per_file;
  report["total"] = {{"instances", total.instances},
                     {"properties", total.total_values},
                     {"properties_per_instance", total.values_per_instance},
                     {"cell_provenanced", total.cell_provenanced},
                     {"cell_provenance_ratio", total.cell_ratio}};
  write_file(out_dir / "stats.tsv", tsv);
  write_file(out_dir / "stats.json", report.dump(2) + "\n");
  std::cout << tsv;
  write_run_summary(out_dir, "stats", Json::object(), record_paths,
                    {(out_dir / "stats.tsv").string(), (out_dir / "stats.json").string()},
                    log);
  if (!log.errors.empty()) {
    for (const auto& e : log.errors) std::cerr << "error: " << e << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// overlay

std::string svg_points(const std::vector<tkg::Point>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += tkg::detail::format_coord(pts[i].x) + "," + tkg::detail::format_coord(pts[i].y);
  }
  return out;
}

int cmd_overlay(const std::string& page_path, const std::string& out_path, bool with_lines) {
  try {
    const tkg::PageDocument page = tkg::parse_page(read_file(page_path));
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(page.image_width) + "\" height=\"" +
           std::to_string(page.image_height) + "\" viewBox=\"0 0 " +
           std::to_string(page.image_width) + " " + std::to_string(page.image_height) +
           "\">\n";
    svg += "  <g class=\"cells\" fill=\"none\" stroke=\"#cc0000\" stroke-width=\"2\">\n";
    for (const auto& cell : page.cells) {
      svg += "    <polygon points=\"" + svg_points(cell.outline.vertices()) + "\"/>\n";
      const tkg::Point anchor = cell.outline.vertices().front();
      svg += "    <text x=\"" + tkg::detail::format_coord(anchor.x + 4) + "\" y=\"" +
             tkg::detail::format_coord(anchor.y + 16) +
             "\" fill=\"#cc0000\" stroke=\"none\" font-size=\"14\">" +
             tkg::detail::xml_escape(cell.id) + "</text>\n";
    }
    svg += "  </g>\n";
    if (with_lines) {
      svg += "  <g class=\"lines\" fill=\"none\" stroke=\"#0055cc\" stroke-width=\"1\">\n";
      for (const auto& line : page.lines) {
        svg += "    <polygon points=\"" + svg_points(line.outline.vertices()) + "\"/>\n";
      }
      svg += "  </g>\n";
    }
    svg += "</svg>\n";
    write_file(out_path, svg);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const std::string& graph_path, const std::string& shapes_path) {
  try {
    const std::vector<tkg::Quad> data = tkg::parse_nquads(read_file(graph_path));
    const std::vector<tkg::ShapeSpec> shapes =
        tkg::load_shapes(shapes_path.empty() ? tkg::default_provenance_shapes()
                                             : std::string_view(read_file(shapes_path)));
    const tkg::ValidationReport report = tkg::validate(data, shapes);
    std::cout << tkg::format_report(report);
    return report.conforms ? kExitOk : kExitThresholdBreached;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tablekg: table layouts + transcriptions -> logical tables, "
               "extraction records, and provenance-aware RDF"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  unsigned jobs = 0;
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--jobs", jobs, "worker pool size (default: hardware concurrency)");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "merge TSR cells and HTR lines into a text-filled table");
  std::vector<std::string> rec_pages;
  std::string rec_cells, rec_lines, rec_out_dir, rec_out, rec_html;
  std::string rec_basis = "line";
  double rec_threshold = 0.2;
  rec->add_option("--page", rec_pages, "PageXML with cells and lines together");
  rec->add_option("--cells", rec_cells, "PageXML carrying the cell regions");
  rec->add_option("--lines", rec_lines, "PageXML carrying the text lines");
  auto* rec_thr_opt = rec->add_option("--threshold", rec_threshold,
                                      "overlap ratio threshold for line assignment");
  rec->add_option("--overlap-basis", rec_basis,
                  "measure overlap against the 'line' or the 'cell' area")
      ->check(CLI::IsMember({"line", "cell"}));
  rec->add_option("--out-dir", rec_out_dir, "output directory (default .)");
  rec->add_option("--out", rec_out, "merged PageXML path (single document mode)");
  rec->add_option("--html", rec_html, "HTML table path (single document mode)");

  // extract
  auto* ext = app.add_subcommand("extract", "schema-guided row-level extraction");
  std::vector<std::string> ext_in;
  std::string ext_schema, ext_backend = "rule", ext_endpoint, ext_model, ext_out_dir;
  double ext_timeout = 30.0;
  bool ext_per_cell = false;
  ext->add_option("--in", ext_in, "HTML tables or merged PageXML files")->required();
  ext->add_option("--schema", ext_schema, "extraction schema (JSON)")->required();
  ext->add_option("--backend", ext_backend, "rule | http");
  ext->add_option("--endpoint", ext_endpoint, "http backend base URL");
  ext->add_option("--model", ext_model, "model name forwarded to the http backend");
  ext->add_option("--timeout", ext_timeout, "http timeout in seconds");
  ext->add_flag("--per-cell", ext_per_cell, "extract per cell instead of per row");
  ext->add_option("--out-dir", ext_out_dir, "output directory (default .)");

  // build-kg
  auto* bkg = app.add_subcommand("build-kg", "records -> assertion + provenance graphs");
  std::vector<std::string> bkg_records;
  std::string bkg_pages, bkg_ns, bkg_shapes, bkg_schema, bkg_out_dir;
  bool bkg_union = false;
  bkg->add_option("--records", bkg_records, "record files (JSON)")->required();
  bkg->add_option("--pages", bkg_pages, "directory with PageXML for cell coordinates");
  bkg->add_option("--namespaces", bkg_ns, "namespaces config (JSON)");
  bkg->add_option("--shapes", bkg_shapes, "provenance shapes (Turtle); default builtin");
  bkg->add_option("--schema", bkg_schema, "extraction schema to validate records against");
  bkg->add_option("--out-dir", bkg_out_dir, "output directory (default .)");
  auto* bkg_union_flag =
      bkg->add_flag("--default-graph-union", bkg_union,
                    "also copy assertion quads into the default graph");

  // eval-*
  auto* evc = app.add_subcommand("eval-cells", "cell detection mAP");
  std::string evc_pred, evc_gt, evc_out_dir;
  double evc_fail = 0.0;
  evc->add_option("--pred", evc_pred, "predicted PageXML directory")->required();
  evc->add_option("--gt", evc_gt, "ground-truth PageXML directory")->required();
  evc->add_option("--out-dir", evc_out_dir, "report directory (default .)");
  evc->add_option("--fail-below", evc_fail, "exit 1 when the mean score is lower");

  auto* evt = app.add_subcommand("eval-table", "TED and TED-struct table scores");
  std::string evt_pred, evt_gt, evt_out_dir;
  double evt_fail = 0.0;
  evt->add_option("--pred", evt_pred, "predicted tables (HTML or merged PageXML)")->required();
  evt->add_option("--gt", evt_gt, "ground-truth tables (HTML)")->required();
  evt->add_option("--out-dir", evt_out_dir, "report directory (default .)");
  evt->add_option("--fail-below", evt_fail, "exit 1 when the mean TED score is lower");

  auto* evi = app.add_subcommand("eval-ie", "IE precision/recall/F1");
  std::string evi_pred, evi_gt, evi_out_dir;
  double evi_sim = 0.6, evi_fail = 0.0;
  evi->add_option("--pred", evi_pred, "predicted record files directory")->required();
  evi->add_option("--gt", evi_gt, "ground-truth record files directory")->required();
  auto* evi_sim_opt =
      evi->add_option("--sim-threshold", evi_sim, "similarity cutoff for a true positive");
  evi->add_option("--out-dir", evi_out_dir, "report directory (default .)");
  evi->add_option("--fail-below", evi_fail, "exit 1 when the mean F1 is lower");

  // stats
  auto* st = app.add_subcommand("stats", "assertion graph descriptive statistics");
  std::vector<std::string> st_records;
  std::string st_out_dir;
  st->add_option("--records", st_records, "record files (JSON)")->required();
  st->add_option("--out-dir", st_out_dir, "report directory (default .)");

  // overlay
  auto* ov = app.add_subcommand("overlay", "SVG overlay of cell regions");
  std::string ov_page, ov_out;
  bool ov_lines = false;
  ov->add_option("--page", ov_page, "PageXML file")->required();
  ov->add_option("--out", ov_out, "SVG output path")->required();
  ov->add_flag("--lines", ov_lines, "include text line polygons as a second layer");

  // validate
  auto* va = app.add_subcommand("validate", "SHACL-lite validation of an N-Quads graph");
  std::string va_graph, va_shapes;
  va->add_option("--graph", va_graph, "N-Quads file")->required();
  va->add_option("--shapes", va_shapes, "shapes (Turtle); default builtin");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (jobs != 0) cfg.jobs = jobs;
    if (rec_thr_opt->count()) cfg.threshold = rec_threshold;
    if (evi_sim_opt->count()) cfg.sim_threshold = evi_sim;
    if (bkg_union_flag->count()) cfg.default_graph_union = bkg_union;

    if (rec->parsed()) {
      return cmd_reconstruct(rec_pages, rec_cells, rec_lines, cfg.threshold,
                             rec_basis == "cell" ? tkg::OverlapBasis::Cell
                                                 : tkg::OverlapBasis::Line,
                             rec_out_dir, rec_out, rec_html, cfg.jobs);
    }
    if (ext->parsed()) {
      return cmd_extract(ext_in, ext_schema, ext_backend, ext_endpoint, ext_model,
                         ext_timeout, ext_per_cell, ext_out_dir, cfg, cfg.jobs);
    }
    if (bkg->parsed()) {
      return cmd_build_kg(bkg_records, bkg_pages, bkg_ns, bkg_shapes, bkg_schema,
                          bkg_out_dir, cfg, cfg.jobs);
    }
    if (evc->parsed()) {
      return cmd_eval_cells(evc_pred, evc_gt, evc_out_dir, evc_fail, cfg.jobs);
    }
    if (evt->parsed()) {
      return cmd_eval_table(evt_pred, evt_gt, evt_out_dir, evt_fail, cfg.jobs);
    }
    if (evi->parsed()) {
      return cmd_eval_ie(evi_pred, evi_gt, evi_out_dir, cfg.sim_threshold, evi_fail,
                         cfg.jobs);
    }
    if (st->parsed()) return cmd_stats(st_records, st_out_dir);
    if (ov->parsed()) return cmd_overlay(ov_page, ov_out, ov_lines);
    if (va->parsed()) return cmd_validate(va_graph, va_shapes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
