#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

class TempDir {
 public:
  TempDir() {
    dir_ = fs::temp_directory_path() /
           ("tablekg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }
  const fs::path& path() const { return dir_; }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

CliResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path log = workdir / "cli_output.log";
  const std::string cmd =
      std::string(TKG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kData = TKG_TEST_DATA_DIR;
const std::string kRepoData = TKG_REPO_DATA_DIR;

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("cli pipeline: reconstruct, extract, build-kg, validate") {
  TempDir tmp;
  const fs::path out = tmp.path();

  // reconstruct from the combined fixture
  CliResult r = run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " +
                            out.string(),
                        out);
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(out / "page_profiles.merged.xml"));
  REQUIRE(fs::exists(out / "page_profiles.html"));
  REQUIRE(fs::exists(out / "page_profiles.unassigned.txt"));
  CHECK(slurp(out / "page_profiles.unassigned.txt").find("l14") == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "run_summary.json"));
  CHECK(summary.at("command") == "reconstruct");
  CHECK(summary.at("errors").empty());

  // deterministic outputs: golden comparison
  CHECK(slurp(out / "page_profiles.merged.xml") ==
        slurp(fs::path(kData) / "golden/page_profiles.merged.xml"));
  CHECK(slurp(out / "page_profiles.html") ==
        slurp(fs::path(kData) / "golden/page_profiles.html"));

  // extract with the rule backend
  r = run_cli("extract --in " + (out / "page_profiles.merged.xml").string() + " --schema " +
                  kRepoData + "/schema/person.json --out-dir " + out.string(),
              out);
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(out / "page_profiles.records.json"));
  CHECK(slurp(out / "page_profiles.records.json") ==
        slurp(fs::path(kData) / "golden/page_profiles.records.json"));

  // build the knowledge graph
  r = run_cli("build-kg --records " + (out / "page_profiles.records.json").string() +
                  " --pages " + out.string() + " --namespaces " + kRepoData +
                  "/namespaces.json --out-dir " + out.string(),
              out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("provenance conforms: true") != std::string::npos);
  REQUIRE(fs::exists(out / "page_profiles.trig"));
  REQUIRE(fs::exists(out / "page_profiles.nq"));
  REQUIRE(fs::exists(out / "corpus.trig"));
  CHECK(slurp(out / "page_profiles.trig") ==
        slurp(fs::path(kData) / "golden/page_profiles.trig"));

  // validate the emitted graph
  r = run_cli("validate --graph " + (out / "page_profiles.nq").string(), out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("conforms: true") != std::string::npos);

  // breaking the graph flips the exit code to 1
  std::string nq = slurp(out / "page_profiles.nq");
  std::string broken;
  std::istringstream lines(nq);
  for (std::string line; std::getline(lines, line);) {
    if (line.find("rowIndex") == std::string::npos) broken += line + "\n";
  }
  {
    std::ofstream f(out / "broken.nq", std::ios::binary);
    f << broken;
  }
  r = run_cli("validate --graph " + (out / "broken.nq").string(), out);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("conforms: false") != std::string::npos);
}

TEST_CASE("cli reconstruct with separate cells and lines files") {
  TempDir tmp;
  const fs::path out = tmp.path();
  const CliResult r = run_cli("reconstruct --cells " + kData +
                                  "/page_cells_only.xml --lines " + kData +
                                  "/page_lines_only.xml --out " +
                                  (out / "merged.xml").string() + " --html " +
                                  (out / "table.html").string() + " --out-dir " +
                                  out.string(),
                              out);
  CHECK(r.exit_code == 0);
  // same table as the single-file fixture
  CHECK(slurp(out / "table.html") == slurp(fs::path(kData) / "golden/page_profiles.html"));
}

TEST_CASE("cli reconstruct reports malformed inputs with exit 2") {
  TempDir tmp;
  const CliResult r = run_cli("reconstruct --page " + kData + "/malformed.xml --out-dir " +
                                  tmp.path().string(),
                              tmp.path());
  CHECK(r.exit_code == 2);
  const auto summary = nlohmann::json::parse(slurp(tmp.path() / "run_summary.json"));
  CHECK(summary.at("errors").size() == 1);
}

TEST_CASE("cli eval commands on identical inputs") {
  TempDir tmp;
  const fs::path pred = tmp.path() / "pred";
  const fs::path gt = tmp.path() / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  fs::copy_file(fs::path(kData) / "page_profiles.xml", pred / "doc1.xml");
  fs::copy_file(fs::path(kData) / "page_profiles.xml", gt / "doc1.xml");

  CliResult r = run_cli("eval-cells --pred " + pred.string() + " --gt " + gt.string() +
                            " --out-dir " + tmp.path().string(),
                        tmp.path());
  CHECK(r.exit_code == 0);
  const std::string tsv = slurp(tmp.path() / "eval-cells.tsv");
  CHECK(tsv.find("doc1\t1.0000") != std::string::npos);
  CHECK(tsv.find("mean\t1.0000") != std::string::npos);

  // eval-table on the merged output vs GT HTML
  const fs::path pred_t = tmp.path() / "pred_t";
  const fs::path gt_t = tmp.path() / "gt_t";
  fs::create_directories(pred_t);
  fs::create_directories(gt_t);
  run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " + pred_t.string(),
          tmp.path());
  fs::copy_file(fs::path(kData) / "gt_profiles.html", gt_t / "page_profiles.html");
  r = run_cli("eval-table --pred " + pred_t.string() + " --gt " + gt_t.string() +
                  " --out-dir " + tmp.path().string(),
              tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.path() / "eval-table.tsv").find("page_profiles\t1.0000\t1.0000") !=
        std::string::npos);

  // mismatched stems are input errors
  fs::copy_file(fs::path(kData) / "page_profiles.xml", pred / "only_in_pred.xml");
  r = run_cli("eval-cells --pred " + pred.string() + " --gt " + gt.string() +
                  " --out-dir " + tmp.path().string(),
              tmp.path());
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli eval-ie and stats") {
  TempDir tmp;
  const fs::path out = tmp.path();
  run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " + out.string(),
          out);
  const fs::path pred = out / "pred";
  const fs::path gt = out / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  run_cli("extract --in " + (out / "page_profiles.merged.xml").string() + " --schema " +
              kRepoData + "/schema/person.json --out-dir " + pred.string(),
          out);
  fs::copy_file(pred / "page_profiles.records.json", gt / "page_profiles.records.json");

  CliResult r = run_cli("eval-ie --pred " + pred.string() + " --gt " + gt.string() +
                            " --out-dir " + out.string(),
                        out);
  CHECK(r.exit_code == 0);
  CHECK(slurp(out / "eval-ie.tsv").find("page_profiles\t1.0000\t1.0000\t1.0000") !=
        std::string::npos);

  r = run_cli("stats --records " + (pred / "page_profiles.records.json").string() +
                  " --out-dir " + out.string(),
              out);
  CHECK(r.exit_code == 0);
  const std::string stats = slurp(out / "stats.tsv");
  CHECK(stats.find("page_profiles\t3\t12\t4.0000\t12\t1.0000") != std::string::npos);
  CHECK(stats.find("total\t3\t12\t4.0000\t12\t1.0000") != std::string::npos);
}

TEST_CASE("cli overlay") {
  TempDir tmp;
  const fs::path svg_path = tmp.path() / "overlay.svg";
  CliResult r = run_cli("overlay --page " + kData + "/page_profiles.xml --out " +
                            svg_path.string() + " --lines",
                        tmp.path());
  CHECK(r.exit_code == 0);
  const std::string svg = slurp(svg_path);
  CHECK(count_occurrences(svg, "<polygon") == 12 + 14);  // cells + lines
  CHECK(count_occurrences(svg, "<text") == 12);
  CHECK(svg.find("c_r2_c3") != std::string::npos);

  r = run_cli("overlay --page " + kData + "/page_small.xml --out " + svg_path.string(),
              tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(count_occurrences(slurp(svg_path), "<polygon") == 1);

  r = run_cli("overlay --page " + kData + "/malformed.xml --out " + svg_path.string(),
              tmp.path());
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli empty reconstruct input exits 0") {
  TempDir tmp;
  const CliResult r =
      run_cli("reconstruct --out-dir " + tmp.path().string(), tmp.path());
  CHECK(r.exit_code == 0);
}

TEST_CASE("cli five-document eval suite reports five rows plus mean") {
  TempDir tmp;
  const fs::path pred = tmp.path() / "pred";
  const fs::path gt = tmp.path() / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  for (int i = 0; i < 5; ++i) {
    const std::string name = "doc" + std::to_string(i) + ".xml";
    fs::copy_file(fs::path(kData) / "page_profiles.xml", pred / name);
    fs::copy_file(fs::path(kData) / "page_profiles.xml", gt / name);
  }
  const CliResult r = run_cli("--jobs 4 eval-cells --pred " + pred.string() + " --gt " +
                                  gt.string() + " --out-dir " + tmp.path().string(),
                              tmp.path());
  CHECK(r.exit_code == 0);
  const std::string tsv = slurp(tmp.path() / "eval-cells.tsv");
  CHECK(count_occurrences(tsv, "\n") == 7);  // header + 5 images + mean
  CHECK(tsv.find("doc4\t1.0000") != std::string::npos);
  CHECK(tsv.find("mean\t1.0000") != std::string::npos);
}

TEST_CASE("cli config file supplies defaults and flags win") {
  TempDir tmp;
  // one line covering cell A by half: assigned at 0.2, unassigned at 0.6
  const char* page = R"(<?xml version="1.0"?>
<PcGts xmlns="http://schema.primaresearch.org/PAGE/gts/pagecontent/2019-07-15">
 <Page imageFilename="x.jpg" imageWidth="200" imageHeight="100">
  <TableRegion id="t">
   <TableCell id="A" row="0" col="0"><Coords points="0,0 100,0 100,100 0,100"/></TableCell>
  </TableRegion>
  <TextRegion id="r">
   <TextLine id="l1"><Coords points="50,40 150,40 150,60 50,60"/>
    <TextEquiv><Unicode>halfway</Unicode></TextEquiv></TextLine>
  </TextRegion>
 </Page></PcGts>)";
  {
    std::ofstream f(tmp.path() / "half.xml");
    f << page;
  }
  {
    std::ofstream f(tmp.path() / "config.json");
    f << R"({"threshold": 0.6})";
  }

  // config threshold 0.6: the half-covered line stays unassigned
  CliResult r = run_cli("--config " + (tmp.path() / "config.json").string() +
                            " reconstruct --page " + (tmp.path() / "half.xml").string() +
                            " --out-dir " + (tmp.path() / "a").string(),
                        tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.path() / "a/half.unassigned.txt").find("l1") == 0);

  // explicit flag beats the config value
  r = run_cli("--config " + (tmp.path() / "config.json").string() +
                  " reconstruct --page " + (tmp.path() / "half.xml").string() +
                  " --threshold 0.2 --out-dir " + (tmp.path() / "b").string(),
              tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.path() / "b/half.unassigned.txt").empty());
  CHECK(slurp(tmp.path() / "b/half.html").find("halfway") != std::string::npos);
}

TEST_CASE("cli fail-below breaches exit with code 1") {
  TempDir tmp;
  const fs::path pred = tmp.path() / "pred";
  const fs::path gt = tmp.path() / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  fs::copy_file(fs::path(kData) / "golden/page_profiles.html", pred / "d.html");
  fs::copy_file(fs::path(kData) / "gt_profiles.html", gt / "d.html");
  CliResult r = run_cli("eval-table --pred " + pred.string() + " --gt " + gt.string() +
                            " --fail-below 0.5 --out-dir " + tmp.path().string(),
                        tmp.path());
  CHECK(r.exit_code == 0);  // identical tables score 1.0
  // impossible bar: exit 1
  r = run_cli("eval-table --pred " + pred.string() + " --gt " + gt.string() +
                  " --fail-below 1.1 --out-dir " + tmp.path().string(),
              tmp.path());
  CHECK(r.exit_code == 1);
}

TEST_CASE("cli extract accepts corrected html in place of machine output") {
  TempDir tmp;
  std::string html = slurp(fs::path(kData) / "golden/page_profiles.html");
  const std::string target = ">Delft<";
  REQUIRE(html.find(target) != std::string::npos);
  html.replace(html.find(target), target.size(), ">Schiedam<");
  {
    std::ofstream f(tmp.path() / "corrected.html", std::ios::binary);
    f << html;
  }
  const CliResult r = run_cli("extract --in " + (tmp.path() / "corrected.html").string() +
                                  " --schema " + kRepoData +
                                  "/schema/person.json --out-dir " + tmp.path().string(),
                              tmp.path());
  CHECK(r.exit_code == 0);
  const std::string records = slurp(tmp.path() / "corrected.records.json");
  CHECK(records.find("Schiedam") != std::string::npos);
  CHECK(records.find("\"Delft\"") == std::string::npos);
  CHECK(records.find("c_r2_c2") != std::string::npos);  // cell ids survived the edit
}

TEST_CASE("cli build-kg default graph union flag") {
  TempDir tmp;
  const fs::path out = tmp.path();
  run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " + out.string(),
          out);
  run_cli("extract --in " + (out / "page_profiles.merged.xml").string() + " --schema " +
              kRepoData + "/schema/person.json --out-dir " + out.string(),
          out);
  const fs::path kg = out / "kg";
  const CliResult r = run_cli(
      "build-kg --records " + (out / "page_profiles.records.json").string() + " --pages " +
          out.string() + " --default-graph-union --out-dir " + kg.string(),
      out);
  CHECK(r.exit_code == 0);
  const std::string nq = slurp(kg / "page_profiles.nq");
  // assertion triples appear once per provenance graph plus once in the
  // default graph (three terms, no graph label)
  CHECK(nq.find("\"Jan Jansen\" <http") != std::string::npos);
  CHECK(nq.find("\"Jan Jansen\" .") != std::string::npos);
}

TEST_CASE("cli validate with explicit shapes files") {
  TempDir tmp;
  const fs::path out = tmp.path();
  run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " + out.string(),
          out);
  run_cli("extract --in " + (out / "page_profiles.merged.xml").string() + " --schema " +
              kRepoData + "/schema/person.json --out-dir " + out.string(),
          out);
  run_cli("build-kg --records " + (out / "page_profiles.records.json").string() +
              " --pages " + out.string() + " --out-dir " + out.string(),
          out);
  CliResult r = run_cli("validate --graph " + (out / "page_profiles.nq").string() +
                            " --shapes " + kRepoData + "/schema/provenance_shapes.ttl",
                        out);
  CHECK(r.exit_code == 0);
  r = run_cli("validate --graph " + (out / "page_profiles.nq").string() + " --shapes " +
                  kData + "/bad_shapes.ttl",
              out);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("sh:pattern") != std::string::npos);
}

TEST_CASE("cli multi-document corpus and worker-pool determinism") {
  TempDir tmp;
  const fs::path out = tmp.path();
  // two distinct documents: the fixture and an edited copy under another name
  std::string html = slurp(fs::path(kData) / "golden/page_profiles.html");
  {
    std::ofstream f(out / "doc_a.html", std::ios::binary);
    f << html;
  }
  html.replace(html.find(">Delft<"), 7, ">Gouda<");
  {
    std::ofstream f(out / "doc_b.html", std::ios::binary);
    f << html;
  }
  CliResult r = run_cli("extract --in " + (out / "doc_a.html").string() + " --in " +
                            (out / "doc_b.html").string() + " --schema " + kRepoData +
                            "/schema/person.json --out-dir " + out.string(),
                        out);
  REQUIRE(r.exit_code == 0);

  const fs::path kg1 = out / "kg1";
  const fs::path kg4 = out / "kg4";
  const std::string records_args = " --records " + (out / "doc_a.records.json").string() +
                                   " --records " + (out / "doc_b.records.json").string();
  r = run_cli("--jobs 1 build-kg" + records_args + " --out-dir " + kg1.string(), out);
  REQUIRE(r.exit_code == 0);
  r = run_cli("--jobs 4 build-kg" + records_args + " --out-dir " + kg4.string(), out);
  REQUIRE(r.exit_code == 0);

  // corpus serialization is independent of the worker pool size
  CHECK(slurp(kg1 / "corpus.nq") == slurp(kg4 / "corpus.nq"));
  CHECK(slurp(kg1 / "corpus.trig") == slurp(kg4 / "corpus.trig"));

  const std::string corpus = slurp(kg1 / "corpus.nq");
  CHECK(corpus.find("doc_a.html/row-2") != std::string::npos);
  CHECK(corpus.find("doc_b.html/row-2") != std::string::npos);
  CHECK(corpus.find("\"Delft\"") != std::string::npos);
  CHECK(corpus.find("\"Gouda\"") != std::string::npos);
}

TEST_CASE("cli eval warns when two files share a document stem") {
  TempDir tmp;
  const fs::path pred = tmp.path() / "pred";
  const fs::path gt = tmp.path() / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  fs::copy_file(fs::path(kData) / "gt_profiles.html", pred / "d.html");
  fs::copy_file(fs::path(kData) / "page_profiles.xml", pred / "d.merged.xml");
  fs::copy_file(fs::path(kData) / "gt_profiles.html", gt / "d.html");
  const CliResult r = run_cli("eval-table --pred " + pred.string() + " --gt " + gt.string() +
                                  " --out-dir " + tmp.path().string(),
                              tmp.path());
  CHECK(r.exit_code == 0);  // the alphabetically first (d.html) is scored
  CHECK(slurp(tmp.path() / "eval-table.tsv").find("d\t1.0000\t1.0000") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(tmp.path() / "run_summary.json"));
  REQUIRE(summary.at("warnings").size() == 1);
}

TEST_CASE("cli build-kg substitutes row provenance for dangling cell ids") {
  TempDir tmp;
  const fs::path out = tmp.path();
  run_cli("reconstruct --page " + kData + "/page_profiles.xml --out-dir " + out.string(),
          out);
  run_cli("extract --in " + (out / "page_profiles.merged.xml").string() + " --schema " +
              kRepoData + "/schema/person.json --out-dir " + out.string(),
          out);
  std::string records = slurp(out / "page_profiles.records.json");
  const std::string target = "\"c_r0_c0\"";
  REQUIRE(records.find(target) != std::string::npos);
  while (records.find(target) != std::string::npos) {
    records.replace(records.find(target), target.size(), "\"ghost_cell\"");
  }
  {
    std::ofstream f(out / "page_profiles.records.json", std::ios::binary);
    f << records;
  }
  const CliResult r = run_cli("build-kg --records " +
                                  (out / "page_profiles.records.json").string() +
                                  " --pages " + out.string() + " --out-dir " +
                                  (out / "kg").string(),
                              out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("provenance conforms: true") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(out / "kg/run_summary.json"));
  bool warned = false;
  for (const auto& w : summary.at("warnings")) {
    warned = warned || w.get<std::string>().find("ghost_cell") != std::string::npos;
  }
  CHECK(warned);
  // no graph may reference the unresolvable cell
  CHECK(slurp(out / "kg/page_profiles.nq").find("ghost_cell") == std::string::npos);
}

TEST_CASE("cli handles empty tables and empty record files") {
  TempDir tmp;
  const fs::path out = tmp.path();
  {
    std::ofstream f(out / "empty.html");
    f << "<table></table>";
  }
  CliResult r = run_cli("extract --in " + (out / "empty.html").string() + " --schema " +
                            kRepoData + "/schema/person.json --out-dir " + out.string(),
                        out);
  CHECK(r.exit_code == 0);
  const auto records = nlohmann::json::parse(slurp(out / "empty.records.json"));
  CHECK(records.at("records").empty());

  r = run_cli("build-kg --records " + (out / "empty.records.json").string() +
                  " --out-dir " + (out / "kg").string(),
              out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("provenance conforms: true") != std::string::npos);
  CHECK(slurp(out / "kg/empty.nq").empty());
}
