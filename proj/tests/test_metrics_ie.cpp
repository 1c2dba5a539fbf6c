#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "tablekg/metrics.hpp"

using namespace tkg;

namespace {

EntityRecord person(int row, std::vector<std::pair<std::string, std::string>> values) {
  EntityRecord r{"person", row, {}};
  for (auto& [prop, value] : values) {
    r.values.push_back({prop, ValueKind::Literal, value, {},
                        ValueProvenance{row, std::nullopt, std::nullopt}});
  }
  return r;
}

}  // namespace

TEST_CASE("identity alignment") {
  const std::vector<EntityRecord> records = {
      person(0, {{"name", "Jan Jansen"}, {"rank", "sergeant"}}),
      person(1, {{"name", "Willem Smit"}, {"rank", "fuselier"}})};
  const auto pairs = align_entities(records, records);
  REQUIRE(pairs.size() == 2);
  for (const auto& [i, j] : pairs) CHECK(i == j);
}

TEST_CASE("swapped entities are re-aligned") {
  const std::vector<EntityRecord> gt = {
      person(0, {{"name", "Jan Jansen"}, {"place", "Amsterdam"}}),
      person(1, {{"name", "Willem Smit"}, {"place", "Delft"}})};
  const std::vector<EntityRecord> pred = {gt[1], gt[0]};
  const auto pairs = align_entities(pred, gt);
  REQUIRE(pairs.size() == 2);
  std::map<std::size_t, std::size_t> m(pairs.begin(), pairs.end());
  CHECK(m.at(0) == 1);
  CHECK(m.at(1) == 0);
}

TEST_CASE("three predictions against two ground truths yields two pairs") {
  const std::vector<EntityRecord> gt = {person(0, {{"name", "Jan"}}),
                                        person(1, {{"name", "Piet"}})};
  const std::vector<EntityRecord> pred = {person(0, {{"name", "Jan"}}),
                                          person(1, {{"name", "Piet"}}),
                                          person(2, {{"name", "Kees"}})};
  CHECK(align_entities(pred, gt).size() == 2);
}

TEST_CASE("alignment equals brute force on random record sets") {
  std::mt19937 rng(6502);
  for (int iter = 0; iter < 100; ++iter) {
    const auto pred = gen::rand_records(rng, 5);
    const auto gt = gen::rand_records(rng, 5);
    std::vector<std::vector<double>> sim(pred.size(), std::vector<double>(gt.size()));
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (std::size_t j = 0; j < gt.size(); ++j) {
        sim[i][j] = tkg::detail::entity_similarity(flatten_values(pred[i]),
                                                   flatten_values(gt[j]));
      }
    }
    double total = 0;
    std::set<std::size_t> seen_i, seen_j;
    for (const auto& [i, j] : align_entities(pred, gt)) {
      total += sim[i][j];
      CHECK(seen_i.insert(i).second);
      CHECK(seen_j.insert(j).second);
    }
    CHECK(total == Catch::Approx(oracle::brute_force_best_total(sim)).margin(1e-9));
  }
}

TEST_CASE("ie scoring anchor: 4 of 6 predicted, 7 expected") {
  // One real person plus noise rows; two further predicted entities are empty
  // and contribute nothing.
  const std::vector<EntityRecord> gt = {person(0, {{"name", "Jan Jansen"},
                                                   {"birth_date", "12-03-1821"},
                                                   {"birth_place", "Amsterdam"},
                                                   {"rank", "sergeant"},
                                                   {"regiment", "7e bataljon"},
                                                   {"death_place", "Batavia"},
                                                   {"death_date", "02-01-1850"}})};
  const std::vector<EntityRecord> pred = {
      person(0, {{"name", "Jan Jansen"},         // correct
                 {"birth_date", "12-03-1821"},   // correct
                 {"birth_place", "Amsterdnm"},   // 1 edit in 9 -> 0.889, correct
                 {"rank", "sergeant"},           // correct
                 {"regiment", "xxxxxxxxxx"}}),   // wrong
      person(1, {{"name", "zzzzzzzz"}}),         // unmatched noise
      person(2, {}),                             // empty
      person(3, {})};
  const IeScores s = ie_scores(pred, gt, 0.6);
  CHECK(s.tp == 4);
  CHECK(s.predicted == 6);
  CHECK(s.expected == 7);
  CHECK(s.precision == Catch::Approx(0.6667).margin(5e-5));
  CHECK(s.recall == Catch::Approx(0.5714).margin(5e-5));
  CHECK(s.f1 == Catch::Approx(0.6154).margin(5e-5));
}

TEST_CASE("exact prediction scores ones") {
  const std::vector<EntityRecord> gt = {person(0, {{"name", "Jan"}, {"rank", "korporaal"}}),
                                        person(1, {{"name", "Piet"}})};
  const IeScores s = ie_scores(gt, gt);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);
}

TEST_CASE("all-dissimilar values score zero") {
  const std::vector<EntityRecord> gt = {person(0, {{"name", "Jan Jansen"}})};
  const std::vector<EntityRecord> pred = {person(0, {{"name", "xxxxxxxxxxxx"}})};
  const IeScores s = ie_scores(pred, gt);
  CHECK(s.tp == 0);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("nested attributes are flattened into the counts") {
  EntityRecord gt_rec{"person", 0, {}};
  gt_rec.values.push_back({"name", ValueKind::Literal, "Jan", {},
                           ValueProvenance{0, std::nullopt, std::nullopt}});
  PropertyValue birth{"birth", ValueKind::NamedEntity, "", {},
                      ValueProvenance{0, std::nullopt, std::nullopt}};
  birth.attributes.push_back({"date", "12-03-1821",
                              ValueProvenance{0, std::nullopt, std::nullopt}});
  birth.attributes.push_back({"place", "Amsterdam",
                              ValueProvenance{0, std::nullopt, std::nullopt}});
  gt_rec.values.push_back(birth);

  CHECK(flatten_values(gt_rec).size() == 3);  // name, birth.date, birth.place

  EntityRecord pred_rec = gt_rec;
  pred_rec.values[1].attributes[1].value = "xxxx";  // birth.place wrong
  const IeScores s = ie_scores({pred_rec}, {gt_rec});
  CHECK(s.predicted == 3);
  CHECK(s.expected == 3);
  CHECK(s.tp == 2);
}

TEST_CASE("counting identities hold on random records") {
  std::mt19937 rng(1101);
  for (int iter = 0; iter < 50; ++iter) {
    const auto pred = gen::rand_records(rng, 4);
    const auto gt = gen::rand_records(rng, 4);
    const IeScores s = ie_scores(pred, gt);
    std::size_t pred_total = 0, gt_total = 0;
    for (const auto& r : pred) pred_total += flatten_values(r).size();
    for (const auto& r : gt) gt_total += flatten_values(r).size();
    CHECK(s.predicted == pred_total);
    CHECK(s.expected == gt_total);
    CHECK(s.tp <= std::min(pred_total, gt_total));
    if (s.precision + s.recall > 0) {
      CHECK(s.f1 == Catch::Approx(2 * s.precision * s.recall / (s.precision + s.recall)));
    }
  }
}
