#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tablekg/extract.hpp"
#include "tablekg/geometry.hpp"
#include "tablekg/hungarian.hpp"
#include "tablekg/table.hpp"
#include "tablekg/text.hpp"

namespace tkg {

struct MatchedPair {
  std::size_t pred_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;
};

// Optimal one-to-one partial matching of predicted to ground-truth boxes,
// maximizing total IoU; zero-IoU pairs are excluded.
inline std::vector<MatchedPair> match_boxes(const std::vector<Polygon>& pred,
                                            const std::vector<Polygon>& gt) {
  std::vector<std::vector<double>> sim(pred.size(), std::vector<double>(gt.size(), 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) sim[i][j] = iou(pred[i], gt[j]);
  }
  std::vector<MatchedPair> pairs;
  for (const auto& [i, j] : max_similarity_matching(sim, pred.size(), gt.size())) {
    pairs.push_back({i, j, sim[i][j]});
  }
  return pairs;
}

struct MatchResult {
  std::vector<MatchedPair> pairs;  // pairs meeting the threshold
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

inline MatchResult threshold_match(const std::vector<MatchedPair>& pairs,
                                   std::size_t n_pred, std::size_t n_gt,
                                   double threshold) {
  MatchResult mr;
  for (const auto& p : pairs) {
    if (p.iou >= threshold) mr.pairs.push_back(p);
  }
  mr.tp = mr.pairs.size();
  mr.fp = n_pred - mr.tp;
  mr.fn = n_gt - mr.tp;
  return mr;
}

// precision = TP/(TP+FP), recall = TP/(TP+FN); an empty/empty instance scores
// (1,1), otherwise 0/0 counts as 0.
inline std::pair<double, double> precision_recall_at(const std::vector<MatchedPair>& pairs,
                                                     std::size_t n_pred, std::size_t n_gt,
                                                     double threshold) {
  if (n_pred == 0 && n_gt == 0) return {1.0, 1.0};
  const MatchResult mr = threshold_match(pairs, n_pred, n_gt, threshold);
  const double precision =
      n_pred == 0 ? 0.0 : static_cast<double>(mr.tp) / static_cast<double>(n_pred);
  const double recall =
      n_gt == 0 ? 0.0 : static_cast<double>(mr.tp) / static_cast<double>(n_gt);
  return {precision, recall};
}

// Area under the precision-recall curve over IoU thresholds 0.1..1.0 step 0.1:
// points sorted by recall (precision desc), left-anchored at recall 0, equal
// recalls collapsed to max precision, trapezoidal rule.
inline double mean_average_precision(const std::vector<Polygon>& pred,
                                     const std::vector<Polygon>& gt) {
  const std::vector<MatchedPair> pairs = match_boxes(pred, gt);
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (int k = 1; k <= 10; ++k) {
    const double threshold = k / 10.0;
    const auto [p, r] = precision_recall_at(pairs, pred.size(), gt.size(), threshold);
    points.emplace_back(r, p);
  }
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  });
  points.insert(points.begin(), {0.0, points.front().second});
  std::vector<std::pair<double, double>> curve;
  for (const auto& pt : points) {
    if (!curve.empty() && curve.back().first == pt.first) {
      curve.back().second = std::max(curve.back().second, pt.second);
    } else {
      curve.push_back(pt);
    }
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].first - curve[i - 1].first) *
            (curve[i].second + curve[i - 1].second) / 2.0;
  }
  return std::clamp(area, 0.0, 1.0);
}

enum class CostMode { StructOnly, StructContent };

struct CostModel {
  CostMode mode = CostMode::StructOnly;
};

namespace detail {

inline std::string content_key(const TreeNode& n) {
  // Newlines have no canonical encoding in GT HTML; compare them as spaces.
  std::string t = n.text;
  std::replace(t.begin(), t.end(), '\n', ' ');
  return t;
}

inline double rename_cost(const TreeNode& a, const TreeNode& b, const CostModel& cost) {
  const bool struct_mismatch =
      a.tag != b.tag ||
      (a.tag == "td" && (a.col_span != b.col_span || a.row_span != b.row_span));
  if (struct_mismatch) return 1.0;
  if (cost.mode == CostMode::StructContent && a.tag == "td") {
    return normalized_edit_distance(content_key(a), content_key(b));
  }
  return 0.0;
}

struct FlatTree {
  std::vector<const TreeNode*> nodes;  // postorder
  std::vector<std::size_t> lml;        // leftmost leaf descendant, postorder index
  std::vector<std::size_t> keyroots;

  explicit FlatTree(const TreeNode& root) {
    build(root);
    std::map<std::size_t, std::size_t> last_with_lml;  // lml -> highest postorder index
    for (std::size_t i = 0; i < nodes.size(); ++i) last_with_lml[lml[i]] = i;
    for (const auto& [_, i] : last_with_lml) keyroots.push_back(i);
    std::sort(keyroots.begin(), keyroots.end());
  }

 private:
  std::size_t build(const TreeNode& n) {
    std::size_t first_leaf = nodes.size();
    bool have_first = false;
    for (const auto& c : n.children) {
      const std::size_t child_lml = build(c);
      if (!have_first) {
        first_leaf = child_lml;
        have_first = true;
      }
    }
    if (!have_first) first_leaf = nodes.size();
    nodes.push_back(&n);
    lml.push_back(first_leaf);
    return first_leaf;
  }
};

}  // namespace detail

// Zhang-Shasha ordered-tree edit distance with unit insert/delete cost and the
// table cost model for renames.
inline double tree_edit_distance(const TableTree& tree_a, const TableTree& tree_b,
                                 const CostModel& cost = {}) {
  const detail::FlatTree a(tree_a);
  const detail::FlatTree b(tree_b);
  const std::size_t n = a.nodes.size();
  const std::size_t m = b.nodes.size();
  std::vector<std::vector<double>> treedist(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> fd(n + 1, std::vector<double>(m + 1, 0.0));

  for (const std::size_t i : a.keyroots) {
    for (const std::size_t j : b.keyroots) {
      const std::size_t li = a.lml[i];
      const std::size_t lj = b.lml[j];
      // forest distance over postorder ranges [li..i] x [lj..j]
      fd[li][lj] = 0.0;
      for (std::size_t x = li; x <= i; ++x) fd[x + 1][lj] = fd[x][lj] + 1.0;
      for (std::size_t y = lj; y <= j; ++y) fd[li][y + 1] = fd[li][y] + 1.0;
      for (std::size_t x = li; x <= i; ++x) {
        for (std::size_t y = lj; y <= j; ++y) {
          if (a.lml[x] == li && b.lml[y] == lj) {
            const double rename =
                detail::rename_cost(*a.nodes[x], *b.nodes[y], cost);
            fd[x + 1][y + 1] = std::min({fd[x][y + 1] + 1.0, fd[x + 1][y] + 1.0,
                                         fd[x][y] + rename});
            treedist[x][y] = fd[x + 1][y + 1];
          } else {
            fd[x + 1][y + 1] =
                std::min({fd[x][y + 1] + 1.0, fd[x + 1][y] + 1.0,
                          fd[a.lml[x]][b.lml[y]] + treedist[x][y]});
          }
        }
      }
    }
  }
  return treedist[n - 1][m - 1];
}

// TED similarity: 1 - distance / max(node count). Two empty tables score 1.
inline double ted_score(const LogicalTable& pred, const LogicalTable& gt,
                        const CostModel& cost = {}) {
  const TableTree ta = to_tree(pred);
  const TableTree tb = to_tree(gt);
  const std::size_t na = node_count(ta);
  const std::size_t nb = node_count(tb);
  const double dist = tree_edit_distance(ta, tb, cost);
  const double denom = static_cast<double>(std::max(na, nb));
  return std::clamp(1.0 - dist / denom, 0.0, 1.0);
}

namespace detail {

// Pairwise similarity contributions of two flattened records on their shared
// property paths; multi-valued paths are matched by optimal assignment.
inline double entity_similarity(const std::vector<FlatValue>& a,
                                const std::vector<FlatValue>& b,
                                std::vector<std::pair<double, bool>>* matched_sims = nullptr,
                                double sim_threshold = 0.0) {
  std::map<std::string, std::pair<std::vector<const FlatValue*>, std::vector<const FlatValue*>>>
      by_path;
  for (const auto& v : a) by_path[v.path].first.push_back(&v);
  for (const auto& v : b) by_path[v.path].second.push_back(&v);

  double total = 0.0;
  for (const auto& [path, lists] : by_path) {
    const auto& [av, bv] = lists;
    if (av.empty() || bv.empty()) continue;
    std::vector<std::vector<double>> sim(av.size(), std::vector<double>(bv.size(), 0.0));
    for (std::size_t i = 0; i < av.size(); ++i) {
      for (std::size_t j = 0; j < bv.size(); ++j) {
        sim[i][j] = string_similarity(av[i]->value, bv[j]->value);
      }
    }
    for (const auto& [i, j] : max_similarity_matching(sim, av.size(), bv.size())) {
      total += sim[i][j];
      if (matched_sims) matched_sims->push_back({sim[i][j], sim[i][j] >= sim_threshold});
    }
  }
  return total;
}

}  // namespace detail

// Hungarian alignment of predicted to ground-truth entities, maximizing total
// similarity over shared (flattened) property values.
inline std::vector<std::pair<std::size_t, std::size_t>> align_entities(
    const std::vector<EntityRecord>& pred, const std::vector<EntityRecord>& gt) {
  std::vector<std::vector<FlatValue>> fp(pred.size()), fg(gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) fp[i] = flatten_values(pred[i]);
  for (std::size_t j = 0; j < gt.size(); ++j) fg[j] = flatten_values(gt[j]);
  std::vector<std::vector<double>> sim(pred.size(), std::vector<double>(gt.size(), 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      sim[i][j] = detail::entity_similarity(fp[i], fg[j]);
    }
  }
  return max_similarity_matching(sim, pred.size(), gt.size());
}

struct IeScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t predicted = 0;  // non-empty predicted property values
  std::size_t expected = 0;   // ground-truth property values
};

// Property values of aligned entity pairs with string similarity >= threshold
// count as true positives; precision/recall are over all predicted / expected
// values.
inline IeScores ie_scores(const std::vector<EntityRecord>& pred,
                          const std::vector<EntityRecord>& gt,
                          double sim_threshold = 0.6) {
  IeScores s;
  for (const auto& r : pred) s.predicted += flatten_values(r).size();
  for (const auto& r : gt) s.expected += flatten_values(r).size();

  for (const auto& [i, j] : align_entities(pred, gt)) {
    std::vector<std::pair<double, bool>> matched;
    detail::entity_similarity(flatten_values(pred[i]), flatten_values(gt[j]), &matched,
                              sim_threshold);
    for (const auto& [sim, ok] : matched) {
      if (ok) s.tp += 1;
    }
  }
  s.precision = s.predicted == 0 ? 0.0 : static_cast<double>(s.tp) / s.predicted;
  s.recall = s.expected == 0 ? 0.0 : static_cast<double>(s.tp) / s.expected;
  s.f1 = (s.precision + s.recall) == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

struct MetricsReport {
  double map = 0.0;
  double ted = 0.0;
  double ted_struct = 0.0;
  double ie_precision = 0.0;
  double ie_recall = 0.0;
  double ie_f1 = 0.0;
};

}  // namespace tkg
