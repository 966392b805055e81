#include "ctbn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ctbn {

CurveAreas auroc_aupr(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error("auroc_aupr: score and label counts differ");
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error("auroc_aupr: ground truth needs both positives and negatives");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  CurveAreas out;
  double tp = 0.0, fp = 0.0;
  double prev_recall = 0.0, prev_precision = -1.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double tp_block = 0.0, fp_block = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp_block : fp_block) += 1.0;
      ++j;
    }
    // Every negative in this block is outranked by the positives above it; ties count one half.
    out.auroc += fp_block * (tp + 0.5 * tp_block);
    tp += tp_block;
    fp += fp_block;
    const double recall = tp / pos;
    const double precision = tp / (tp + fp);
    if (prev_precision < 0.0) prev_precision = precision;
    out.aupr += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_recall = recall;
    prev_precision = precision;
    i = j;
  }
  // auroc accumulated the number of (negative, positive) pairs ranked correctly
  out.auroc /= pos * neg;
  return out;
}

CurveAreas auroc_aupr(const std::vector<std::vector<double>>& scores, const Graph& truth) {
  const int n = truth.size();
  if (static_cast<int>(scores.size()) != n) throw Error("auroc_aupr: score matrix has wrong size");
  std::vector<double> s;
  std::vector<bool> l;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(scores[i].size()) != n) throw Error("auroc_aupr: score matrix has wrong size");
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      s.push_back(scores[i][j]);
      l.push_back(truth.has_edge(i, j));
    }
  }
  return auroc_aupr(s, l);
}

PpvSe ppv_se(const std::vector<std::pair<int, int>>& predicted, const std::vector<std::pair<int, int>>& truth,
             bool undirected) {
  auto key = [undirected](std::pair<int, int> e) {
    if (undirected && e.first > e.second) std::swap(e.first, e.second);
    return e;
  };
  std::set<std::pair<int, int>> t, p;
  for (const auto& e : truth) t.insert(key(e));
  for (const auto& e : predicted) p.insert(key(e));
  double tp = 0.0;
  for (const auto& e : p) tp += t.count(e) ? 1.0 : 0.0;
  PpvSe out;
  if (!p.empty()) out.ppv = tp / static_cast<double>(p.size());
  if (!t.empty()) out.se = tp / static_cast<double>(t.size());
  return out;
}

}  // namespace ctbn
