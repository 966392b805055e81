#pragma once

#include "ctbn/model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace ctbn {

struct CurveAreas {
  double auroc = 0.0;
  double aupr = 0.0;
};

/// Areas under ROC and precision-recall curves over all ordered pairs
/// (from != to). ROC area is the tie-averaged rank statistic; the PR area
/// is the trapezoid rule over the threshold points, with the curve extended
/// flat from recall 0 to the first point.
CurveAreas auroc_aupr(const std::vector<std::vector<double>>& scores, const Graph& truth);
/// Same for flat score/label lists.
CurveAreas auroc_aupr(const std::vector<double>& scores, const std::vector<bool>& labels);

struct PpvSe {
  std::optional<double> ppv;  // undefined without predictions
  std::optional<double> se;   // undefined without true edges
};

/// With `undirected`, edges match regardless of direction.
PpvSe ppv_se(const std::vector<std::pair<int, int>>& predicted, const std::vector<std::pair<int, int>>& truth,
             bool undirected = false);

}  // namespace ctbn
