#include "rtgr/loss.hpp"

namespace rtgr {

template <typename T>
LossBreakdownT<T> total_loss(GraphT<T>& g, const std::vector<TwoStreamMapIds<T>>& maps,
                             typename GraphT<T>::Id saliency_gt,
                             typename GraphT<T>::Id boundary_gt,
                             const std::vector<double>& weights, T boundary_pos_weight) {
  using Id = typename GraphT<T>::Id;
  if (maps.empty()) fail("total_loss: no maps");
  if (!weights.empty() && weights.size() != maps.size())
    fail("total_loss: " + std::to_string(weights.size()) + " weights for " +
         std::to_string(maps.size()) + " maps");

  LossBreakdownT<T> breakdown;
  breakdown.weights = weights.empty() ? std::vector<double>(maps.size(), 1.0) : weights;

  Id total = GraphT<T>::npos;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    Id step = ops::bce_loss(g, maps[i].saliency, saliency_gt);
    breakdown.saliency.push_back(g.val(step).data()[0]);
    if (maps[i].boundary != GraphT<T>::npos) {
      const Id bnd = ops::bce_loss(g, maps[i].boundary, boundary_gt, boundary_pos_weight);
      breakdown.boundary.push_back(g.val(bnd).data()[0]);
      step = ops::add(g, step, bnd);
    } else {
      breakdown.boundary.push_back(0.0);
    }
    const Id weighted = ops::scale(g, step, static_cast<T>(breakdown.weights[i]));
    total = i == 0 ? weighted : ops::add(g, total, weighted);
  }
  breakdown.total = g.val(total).data()[0];
  breakdown.total_id = total;
  return breakdown;
}

template struct LossBreakdownT<float>;
template struct LossBreakdownT<double>;
template LossBreakdownT<float> total_loss<float>(GraphT<float>&,
                                                 const std::vector<TwoStreamMapIds<float>>&,
                                                 GraphT<float>::Id, GraphT<float>::Id,
                                                 const std::vector<double>&, float);
template LossBreakdownT<double> total_loss<double>(GraphT<double>&,
                                                   const std::vector<TwoStreamMapIds<double>>&,
                                                   GraphT<double>::Id, GraphT<double>::Id,
                                                   const std::vector<double>&, double);

}  // namespace rtgr
