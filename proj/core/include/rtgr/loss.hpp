#pragma once

#include <vector>

#include "rtgr/network.hpp"

namespace rtgr {

/// Per-step loss values and the differentiable total. total always equals
/// the left-fold of weights[i] * (saliency[i] + boundary[i]).
template <typename T>
struct LossBreakdownT {
  std::vector<double> saliency;  // BCE of S_i against the saliency gt
  std::vector<double> boundary;  // BCE of B_i against the boundary gt; 0 when absent
  std::vector<double> weights;
  double total = 0.0;
  typename GraphT<T>::Id total_id = GraphT<T>::npos;

  double step_loss(std::size_t i) const { return saliency[i] + boundary[i]; }
};

/// Sums weighted per-step two-stream BCE losses. weights must have one
/// entry per map; pass an empty span for all-ones.
template <typename T>
LossBreakdownT<T> total_loss(GraphT<T>& g, const std::vector<TwoStreamMapIds<T>>& maps,
                             typename GraphT<T>::Id saliency_gt,
                             typename GraphT<T>::Id boundary_gt,
                             const std::vector<double>& weights, T boundary_pos_weight = T{1});

extern template struct LossBreakdownT<float>;
extern template struct LossBreakdownT<double>;

}  // namespace rtgr
