#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rtgr/graph.hpp"

namespace rtgr {

/// Parameter under finite-difference scrutiny. The builder must register it
/// with graph.leaf() so the analytic gradient is scattered back.
struct GradcheckParam {
  std::string name;
  Tensor* tensor = nullptr;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> params;
  double max_rel_err = 0.0;
  double step = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string summary() const;
};

/// Builds the loss once per perturbation; must be a pure function of the
/// parameter tensors and return a scalar id. float64 only.
using GraphBuilder = std::function<Graph::Id(Graph&)>;

/// Central finite differences against the analytic tape gradients:
/// numeric = (f(p+h) - f(p-h)) / 2h, relative error
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) per element.
/// The 1e-6 denominator floor keeps finite-difference cancellation noise on
/// near-zero gradients from registering as relative error.
GradcheckReport gradcheck(const GraphBuilder& build_loss, const std::vector<GradcheckParam>& params,
                          double step = 1e-5, double tolerance = 1e-4);

}  // namespace rtgr
