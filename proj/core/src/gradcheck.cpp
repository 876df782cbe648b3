#include "rtgr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rtgr {

namespace {

// Central differences on an O(1) loss carry ~ulp/2h of cancellation noise
// (~5e-12 at h=1e-5), so gradients far below the floor are compared
// absolutely rather than relatively.
constexpr double kDenomFloor = 1e-6;

double scalar_loss(const GraphBuilder& build, Graph::Id* root_out = nullptr, Graph* graph_out = nullptr) {
  Graph local;
  Graph& g = graph_out ? *graph_out : local;
  const Graph::Id root = build(g);
  if (g.val(root).numel() != 1)
    fail("gradcheck: builder must return a scalar, got shape " + shape_str(g.val(root).shape()));
  const double value = g.val(root).data()[0];
  if (!std::isfinite(value)) fail("gradcheck: loss is not finite");
  if (root_out) *root_out = root;
  return value;
}

}  // namespace

GradcheckReport gradcheck(const GraphBuilder& build_loss, const std::vector<GradcheckParam>& params,
                          double step, double tolerance) {
  if (step <= 0.0) fail("gradcheck: step must be positive");
  GradcheckReport report;
  report.step = step;
  report.tolerance = tolerance;
  report.pass = true;

  // Analytic pass.
  for (const auto& p : params) {
    if (p.tensor == nullptr) fail("gradcheck: parameter '" + p.name + "' is null");
    p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  {
    Graph g;
    Graph::Id root = 0;
    scalar_loss(build_loss, &root, &g);
    g.backward(root);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.tensor->grad());

  // Central differences, one element at a time.
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = *params[pi].tensor;
    GradcheckEntry entry;
    entry.name = params[pi].name;
    entry.pass = true;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double up = scalar_loss(build_loss);
      t[i] = saved - step;
      const double down = scalar_loss(build_loss);
      t[i] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[pi][i];
      const double abs_err = std::abs(exact - numeric);
      const double rel_err = abs_err / std::max({std::abs(exact), std::abs(numeric), kDenomFloor});
      if (rel_err > entry.max_rel_err) {
        entry.max_rel_err = rel_err;
        entry.max_abs_err = abs_err;
        entry.worst_index = i;
      }
    }
    entry.pass = entry.max_rel_err < tolerance;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.pass = report.pass && entry.pass;
    report.params.push_back(std::move(entry));
  }
  return report;
}

std::string GradcheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max rel err " << max_rel_err << " (tol " << tolerance
     << ", h=" << step << ")\n";
  for (const auto& e : params) {
    os << "  " << (e.pass ? "ok  " : "FAIL") << " " << e.name << " rel " << e.max_rel_err
       << " abs " << e.max_abs_err << " @" << e.worst_index << "\n";
  }
  return os.str();
}

}  // namespace rtgr
