#pragma once

#include <string>
#include <vector>

#include "rtgr/tensor.hpp"

namespace rtgr {

/// SGD with classic momentum and coupled weight decay:
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - lr * v
template <typename T>
class SgdT {
 public:
  struct Options {
    double learning_rate = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.001;
  };

  explicit SgdT(Options options) : options_(options) {}

  /// Registers the parameters (one momentum buffer each, zero-initialized).
  void attach(const std::string& name, TensorT<T>& param) {
    params_.push_back({name, &param, std::vector<T>(param.numel(), T{})});
  }

  /// Applies one update from the gradients accumulated on the parameters.
  /// A non-finite gradient aborts with the parameter's name.
  void step() {
    for (auto& entry : params_) {
      TensorT<T>& p = *entry.param;
      if (!p.has_grad()) fail("sgd: parameter '" + entry.name + "' has no gradient");
      const std::vector<T>& grad = p.grad();
      if (!all_finite(grad)) fail("sgd: non-finite gradient on parameter '" + entry.name + "'");
      const T lr = static_cast<T>(options_.learning_rate);
      const T momentum = static_cast<T>(options_.momentum);
      const T decay = static_cast<T>(options_.weight_decay);
      for (std::size_t i = 0; i < p.numel(); ++i) {
        entry.velocity[i] = momentum * entry.velocity[i] + grad[i] + decay * p[i];
        p[i] -= lr * entry.velocity[i];
      }
    }
  }

  void zero_grad() {
    for (auto& entry : params_) entry.param->zero_grad();
  }

  const Options& options() const { return options_; }
  std::size_t num_params() const { return params_.size(); }

 private:
  struct Entry {
    std::string name;
    TensorT<T>* param;
    std::vector<T> velocity;
  };
  Options options_;
  std::vector<Entry> params_;
};

using Sgd = SgdT<double>;

}  // namespace rtgr
