#pragma once

#include <filesystem>
#include <iosfwd>

#include "rtgr/checkpoint.hpp"
#include "rtgr/loss.hpp"
#include "rtgr/metrics.hpp"
#include "rtgr/optimizer.hpp"

namespace rtgr {

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  double first_loss = 0.0;
  double final_loss = 0.0;
  std::size_t iterations = 0;
};

/// Assembles [B,3,H,W] / [B,1,H,W] batch tensors from samples.
template <typename T>
struct BatchT {
  TensorT<T> images;
  TensorT<T> saliency_gt;
  TensorT<T> boundary_gt;
};

template <typename T>
BatchT<T> make_batch(const std::vector<Sample>& samples);

/// Deterministic training loop over the synthetic dataset. Writes
/// out_dir/loss.csv (header iter,l_s_0..l_s_n,l_b_0..l_b_n,total),
/// interval checkpoints and checkpoint_final.rtgr. On a non-finite loss the
/// previous iteration's parameters are dumped to checkpoint_lastgood.rtgr
/// and the run aborts. Identical configs produce byte-identical CSVs.
template <typename T>
TrainResult train_loop(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       std::ostream* progress = nullptr);

/// Runs the network over the held-out split (sample indices
/// [train_count, train_count + eval_count)) and aggregates the final-step
/// saliency maps against the ground truth.
template <typename T>
metrics::SaliencyEval evaluate_network(NetworkT<T>& net, const DataConfig& data,
                                       std::size_t batch_size = 8);

/// Forward pass on a batch; returns the per-step full-resolution maps as
/// plain double tensors ([B,1,H,W] each, saliency then boundary per step;
/// boundary entries are empty for single-stream variants).
template <typename T>
struct InferenceMaps {
  std::vector<TensorT<double>> saliency;  // per step
  std::vector<TensorT<double>> boundary;  // per step; empty tensor when absent
};

template <typename T>
InferenceMaps<T> run_inference(NetworkT<T>& net, const BatchT<T>& batch);

extern template struct BatchT<float>;
extern template struct BatchT<double>;

}  // namespace rtgr
