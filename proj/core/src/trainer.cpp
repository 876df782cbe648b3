#include "rtgr/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "rtgr/augment.hpp"

namespace rtgr {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974u;
constexpr std::uint64_t kOrderTag = 0x6f726472u;
constexpr std::uint64_t kAugmentTag = 0x61756775u;

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

template <typename T>
BatchT<T> make_batch(const std::vector<Sample>& samples) {
  if (samples.empty()) fail("batch: no samples");
  const std::size_t b = samples.size();
  const std::size_t h = samples[0].saliency.dim(0);
  const std::size_t w = samples[0].saliency.dim(1);
  const std::size_t plane = h * w;

  BatchT<T> batch{TensorT<T>(Shape{b, 3, h, w}), TensorT<T>(Shape{b, 1, h, w}),
                  TensorT<T>(Shape{b, 1, h, w})};
  for (std::size_t i = 0; i < b; ++i) {
    const Sample& s = samples[i];
    if (s.saliency.dim(0) != h || s.saliency.dim(1) != w)
      fail("batch: sample extents differ within one batch");
    for (std::size_t k = 0; k < 3 * plane; ++k)
      batch.images.data()[i * 3 * plane + k] = static_cast<T>(s.image.data()[k]);
    for (std::size_t k = 0; k < plane; ++k) {
      batch.saliency_gt.data()[i * plane + k] = static_cast<T>(s.saliency.data()[k]);
      batch.boundary_gt.data()[i * plane + k] = static_cast<T>(s.boundary.data()[k]);
    }
  }
  return batch;
}

template <typename T>
TrainResult train_loop(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       std::ostream* progress) {
  std::filesystem::create_directories(out_dir);

  NetworkT<T> net = NetworkT<T>::init(config.model, Rng::derive(config.train.seed, kInitTag));

  typename SgdT<T>::Options opts;
  opts.learning_rate = config.train.learning_rate;
  opts.momentum = config.train.momentum;
  opts.weight_decay = config.train.weight_decay;
  SgdT<T> sgd(opts);
  net.visit([&sgd](const std::string& name, TensorT<T>& t) { sgd.attach(name, t); });

  const std::size_t n_steps = static_cast<std::size_t>(config.model.variant.steps);
  TrainResult result;
  result.loss_csv = out_dir / "loss.csv";
  std::ofstream csv(result.loss_csv);
  if (!csv) fail("train: cannot write " + result.loss_csv.string());
  csv << "iter";
  for (std::size_t i = 0; i <= n_steps; ++i) csv << ",l_s_" << i;
  for (std::size_t i = 0; i <= n_steps; ++i) csv << ",l_b_" << i;
  csv << ",total\n";

  const std::size_t dataset_size = config.data.train_count;
  if (dataset_size == 0) fail("train: data.train_count must be >= 1");
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = dataset_size;  // forces a shuffle on first use
  std::size_t epoch = 0;

  auto next_index = [&]() {
    if (cursor >= dataset_size) {
      Rng rng(Rng::derive(config.train.seed, kOrderTag, epoch));
      for (std::size_t i = dataset_size; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
      cursor = 0;
      ++epoch;
    }
    return order[cursor++];
  };

  // Rolling copy of the parameters for the last-good dump on abort.
  std::vector<std::vector<T>> last_good;
  auto snapshot = [&]() {
    last_good.clear();
    net.visit([&](const std::string&, TensorT<T>& t) { last_good.push_back(t.data()); });
  };
  auto restore = [&]() {
    std::size_t k = 0;
    net.visit([&](const std::string&, TensorT<T>& t) { t.data() = last_good[k++]; });
  };

  for (std::size_t iter = 1; iter <= config.train.iterations; ++iter) {
    std::vector<Sample> samples;
    samples.reserve(config.train.batch_size);
    for (std::size_t slot = 0; slot < config.train.batch_size; ++slot) {
      Sample s = make_sample(config.data, next_index());
      if (config.train.augment) {
        Rng rng(Rng::derive(config.train.seed, kAugmentTag,
                            (iter - 1) * config.train.batch_size + slot));
        s = augment(s, rng);
      }
      samples.push_back(std::move(s));
    }
    const BatchT<T> batch = make_batch<T>(samples);

    snapshot();
    sgd.zero_grad();
    GraphT<T> g;
    LossBreakdownT<T> breakdown;
    try {
      const auto image = g.constant(batch.images);
      const auto sal_gt = g.constant(batch.saliency_gt);
      const auto bnd_gt = g.constant(batch.boundary_gt);
      const auto maps = forward(g, net, image);
      breakdown = total_loss(g, maps, sal_gt, bnd_gt, config.train.loss_weights,
                             static_cast<T>(config.train.boundary_pos_weight));
      if (!std::isfinite(breakdown.total)) fail("train: non-finite loss");
      g.backward(breakdown.total_id);
      sgd.step();
    } catch (const Error&) {
      restore();
      save_checkpoint(out_dir / "checkpoint_lastgood.rtgr", config, net);
      if (progress)
        *progress << "aborting at iteration " << iter
                  << "; last-good parameters dumped to checkpoint_lastgood.rtgr\n";
      throw;
    }

    csv << iter;
    for (std::size_t i = 0; i <= n_steps; ++i) csv << "," << format_value(breakdown.saliency[i]);
    for (std::size_t i = 0; i <= n_steps; ++i) csv << "," << format_value(breakdown.boundary[i]);
    csv << "," << format_value(breakdown.total) << "\n";

    if (iter == 1) result.first_loss = breakdown.total;
    result.final_loss = breakdown.total;

    if (progress && (iter % std::max<std::size_t>(config.train.log_interval, 1) == 0 || iter == 1))
      *progress << "iter " << iter << "/" << config.train.iterations << " loss "
                << breakdown.total << "\n";

    if (config.train.checkpoint_interval > 0 && iter % config.train.checkpoint_interval == 0 &&
        iter != config.train.iterations) {
      std::ostringstream tag;
      tag << "checkpoint_" << std::setw(6) << std::setfill('0') << iter << ".rtgr";
      save_checkpoint(out_dir / tag.str(), config, net);
    }
  }

  result.iterations = config.train.iterations;
  result.checkpoint = out_dir / "checkpoint_final.rtgr";
  save_checkpoint(result.checkpoint, config, net);
  return result;
}

template <typename T>
InferenceMaps<T> run_inference(NetworkT<T>& net, const BatchT<T>& batch) {
  GraphT<T> g;
  const auto image = g.constant(batch.images);
  const auto maps = forward(g, net, image);

  InferenceMaps<T> out;
  for (const auto& map : maps) {
    out.saliency.push_back(g.val(map.saliency).template cast<double>());
    if (map.boundary != GraphT<T>::npos)
      out.boundary.push_back(g.val(map.boundary).template cast<double>());
    else
      out.boundary.push_back(TensorT<double>());
  }
  return out;
}

template <typename T>
metrics::SaliencyEval evaluate_network(NetworkT<T>& net, const DataConfig& data,
                                       std::size_t batch_size) {
  if (data.eval_count == 0) fail("evaluate: data.eval_count must be >= 1");
  metrics::DatasetAccumulator acc;
  const std::size_t h = data.image_size, w = data.image_size;
  for (std::size_t start = 0; start < data.eval_count; start += batch_size) {
    const std::size_t count = std::min(batch_size, data.eval_count - start);
    const auto samples = make_split(data, data.train_count + start, count);
    const BatchT<T> batch = make_batch<T>(samples);
    const InferenceMaps<T> maps = run_inference(net, batch);
    const TensorT<double>& final_sal = maps.saliency.back();
    for (std::size_t i = 0; i < count; ++i) {
      TensorT<double> pred(Shape{h, w});
      std::copy_n(final_sal.data().begin() + static_cast<std::ptrdiff_t>(i * h * w), h * w,
                  pred.data().begin());
      acc.add(pred, samples[i].saliency);
    }
  }
  return acc.finish();
}

#define RTGR_INSTANTIATE_TRAINER(T)                                                      \
  template struct BatchT<T>;                                                             \
  template BatchT<T> make_batch<T>(const std::vector<Sample>&);                          \
  template TrainResult train_loop<T>(const ExperimentConfig&,                            \
                                     const std::filesystem::path&, std::ostream*);      \
  template InferenceMaps<T> run_inference<T>(NetworkT<T>&, const BatchT<T>&);            \
  template metrics::SaliencyEval evaluate_network<T>(NetworkT<T>&, const DataConfig&,    \
                                                     std::size_t);

RTGR_INSTANTIATE_TRAINER(float)
RTGR_INSTANTIATE_TRAINER(double)

}  // namespace rtgr
