#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include "mobmod/common/random.hpp"
#include "mobmod/train/training.hpp"

namespace mobmod::train {

SplitCounts split_counts(std::size_t days) {
  if (days < kMinUserDays) {
    throw InsufficientData("need at least " + std::to_string(kMinUserDays) + " days, got " +
                           std::to_string(days));
  }
  SplitCounts c;
  c.train = days * 8 / 10;
  c.dev = days / 10;
  c.test = days - c.train - c.dev;
  return c;
}

Datasets make_splits(const std::vector<MultiScaleTrajectory>& trajectories) {
  std::map<std::string, std::vector<const MultiScaleTrajectory*>> by_user;
  for (const auto& t : trajectories) by_user[t.user].push_back(&t);
  Datasets out;
  for (auto& [user, days] : by_user) {
    if (days.size() < kMinUserDays) {
      out.excluded_users.push_back(user);
      continue;
    }
    std::stable_sort(days.begin(), days.end(),
                     [](const auto* a, const auto* b) { return a->day < b->day; });
    const SplitCounts c = split_counts(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
      auto& dest = i < c.train ? out.train : i < c.train + c.dev ? out.dev : out.test;
      dest.push_back(*days[i]);
    }
  }
  return out;
}

std::vector<TokenSeqs> tokenize_all(const std::vector<MultiScaleTrajectory>& trajectories,
                                    const Vocabulary& vocab) {
  std::vector<TokenSeqs> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    try {
      out.push_back(model::tokenize(t, vocab));
    } catch (const model::UnknownToken& e) {
      throw VocabMismatch(t.user + " day " + std::to_string(t.day) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::size_t common_length(const std::vector<TokenSeqs>& data, const char* what) {
  std::size_t n = 0;
  for (const auto& seq : data) {
    const std::size_t len = seq[static_cast<std::size_t>(trajectory::Scale::Location)].size();
    if (n == 0) n = len;
    if (len != n || len < 2) {
      throw std::invalid_argument(std::string(what) + ": sequences must share one length >= 2");
    }
  }
  return n;
}

std::vector<const TokenSeqs*> pointers(const std::vector<TokenSeqs>& data, std::size_t begin,
                                       std::size_t end) {
  std::vector<const TokenSeqs*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&data[i]);
  return out;
}

}  // namespace

double dataset_loss(const ModelParams& params, const std::vector<TokenSeqs>& data,
                    std::size_t chunk) {
  if (data.empty()) return std::nan("");
  const std::size_t n = common_length(data, "dataset_loss");
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
    const std::size_t end = std::min(data.size(), begin + chunk);
    const Tensor logits = model::forward_logits_batch(pointers(data, begin, end), params);
    const auto V = static_cast<std::size_t>(params.config.vocab_size);
    for (std::size_t b = begin; b < end; ++b) {
      Tensor rows({n, V});
      std::copy_n(logits.data() + (b - begin) * n * V, n * V, rows.data());
      total += model::loss_multimodal(rows, data[b], params.config);
    }
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(ModelParams params, const std::vector<TokenSeqs>& train,
                  const std::vector<TokenSeqs>& dev, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train.empty()) throw InsufficientData("train: empty training set");
  if (config.epochs < 0 || config.batch_size == 0 || config.micro_batch == 0 ||
      !(config.adam.learning_rate >= 0.0) || config.clip_norm < 0.0) {
    throw std::invalid_argument("train: invalid configuration");
  }
  common_length(train, "train");
  if (!dev.empty()) common_length(dev, "train (dev)");

  TrainResult result;
  EpochRecord start{0, dataset_loss(params, train), dataset_loss(params, dev)};
  result.curve.push_back(start);
  if (on_epoch) on_epoch(start);
  result.params = params;
  double best = dev.empty() ? std::nan("") : start.dev_loss;

  auto state = numerics::AdamState::zeros_like(params.tensors());
  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const TokenSeqs*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train[order[i]]);
      auto lg = model::loss_and_gradient(params, batch, config.micro_batch);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceDetected("train: loss is " + std::to_string(lg.loss) + " at epoch " +
                                 std::to_string(epoch) + ", batch starting at " +
                                 std::to_string(begin));
      }
      const auto grads = std::as_const(lg.grad).tensors();
      if (config.clip_norm > 0.0) {
        const double norm = numerics::global_norm(grads);
        if (norm > config.clip_norm) {
          for (Tensor* g : lg.grad.tensors()) {
            for (std::size_t k = 0; k < g->size(); ++k) (*g)[k] *= config.clip_norm / norm;
          }
        }
      }
      state = numerics::adam_step(params.tensors(), grads, std::move(state), config.adam);
      weighted += lg.loss * static_cast<double>(end - begin);
    }
    EpochRecord rec{epoch, weighted / static_cast<double>(train.size()), dataset_loss(params, dev)};
    if (!dev.empty() && !std::isfinite(rec.dev_loss)) {
      throw DivergenceDetected("train: dev loss is " + std::to_string(rec.dev_loss) +
                               " after epoch " + std::to_string(epoch));
    }
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (dev.empty() || rec.dev_loss < best) {
      best = rec.dev_loss;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

TrainResult fine_tune(const ModelParams& global, const std::vector<TokenSeqs>& user_train,
                      const std::vector<TokenSeqs>& user_dev, const FineTuneConfig& config) {
  if (user_train.empty()) throw InsufficientData("fine_tune: user has no training days");
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.adam.learning_rate = config.learning_rate;
  tc.seed = config.seed;
  return train(global, user_train, user_dev, tc);
}

void write_loss_csv(const std::vector<EpochRecord>& curve, std::ostream& out) {
  out << "epoch,train_loss,dev_loss\n";
  char buf[96];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", r.epoch, r.train_loss, r.dev_loss);
    out << buf;
  }
}

void write_loss_csv(const std::vector<EpochRecord>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_loss_csv(curve, out);
}

}  // namespace mobmod::train
