#include <cmath>

#include "mobmod/baselines/baselines.hpp"
#include "mobmod/common/random.hpp"

namespace mobmod::baselines {

using numerics::Tensor;

namespace {

void normalize(double* row, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += row[i];
  for (std::size_t i = 0; i < n; ++i) row[i] /= total;
}

void check_stochastic(const Tensor& t, const char* what) {
  const std::size_t cols = t.rank() == 1 ? t.size() : t.cols();
  const std::size_t rows = t.rank() == 1 ? 1 : t.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = t[r * cols + c];
      if (!(v >= 0.0)) throw std::invalid_argument(std::string("hmm: negative entry in ") + what);
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string("hmm: ") + what + " row does not sum to 1");
    }
  }
}

}  // namespace

HmmModel::HmmModel(Tensor initial, Tensor transition, Tensor emission)
    : initial_(std::move(initial)), transition_(std::move(transition)), emission_(std::move(emission)) {
  const std::size_t k = initial_.size();
  if (initial_.rank() != 1 || transition_.shape() != numerics::Shape{k, k} ||
      emission_.rank() != 2 || emission_.rows() != k) {
    throw numerics::ShapeMismatch("hmm: inconsistent parameter shapes");
  }
  check_stochastic(initial_, "initial");
  check_stochastic(transition_, "transition");
  check_stochastic(emission_, "emission");
}

void HmmModel::check_token(int token) const {
  if (token < 0 || token >= vocab_size()) {
    throw TokenOutOfRange("hmm: token " + std::to_string(token) + " outside [0, " +
                          std::to_string(vocab_size()) + ")");
  }
}

double HmmModel::log_likelihood(const Sequence& sequence) const {
  const std::size_t K = initial_.size();
  double ll = 0.0;
  std::vector<double> alpha(K), next(K);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    check_token(sequence[t]);
    const auto o = static_cast<std::size_t>(sequence[t]);
    for (std::size_t j = 0; j < K; ++j) {
      double prior = 0.0;
      if (t == 0) {
        prior = initial_[j];
      } else {
        for (std::size_t i = 0; i < K; ++i) prior += alpha[i] * transition_(i, j);
      }
      next[j] = prior * emission_(j, o);
    }
    double c = 0.0;
    for (double v : next) c += v;
    if (c <= 0.0) return -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < K; ++j) alpha[j] = next[j] / c;
    ll += std::log(c);
  }
  return ll;
}

HmmModel HmmModel::fit(const std::vector<Sequence>& sequences, int vocab_size,
                       const HmmFitOptions& options, std::vector<double>* log_likelihoods) {
  if (options.states < 1 || options.iterations < 1 || vocab_size < 1) {
    throw std::invalid_argument("hmm fit: states, iterations and vocab size must be >= 1");
  }
  std::size_t total_tokens = 0;
  for (const auto& s : sequences) {
    for (int token : s) {
      if (token < 0 || token >= vocab_size) {
        throw TokenOutOfRange("hmm fit: token " + std::to_string(token) + " out of range");
      }
    }
    total_tokens += s.size();
  }
  if (total_tokens == 0) throw EmptyCorpus("hmm fit: corpus has no tokens");

  const auto K = static_cast<std::size_t>(options.states);
  const auto V = static_cast<std::size_t>(vocab_size);
  Rng rng(options.seed);
  Tensor pi({K}), A({K, K}), B({K, V});
  for (Tensor* t : {&pi, &A, &B}) {
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = 0.5 + uniform01(rng);
  }
  normalize(pi.data(), K);
  for (std::size_t k = 0; k < K; ++k) {
    normalize(A.data() + k * K, K);
    normalize(B.data() + k * V, V);
  }

  std::vector<double> alpha, beta, scale;
  for (int iter = 0; iter < options.iterations; ++iter) {
    Tensor pi_acc({K}), a_num({K, K}), a_den({K}), b_num({K, V}), b_den({K});
    double ll = 0.0;
    for (const auto& seq : sequences) {
      const std::size_t T = seq.size();
      if (T == 0) continue;
      alpha.assign(T * K, 0.0);
      beta.assign(T * K, 0.0);
      scale.assign(T, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        const auto o = static_cast<std::size_t>(seq[t]);
        double c = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
          double prior = 0.0;
          if (t == 0) {
            prior = pi[j];
          } else {
            for (std::size_t i = 0; i < K; ++i) prior += alpha[(t - 1) * K + i] * A(i, j);
          }
          alpha[t * K + j] = prior * B(j, o);
          c += alpha[t * K + j];
        }
        if (c <= 0.0) throw std::runtime_error("hmm fit: observation with zero likelihood");
        for (std::size_t j = 0; j < K; ++j) alpha[t * K + j] /= c;
        scale[t] = c;
        ll += std::log(c);
      }
      for (std::size_t j = 0; j < K; ++j) beta[(T - 1) * K + j] = 1.0;
      for (std::size_t t = T - 1; t-- > 0;) {
        const auto o = static_cast<std::size_t>(seq[t + 1]);
        for (std::size_t i = 0; i < K; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < K; ++j) acc += A(i, j) * B(j, o) * beta[(t + 1) * K + j];
          beta[t * K + i] = acc / scale[t + 1];
        }
      }
      for (std::size_t t = 0; t < T; ++t) {
        const auto o = static_cast<std::size_t>(seq[t]);
        for (std::size_t k = 0; k < K; ++k) {
          const double g = alpha[t * K + k] * beta[t * K + k];
          if (t == 0) pi_acc[k] += g;
          b_num(k, o) += g;
          b_den[k] += g;
          if (t + 1 < T) a_den[k] += g;
        }
        if (t + 1 == T) continue;
        const auto o1 = static_cast<std::size_t>(seq[t + 1]);
        for (std::size_t i = 0; i < K; ++i) {
          const double ai = alpha[t * K + i] / scale[t + 1];
          for (std::size_t j = 0; j < K; ++j) {
            a_num(i, j) += ai * A(i, j) * B(j, o1) * beta[(t + 1) * K + j];
          }
        }
      }
    }
    if (log_likelihoods) log_likelihoods->push_back(ll);

    double pi_total = 0.0;
    for (std::size_t k = 0; k < K; ++k) pi_total += pi_acc[k];
    for (std::size_t k = 0; k < K; ++k) pi[k] = pi_acc[k] / pi_total;
    for (std::size_t i = 0; i < K; ++i) {
      if (a_den[i] > 0.0) {
        for (std::size_t j = 0; j < K; ++j) A(i, j) = a_num(i, j) / a_den[i];
        normalize(A.data() + i * K, K);
      }
      if (b_den[i] > 0.0) {
        for (std::size_t v = 0; v < V; ++v) B(i, v) = b_num(i, v) / b_den[i];
        normalize(B.data() + i * V, V);
      }
    }
  }
  return HmmModel(std::move(pi), std::move(A), std::move(B));
}

HmmFilter::HmmFilter(const HmmModel& model) : model_(model), belief_(model.initial_.values().begin(), model.initial_.values().end()) {}

void HmmFilter::observe(int token) {
  model_.check_token(token);
  const std::size_t K = belief_.size();
  std::vector<double> prior(K, 0.0);
  if (!started_) {
    prior.assign(model_.initial_.values().begin(), model_.initial_.values().end());
  } else {
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) prior[j] += belief_[i] * model_.transition_(i, j);
    }
  }
  started_ = true;
  std::vector<double> post(K);
  double c = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    post[j] = prior[j] * model_.emission_(j, static_cast<std::size_t>(token));
    c += post[j];
  }
  if (c <= 0.0) {
    belief_ = std::move(prior);
    return;
  }
  for (std::size_t j = 0; j < K; ++j) post[j] /= c;
  belief_ = std::move(post);
}

std::vector<double> HmmFilter::next_distribution() const {
  const std::size_t K = belief_.size();
  const auto V = static_cast<std::size_t>(model_.vocab_size());
  std::vector<double> state(K, 0.0);
  if (!started_) {
    state.assign(model_.initial_.values().begin(), model_.initial_.values().end());
  } else {
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) state[j] += belief_[i] * model_.transition_(i, j);
    }
  }
  std::vector<double> out(V, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t v = 0; v < V; ++v) out[v] += state[j] * model_.emission_(j, v);
  }
  return out;
}

std::vector<double> HmmModel::next_distribution(const Sequence& history) const {
  HmmFilter f(*this);
  for (int token : history) f.observe(token);
  return f.next_distribution();
}

Ranking HmmModel::predict(const Sequence& history) const { return rank(next_distribution(history)); }

nlohmann::json HmmModel::to_json() const {
  return {{"states", states()},
          {"vocab_size", vocab_size()},
          {"initial", std::vector<double>(initial_.values().begin(), initial_.values().end())},
          {"transition", std::vector<double>(transition_.values().begin(), transition_.values().end())},
          {"emission", std::vector<double>(emission_.values().begin(), emission_.values().end())}};
}

HmmModel HmmModel::from_json(const nlohmann::json& j) {
  const auto K = j.at("states").get<std::size_t>();
  const auto V = j.at("vocab_size").get<std::size_t>();
  return HmmModel(Tensor({K}, j.at("initial").get<std::vector<double>>()),
                  Tensor({K, K}, j.at("transition").get<std::vector<double>>()),
                  Tensor({K, V}, j.at("emission").get<std::vector<double>>()));
}

}  // namespace mobmod::baselines
