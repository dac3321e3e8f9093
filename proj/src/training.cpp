#include "steiner/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "steiner/random.hpp"

namespace steiner {

namespace {

constexpr double kSdFloor = 1e-12;

std::vector<Var> flatten_vars(const PolicyWeights<Var>& w) {
  std::vector<Var> out;
  for_each_weight(w, [&](const std::string&, const Var& v) { out.push_back(v); });
  return out;
}

// grad += s * d(loss)/d(weights) for a loss already back-propagated on `tape`.
void add_scaled_grads(PolicyWeights<Tensor>& grad, const Tape& tape, const PolicyWeights<Var>& w,
                      double s) {
  const std::vector<Var> vars = flatten_vars(w);
  std::vector<Tensor*> dst = flatten(grad);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const Tensor& g = tape.grad(vars[i]);
    auto out = dst[i]->data();
    auto in = g.data();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += s * in[j];
  }
}

void scale_all(PolicyWeights<Tensor>& grad, double s) {
  for (Tensor* t : flatten(grad))
    for (double& v : t->data()) v *= s;
}

bool all_finite(const PolicyWeights<Tensor>& w) {
  for (const Tensor* t : flatten(w))
    if (!t->all_finite()) return false;
  return true;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

TTestResult paired_t_test(std::span<const double> candidate, std::span<const double> reference,
                          double alpha) {
  if (candidate.size() != reference.size())
    throw std::invalid_argument("paired_t_test: samples differ in size");
  if (candidate.size() < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("paired_t_test: alpha must lie in (0, 1)");

  const std::size_t n = candidate.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = candidate[i] - reference[i];
  const double m = mean(d);
  double ss = 0.0;
  for (double x : d) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  if (m == 0.0 && sd == 0.0) {
    r.t = 0.0;
    r.p_value = 0.5;
    r.reject = false;
    return r;
  }
  r.t = m / (std::max(sd, kSdFloor) / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  r.p_value = boost::math::cdf(dist, r.t);
  r.reject = r.p_value < alpha;
  return r;
}

BatchResult reinforce_batch(const PolicyParams& theta, const PolicyParams& baseline,
                            std::span<const PointSet> instances, const CandidateConfig& candidates,
                            StoppingCriterion stopping, std::uint64_t sample_seed) {
  if (instances.empty()) throw std::invalid_argument("reinforce_batch: empty batch");
  BatchResult res;
  res.gradient = zero_weights(theta.hyper);

  const SolveConfig greedy{candidates, SelectionMode::Greedy, stopping, 0};
  const SolveConfig sampled{candidates, SelectionMode::Sample, stopping, 0};
  double sum_sampled = 0.0, sum_baseline = 0.0;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      Rng unused(0);
      const double bs_len = rollout(instances[i], baseline, greedy, unused).length;

      Tape tape;
      const PolicyWeights<Var> w = bind(tape, theta, true);
      const GradientContext ctx{&tape, &w};
      Rng rng(derive_seed({sample_seed, i}));
      Trajectory traj = rollout(instances[i], theta, sampled, rng, &ctx);

      const double adv = traj.length - bs_len;
      if (adv != 0.0 && traj.log_likelihood_var.tape()) {
        tape.backward(traj.log_likelihood_var);
        add_scaled_grads(res.gradient, tape, w, adv);
      }
      traj.log_likelihood_var = Var{};
      sum_sampled += traj.length;
      sum_baseline += bs_len;
      res.sampled.push_back(std::move(traj));
      res.baseline_lengths.push_back(bs_len);
      ++res.used;
    } catch (const std::domain_error&) {
      throw;  // non-finite values abort the epoch upstream
    } catch (const std::exception&) {
      ++res.skipped;
    }
  }
  if (res.used > 0) {
    const double inv = 1.0 / static_cast<double>(res.used);
    scale_all(res.gradient, inv);
    res.mean_sampled_length = sum_sampled * inv;
    res.mean_baseline_length = sum_baseline * inv;
  }
  return res;
}

namespace {

void check_batch(std::span<const PointSet> instances, std::span<const Trajectory> trajectories,
                 std::span<const double> advantages) {
  if (instances.empty()) throw std::invalid_argument("batch objective: empty batch");
  if (trajectories.size() != instances.size() || advantages.size() != instances.size())
    throw std::invalid_argument("batch objective: instances, trajectories and advantages differ in size");
}

}  // namespace

double batch_objective(const PolicyParams& theta, std::span<const PointSet> instances,
                       std::span<const Trajectory> trajectories, std::span<const double> advantages,
                       const CandidateConfig& candidates) {
  check_batch(instances, trajectories, advantages);
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    Tape tape;
    const PolicyWeights<Var> w = bind(tape, theta, false);
    const GradientContext ctx{&tape, &w};
    const Var ll = replay_log_likelihood(instances[i], trajectories[i], theta, candidates, ctx);
    total += advantages[i] * ll.value()[0];
  }
  return total / static_cast<double>(instances.size());
}

PolicyWeights<Tensor> batch_objective_gradient(const PolicyParams& theta,
                                               std::span<const PointSet> instances,
                                               std::span<const Trajectory> trajectories,
                                               std::span<const double> advantages,
                                               const CandidateConfig& candidates) {
  check_batch(instances, trajectories, advantages);
  PolicyWeights<Tensor> grad = zero_weights(theta.hyper);
  const double inv = 1.0 / static_cast<double>(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (trajectories[i].steps.empty()) continue;
    Tape tape;
    const PolicyWeights<Var> w = bind(tape, theta, true);
    const GradientContext ctx{&tape, &w};
    const Var ll = replay_log_likelihood(instances[i], trajectories[i], theta, candidates, ctx);
    tape.backward(ll);
    add_scaled_grads(grad, tape, w, advantages[i] * inv);
  }
  return grad;
}

double clip_global_norm(PolicyWeights<Tensor>& grad, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  double ss = 0.0;
  for (const Tensor* t : flatten(std::as_const(grad)))
    for (double v : t->data()) ss += v * v;
  const double norm = std::sqrt(ss);
  if (norm > max_norm) scale_all(grad, max_norm / norm);
  return norm;
}

std::vector<double> greedy_lengths(const PolicyParams& params, std::span<const PointSet> instances,
                                   const CandidateConfig& candidates) {
  const SolveConfig cfg{candidates, SelectionMode::Greedy, StoppingCriterion::FirstIncrement, 0};
  std::vector<double> out;
  out.reserve(instances.size());
  for (const PointSet& s : instances) out.push_back(solve(s, params, cfg).length);
  return out;
}

TrainResult train(const TrainConfig& cfg, const PolicyParams& init, std::span<const PointSet> training,
                  std::span<const PointSet> validation, const EpochCallback& on_epoch) {
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be at least 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("train: alpha must lie in (0, 1)");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  cfg.candidates.validate();

  TrainResult result{init, init, {}};
  if (cfg.epochs == 0) return result;
  if (training.empty()) throw std::invalid_argument("train: empty training set");
  if (validation.size() < 2) throw std::invalid_argument("train: need at least 2 validation instances");

  AdamState adam;
  adam.lr = cfg.learning_rate;
  std::vector<double> len_bs = greedy_lengths(result.baseline, validation, cfg.candidates);

  const std::size_t batches = cfg.batches_per_epoch > 0
                                  ? cfg.batches_per_epoch
                                  : (training.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::size_t> order(training.size());
  std::vector<PointSet> batch(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const PolicyWeights<Tensor> saved_weights = result.current.weights;
    const AdamState saved_adam = adam;

    EpochReport rep;
    rep.epoch = epoch;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed({cfg.seed, epoch, 1}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double sum_sampled = 0.0, sum_baseline = 0.0, sum_norm = 0.0;
    std::size_t counted = 0;
    try {
      for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t j = 0; j < cfg.batch_size; ++j)
          batch[j] = training[order[(b * cfg.batch_size + j) % order.size()]];
        BatchResult br = reinforce_batch(result.current, result.baseline, batch, cfg.candidates,
                                         cfg.stopping, derive_seed({cfg.seed, epoch, b, 2}));
        rep.skipped += br.skipped;
        if (br.used == 0) continue;
        if (!all_finite(br.gradient)) throw std::domain_error("non-finite gradient");
        sum_norm += clip_global_norm(br.gradient, cfg.grad_clip);
        sum_sampled += br.mean_sampled_length;
        sum_baseline += br.mean_baseline_length;
        ++counted;

        std::vector<Tensor*> params = flatten(result.current.weights);
        std::vector<const Tensor*> grads = flatten(std::as_const(br.gradient));
        adam_step(params, grads, adam);
        if (!all_finite(result.current.weights)) throw std::domain_error("non-finite parameters");
      }
    } catch (const std::domain_error&) {
      result.current.weights = saved_weights;
      adam = saved_adam;
      rep.aborted = true;
    }
    if (counted > 0) {
      rep.mean_sampled_length = sum_sampled / static_cast<double>(counted);
      rep.mean_baseline_length = sum_baseline / static_cast<double>(counted);
      rep.grad_norm = sum_norm / static_cast<double>(counted);
    }

    const std::vector<double> len_theta = greedy_lengths(result.current, validation, cfg.candidates);
    const TTestResult tt = paired_t_test(len_theta, len_bs, cfg.alpha);
    rep.mean_len_theta = mean(len_theta);
    rep.mean_len_bs = mean(len_bs);
    rep.t = tt.t;
    rep.p = tt.p_value;
    if (tt.reject && !rep.aborted) {
      result.baseline = result.current;
      len_bs = len_theta;
      rep.baseline_updated = true;
    }
    result.reports.push_back(rep);
    if (on_epoch) on_epoch(rep, result);
  }
  return result;
}

}  // namespace steiner
