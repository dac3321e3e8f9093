#pragma once

// REINFORCE with a greedy rollout baseline.
//
// Each instance is rolled out twice: by sampling from the current policy and
// greedily under the frozen baseline policy. The descent direction is
//   (1/B) * sum_i (len_sampled_i - len_baseline_i) * grad log p(trajectory_i),
// so trajectories longer than the baseline lose probability. At each epoch
// end both policies solve a fixed validation set greedily and the baseline
// adopts the current weights only if a one-sided paired t-test says the
// current policy is shorter.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "steiner/candidates.hpp"
#include "steiner/graph.hpp"
#include "steiner/policy.hpp"
#include "steiner/solver.hpp"
#include "steiner/tensor.hpp"

namespace steiner {

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/// One-sided paired t-test of H1: mean(candidate) < mean(reference).
/// d = candidate - reference; t = mean(d) / (max(sd(d), eps) / sqrt(n)),
/// p = StudentT(n - 1).cdf(t). All-zero differences never reject.
/// Throws std::invalid_argument unless both samples have the same size >= 2
/// and alpha lies in (0, 1).
TTestResult paired_t_test(std::span<const double> candidate, std::span<const double> reference,
                          double alpha);

struct BatchResult {
  PolicyWeights<Tensor> gradient;  // averaged over used instances, unclipped
  std::vector<Trajectory> sampled;  // log_likelihood_var is not retained
  std::vector<double> baseline_lengths;
  double mean_sampled_length = 0.0;
  double mean_baseline_length = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// Sampled rollouts under `theta` (instance i draws from
/// Rng(seed_seq{sample_seed, i})) against greedy rollouts under `baseline`,
/// both with `stopping`. Instances whose rollout throws are skipped.
BatchResult reinforce_batch(const PolicyParams& theta, const PolicyParams& baseline,
                            std::span<const PointSet> instances, const CandidateConfig& candidates,
                            StoppingCriterion stopping, std::uint64_t sample_seed);

/// The batch surrogate for frozen trajectories:
///   (1/B) * sum_i advantage_i * log p_theta(trajectory_i).
/// Its gradient is what reinforce_batch returns.
double batch_objective(const PolicyParams& theta, std::span<const PointSet> instances,
                       std::span<const Trajectory> trajectories, std::span<const double> advantages,
                       const CandidateConfig& candidates);

PolicyWeights<Tensor> batch_objective_gradient(const PolicyParams& theta,
                                               std::span<const PointSet> instances,
                                               std::span<const Trajectory> trajectories,
                                               std::span<const double> advantages,
                                               const CandidateConfig& candidates);

/// Rescales `grad` in place so its global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_global_norm(PolicyWeights<Tensor>& grad, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t batches_per_epoch = 0;  // 0: one pass over the training set
  std::size_t epochs = 1;
  double learning_rate = 1e-4;
  double alpha = 0.05;
  double grad_clip = 1.0;
  StoppingCriterion stopping = StoppingCriterion::FirstSelection;
  CandidateConfig candidates;
  std::uint64_t seed = 0;
};

struct EpochReport {
  std::size_t epoch = 0;
  double mean_sampled_length = 0.0;   // training batches
  double mean_baseline_length = 0.0;  // training batches
  double mean_len_theta = 0.0;        // validation, greedy first-increment
  double mean_len_bs = 0.0;           // validation, greedy first-increment
  double grad_norm = 0.0;             // mean pre-clip norm over batches
  double t = 0.0;
  double p = 1.0;
  bool baseline_updated = false;
  bool aborted = false;
  std::size_t skipped = 0;
};

struct TrainResult {
  PolicyParams baseline;  // best parameters so far
  PolicyParams current;
  std::vector<EpochReport> reports;
};

using EpochCallback = std::function<void(const EpochReport&, const TrainResult&)>;

/// Greedy first-increment lengths of `params` on every instance.
std::vector<double> greedy_lengths(const PolicyParams& params, std::span<const PointSet> instances,
                                   const CandidateConfig& candidates);

/// Runs cfg.epochs epochs. Each epoch shuffles `training` with a seeded
/// generator and walks it in batches of cfg.batch_size; the validation set is
/// fixed for the whole run. An epoch in which the loss or gradient turns
/// non-finite is rolled back to its starting weights and optimizer state.
TrainResult train(const TrainConfig& cfg, const PolicyParams& init,
                  std::span<const PointSet> training, std::span<const PointSet> validation,
                  const EpochCallback& on_epoch = {});

}  // namespace steiner
