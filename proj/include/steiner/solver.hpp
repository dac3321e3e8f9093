#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "steiner/candidates.hpp"
#include "steiner/graph.hpp"
#include "steiner/policy.hpp"
#include "steiner/tensor.hpp"

namespace steiner {

enum class SelectionMode { Greedy, Sample };

enum class StoppingCriterion { FirstIncrement, FirstSelection, AllSelection };

std::string_view to_string(StoppingCriterion s);
/// Accepts "first-increment", "first-selection", "all-selection".
StoppingCriterion parse_stopping_criterion(std::string_view s);

/// Slack allowed before a new point counts as lengthening the tree.
inline constexpr double kAcceptTolerance = 1e-12;

/// What the stopping rule needs to know after a point has been added.
struct StopState {
  std::size_t steps_taken = 0;
  std::size_t terminal_count = 0;
  bool last_step_increased = false;
};

/// True when construction must stop. Every criterion also stops once
/// |S| - 2 points have been added.
bool should_stop(StoppingCriterion kind, const StopState& state);

struct SolveConfig {
  CandidateConfig candidates;
  SelectionMode mode = SelectionMode::Greedy;
  StoppingCriterion stopping = StoppingCriterion::FirstIncrement;
  std::uint64_t seed = 0;
};

struct Step {
  Point point;
  std::size_t choice = 0;  // index into the candidate set of this step
  std::size_t candidate_count = 0;
  double log_prob = 0.0;
  double length_after = 0.0;  // MST length once the point is added
  bool accepted = true;
};

struct Trajectory {
  std::vector<Step> steps;  // includes a final rejected step, if any
  PointSet points;          // terminals plus accepted points
  Tree tree;
  double length = 0.0;
  double initial_length = 0.0;
  double log_likelihood = 0.0;  // sum of step log-probabilities
  Var log_likelihood_var;       // set only when rolled out on a tape

  std::size_t accepted_count() const { return points.size() - points.terminal_count; }
};

struct Solution {
  PointSet points;
  Tree tree;
  double length = 0.0;
  std::vector<double> trace;  // MST length before any step, then after each step
};

Solution to_solution(Trajectory t);

inline constexpr int kSolutionFormatVersion = 1;

/// {"format_version", "terminal_count", "points", "edges", "length", "trace"}
std::string solution_to_json(const Solution& s);
/// Throws InputError when the document is malformed or the edges do not form
/// a spanning tree over the points.
Solution solution_from_json(const std::string& text, const std::string& source = "<input>");

/// Picks a candidate given the current point set; returns the candidate
/// index and its log-probability.
struct Choice {
  std::size_t index = 0;
  double log_prob = 0.0;
  Var log_prob_var;
};
using Chooser = std::function<Choice(std::span<const Point> current, const CandidateSet& candidates)>;

/// Shared incremental loop: build candidates from the current points, let
/// `choose` pick one, append it, and apply the stopping rule. Under
/// FirstIncrement a step that lengthens the tree by more than
/// kAcceptTolerance is recorded as rejected and ends the loop; the returned
/// tree is the MST before that step. An empty candidate set ends the loop.
Trajectory construct(const PointSet& terminals, const CandidateConfig& candidates,
                     StoppingCriterion stopping, const Chooser& choose);

/// Parameters bound to a tape so a rollout's log-likelihood is
/// differentiable.
struct GradientContext {
  Tape* tape = nullptr;
  const PolicyWeights<Var>* weights = nullptr;
};

/// Builds the policy input X = current ∪ candidates with the matching masks.
void policy_input(std::span<const Point> current, const CandidateSet& candidates,
                  std::vector<Point>& points, std::vector<bool>& selected,
                  std::vector<bool>& candidate);

/// Policy-driven construction: argmax choices under Greedy, categorical
/// draws from `rng` under Sample. Throws std::invalid_argument when |S| < 2.
Trajectory rollout(const PointSet& terminals, const PolicyParams& params, const SolveConfig& cfg,
                   Rng& rng, const GradientContext* grad = nullptr);

/// Greedy inference with first-increment stopping.
/// Throws std::invalid_argument when |S| < 2 or cfg.mode is not Greedy.
Solution solve(const PointSet& terminals, const PolicyParams& params, const SolveConfig& cfg);

/// Re-scores a recorded trajectory on `grad`'s tape: the sum of log p of each
/// recorded choice given the point set at that step.
Var replay_log_likelihood(const PointSet& terminals, const Trajectory& trajectory,
                          const PolicyParams& params, const CandidateConfig& candidates,
                          const GradientContext& grad);

}  // namespace steiner
