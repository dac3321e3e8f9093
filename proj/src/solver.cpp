#include "steiner/solver.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "steiner/errors.hpp"

namespace steiner {

std::string_view to_string(StoppingCriterion s) {
  switch (s) {
    case StoppingCriterion::FirstIncrement: return "first-increment";
    case StoppingCriterion::FirstSelection: return "first-selection";
    case StoppingCriterion::AllSelection: return "all-selection";
  }
  return "?";
}

StoppingCriterion parse_stopping_criterion(std::string_view s) {
  if (s == "first-increment") return StoppingCriterion::FirstIncrement;
  if (s == "first-selection") return StoppingCriterion::FirstSelection;
  if (s == "all-selection") return StoppingCriterion::AllSelection;
  throw std::invalid_argument("unknown stopping criterion '" + std::string(s) + "'");
}

bool should_stop(StoppingCriterion kind, const StopState& state) {
  const std::size_t cap = state.terminal_count >= 2 ? state.terminal_count - 2 : 0;
  if (state.steps_taken >= cap) return true;
  switch (kind) {
    case StoppingCriterion::FirstIncrement: return state.last_step_increased;
    case StoppingCriterion::FirstSelection: return state.steps_taken >= 1;
    case StoppingCriterion::AllSelection: return false;
  }
  return true;
}

Solution to_solution(Trajectory t) {
  Solution s;
  s.trace.push_back(t.initial_length);
  for (const Step& step : t.steps) s.trace.push_back(step.length_after);
  s.points = std::move(t.points);
  s.tree = std::move(t.tree);
  s.length = t.length;
  return s;
}

std::string solution_to_json(const Solution& s) {
  nlohmann::json points = nlohmann::json::array();
  for (const Point& p : s.points.points) points.push_back({p.x, p.y});
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : s.tree.edges) edges.push_back({e.u, e.v});
  nlohmann::json doc = {{"format_version", kSolutionFormatVersion},
                        {"terminal_count", s.points.terminal_count},
                        {"points", points},
                        {"edges", edges},
                        {"length", s.length},
                        {"trace", s.trace}};
  return doc.dump(2) + "\n";
}

Solution solution_from_json(const std::string& text, const std::string& source) {
  Solution s;
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kSolutionFormatVersion)
      throw InputError(source + ": solution format_version " + std::to_string(version) + " is not supported");
    for (const auto& p : doc.at("points")) {
      const auto xy = p.get<std::vector<double>>();
      if (xy.size() != 2) throw InputError(source + ": each point needs two coordinates");
      s.points.points.push_back({xy[0], xy[1]});
    }
    s.points.terminal_count = doc.at("terminal_count").get<std::size_t>();
    for (const auto& e : doc.at("edges")) {
      const auto uv = e.get<std::vector<std::size_t>>();
      if (uv.size() != 2) throw InputError(source + ": each edge needs two endpoints");
      s.tree.edges.push_back(Edge{std::min(uv[0], uv[1]), std::max(uv[0], uv[1])});
    }
    if (doc.contains("trace")) s.trace = doc.at("trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(source + ": malformed solution: " + e.what());
  }
  if (s.points.terminal_count > s.points.size())
    throw InputError(source + ": terminal_count exceeds the number of points");
  if (s.points.empty() || !is_spanning_tree(s.tree, s.points.size()))
    throw InputError(source + ": edges do not form a spanning tree over the points");
  s.tree.length = tree_length(s.tree, s.points);
  s.length = s.tree.length;
  return s;
}

Trajectory construct(const PointSet& terminals, const CandidateConfig& candidates,
                     StoppingCriterion stopping, const Chooser& choose) {
  if (terminals.size() < 2) throw std::invalid_argument("construct: need at least 2 terminals");
  Trajectory traj;
  traj.points = terminals;
  traj.points.terminal_count = terminals.size();
  double current = mst_length(traj.points.points);
  traj.initial_length = current;

  StopState state{0, terminals.size(), false};
  std::vector<Point> trial;
  while (!should_stop(stopping, state)) {
    const CandidateSet cands = make_candidates(traj.points.points, candidates);
    if (cands.empty()) break;
    const Choice c = choose(traj.points.points, cands);
    if (c.index >= cands.size()) throw std::out_of_range("construct: chooser returned a bad index");

    trial = traj.points.points;
    trial.push_back(cands.points[c.index]);
    const double next = mst_length(trial);
    const bool increased = next > current + kAcceptTolerance;
    const bool accept = stopping != StoppingCriterion::FirstIncrement || !increased;

    traj.steps.push_back(Step{cands.points[c.index], c.index, cands.size(), c.log_prob, next, accept});
    traj.log_likelihood += c.log_prob;
    if (c.log_prob_var.tape()) {
      traj.log_likelihood_var = traj.log_likelihood_var.tape()
                                    ? add(traj.log_likelihood_var, c.log_prob_var)
                                    : c.log_prob_var;
    }
    if (accept) {
      traj.points.points.push_back(cands.points[c.index]);
      current = next;
    }
    ++state.steps_taken;
    state.last_step_increased = increased;
  }
  traj.tree = mst(traj.points.points);
  traj.length = traj.tree.length;
  return traj;
}

void policy_input(std::span<const Point> current, const CandidateSet& candidates,
                  std::vector<Point>& points, std::vector<bool>& selected,
                  std::vector<bool>& candidate) {
  points.assign(current.begin(), current.end());
  points.insert(points.end(), candidates.points.begin(), candidates.points.end());
  selected.assign(points.size(), false);
  candidate.assign(points.size(), false);
  for (std::size_t j = 0; j < current.size(); ++j) selected[j] = true;
  for (std::size_t j = current.size(); j < points.size(); ++j) candidate[j] = true;
}

namespace {

// Scores the candidates of one step; fresh tape unless a gradient context
// is supplied.
Decoding score(std::span<const Point> current, const CandidateSet& cands, const PolicyParams& params,
               const GradientContext* grad, Tape& scratch) {
  std::vector<Point> points;
  std::vector<bool> selected, candidate;
  policy_input(current, cands, points, selected, candidate);
  if (grad) {
    const Encoding enc = encode(*grad->weights, params.hyper, *grad->tape, points, selected);
    return decode(*grad->weights, params.hyper, enc, candidate);
  }
  const auto w = bind(scratch, params, false);
  const Encoding enc = encode(w, params.hyper, scratch, points, selected);
  return decode(w, params.hyper, enc, candidate);
}

}  // namespace

Trajectory rollout(const PointSet& terminals, const PolicyParams& params, const SolveConfig& cfg,
                   Rng& rng, const GradientContext* grad) {
  if (terminals.size() < 2) throw std::invalid_argument("rollout: need at least 2 terminals");
  const Chooser choose = [&](std::span<const Point> current, const CandidateSet& cands) {
    Tape scratch;
    const Decoding dec = score(current, cands, params, grad, scratch);
    const std::size_t x = cfg.mode == SelectionMode::Greedy ? argmax(dec.dist) : sample(dec.dist, rng);
    const std::size_t ci = x - current.size();
    Choice c{ci, dec.dist.log_probabilities[x], Var{}};
    if (grad) c.log_prob_var = element(dec.log_probs, 0, ci);
    return c;
  };
  return construct(terminals, cfg.candidates, cfg.stopping, choose);
}

Solution solve(const PointSet& terminals, const PolicyParams& params, const SolveConfig& cfg) {
  if (terminals.size() < 2) throw std::invalid_argument("solve: need at least 2 terminals");
  if (cfg.mode != SelectionMode::Greedy) throw std::invalid_argument("solve: inference is greedy");
  SolveConfig c = cfg;
  c.stopping = StoppingCriterion::FirstIncrement;
  Rng unused(cfg.seed);
  return to_solution(rollout(terminals, params, c, unused));
}

Var replay_log_likelihood(const PointSet& terminals, const Trajectory& trajectory,
                          const PolicyParams& params, const CandidateConfig& candidates,
                          const GradientContext& grad) {
  std::vector<Point> current(terminals.points.begin(), terminals.points.end());
  Var total;
  Tape unused;
  for (const Step& step : trajectory.steps) {
    const CandidateSet cands = make_candidates(current, candidates);
    if (step.choice >= cands.size() || !(cands.points[step.choice] == step.point))
      throw std::invalid_argument("replay_log_likelihood: trajectory does not match candidates");
    const Decoding dec = score(current, cands, params, &grad, unused);
    Var lp = element(dec.log_probs, 0, step.choice);
    total = total.tape() ? add(total, lp) : lp;
    if (step.accepted) current.push_back(step.point);
  }
  if (!total.tape()) total = grad.tape->constant(Tensor(1, 1, 0.0));
  return total;
}

}  // namespace steiner
