// steiner: dataset generation, training, solving, evaluation and plotting.
//
// Exit codes: 0 success, 1 internal failure, 2 bad input (missing file,
// malformed data, invalid configuration).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "steiner/baselines.hpp"
#include "steiner/candidates.hpp"
#include "steiner/errors.hpp"
#include "steiner/instances.hpp"
#include "steiner/policy.hpp"
#include "steiner/random.hpp"
#include "steiner/solver.hpp"
#include "steiner/svg.hpp"
#include "steiner/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace steiner;

namespace {

struct CandidateFlags {
  std::string method = "mst";
  std::size_t k_star = 9;
  std::size_t k_prime = 3;
  std::size_t grid = 5;

  void add(CLI::App* app) {
    app->add_option("--candidates", method, "Candidate generator: knn, mst or grid")->capture_default_str();
    app->add_option("--k-star", k_star, "Interior points per Steiner arc")->capture_default_str();
    app->add_option("--k-prime", k_prime, "Neighbors per point for knn")->capture_default_str();
    app->add_option("--grid", grid, "Grid resolution")->capture_default_str();
  }
  CandidateConfig resolve() const {
    CandidateConfig c;
    c.method = parse_candidate_method(method);
    c.k_star = k_star;
    c.k_prime = k_prime;
    c.grid_resolution = grid;
    c.validate();
    return c;
  }
};

struct ModelFlags {
  std::string model;
  std::size_t d = 128, layers = 5, heads = 8, ff_dim = 512;

  void add(CLI::App* app, bool with_model) {
    if (with_model) app->add_option("--model", model, "Checkpoint; random weights from --seed if omitted");
    app->add_option("--d", d, "Embedding dimension")->capture_default_str();
    app->add_option("--layers", layers, "Attention layers")->capture_default_str();
    app->add_option("--heads", heads, "Attention heads")->capture_default_str();
    app->add_option("--ff-dim", ff_dim, "Feed-forward width")->capture_default_str();
  }
  PolicyHyper hyper() const {
    PolicyHyper h{d, layers, heads, ff_dim};
    h.validate();
    return h;
  }
  PolicyParams resolve(std::uint64_t seed) const {
    if (!model.empty()) return load_params(model);
    return init_params(hyper(), seed);
  }
};

json candidate_json(const CandidateConfig& c) {
  return {{"method", std::string(to_string(c.method))},
          {"k_star", c.k_star},
          {"k_prime", c.k_prime},
          {"grid", c.grid_resolution}};
}

json hyper_json(const PolicyHyper& h) {
  return {{"d", h.d}, {"layers", h.layers}, {"heads", h.heads}, {"ff_dim", h.ff_dim}};
}

void print_config(const std::string& command, const json& cfg) {
  std::cout << "# " << command << " " << cfg.dump() << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Randomized methods seed each instance from (seed, instance index).
struct Method {
  std::string name;
  std::function<Solution(const PointSet&, std::size_t index)> run;
};

Method make_method(const std::string& spec, const CandidateConfig& cands, const PolicyParams* policy,
                   std::uint64_t seed) {
  if (spec == "mst") return {spec, [](const PointSet& s, std::size_t) { return mst_baseline(s); }};
  if (spec == "rand1")
    return {spec, [seed](const PointSet& s, std::size_t i) {
              Rng rng(derive_seed({seed, i, 1}));
              return rand1(s, rng);
            }};
  if (spec == "rand2")
    return {spec, [seed, cands](const PointSet& s, std::size_t i) {
              Rng rng(derive_seed({seed, i, 2}));
              return rand2(s, cands, rng);
            }};
  if (spec.rfind("heuristic", 0) == 0) {
    HeuristicConfig h;
    if (spec.size() > 9) {
      if (spec[9] != ':') throw std::invalid_argument("unknown method '" + spec + "'");
      h.iterations = std::stoul(spec.substr(10));
    }
    h.validate();
    return {"heuristic:" + std::to_string(h.iterations),
            [h](const PointSet& s, std::size_t) { return insertion_heuristic(s, h); }};
  }
  if (spec == "oracle")
    return {spec, [](const PointSet& s, std::size_t) { return oracle_solution(s, exact_oracle(s)); }};
  if (spec == "policy") {
    if (!policy) throw std::invalid_argument("method 'policy' needs a model");
    return {spec, [policy, cands](const PointSet& s, std::size_t) {
              SolveConfig cfg;
              cfg.candidates = cands;
              return solve(s, *policy, cfg);
            }};
  }
  throw std::invalid_argument("unknown method '" + spec + "'");
}

// ---------------------------------------------------------------------------

int cmd_gen(std::size_t n, const std::string& dist, std::size_t count, std::uint64_t seed, const std::string& out) {
  GeneratorSpec spec{n, parse_distribution(dist), seed};
  spec.validate();
  if (count == 0) throw std::invalid_argument("--count must be at least 1");
  print_config("gen", {{"n", n}, {"dist", dist}, {"count", count}, {"seed", seed}, {"out", out}});
  Dataset data;
  data.spec = spec;
  data.instances = generate(spec, count);
  save_dataset(data, out);
  std::cout << "wrote " << count << " instances to " << out << "\n";
  return 0;
}

struct TrainFlags {
  std::string data, val_data, out = "model.json", log, init;
  std::string stopping = "first-selection";
  std::size_t batch = 32, batches_per_epoch = 0, epochs = 1, val_size = 512;
  double lr = 1e-4, alpha = 0.05, clip = 1.0;
};

int cmd_train(const TrainFlags& f, const CandidateFlags& cf, const ModelFlags& mf, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.batch_size = f.batch;
  cfg.batches_per_epoch = f.batches_per_epoch;
  cfg.epochs = f.epochs;
  cfg.learning_rate = f.lr;
  cfg.alpha = f.alpha;
  cfg.grad_clip = f.clip;
  cfg.stopping = parse_stopping_criterion(f.stopping);
  cfg.candidates = cf.resolve();
  cfg.seed = seed;
  if (cfg.batch_size == 0) throw std::invalid_argument("--batch must be at least 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("--alpha must lie in (0, 1)");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("--lr must be positive");
  if (!(cfg.grad_clip > 0.0)) throw std::invalid_argument("--clip must be positive");

  const Dataset data = load_dataset(f.data);
  std::vector<PointSet> validation;
  if (!f.val_data.empty()) {
    validation = load_dataset(f.val_data).instances;
  } else {
    if (!data.spec) throw std::invalid_argument("dataset has no generator spec; pass --val-data");
    GeneratorSpec vs = *data.spec;
    vs.seed = derive_seed({data.spec->seed, 0x76616c});
    validation = generate(vs, f.val_size);
  }

  const PolicyParams init = f.init.empty() ? init_params(mf.hyper(), seed) : load_params(f.init);
  const std::string log_path = f.log.empty() ? f.out + ".log.jsonl" : f.log;
  print_config("train", {{"data", f.data},
                         {"train_size", data.instances.size()},
                         {"val_size", validation.size()},
                         {"candidates", candidate_json(cfg.candidates)},
                         {"stopping", std::string(to_string(cfg.stopping))},
                         {"model", hyper_json(init.hyper)},
                         {"batch", cfg.batch_size},
                         {"batches_per_epoch", cfg.batches_per_epoch},
                         {"epochs", cfg.epochs},
                         {"lr", cfg.learning_rate},
                         {"alpha", cfg.alpha},
                         {"clip", cfg.grad_clip},
                         {"seed", seed},
                         {"out", f.out},
                         {"log", log_path}});

  std::string log;
  const auto on_epoch = [&](const EpochReport& r, const TrainResult& state) {
    const json line = {{"epoch", r.epoch},
                       {"mean_len_theta", r.mean_len_theta},
                       {"mean_len_bs", r.mean_len_bs},
                       {"t", r.t},
                       {"p", r.p},
                       {"baseline_updated", r.baseline_updated},
                       {"mean_sampled_length", r.mean_sampled_length},
                       {"mean_baseline_length", r.mean_baseline_length},
                       {"grad_norm", r.grad_norm},
                       {"aborted", r.aborted},
                       {"skipped", r.skipped}};
    log += line.dump() + "\n";
    std::cout << line.dump() << "\n" << std::flush;
    if (r.skipped > 0) std::cerr << "warning: " << r.skipped << " rollouts failed and were skipped\n";
    if (r.aborted) std::cerr << "warning: epoch " << r.epoch << " hit a non-finite value and was rolled back\n";
    save_params(state.baseline, f.out);
    write_text(log_path, log);
  };
  const TrainResult result = train(cfg, init, data.instances, validation, on_epoch);
  save_params(result.baseline, f.out);
  write_text(log_path, log);
  std::cout << "saved checkpoint to " << f.out << "\n";
  return 0;
}

int cmd_solve(const std::string& instance, const CandidateFlags& cf, const ModelFlags& mf, std::uint64_t seed,
              const std::string& svg, const std::string& out) {
  SolveConfig cfg;
  cfg.candidates = cf.resolve();
  const PointSet s = load_instance(instance);
  if (s.size() < 2) throw InputError(instance + ": need at least 2 points to solve");
  const PolicyParams params = mf.resolve(seed);
  print_config("solve", {{"instance", instance},
                         {"model", mf.model.empty() ? json("random-init") : json(mf.model)},
                         {"hyper", hyper_json(params.hyper)},
                         {"candidates", candidate_json(cfg.candidates)},
                         {"seed", seed}});
  const Solution sol = solve(s, params, cfg);
  char buf[128];
  std::snprintf(buf, sizeof buf, "length %.12g\n", sol.length);
  std::cout << buf;
  std::snprintf(buf, sizeof buf, "mst_length %.12g\n", sol.trace.front());
  std::cout << buf;
  std::cout << "steiner_points " << sol.points.steiner_points().size() << "\n";
  for (const Point& p : sol.points.steiner_points()) {
    std::snprintf(buf, sizeof buf, "  %.12g %.12g\n", p.x, p.y);
    std::cout << buf;
  }
  if (!out.empty()) write_text(out, solution_to_json(sol));
  if (!svg.empty()) write_text(svg, render_svg(sol.points, sol.tree));
  return 0;
}

struct EvalFlags {
  std::string data, reference = "oracle", baselines = "mst,rand1,rand2,heuristic:10", out;
};

std::vector<double> reference_lengths(const std::string& reference, const std::vector<PointSet>& instances) {
  std::vector<double> refs;
  refs.reserve(instances.size());
  for (const PointSet& s : instances) {
    try {
      refs.push_back(reference == "oracle" ? exact_oracle(s).length : mst_baseline(s).length);
    } catch (const std::exception& e) {
      std::cerr << "warning: reference failed: " << e.what() << "\n";
      refs.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return refs;
}

int cmd_eval(const EvalFlags& f, const CandidateFlags& cf, const ModelFlags& mf, std::uint64_t seed) {
  const CandidateConfig cands = cf.resolve();
  if (f.reference != "oracle" && f.reference != "mst")
    throw std::invalid_argument("--reference must be oracle or mst");
  const Dataset data = load_dataset(f.data);
  if (f.reference == "oracle") {
    for (const PointSet& s : data.instances)
      if (s.size() > kOracleMaxTerminals)
        throw std::invalid_argument("the exact oracle handles at most " + std::to_string(kOracleMaxTerminals) +
                                    " terminals; this dataset has instances with " + std::to_string(s.size()) +
                                    " (use --reference mst)");
  }
  std::optional<PolicyParams> policy;
  if (!mf.model.empty()) policy = load_params(mf.model);
  std::vector<Method> methods;
  if (policy) methods.push_back(make_method("policy", cands, &*policy, seed));
  for (const std::string& m : split_list(f.baselines)) methods.push_back(make_method(m, cands, nullptr, seed));

  json names = json::array();
  for (const Method& m : methods) names.push_back(m.name);
  print_config("eval", {{"data", f.data},
                        {"count", data.instances.size()},
                        {"model", mf.model},
                        {"reference", f.reference},
                        {"methods", names},
                        {"candidates", candidate_json(cands)},
                        {"seed", seed}});

  const std::vector<double> refs = reference_lengths(f.reference, data.instances);
  std::vector<GapReport> reports;
  for (const Method& m : methods) {
    // Seeds follow instance positions, so skip the slots whose reference failed.
    std::size_t next = 0;
    const LengthFn fn = [&](const PointSet& s) {
      while (!(std::isfinite(refs[next]) && refs[next] > 0.0)) ++next;
      return m.run(s, next++).length;
    };
    reports.push_back(evaluate_against(m.name, fn, f.reference, refs, data.instances));
  }
  std::cout << reports_to_table(reports);
  if (!f.out.empty()) {
    write_text(f.out, reports_to_json(reports));
    std::cout << "wrote " << f.out << "\n";
  } else {
    std::cout << reports_to_json(reports);
  }
  return 0;
}

int cmd_bench(const std::string& sizes, const std::string& methods_list, std::size_t count,
              const ModelFlags& mf, const CandidateFlags& cf, std::uint64_t seed, const std::string& out) {
  const CandidateConfig cands = cf.resolve();
  std::vector<std::size_t> ns;
  for (const std::string& s : split_list(sizes)) ns.push_back(std::stoul(s));
  if (ns.empty()) throw std::invalid_argument("--sizes is empty");
  if (count == 0) throw std::invalid_argument("--count must be at least 1");
  const PolicyParams params = mf.resolve(seed);
  std::vector<Method> methods;
  for (const std::string& m : split_list(methods_list)) methods.push_back(make_method(m, cands, &params, seed));
  json names = json::array();
  for (const Method& m : methods) names.push_back(m.name);
  print_config("bench", {{"sizes", ns}, {"methods", names}, {"count", count}, {"seed", seed},
                         {"hyper", hyper_json(params.hyper)}, {"candidates", candidate_json(cands)}});

  json rows = json::array();
  std::printf("%6s  %-14s  %12s  %14s\n", "n", "method", "mean length", "ms/instance");
  for (std::size_t n : ns) {
    const auto instances = generate(GeneratorSpec{n, Distribution::Uniform01, derive_seed({seed, n})}, count);
    for (const Method& m : methods) {
      if (m.name == "oracle" && n > kOracleMaxTerminals) continue;
      double total = 0.0;
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < instances.size(); ++i) total += m.run(instances[i], i).length;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double mean_len = total / static_cast<double>(count);
      const double ms = 1000.0 * secs / static_cast<double>(count);
      std::printf("%6zu  %-14s  %12.6f  %14.3f\n", n, m.name.c_str(), mean_len, ms);
      rows.push_back({{"n", n}, {"method", m.name}, {"mean_length", mean_len}, {"ms_per_instance", ms}});
    }
  }
  if (!out.empty()) write_text(out, json({{"format_version", 1}, {"rows", rows}}).dump(2) + "\n");
  return 0;
}

int cmd_plot(const std::string& instance, const std::string& solution, const std::string& out) {
  if (instance.empty() && solution.empty()) throw std::invalid_argument("plot needs --instance or --solution");
  print_config("plot", {{"instance", instance}, {"solution", solution}, {"out", out}});
  PointSet points;
  Tree tree;
  if (!solution.empty()) {
    const Solution sol = solution_from_json(read_text(solution), solution);
    if (!instance.empty()) {
      const PointSet s = load_instance(instance);
      if (s.size() != sol.points.terminal_count)
        throw InputError(solution + ": terminal count does not match " + instance);
      for (std::size_t i = 0; i < s.size(); ++i)
        if (!(s[i] == sol.points[i])) throw InputError(solution + ": terminals do not match " + instance);
    }
    points = sol.points;
    tree = sol.tree;
  } else {
    points = load_instance(instance);
    tree = mst(points);
  }
  write_text(out, render_svg(points, tree));
  std::cout << "wrote " << out << " (" << points.terminal_count << " terminals, "
            << points.size() - points.terminal_count << " steiner points, " << tree.edges.size() << " edges)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean Steiner tree toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen", "Generate a random dataset");
  std::size_t gen_n = 10, gen_count = 100;
  std::string gen_dist = "uniform", gen_out;
  gen->add_option("--n", gen_n, "Points per instance")->capture_default_str();
  gen->add_option("--dist", gen_dist, "uniform or normal")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of instances")->capture_default_str();
  gen->add_option("--seed", seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train a policy");
  TrainFlags tf;
  CandidateFlags tcf;
  ModelFlags tmf;
  tr->add_option("--data", tf.data, "Training dataset")->required();
  tr->add_option("--val-data", tf.val_data, "Validation dataset (default: generated from the data spec)");
  tr->add_option("--val-size", tf.val_size, "Generated validation instances")->capture_default_str();
  tcf.add(tr);
  tmf.add(tr, false);
  tr->add_option("--init", tf.init, "Start from this checkpoint");
  tr->add_option("--stopping", tf.stopping, "first-increment, first-selection or all-selection")
      ->capture_default_str();
  tr->add_option("--batch", tf.batch, "Batch size")->capture_default_str();
  tr->add_option("--batches-per-epoch", tf.batches_per_epoch, "0 = one pass over the data")->capture_default_str();
  tr->add_option("--epochs", tf.epochs, "Epochs")->capture_default_str();
  tr->add_option("--lr", tf.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--alpha", tf.alpha, "t-test significance")->capture_default_str();
  tr->add_option("--clip", tf.clip, "Global gradient norm cap")->capture_default_str();
  tr->add_option("--seed", seed, "Seed")->capture_default_str();
  tr->add_option("--out", tf.out, "Checkpoint path")->capture_default_str();
  tr->add_option("--log", tf.log, "Epoch log (default: <out>.log.jsonl)");

  auto* so = app.add_subcommand("solve", "Solve one instance with a policy");
  std::string so_instance, so_svg, so_out;
  CandidateFlags scf;
  ModelFlags smf;
  so->add_option("--instance", so_instance, "Instance file")->required();
  scf.add(so);
  smf.add(so, true);
  so->add_option("--seed", seed, "Seed for random weights")->capture_default_str();
  so->add_option("--svg", so_svg, "Also write an SVG drawing");
  so->add_option("--out", so_out, "Write the solution as JSON");

  auto* ev = app.add_subcommand("eval", "Gap report against a reference");
  EvalFlags ef;
  CandidateFlags ecf;
  ModelFlags emf;
  ev->add_option("--model", emf.model, "Policy checkpoint to evaluate");
  ev->add_option("--data", ef.data, "Dataset")->required();
  ev->add_option("--reference", ef.reference, "oracle or mst")->capture_default_str();
  ev->add_option("--baselines", ef.baselines, "Comma list of mst, rand1, rand2, heuristic:K")
      ->capture_default_str();
  ecf.add(ev);
  ev->add_option("--seed", seed, "Seed")->capture_default_str();
  ev->add_option("--out", ef.out, "Write the JSON report here");

  auto* be = app.add_subcommand("bench", "Timing per prediction");
  std::string be_sizes = "5,10,20", be_methods = "mst,rand1,rand2,heuristic:10,policy", be_out;
  std::size_t be_count = 20;
  CandidateFlags bcf;
  ModelFlags bmf;
  be->add_option("--sizes", be_sizes, "Comma list of instance sizes")->capture_default_str();
  be->add_option("--methods", be_methods, "Comma list of mst, rand1, rand2, heuristic:K, policy, oracle")->capture_default_str();
  be->add_option("--count", be_count, "Instances per size")->capture_default_str();
  bcf.add(be);
  bmf.add(be, true);
  be->add_option("--seed", seed, "Seed")->capture_default_str();
  be->add_option("--out", be_out, "Write the JSON report here");

  auto* pl = app.add_subcommand("plot", "Draw a solution as SVG");
  std::string pl_instance, pl_solution, pl_out;
  pl->add_option("--instance", pl_instance, "Instance file");
  pl->add_option("--solution", pl_solution, "Solution JSON");
  pl->add_option("--out", pl_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_n, gen_dist, gen_count, seed, gen_out);
    if (tr->parsed()) return cmd_train(tf, tcf, tmf, seed);
    if (so->parsed()) return cmd_solve(so_instance, scf, smf, seed, so_svg, so_out);
    if (ev->parsed()) return cmd_eval(ef, ecf, emf, seed);
    if (be->parsed()) return cmd_bench(be_sizes, be_methods, be_count, bmf, bcf, seed, be_out);
    if (pl->parsed()) return cmd_plot(pl_instance, pl_solution, pl_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
