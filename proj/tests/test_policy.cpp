#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "steiner/errors.hpp"
#include "steiner/policy.hpp"
#include "support.hpp"

using namespace steiner;

namespace {

PolicyHyper tiny() { return PolicyHyper{8, 2, 2, 16}; }

struct Input {
  std::vector<Point> points;
  std::vector<bool> selected, candidate;
};

Input random_input(std::mt19937_64& rng, std::size_t n_selected, std::size_t n_candidates) {
  Input in;
  in.points = testing::random_points(rng, n_selected + n_candidates);
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    in.selected.push_back(i < n_selected);
    in.candidate.push_back(i >= n_selected);
  }
  return in;
}

double log_prob(const PolicyParams& p, const Input& in, std::size_t x) {
  return evaluate_policy(p, in.points, in.selected, in.candidate).log_probabilities[x];
}

}  // namespace

TEST_CASE("init_params") {
  const PolicyParams a = init_params(tiny(), 42);
  const PolicyParams b = init_params(tiny(), 42);
  const PolicyParams c = init_params(tiny(), 43);
  CHECK(params_to_json(a) == params_to_json(b));
  CHECK(params_to_json(a) != params_to_json(c));
  CHECK(tiny().head_dim() == 4);

  const double bound = 1.0 / std::sqrt(8.0);
  for (const Tensor* t : flatten(a.weights))
    for (double v : t->data()) CHECK(std::abs(v) <= bound);

  // Shapes follow the parameter inventory.
  const auto& w = a.weights;
  CHECK(w.embed_weight.shape() == std::array<std::size_t, 2>{8, 2});
  CHECK(w.embed_bias.size() == 8);
  REQUIRE(w.layers.size() == 2);
  REQUIRE(w.layers[0].heads.size() == 2);
  CHECK(w.layers[0].heads[0].out.shape() == std::array<std::size_t, 2>{8, 4});
  CHECK(w.layers[0].heads[0].query.shape() == std::array<std::size_t, 2>{4, 8});
  CHECK(w.layers[0].heads[0].key.shape() == std::array<std::size_t, 2>{4, 8});
  CHECK(w.layers[0].heads[0].value.shape() == std::array<std::size_t, 2>{4, 8});
  CHECK(w.layers[1].ff_in_weight.shape() == std::array<std::size_t, 2>{16, 8});
  CHECK(w.layers[1].ff_out_weight.shape() == std::array<std::size_t, 2>{8, 16});
  CHECK(w.decoder_query.shape() == std::array<std::size_t, 2>{4, 8});
  CHECK(w.decoder_key.shape() == std::array<std::size_t, 2>{4, 8});

  CHECK_THROWS_AS(init_params(PolicyHyper{10, 1, 3, 4}, 0), std::invalid_argument);
}

TEST_CASE("decode gives a distribution over the candidates only") {
  std::mt19937_64 rng(1);
  const PolicyParams p = init_params(tiny(), 7);
  for (int trial = 0; trial < 20; ++trial) {
    const Input in = random_input(rng, 4, 9);
    const auto dist = evaluate_policy(p, in.points, in.selected, in.candidate);
    const double total = std::accumulate(dist.probabilities.begin(), dist.probabilities.end(), 0.0);
    CHECK(std::abs(total - 1.0) <= 1e-9);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(dist.probabilities[j] == 0.0);
      CHECK(std::isinf(dist.log_probabilities[j]));
    }
  }
}

TEST_CASE("zero decoder weights give a uniform distribution") {
  std::mt19937_64 rng(2);
  for (bool zero_query : {true, false}) {
    PolicyParams p = init_params(tiny(), 3);
    (zero_query ? p.weights.decoder_query : p.weights.decoder_key).fill(0.0);
    const Input in = random_input(rng, 3, 6);
    const auto dist = evaluate_policy(p, in.points, in.selected, in.candidate);
    for (std::size_t j = 3; j < 9; ++j) CHECK(dist.probabilities[j] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("single candidate has probability one") {
  std::mt19937_64 rng(3);
  const Input in = random_input(rng, 3, 1);
  const auto dist = evaluate_policy(init_params(tiny(), 1), in.points, in.selected, in.candidate);
  CHECK(dist.probabilities[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("encoder symmetries") {
  std::mt19937_64 rng(4);
  const PolicyParams p = init_params(tiny(), 11);

  SUBCASE("permutation equivariance") {
    const Input in = random_input(rng, 5, 7);
    std::vector<std::size_t> perm(in.points.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Input shuffled;
    for (std::size_t i : perm) {
      shuffled.points.push_back(in.points[i]);
      shuffled.selected.push_back(in.selected[i]);
      shuffled.candidate.push_back(in.candidate[i]);
    }
    Tape t1, t2;
    const auto w1 = bind(t1, p, false);
    const auto w2 = bind(t2, p, false);
    const Encoding e1 = encode(w1, p.hyper, t1, in.points, in.selected);
    const Encoding e2 = encode(w2, p.hyper, t2, shuffled.points, shuffled.selected);
    for (std::size_t c = 0; c < p.hyper.d; ++c) {
      CHECK(std::abs(e1.graph.value()(0, c) - e2.graph.value()(0, c)) <= 1e-9);
      for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(std::abs(e2.nodes.value()(i, c) - e1.nodes.value()(perm[i], c)) <= 1e-9);
    }
    const auto d1 = decode(w1, p.hyper, e1, in.candidate).dist;
    const auto d2 = decode(w2, p.hyper, e2, shuffled.candidate).dist;
    for (std::size_t i = 0; i < perm.size(); ++i)
      CHECK(std::abs(d2.probabilities[i] - d1.probabilities[perm[i]]) <= 1e-9);
  }

  SUBCASE("one selected point: graph embedding is its embedding") {
    const Input in = random_input(rng, 1, 5);
    Tape t;
    const auto w = bind(t, p, false);
    const Encoding e = encode(w, p.hyper, t, in.points, in.selected);
    for (std::size_t c = 0; c < p.hyper.d; ++c) CHECK(e.graph.value()(0, c) == e.nodes.value()(0, c));
  }

  SUBCASE("identical points get identical embeddings") {
    Input in = random_input(rng, 3, 4);
    in.points[5] = in.points[4];
    Tape t;
    const auto w = bind(t, p, false);
    const Encoding e = encode(w, p.hyper, t, in.points, in.selected);
    for (std::size_t c = 0; c < p.hyper.d; ++c)
      CHECK(std::abs(e.nodes.value()(4, c) - e.nodes.value()(5, c)) <= 1e-12);
  }

  SUBCASE("input errors") {
    Tape t;
    const auto w = bind(t, p, false);
    const std::vector<Point> pts{{0, 0}, {1, 1}};
    CHECK_THROWS_AS(encode(w, p.hyper, t, pts, {false, false}), std::invalid_argument);
    CHECK_THROWS_AS(encode(w, p.hyper, t, std::vector<Point>{{0, 0}}, {true}), std::invalid_argument);
    const Encoding e = encode(w, p.hyper, t, pts, {true, false});
    CHECK_THROWS_AS(decode(w, p.hyper, e, {false, false}), std::invalid_argument);
  }
}

TEST_CASE("log-probability gradient matches finite differences") {
  // d=8, L=2, M=2 and |X| = 12.
  for (int seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(50 + seed);
    PolicyParams p = init_params(tiny(), 200 + seed);
    const Input in = random_input(rng, 4, 8);
    const std::size_t chosen = 4 + static_cast<std::size_t>(seed) * 2;

    Tape tape;
    const auto w = bind(tape, p, true);
    const Encoding enc = encode(w, p.hyper, tape, in.points, in.selected);
    const Decoding dec = decode(w, p.hyper, enc, in.candidate);
    const std::size_t col = static_cast<std::size_t>(
        std::find(dec.columns.begin(), dec.columns.end(), chosen) - dec.columns.begin());
    tape.backward(element(dec.log_probs, 0, col));

    std::vector<Var> vars;
    for_each_weight(w, [&](const std::string&, const Var& v) { vars.push_back(v); });
    std::vector<Tensor*> tensors = flatten(p.weights);
    double worst = 0.0;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const Tensor g = tape.grad(vars[k]);
      for (std::size_t i = 0; i < tensors[k]->size(); ++i) {
        const double h = 1e-5;
        const double saved = (*tensors[k])[i];
        (*tensors[k])[i] = saved + h;
        const double up = log_prob(p, in, chosen);
        (*tensors[k])[i] = saved - h;
        const double down = log_prob(p, in, chosen);
        (*tensors[k])[i] = saved;
        worst = std::max(worst, testing::rel_err(g[i], (up - down) / (2 * h)));
      }
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("sample and argmax") {
  CandidateDistribution point_mass{{1.0, 0.0, 0.0}, {0.0, -INFINITY, -INFINITY}, {true, true, true}};
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) CHECK(sample(point_mass, rng) == 0);

  CandidateDistribution d{{0.2, 0.5, 0.3}, {}, {true, true, true}};
  CHECK(argmax(d) == 1);
  CandidateDistribution tie{{0.0, 0.4, 0.4, 0.2}, {}, {false, true, true, true}};
  CHECK(argmax(tie) == 1);

  // Binomial 3-sigma bands over 1e5 draws.
  const std::size_t draws = 100000;
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t i = 0; i < draws; ++i) ++counts[sample(d, rng)];
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = d.probabilities[j];
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(static_cast<double>(counts[j]) - draws * p) <= 3.0 * sigma);
  }

  CandidateDistribution masked{{0.0, 0.0}, {}, {false, false}};
  CHECK_THROWS_AS(argmax(masked), std::invalid_argument);
}

TEST_CASE("checkpoints") {
  const PolicyParams p = init_params(tiny(), 9);
  const auto dir = std::filesystem::temp_directory_path() / "steiner_policy_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  save_params(p, path);
  const PolicyParams q = load_params(path);
  CHECK(params_to_json(q) == params_to_json(p));
  for (std::size_t k = 0; k < flatten(p.weights).size(); ++k) CHECK(*flatten(q.weights)[k] == *flatten(p.weights)[k]);

  const std::string text = params_to_json(p);
  for (const char* key : {"\"d\":8", "\"L\":2", "\"M\":2", "\"ff_dim\":16", "\"format_version\":1"})
    CHECK(text.find(key) != std::string::npos);

  PolicyHyper other = tiny();
  other.d = 16;
  CHECK_THROWS_AS(load_params(path, &other), InputError);
  CHECK_NOTHROW(load_params(path, &p.hyper));

  std::string bad_version = text;
  bad_version.replace(bad_version.find("\"format_version\":1"), 18, "\"format_version\":7");
  CHECK_THROWS_AS(params_from_json(bad_version), InputError);

  std::string bad_shape = text;
  bad_shape.replace(bad_shape.find("\"shape\":[8,2]"), 13, "\"shape\":[2,8]");
  CHECK_THROWS_AS(params_from_json(bad_shape), InputError);

  CHECK_THROWS_AS(params_from_json("{not json"), InputError);
  CHECK_THROWS_AS(load_params(dir / "missing.json"), InputError);
  std::filesystem::remove_all(dir);
}
