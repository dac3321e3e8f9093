#pragma once

// Attention policy over candidate Steiner points.
//
// The encoder embeds every point of X = I ∪ C (selected points and
// candidates) and runs `layers` rounds of multi-head self-attention, each
// followed by batch-norm / feed-forward / batch-norm with skip connections.
// The graph embedding is the mean final embedding over the selected points
// only. The decoder scores each candidate against the graph embedding and
// normalizes over the candidates.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "steiner/geometry.hpp"
#include "steiner/random.hpp"
#include "steiner/tensor.hpp"

namespace steiner {

struct PolicyHyper {
  std::size_t d = 128;
  std::size_t layers = 5;
  std::size_t heads = 8;
  std::size_t ff_dim = 512;

  std::size_t head_dim() const { return d / heads; }
  /// Throws std::invalid_argument unless d is a positive multiple of heads.
  void validate() const;
  friend bool operator==(const PolicyHyper&, const PolicyHyper&) = default;
};

template <typename T>
struct HeadWeights {
  T out;    // d x d_s, maps the head output back to d
  T query;  // d_s x d
  T key;    // d_s x d
  T value;  // d_s x d
};

template <typename T>
struct LayerWeights {
  std::vector<HeadWeights<T>> heads;
  T norm1_gain, norm1_bias;  // d
  T ff_in_weight;            // ff_dim x d
  T ff_in_bias;              // ff_dim
  T ff_out_weight;           // d x ff_dim
  T ff_out_bias;             // d
  T norm2_gain, norm2_bias;  // d
};

template <typename T>
struct PolicyWeights {
  T embed_weight;  // d x 2
  T embed_bias;    // d
  std::vector<LayerWeights<T>> layers;
  T decoder_query;  // d_s x d, applied to the graph embedding
  T decoder_key;    // d_s x d, applied to node embeddings
};

/// Calls f(name, weight) for every weight in a fixed order. Works on const
/// and mutable PolicyWeights alike.
template <typename Weights, typename F>
void for_each_weight(Weights& w, F&& f) {
  f(std::string("embed.weight"), w.embed_weight);
  f(std::string("embed.bias"), w.embed_bias);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& layer = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    for (std::size_t m = 0; m < layer.heads.size(); ++m) {
      const std::string h = p + "heads." + std::to_string(m) + ".";
      f(h + "out", layer.heads[m].out);
      f(h + "query", layer.heads[m].query);
      f(h + "key", layer.heads[m].key);
      f(h + "value", layer.heads[m].value);
    }
    f(p + "norm1.gain", layer.norm1_gain);
    f(p + "norm1.bias", layer.norm1_bias);
    f(p + "ff_in.weight", layer.ff_in_weight);
    f(p + "ff_in.bias", layer.ff_in_bias);
    f(p + "ff_out.weight", layer.ff_out_weight);
    f(p + "ff_out.bias", layer.ff_out_bias);
    f(p + "norm2.gain", layer.norm2_gain);
    f(p + "norm2.bias", layer.norm2_bias);
  }
  f(std::string("decoder.query"), w.decoder_query);
  f(std::string("decoder.key"), w.decoder_key);
}

/// Weights shaped for `hyper`, every entry zero.
PolicyWeights<Tensor> zero_weights(const PolicyHyper& hyper);

/// Pointers to every weight tensor in for_each_weight order.
std::vector<Tensor*> flatten(PolicyWeights<Tensor>& w);
std::vector<const Tensor*> flatten(const PolicyWeights<Tensor>& w);

struct PolicyParams {
  PolicyHyper hyper;
  std::uint64_t seed = 0;
  PolicyWeights<Tensor> weights;
};

/// Every weight uniform in [-1/sqrt(d), 1/sqrt(d)], drawn in for_each_weight
/// order from a generator seeded with `seed`.
PolicyParams init_params(const PolicyHyper& hyper, std::uint64_t seed);

/// Probabilities over all of X; entries outside the candidate mask are zero.
struct CandidateDistribution {
  std::vector<double> probabilities;
  std::vector<double> log_probabilities;  // -inf outside the mask
  std::vector<bool> mask;

  std::size_t size() const { return probabilities.size(); }
};

struct Encoding {
  Var nodes;  // |X| x d
  Var graph;  // 1 x d
};

struct Decoding {
  Var log_probs;                     // 1 x |C|, in candidate order
  std::vector<std::size_t> columns;  // X index of each entry of log_probs
  CandidateDistribution dist;
};

/// Puts every weight of `params` on `tape` by reference.
PolicyWeights<Var> bind(Tape& tape, const PolicyParams& params, bool requires_grad);

/// Throws std::invalid_argument when |X| < 2, the mask size differs, or no
/// point is selected.
Encoding encode(const PolicyWeights<Var>& w, const PolicyHyper& hyper, Tape& tape,
                std::span<const Point> points, const std::vector<bool>& selected);

/// Throws std::invalid_argument when the candidate mask is empty.
Decoding decode(const PolicyWeights<Var>& w, const PolicyHyper& hyper, const Encoding& enc,
                const std::vector<bool>& candidate);

/// Forward pass without gradients.
CandidateDistribution evaluate_policy(const PolicyParams& params, std::span<const Point> points,
                                      const std::vector<bool>& selected,
                                      const std::vector<bool>& candidate);

/// Categorical draw over X indices; always lands inside the mask.
std::size_t sample(const CandidateDistribution& dist, Rng& rng);
/// Highest-probability X index, ties toward the lowest index.
std::size_t argmax(const CandidateDistribution& dist);

inline constexpr int kCheckpointFormatVersion = 1;

std::string params_to_json(const PolicyParams& params);
/// Throws InputError on a version or shape mismatch, or when `expected`
/// is given and the stored hyperparameters differ from it.
PolicyParams params_from_json(const std::string& text, const PolicyHyper* expected = nullptr);

void save_params(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_params(const std::filesystem::path& path, const PolicyHyper* expected = nullptr);

}  // namespace steiner
