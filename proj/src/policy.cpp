#include "steiner/policy.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "steiner/errors.hpp"

namespace steiner {

void PolicyHyper::validate() const {
  if (d == 0 || heads == 0 || layers == 0 || ff_dim == 0)
    throw std::invalid_argument("policy hyperparameters must be positive");
  if (d % heads != 0)
    throw std::invalid_argument("embedding dimension d=" + std::to_string(d) +
                                " is not divisible by heads=" + std::to_string(heads));
}

PolicyWeights<Tensor> zero_weights(const PolicyHyper& hyper) {
  hyper.validate();
  const std::size_t d = hyper.d;
  const std::size_t ds = hyper.head_dim();
  PolicyWeights<Tensor> w;
  w.embed_weight = Tensor(d, 2);
  w.embed_bias = Tensor(d, 1);
  w.layers.resize(hyper.layers);
  for (auto& layer : w.layers) {
    layer.heads.resize(hyper.heads);
    for (auto& h : layer.heads) {
      h.out = Tensor(d, ds);
      h.query = Tensor(ds, d);
      h.key = Tensor(ds, d);
      h.value = Tensor(ds, d);
    }
    layer.norm1_gain = Tensor(d, 1);
    layer.norm1_bias = Tensor(d, 1);
    layer.ff_in_weight = Tensor(hyper.ff_dim, d);
    layer.ff_in_bias = Tensor(hyper.ff_dim, 1);
    layer.ff_out_weight = Tensor(d, hyper.ff_dim);
    layer.ff_out_bias = Tensor(d, 1);
    layer.norm2_gain = Tensor(d, 1);
    layer.norm2_bias = Tensor(d, 1);
  }
  w.decoder_query = Tensor(ds, d);
  w.decoder_key = Tensor(ds, d);
  return w;
}

std::vector<Tensor*> flatten(PolicyWeights<Tensor>& w) {
  std::vector<Tensor*> out;
  for_each_weight(w, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor*> flatten(const PolicyWeights<Tensor>& w) {
  std::vector<const Tensor*> out;
  for_each_weight(w, [&](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

PolicyParams init_params(const PolicyHyper& hyper, std::uint64_t seed) {
  PolicyParams p{hyper, seed, zero_weights(hyper)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(hyper.d));
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (Tensor* t : flatten(p.weights))
    for (double& v : t->data()) v = unif(rng);
  return p;
}

PolicyWeights<Var> bind(Tape& tape, const PolicyParams& params, bool requires_grad) {
  const auto& src = params.weights;
  PolicyWeights<Var> w;
  w.layers.resize(src.layers.size());
  for (std::size_t l = 0; l < src.layers.size(); ++l) w.layers[l].heads.resize(src.layers[l].heads.size());

  std::vector<const Tensor*> from = flatten(src);
  std::size_t i = 0;
  for_each_weight(w, [&](const std::string&, Var& v) { v = tape.parameter(*from[i++], requires_grad); });
  return w;
}

Encoding encode(const PolicyWeights<Var>& w, const PolicyHyper& hyper, Tape& tape,
                std::span<const Point> points, const std::vector<bool>& selected) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("encode: need at least 2 points");
  if (selected.size() != n) throw std::invalid_argument("encode: selected mask size mismatch");
  std::vector<std::size_t> selected_rows;
  for (std::size_t j = 0; j < n; ++j)
    if (selected[j]) selected_rows.push_back(j);
  if (selected_rows.empty()) throw std::invalid_argument("encode: no selected points");

  Tensor coords(n, 2);
  for (std::size_t j = 0; j < n; ++j) {
    coords(j, 0) = points[j].x;
    coords(j, 1) = points[j].y;
  }
  const double inv_sqrt_ds = 1.0 / std::sqrt(static_cast<double>(hyper.head_dim()));

  Var h = add_bias(matmul(tape.constant(std::move(coords)), transpose(w.embed_weight)), w.embed_bias);
  for (const auto& layer : w.layers) {
    Var mha;
    for (const auto& head : layer.heads) {
      Var q = matmul(h, transpose(head.query));
      Var k = matmul(h, transpose(head.key));
      Var v = matmul(h, transpose(head.value));
      Var attn = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_ds));
      Var contrib = matmul(matmul(attn, v), transpose(head.out));
      mha = mha.tape() ? add(mha, contrib) : contrib;
    }
    Var hat = batch_norm(add(h, mha), layer.norm1_gain, layer.norm1_bias);
    Var hidden = relu(add_bias(matmul(hat, transpose(layer.ff_in_weight)), layer.ff_in_bias));
    Var ff = add_bias(matmul(hidden, transpose(layer.ff_out_weight)), layer.ff_out_bias);
    h = batch_norm(add(hat, ff), layer.norm2_gain, layer.norm2_bias);
  }
  return {h, mean_rows(gather_rows(h, selected_rows))};
}

Decoding decode(const PolicyWeights<Var>& w, const PolicyHyper& hyper, const Encoding& enc,
                const std::vector<bool>& candidate) {
  const std::size_t n = enc.nodes.rows();
  if (candidate.size() != n) throw std::invalid_argument("decode: candidate mask size mismatch");
  Decoding out;
  for (std::size_t j = 0; j < n; ++j)
    if (candidate[j]) out.columns.push_back(j);
  if (out.columns.empty()) throw std::invalid_argument("decode: empty candidate set");

  const double inv_sqrt_ds = 1.0 / std::sqrt(static_cast<double>(hyper.head_dim()));
  Var q = matmul(enc.graph, transpose(w.decoder_query));  // 1 x d_s
  Var k = matmul(enc.nodes, transpose(w.decoder_key));    // n x d_s
  Var logits = scale(matmul(q, transpose(k)), inv_sqrt_ds);
  out.log_probs = log_softmax_rows(gather_cols(logits, out.columns));

  const Tensor& lp = out.log_probs.value();
  out.dist.probabilities.assign(n, 0.0);
  out.dist.log_probabilities.assign(n, -std::numeric_limits<double>::infinity());
  out.dist.mask = candidate;
  for (std::size_t i = 0; i < out.columns.size(); ++i) {
    out.dist.log_probabilities[out.columns[i]] = lp[i];
    out.dist.probabilities[out.columns[i]] = std::exp(lp[i]);
  }
  return out;
}

CandidateDistribution evaluate_policy(const PolicyParams& params, std::span<const Point> points,
                                      const std::vector<bool>& selected,
                                      const std::vector<bool>& candidate) {
  Tape tape;
  const auto w = bind(tape, params, false);
  const Encoding enc = encode(w, params.hyper, tape, points, selected);
  return decode(w, params.hyper, enc, candidate).dist;
}

std::size_t sample(const CandidateDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0.0;
  std::size_t last = dist.size();
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (!dist.mask[j]) continue;
    cum += dist.probabilities[j];
    last = j;
    if (u < cum) return j;
  }
  if (last == dist.size()) throw std::invalid_argument("sample: empty distribution");
  return last;
}

std::size_t argmax(const CandidateDistribution& dist) {
  std::size_t best = dist.size();
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (!dist.mask[j]) continue;
    if (best == dist.size() || dist.probabilities[j] > dist.probabilities[best]) best = j;
  }
  if (best == dist.size()) throw std::invalid_argument("argmax: empty distribution");
  return best;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string params_to_json(const PolicyParams& params) {
  nlohmann::json meta = {
      {"format_version", kCheckpointFormatVersion},
      {"d", params.hyper.d},
      {"L", params.hyper.layers},
      {"M", params.hyper.heads},
      {"ff_dim", params.hyper.ff_dim},
      {"seed", params.seed},
  };
  nlohmann::json tensors = nlohmann::json::object();
  for_each_weight(params.weights, [&](const std::string& name, const Tensor& t) {
    tensors[name] = {{"shape", {t.rows(), t.cols()}},
                     {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  });
  nlohmann::json doc = {{"metadata", meta}, {"tensors", tensors}};
  return doc.dump() + "\n";
}

PolicyParams params_from_json(const std::string& text, const PolicyHyper* expected) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const auto& meta = doc.at("metadata");
    const int version = meta.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw InputError("checkpoint format_version " + std::to_string(version) + " (expected " +
                       std::to_string(kCheckpointFormatVersion) + ")");
    PolicyHyper hyper;
    hyper.d = meta.at("d").get<std::size_t>();
    hyper.layers = meta.at("L").get<std::size_t>();
    hyper.heads = meta.at("M").get<std::size_t>();
    hyper.ff_dim = meta.at("ff_dim").get<std::size_t>();
    try {
      hyper.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("checkpoint hyperparameters: ") + e.what());
    }
    if (expected && !(*expected == hyper))
      throw InputError("checkpoint hyperparameters (d=" + std::to_string(hyper.d) +
                       ", L=" + std::to_string(hyper.layers) + ", M=" + std::to_string(hyper.heads) +
                       ", ff_dim=" + std::to_string(hyper.ff_dim) + ") do not match the requested model");

    PolicyParams p{hyper, meta.at("seed").get<std::uint64_t>(), zero_weights(hyper)};
    const auto& tensors = doc.at("tensors");
    std::size_t seen = 0;
    for_each_weight(p.weights, [&](const std::string& name, Tensor& t) {
      if (!tensors.contains(name)) throw InputError("checkpoint is missing tensor " + name);
      const auto& entry = tensors.at(name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      auto data = entry.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols() ||
          data.size() != t.size())
        throw InputError("checkpoint tensor " + name + " has the wrong shape (expected " +
                         shape_string(t) + ")");
      t = Tensor(t.rows(), t.cols(), std::move(data));
      if (!t.all_finite()) throw InputError("checkpoint tensor " + name + " is not finite");
      ++seen;
    });
    if (seen != tensors.size()) throw InputError("checkpoint holds unexpected tensors");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_params(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out << params_to_json(params);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

PolicyParams load_params(const std::filesystem::path& path, const PolicyHyper* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str(), expected);
}

}  // namespace steiner
