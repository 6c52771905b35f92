#include "amsort/predictor.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace amsort::model {

using ad::Tensor;

void EncoderConfig::validate() const {
  if (n_layers == 0 || n_heads == 0 || d == 0 || ffn_dim == 0 || head_hidden == 0 || history == 0) {
    throw std::invalid_argument("encoder config: all sizes must be positive");
  }
  if (d % n_heads != 0) {
    throw std::invalid_argument("encoder config: d=" + std::to_string(d) + " not divisible by heads=" +
                                std::to_string(n_heads));
  }
  if (d % 8 != 0) throw std::invalid_argument("encoder config: d must be a multiple of 8");
  if (!(spatial_scale > 0.0)) throw std::invalid_argument("encoder config: spatial scale must be positive");
}

namespace {

Tensor xavier(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
  std::vector<double> v(in * out);
  for (auto& x : v) x = nd(rng);
  return Tensor::parameter({in, out}, std::move(v));
}

Tensor filled(std::size_t n, double value) { return Tensor::parameter({n}, std::vector<double>(n, value)); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return ad::add(ad::matmul(x, w), b); }

}  // namespace

ModelParams ModelParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.embedding = embed::EmbeddingParams::init(cfg.d, rng);
  const std::size_t d = cfg.d;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    EncoderLayer L;
    L.wq = xavier(d, d, rng);
    L.bq = filled(d, 0.0);
    L.wk = xavier(d, d, rng);
    L.bk = filled(d, 0.0);
    L.wv = xavier(d, d, rng);
    L.bv = filled(d, 0.0);
    L.wo = xavier(d, d, rng);
    L.bo = filled(d, 0.0);
    L.ln1_gain = filled(d, 1.0);
    L.ln1_bias = filled(d, 0.0);
    L.ffn_w1 = xavier(d, cfg.ffn_dim, rng);
    L.ffn_b1 = filled(cfg.ffn_dim, 0.0);
    L.ffn_w2 = xavier(cfg.ffn_dim, d, rng);
    L.ffn_b2 = filled(d, 0.0);
    L.ln2_gain = filled(d, 1.0);
    L.ln2_bias = filled(d, 0.0);
    p.layers.push_back(std::move(L));
  }
  p.head.w1 = xavier(d, cfg.head_hidden, rng);
  p.head.b1 = filled(cfg.head_hidden, 0.0);
  p.head.w2 = xavier(cfg.head_hidden, cfg.head_hidden, rng);
  p.head.b2 = filled(cfg.head_hidden, 0.0);
  p.head.w3 = xavier(cfg.head_hidden, 4, rng);
  p.head.b3 = filled(4, 0.0);
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embed.pred_token", embedding.pred_token);
  out.emplace_back("embed.mask_token", embedding.mask_token);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const std::string pre = "encoder." + std::to_string(l) + ".";
    out.emplace_back(pre + "attn.wq", L.wq);
    out.emplace_back(pre + "attn.bq", L.bq);
    out.emplace_back(pre + "attn.wk", L.wk);
    out.emplace_back(pre + "attn.bk", L.bk);
    out.emplace_back(pre + "attn.wv", L.wv);
    out.emplace_back(pre + "attn.bv", L.bv);
    out.emplace_back(pre + "attn.wo", L.wo);
    out.emplace_back(pre + "attn.bo", L.bo);
    out.emplace_back(pre + "ln1.gain", L.ln1_gain);
    out.emplace_back(pre + "ln1.bias", L.ln1_bias);
    out.emplace_back(pre + "ffn.w1", L.ffn_w1);
    out.emplace_back(pre + "ffn.b1", L.ffn_b1);
    out.emplace_back(pre + "ffn.w2", L.ffn_w2);
    out.emplace_back(pre + "ffn.b2", L.ffn_b2);
    out.emplace_back(pre + "ln2.gain", L.ln2_gain);
    out.emplace_back(pre + "ln2.bias", L.ln2_bias);
  }
  out.emplace_back("head.w1", head.w1);
  out.emplace_back("head.b1", head.b1);
  out.emplace_back("head.w2", head.w2);
  out.emplace_back("head.b2", head.b2);
  out.emplace_back("head.w3", head.w3);
  out.emplace_back("head.b3", head.b3);
  return out;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<ad::NamedArray> ModelParams::to_arrays() const {
  std::vector<ad::NamedArray> out;
  for (const auto& [name, t] : named_parameters()) {
    out.push_back({name, t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
  }
  return out;
}

ModelParams ModelParams::from_arrays(const EncoderConfig& cfg, const std::vector<ad::NamedArray>& arrays) {
  std::map<std::string, const ad::NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  ModelParams p = init(cfg, 0);
  for (auto& [name, t] : p.named_parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::invalid_argument("checkpoint is missing parameter '" + name + "'");
    }
    if (it->second->shape != t.shape()) {
      throw std::invalid_argument("checkpoint parameter '" + name + "' has shape " +
                                  ad::shape_str(it->second->shape) + ", model expects " +
                                  ad::shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  }
  if (by_name.size() != p.named_parameters().size()) {
    throw std::invalid_argument("checkpoint has parameters the model does not define");
  }
  return p;
}

ModelParams ModelParams::clone() const {
  ModelParams p = *this;
  auto fresh = [](Tensor& t) {
    t = Tensor::parameter(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
  };
  fresh(p.embedding.pred_token);
  fresh(p.embedding.mask_token);
  for (auto& L : p.layers) {
    for (Tensor* t : {&L.wq, &L.bq, &L.wk, &L.bk, &L.wv, &L.bv, &L.wo, &L.bo, &L.ln1_gain, &L.ln1_bias,
                      &L.ffn_w1, &L.ffn_b1, &L.ffn_w2, &L.ffn_b2, &L.ln2_gain, &L.ln2_bias}) {
      fresh(*t);
    }
  }
  for (Tensor* t : {&p.head.w1, &p.head.b1, &p.head.w2, &p.head.b2, &p.head.w3, &p.head.b3}) fresh(*t);
  return p;
}

Tensor encode(const Tensor& z, const Tensor& x_spat, std::size_t batch, const ModelParams& params,
              const EncoderConfig& cfg, const EncodeOptions& opt) {
  const std::size_t s = cfg.history + 1;
  const std::size_t d = cfg.d;
  const std::size_t h = cfg.n_heads;
  const std::size_t dh = d / h;
  const ad::Shape expect{batch * s, d};
  if (z.shape() != expect || x_spat.shape() != expect) {
    throw std::invalid_argument("encode: expected inputs of shape " + ad::shape_str(expect) + ", got " +
                                ad::shape_str(z.shape()) + " and " + ad::shape_str(x_spat.shape()));
  }
  if (params.layers.size() != cfg.n_layers) throw std::invalid_argument("encode: layer count mismatch");
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  // [B*S, D] -> [B*H, S, dh]
  auto split_heads = [&](const Tensor& t) {
    return ad::reshape(ad::permute(ad::reshape(t, {batch, s, h, dh}), {0, 2, 1, 3}), {batch * h, s, dh});
  };

  Tensor x = z;
  for (const auto& L : params.layers) {
    x = ad::add(x, x_spat);
    const Tensor q = split_heads(linear(x, L.wq, L.bq));
    const Tensor k = split_heads(linear(x, L.wk, L.bk));
    const Tensor v = split_heads(linear(x, L.wv, L.bv));
    const Tensor scores = ad::scalar_mul(ad::bmm(q, ad::permute(k, {0, 2, 1})), inv_sqrt_dh);
    const Tensor attn = ad::softmax(scores);
    if (opt.attention_out) opt.attention_out->push_back(attn);
    const Tensor ctx = ad::reshape(ad::permute(ad::reshape(ad::bmm(attn, v), {batch, h, s, dh}), {0, 2, 1, 3}),
                                   {batch * s, d});
    Tensor y = ad::add(x, linear(ctx, L.wo, L.bo));
    if (opt.layer_norm) y = ad::layer_norm(y, L.ln1_gain, L.ln1_bias);
    const Tensor f = linear(ad::relu(linear(y, L.ffn_w1, L.ffn_b1)), L.ffn_w2, L.ffn_b2);
    x = ad::add(y, f);
    if (opt.layer_norm) x = ad::layer_norm(x, L.ln2_gain, L.ln2_bias);
  }
  return x;
}

Tensor apply_head(const Tensor& tokens, const PredictionHead& head) {
  Tensor a = ad::relu(linear(tokens, head.w1, head.b1));
  a = ad::relu(linear(a, head.w2, head.b2));
  return ad::sigmoid(linear(a, head.w3, head.b3));
}

Tensor forward(std::span<const HistoricalTrajectory> batch, const ModelParams& params,
               const EncoderConfig& cfg) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].length() != cfg.history) {
      throw std::invalid_argument("history " + std::to_string(i) + " has length " +
                                  std::to_string(batch[i].length()) + ", model expects " +
                                  std::to_string(cfg.history));
    }
  }
  const auto emb = embed::build_embedding(batch, params.embedding, cfg.spatial_scale);
  const Tensor refined = encode(emb.z, emb.x_spat, batch.size(), params, cfg);
  const std::size_t s = cfg.history + 1;
  const Tensor tokens =
      ad::reshape(ad::slice(ad::reshape(refined, {batch.size(), s, cfg.d}), 1, cfg.history, s),
                  {batch.size(), cfg.d});
  return apply_head(tokens, params.head);
}

BBox predict_box(const HistoricalTrajectory& h, const ModelParams& params, const EncoderConfig& cfg) {
  const Tensor out = forward(std::span<const HistoricalTrajectory>(&h, 1), params, cfg);
  const auto v = out.data();
  return {v[0], v[1], v[2], v[3]};
}

std::vector<BBox> predict_batch(std::span<const HistoricalTrajectory> hs, const ModelParams& params,
                                const EncoderConfig& cfg) {
  if (hs.empty()) return {};
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (hs[i].length() != cfg.history || !hs[i].has_box()) {
      throw std::invalid_argument("predict_batch: item " + std::to_string(i) +
                                  (hs[i].has_box() ? " has wrong history length" : " has an all-Mask history"));
    }
  }
  const Tensor out = forward(hs, params, cfg);
  const auto v = out.data();
  std::vector<BBox> boxes(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) boxes[i] = {v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3]};
  return boxes;
}

}  // namespace amsort::model
