#include "amsort/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "amsort/error.hpp"

namespace amsort::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return kv;
}

int to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw UsageError(key + ": expected an integer, got '" + value + "'");
  }
  if (v < INT32_MIN || v > INT32_MAX) throw UsageError(key + ": integer out of range");
  return static_cast<int>(v);
}

std::size_t to_size(const std::string& key, const std::string& value) {
  const int v = to_int(key, value);
  if (v < 0) throw UsageError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw UsageError(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError(key + ": expected true or false, got '" + value + "'");
}

std::string to_string(PredictorKind k) { return k == PredictorKind::Kalman ? "kalman" : "transformer"; }

PredictorKind predictor_from_string(const std::string& s) {
  if (s == "kalman") return PredictorKind::Kalman;
  if (s == "transformer") return PredictorKind::Transformer;
  throw UsageError("unknown predictor '" + s + "' (expected kalman or transformer)");
}

void Profile::validate() const {
  try {
    model.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  lifecycle.validate();
  if (!(assoc.iou_threshold >= 0.0 && assoc.iou_threshold < 1.0)) {
    throw UsageError("assoc.iou_threshold must lie in [0, 1)");
  }
  const auto& w = assoc.weights;
  if (w.iou < 0 || w.l1 < 0 || w.dtheta < 0 || w.iou + w.l1 + w.dtheta <= 0) {
    throw UsageError("assoc weights must be non-negative and not all zero");
  }
  if (dims.width <= 0 || dims.height <= 0) throw UsageError("io image dimensions must be positive");
  if (!(eval_iou > 0.0 && eval_iou < 1.0)) throw UsageError("eval.match_iou must lie in (0, 1)");
}

Profile paper_profile() {
  Profile p;
  p.name = "paper";
  p.model = {};  // 6 layers, 8 heads, D=512, T=30
  p.train = {};  // lr 1e-4, 50 epochs, batch 512, p=0.1
  return p;
}

Profile toy_profile() {
  Profile p;
  p.name = "toy";
  p.model.n_layers = 2;
  p.model.n_heads = 4;
  p.model.d = 64;
  p.model.ffn_dim = 256;
  p.model.head_hidden = 64;
  p.model.history = 10;
  // a coarse spatial scale keeps neighbouring positions distinguishable at this width
  p.model.spatial_scale = 3.0;
  p.train.lr = 2e-3;
  p.train.epochs = 30;
  p.train.batch_size = 8;
  p.train.lr_schedule = "cosine";
  p.train.lr_min = 1e-5;
  p.train.max_segments = 10000;
  // few identities per scenario: shifting and rescaling whole segments stops
  // the head from memorising where each training object happened to be
  p.train.translate = 0.3;
  p.train.resize = 0.3;
  // with T=10 an 8-frame occlusion would leave two boxes behind Mask slots;
  // feeding predictions back keeps the history full through the gap
  p.lifecycle.append_prediction = true;
  return p;
}

void apply_overrides(Profile& p, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "model.d") p.model.d = to_size(k, v);
    else if (k == "model.layers") p.model.n_layers = to_size(k, v);
    else if (k == "model.heads") p.model.n_heads = to_size(k, v);
    else if (k == "model.ffn_dim") p.model.ffn_dim = to_size(k, v);
    else if (k == "model.head_hidden") p.model.head_hidden = to_size(k, v);
    else if (k == "model.t") p.model.history = to_size(k, v);
    else if (k == "model.spatial_scale") p.model.spatial_scale = to_real(k, v);
    else if (k == "train.lr") p.train.lr = to_real(k, v);
    else if (k == "train.epochs") p.train.epochs = to_size(k, v);
    else if (k == "train.batch_size") p.train.batch_size = to_size(k, v);
    else if (k == "train.mask_prob") p.train.mask_prob = to_real(k, v);
    else if (k == "train.seed") p.train.seed = to_size(k, v);
    else if (k == "train.clip_grad") p.train.clip_grad = to_bool(k, v);
    else if (k == "train.clip_norm") p.train.clip_norm = to_real(k, v);
    else if (k == "train.val_fraction") p.train.val_fraction = to_real(k, v);
    else if (k == "train.lr_schedule") p.train.lr_schedule = v;
    else if (k == "train.lr_min") p.train.lr_min = to_real(k, v);
    else if (k == "train.max_segments") p.train.max_segments = to_size(k, v);
    else if (k == "train.input_noise") p.train.input_noise = to_real(k, v);
    else if (k == "train.translate") p.train.translate = to_real(k, v);
    else if (k == "train.resize") p.train.resize = to_real(k, v);
    else if (k == "assoc.cost_profile") {
      try {
        p.assoc.weights = assoc::cost_profile(v);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    else if (k == "assoc.w_iou") p.assoc.weights.iou = to_real(k, v);
    else if (k == "assoc.w_l1") p.assoc.weights.l1 = to_real(k, v);
    else if (k == "assoc.w_dtheta") p.assoc.weights.dtheta = to_real(k, v);
    else if (k == "assoc.dtheta_k") p.assoc.weights.dtheta_lag = to_size(k, v);
    else if (k == "assoc.iou_threshold") p.assoc.iou_threshold = to_real(k, v);
    else if (k == "lifecycle.min_hits") p.lifecycle.min_hits = to_int(k, v);
    else if (k == "lifecycle.max_age") p.lifecycle.max_age = to_int(k, v);
    else if (k == "lifecycle.min_confidence") p.lifecycle.min_confidence = to_real(k, v);
    else if (k == "lifecycle.append_prediction") p.lifecycle.append_prediction = to_bool(k, v);
    else if (k == "kalman.init_pos_std") p.kalman.init_pos_std = to_real(k, v);
    else if (k == "kalman.init_vel_std") p.kalman.init_vel_std = to_real(k, v);
    else if (k == "kalman.q_pos") p.kalman.q_pos = to_real(k, v);
    else if (k == "kalman.q_vel") p.kalman.q_vel = to_real(k, v);
    else if (k == "kalman.r") p.kalman.r = to_real(k, v);
    else if (k == "io.image_width") p.dims.width = to_int(k, v);
    else if (k == "io.image_height") p.dims.height = to_int(k, v);
    else if (k == "eval.match_iou") p.eval_iou = to_real(k, v);
    else if (k == "predictor") p.predictor = predictor_from_string(v);
    else if (k == "name") p.name = v;
    else throw UsageError("unknown config key '" + k + "'");
  }
}

Profile load_profile(const std::string& spec) {
  Profile p;
  if (spec == "paper") {
    p = paper_profile();
  } else if (spec == "toy") {
    p = toy_profile();
  } else {
    std::ifstream f(spec);
    if (!f) throw UsageError("profile '" + spec + "' is neither 'paper', 'toy' nor a readable file");
    std::stringstream ss;
    ss << f.rdbuf();
    KeyValues kv;
    try {
      kv = parse_key_values(ss.str());
    } catch (const UsageError& e) {
      throw UsageError(spec + ": " + e.what());
    }
    std::string base = "paper";
    KeyValues rest;
    for (auto& e : kv) {
      if (e.first == "base") base = e.second;
      else rest.push_back(std::move(e));
    }
    if (base == "toy") p = toy_profile();
    else if (base == "paper") p = paper_profile();
    else throw UsageError(spec + ": base must be 'paper' or 'toy'");
    p.name = std::filesystem::path(spec).stem().string();
    apply_overrides(p, rest);
  }
  p.validate();
  return p;
}

std::string format_profile(const Profile& p) {
  std::ostringstream os;
  char buf[64];
  auto real = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "name = " << p.name << '\n'
     << "model.d = " << p.model.d << '\n'
     << "model.layers = " << p.model.n_layers << '\n'
     << "model.heads = " << p.model.n_heads << '\n'
     << "model.ffn_dim = " << p.model.ffn_dim << '\n'
     << "model.head_hidden = " << p.model.head_hidden << '\n'
     << "model.t = " << p.model.history << '\n'
     << "model.spatial_scale = " << real(p.model.spatial_scale) << '\n'
     << "train.lr = " << real(p.train.lr) << '\n'
     << "train.epochs = " << p.train.epochs << '\n'
     << "train.batch_size = " << p.train.batch_size << '\n'
     << "train.mask_prob = " << real(p.train.mask_prob) << '\n'
     << "train.seed = " << p.train.seed << '\n'
     << "train.clip_grad = " << (p.train.clip_grad ? "true" : "false") << '\n'
     << "train.clip_norm = " << real(p.train.clip_norm) << '\n'
     << "train.val_fraction = " << real(p.train.val_fraction) << '\n'
     << "train.lr_schedule = " << p.train.lr_schedule << '\n'
     << "train.lr_min = " << real(p.train.lr_min) << '\n'
     << "train.max_segments = " << p.train.max_segments << '\n'
     << "train.input_noise = " << real(p.train.input_noise) << '\n'
     << "train.translate = " << real(p.train.translate) << '\n'
     << "train.resize = " << real(p.train.resize) << '\n'
     << "assoc.w_iou = " << real(p.assoc.weights.iou) << '\n'
     << "assoc.w_l1 = " << real(p.assoc.weights.l1) << '\n'
     << "assoc.w_dtheta = " << real(p.assoc.weights.dtheta) << '\n'
     << "assoc.dtheta_k = " << p.assoc.weights.dtheta_lag << '\n'
     << "assoc.iou_threshold = " << real(p.assoc.iou_threshold) << '\n'
     << "lifecycle.min_hits = " << p.lifecycle.min_hits << '\n'
     << "lifecycle.max_age = " << p.lifecycle.max_age << '\n'
     << "lifecycle.min_confidence = " << real(p.lifecycle.min_confidence) << '\n'
     << "lifecycle.append_prediction = " << (p.lifecycle.append_prediction ? "true" : "false") << '\n'
     << "kalman.init_pos_std = " << real(p.kalman.init_pos_std) << '\n'
     << "kalman.init_vel_std = " << real(p.kalman.init_vel_std) << '\n'
     << "kalman.q_pos = " << real(p.kalman.q_pos) << '\n'
     << "kalman.q_vel = " << real(p.kalman.q_vel) << '\n'
     << "kalman.r = " << real(p.kalman.r) << '\n'
     << "io.image_width = " << p.dims.width << '\n'
     << "io.image_height = " << p.dims.height << '\n'
     << "eval.match_iou = " << real(p.eval_iou) << '\n'
     << "predictor = " << to_string(p.predictor) << '\n';
  return os.str();
}

}  // namespace amsort::config
