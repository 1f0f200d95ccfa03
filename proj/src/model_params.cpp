#include <cmath>

#include "falldet/model.hpp"

namespace falldet::model {

namespace {

LstmWeights lstm_zeros(int in) {
  return {Eigen::MatrixXd::Zero(4 * kHidden, in), Eigen::MatrixXd::Zero(4 * kHidden, kHidden),
          Eigen::VectorXd::Zero(4 * kHidden)};
}

void glorot(Eigen::MatrixXd& m, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  // column-major fill keeps the draw order independent of Eigen internals
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

void add_tensor(std::vector<TensorView>& out, std::string name, Eigen::MatrixXd& m) {
  out.push_back({std::move(name), m.rows(), m.cols(), m.data()});
}

void add_tensor(std::vector<TensorView>& out, std::string name, Eigen::VectorXd& v) {
  out.push_back({std::move(name), v.rows(), 1, v.data()});
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }
bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

nlohmann::json tensor_json(const TensorView& t) {
  return {{"shape", {t.rows, t.cols}}, {"data", std::vector<double>(t.data, t.data + t.size())}};
}

void load_tensor(const nlohmann::json& j, const TensorView& t) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != t.rows || shape[1] != t.cols ||
      static_cast<Eigen::Index>(data.size()) != t.size()) {
    throw Error("checkpoint tensor '" + t.name + "' has the wrong shape");
  }
  std::copy(data.begin(), data.end(), t.data);
}

}  // namespace

Weights Weights::zeros() {
  Weights w;
  w.dense_in_w = Eigen::MatrixXd::Zero(kDenseDim, kInputDim);
  w.dense_in_b = Eigen::VectorXd::Zero(kDenseDim);
  w.bn_gamma = Eigen::VectorXd::Zero(kDenseDim);
  w.bn_beta = Eigen::VectorXd::Zero(kDenseDim);
  w.lstm1 = lstm_zeros(kDenseDim);
  w.lstm2 = lstm_zeros(kHidden);
  w.dense_out_w = Eigen::MatrixXd::Zero(kClasses, kHidden);
  w.dense_out_b = Eigen::VectorXd::Zero(kClasses);
  return w;
}

Weights& Weights::operator+=(const Weights& o) {
  dense_in_w += o.dense_in_w;
  dense_in_b += o.dense_in_b;
  bn_gamma += o.bn_gamma;
  bn_beta += o.bn_beta;
  lstm1.input += o.lstm1.input;
  lstm1.recurrent += o.lstm1.recurrent;
  lstm1.bias += o.lstm1.bias;
  lstm2.input += o.lstm2.input;
  lstm2.recurrent += o.lstm2.recurrent;
  lstm2.bias += o.lstm2.bias;
  dense_out_w += o.dense_out_w;
  dense_out_b += o.dense_out_b;
  return *this;
}

Weights& Weights::operator*=(double k) {
  for (auto& t : tensors(*this)) {
    Eigen::Map<Eigen::VectorXd>(t.data, t.size()) *= k;
  }
  return *this;
}

std::vector<TensorView> tensors(Weights& w) {
  std::vector<TensorView> out;
  add_tensor(out, "dense_in.weight", w.dense_in_w);
  add_tensor(out, "dense_in.bias", w.dense_in_b);
  add_tensor(out, "bn.gamma", w.bn_gamma);
  add_tensor(out, "bn.beta", w.bn_beta);
  add_tensor(out, "lstm1.input", w.lstm1.input);
  add_tensor(out, "lstm1.recurrent", w.lstm1.recurrent);
  add_tensor(out, "lstm1.bias", w.lstm1.bias);
  add_tensor(out, "lstm2.input", w.lstm2.input);
  add_tensor(out, "lstm2.recurrent", w.lstm2.recurrent);
  add_tensor(out, "lstm2.bias", w.lstm2.bias);
  add_tensor(out, "dense_out.weight", w.dense_out_w);
  add_tensor(out, "dense_out.bias", w.dense_out_b);
  return out;
}

void ModelParams::validate() const {
  const auto& w = weights;
  const bool finite = all_finite(w.dense_in_w) && all_finite(w.dense_in_b) && all_finite(w.bn_gamma) &&
                      all_finite(w.bn_beta) && all_finite(w.lstm1.input) && all_finite(w.lstm1.recurrent) &&
                      all_finite(w.lstm1.bias) && all_finite(w.lstm2.input) &&
                      all_finite(w.lstm2.recurrent) && all_finite(w.lstm2.bias) &&
                      all_finite(w.dense_out_w) && all_finite(w.dense_out_b) &&
                      all_finite(bn.running_mean) && all_finite(bn.running_var);
  if (!finite) throw DivergenceError("model parameters contain non-finite values");
  if ((bn.running_var.array() <= 0.0).any()) {
    throw DivergenceError("batch-norm running variance must be positive");
  }
}

ModelParams init_params(std::uint64_t seed) {
  Rng rng(seed);
  ModelParams p;
  p.weights = Weights::zeros();
  auto& w = p.weights;
  glorot(w.dense_in_w, kInputDim, kDenseDim, rng);
  w.bn_gamma.setOnes();
  glorot(w.lstm1.input, kDenseDim, 4 * kHidden, rng);
  glorot(w.lstm1.recurrent, kHidden, 4 * kHidden, rng);
  w.lstm1.bias.segment(kHidden, kHidden).setOnes();
  glorot(w.lstm2.input, kHidden, 4 * kHidden, rng);
  glorot(w.lstm2.recurrent, kHidden, 4 * kHidden, rng);
  w.lstm2.bias.segment(kHidden, kHidden).setOnes();
  glorot(w.dense_out_w, kHidden, kClasses, rng);
  p.bn.running_mean = Eigen::VectorXd::Zero(kDenseDim);
  p.bn.running_var = Eigen::VectorXd::Ones(kDenseDim);
  return p;
}

WindowInput to_input(const windowing::Window& w) {
  WindowInput x(3, static_cast<Eigen::Index>(w.samples.size()));
  for (std::size_t t = 0; t < w.samples.size(); ++t) {
    for (int k = 0; k < 3; ++k) x(k, static_cast<Eigen::Index>(t)) = w.samples[t][k];
  }
  return x;
}

double LossWeights::operator[](ActivityClass c) const {
  switch (c) {
    case ActivityClass::Bkg:
      return bkg;
    case ActivityClass::Alert:
      return alert;
    case ActivityClass::Fall:
      return fall;
  }
  return 0.0;
}

LossWeights LossWeights::from_counts(const windowing::ClassCounts& counts) {
  if (counts.bkg == 0 || counts.alert == 0 || counts.fall == 0) {
    throw Error("loss weights need at least one window of every class (B=" + std::to_string(counts.bkg) +
                ", A=" + std::to_string(counts.alert) + ", F=" + std::to_string(counts.fall) + ")");
  }
  const double b = static_cast<double>(counts.bkg);
  return {1.0, b / static_cast<double>(counts.alert), b / static_cast<double>(counts.fall)};
}

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "sgd") return Optimizer::Sgd;
  throw Error("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view to_string(Optimizer opt) { return opt == Optimizer::Adam ? "adam" : "sgd"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be > 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout rate must be in [0, 1)");
  if (batch_size == 0) throw Error("batch size must be >= 1");
  if (width < 2) throw Error("window width must be >= 2");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"dropout_rate", cfg.dropout_rate},
          {"seed", cfg.seed},
          {"w", cfg.width},
          {"optimizer", std::string(to_string(cfg.optimizer))},
          {"loss", cfg.weighted_loss ? "weighted" : "unweighted"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.dropout_rate = j.at("dropout_rate").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.width = j.at("w").get<std::size_t>();
  cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  cfg.weighted_loss = j.at("loss").get<std::string>() != "unweighted";
  cfg.validate();
  return cfg;
}

nlohmann::json checkpoint_to_json(const ModelParams& params, const TrainConfig& cfg,
                                  const windowing::WindowParams& window) {
  ModelParams copy = params;
  nlohmann::json tensors_json = nlohmann::json::object();
  for (const auto& t : tensors(copy.weights)) tensors_json[t.name] = tensor_json(t);
  tensors_json["bn.running_mean"] =
      tensor_json({"bn.running_mean", copy.bn.running_mean.rows(), 1, copy.bn.running_mean.data()});
  tensors_json["bn.running_var"] =
      tensor_json({"bn.running_var", copy.bn.running_var.rows(), 1, copy.bn.running_var.data()});
  return {{"format", "falldet-checkpoint"},
          {"version", 1},
          {"tensors", std::move(tensors_json)},
          {"bn", {{"epsilon", params.bn.epsilon}, {"momentum", params.bn.momentum}}},
          {"train_config", to_json(cfg)},
          {"window", {{"w", window.width}, {"stride", window.stride}}}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "falldet-checkpoint") throw Error("not a falldet checkpoint");
    if (j.at("version").get<int>() != 1) throw Error("unsupported checkpoint version");
    Checkpoint cp;
    cp.params.weights = Weights::zeros();
    cp.params.bn.running_mean = Eigen::VectorXd::Zero(kDenseDim);
    cp.params.bn.running_var = Eigen::VectorXd::Zero(kDenseDim);
    const auto& tj = j.at("tensors");
    for (const auto& t : tensors(cp.params.weights)) load_tensor(tj.at(t.name), t);
    load_tensor(tj.at("bn.running_mean"),
                {"bn.running_mean", kDenseDim, 1, cp.params.bn.running_mean.data()});
    load_tensor(tj.at("bn.running_var"), {"bn.running_var", kDenseDim, 1, cp.params.bn.running_var.data()});
    cp.params.bn.epsilon = j.at("bn").at("epsilon").get<double>();
    cp.params.bn.momentum = j.at("bn").at("momentum").get<double>();
    cp.params.validate();
    cp.config = train_config_from_json(j.at("train_config"));
    cp.window = {j.at("window").at("w").get<std::size_t>(), j.at("window").at("stride").get<std::size_t>()};
    cp.window.validate();
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace falldet::model
