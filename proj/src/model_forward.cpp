#include <cmath>

#include "falldet/model.hpp"
#include "parallel.hpp"

namespace falldet::model {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LstmCache {
  MatrixXd gates;   // 4H x T, activated [i; f; g; o]
  MatrixXd cell;    // H x T
  MatrixXd hidden;  // H x T
  MatrixXd tanh_cell;
};

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

void lstm_forward(const LstmWeights& p, const MatrixXd& input, LstmCache& cache) {
  const Index T = input.cols();
  const Index H = kHidden;
  MatrixXd pre = p.input * input;
  pre.colwise() += p.bias;
  cache.gates.resize(4 * H, T);
  cache.cell.resize(H, T);
  cache.hidden.resize(H, T);
  cache.tanh_cell.resize(H, T);
  VectorXd h = VectorXd::Zero(H);
  VectorXd c = VectorXd::Zero(H);
  VectorXd a(4 * H);
  for (Index t = 0; t < T; ++t) {
    a.noalias() = pre.col(t) + p.recurrent * h;
    a.segment(0, 2 * H) = sigmoid(a.segment(0, 2 * H));
    a.segment(2 * H, H) = a.segment(2 * H, H).array().tanh().matrix();
    a.segment(3 * H, H) = sigmoid(a.segment(3 * H, H));
    c = a.segment(H, H).cwiseProduct(c) + a.segment(0, H).cwiseProduct(a.segment(2 * H, H));
    const VectorXd tc = c.array().tanh().matrix();
    h = a.segment(3 * H, H).cwiseProduct(tc);
    cache.gates.col(t) = a;
    cache.cell.col(t) = c;
    cache.tanh_cell.col(t) = tc;
    cache.hidden.col(t) = h;
  }
}

// d_hidden holds the loss gradient w.r.t. every h_t coming from outside the
// cell. Accumulates parameter gradients into `grad`, returns d input.
MatrixXd lstm_backward(const LstmWeights& p, const MatrixXd& input, const LstmCache& cache,
                       const MatrixXd& d_hidden, LstmWeights& grad) {
  const Index T = input.cols();
  const Index H = kHidden;
  MatrixXd d_pre(4 * H, T);
  VectorXd dh_next = VectorXd::Zero(H);
  VectorXd dc_next = VectorXd::Zero(H);
  for (Index t = T - 1; t >= 0; --t) {
    const auto gi = cache.gates.col(t).segment(0, H).array();
    const auto gf = cache.gates.col(t).segment(H, H).array();
    const auto gg = cache.gates.col(t).segment(2 * H, H).array();
    const auto go = cache.gates.col(t).segment(3 * H, H).array();
    const auto tc = cache.tanh_cell.col(t).array();

    const Eigen::ArrayXd dh = (d_hidden.col(t) + dh_next).array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * go * (1.0 - tc * tc);
    const Eigen::ArrayXd c_prev = t > 0 ? Eigen::ArrayXd(cache.cell.col(t - 1).array()) : Eigen::ArrayXd::Zero(H);

    d_pre.col(t).segment(0, H) = (dc * gg * gi * (1.0 - gi)).matrix();
    d_pre.col(t).segment(H, H) = (dc * c_prev * gf * (1.0 - gf)).matrix();
    d_pre.col(t).segment(2 * H, H) = (dc * gi * (1.0 - gg * gg)).matrix();
    d_pre.col(t).segment(3 * H, H) = (dh * tc * go * (1.0 - go)).matrix();

    dc_next = (dc * gf).matrix();
    dh_next.noalias() = p.recurrent.transpose() * d_pre.col(t);
  }
  grad.input.noalias() += d_pre * input.transpose();
  if (T > 1) {
    grad.recurrent.noalias() += d_pre.rightCols(T - 1) * cache.hidden.leftCols(T - 1).transpose();
  }
  grad.bias += d_pre.rowwise().sum();
  return p.input.transpose() * d_pre;
}

ClassDistribution softmax(const VectorXd& logits) {
  const double mx = logits.maxCoeff();
  ClassDistribution p{};
  double sum = 0.0;
  for (int k = 0; k < kClasses; ++k) {
    p[k] = std::exp(logits(k) - mx);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

struct SampleState {
  MatrixXd z;      // dense_in output, 32 x T
  MatrixXd xhat;   // normalized
  MatrixXd u;      // LSTM1 input (after dropout)
  LstmCache l1;
  MatrixXd v;      // LSTM2 input (after dropout)
  LstmCache l2;
  VectorXd top;    // final hidden state after dropout
  ClassDistribution probs{};
  double loss = 0.0;
};

struct BnView {
  VectorXd mean;
  VectorXd inv_std;
};

void check_batch(std::span<const WindowInput> batch, const DropoutMasks& masks) {
  if (batch.empty()) throw Error("empty batch");
  for (const auto& x : batch) {
    if (x.cols() < 1) throw Error("window has no time steps");
  }
  if (!masks.empty()) {
    if (masks.after_bn.size() != batch.size() || masks.after_lstm1.size() != batch.size() ||
        masks.after_lstm2.size() != batch.size()) {
      throw Error("dropout masks do not match the batch size");
    }
    for (std::size_t n = 0; n < batch.size(); ++n) {
      if (masks.after_bn[n].cols() != batch[n].cols() || masks.after_lstm1[n].cols() != batch[n].cols()) {
        throw Error("dropout masks do not match the window width");
      }
    }
  }
}

// Dense layer and batch-norm statistics for the whole batch.
BnView dense_and_stats(std::span<const WindowInput> batch, const ModelParams& params, Mode mode,
                       std::vector<SampleState>& states, BatchStats* stats) {
  const auto& w = params.weights;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    states[n].z.noalias() = w.dense_in_w * batch[n];
    states[n].z.colwise() += w.dense_in_b;
  }
  BnView bn;
  if (mode == Mode::Train) {
    double count = 0.0;
    VectorXd sum = VectorXd::Zero(kDenseDim);
    for (const auto& s : states) {
      sum += s.z.rowwise().sum();
      count += static_cast<double>(s.z.cols());
    }
    bn.mean = sum / count;
    VectorXd sq = VectorXd::Zero(kDenseDim);
    for (const auto& s : states) sq += (s.z.colwise() - bn.mean).array().square().matrix().rowwise().sum();
    const VectorXd var = sq / count;
    bn.inv_std = (var.array() + params.bn.epsilon).rsqrt().matrix();
    if (stats) *stats = {bn.mean, var};
  } else {
    bn.mean = params.bn.running_mean;
    bn.inv_std = (params.bn.running_var.array() + params.bn.epsilon).rsqrt().matrix();
  }
  return bn;
}

void forward_sample(const ModelParams& params, const BnView& bn, const DropoutMasks& masks, std::size_t n,
                    SampleState& s) {
  const auto& w = params.weights;
  s.xhat = ((s.z.colwise() - bn.mean).array().colwise() * bn.inv_std.array()).matrix();
  s.u = (s.xhat.array().colwise() * w.bn_gamma.array()).matrix();
  s.u.colwise() += w.bn_beta;
  if (!masks.empty()) s.u.array() *= masks.after_bn[n].array();
  lstm_forward(w.lstm1, s.u, s.l1);
  s.v = s.l1.hidden;
  if (!masks.empty()) s.v.array() *= masks.after_lstm1[n].array();
  lstm_forward(w.lstm2, s.v, s.l2);
  s.top = s.l2.hidden.col(s.l2.hidden.cols() - 1);
  if (!masks.empty()) s.top.array() *= masks.after_lstm2[n].array();
  const VectorXd logits = w.dense_out_w * s.top + w.dense_out_b;
  if (!logits.allFinite()) throw DivergenceError("non-finite logits in forward pass");
  s.probs = softmax(logits);
}

double sample_loss(const ClassDistribution& p, ActivityClass label, const LossWeights& weights) {
  return weights[label] * -std::log(std::max(p[index_of(label)], kProbFloor));
}

}  // namespace

double weighted_loss(std::span<const ClassDistribution> probs, std::span<const ActivityClass> labels,
                     const LossWeights& weights) {
  if (probs.size() != labels.size()) throw Error("probabilities and labels differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) total += sample_loss(probs[i], labels[i], weights);
  return total;
}

ActivityClass argmax(const ClassDistribution& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  return static_cast<ActivityClass>(best);
}

DropoutMasks make_dropout_masks(std::size_t batch, Eigen::Index width, double rate, Rng& rng) {
  DropoutMasks m;
  if (rate <= 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto fill = [&](auto& mat) {
    for (Index j = 0; j < mat.cols(); ++j) {
      for (Index i = 0; i < mat.rows(); ++i) mat(i, j) = u01(rng) < rate ? 0.0 : keep;
    }
  };
  for (std::size_t n = 0; n < batch; ++n) {
    MatrixXd a(kDenseDim, width), b(kHidden, width);
    VectorXd c(kHidden);
    fill(a);
    fill(b);
    fill(c);
    m.after_bn.push_back(std::move(a));
    m.after_lstm1.push_back(std::move(b));
    m.after_lstm2.push_back(std::move(c));
  }
  return m;
}

std::vector<ClassDistribution> forward_batch(std::span<const WindowInput> batch, const ModelParams& params,
                                             Mode mode, const DropoutMasks& masks) {
  check_batch(batch, masks);
  std::vector<SampleState> states(batch.size());
  const auto bn = dense_and_stats(batch, params, mode, states, nullptr);
  const DropoutMasks none;
  std::vector<ClassDistribution> out;
  out.reserve(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward_sample(params, bn, mode == Mode::Train ? masks : none, n, states[n]);
    out.push_back(states[n].probs);
  }
  return out;
}

ClassDistribution forward(const WindowInput& window, const ModelParams& params, Mode mode, Rng& rng,
                          double dropout_rate) {
  const DropoutMasks masks = mode == Mode::Train ? make_dropout_masks(1, window.cols(), dropout_rate, rng)
                                                 : DropoutMasks{};
  return forward_batch(std::span(&window, 1), params, mode, masks).front();
}

double batch_loss(std::span<const WindowInput> batch, std::span<const ActivityClass> labels,
                  const ModelParams& params, const LossWeights& weights, Mode mode, const DropoutMasks& masks) {
  const auto probs = forward_batch(batch, params, mode, masks);
  return weighted_loss(probs, labels, weights);
}

LossAndGrad loss_and_grad(std::span<const WindowInput> batch, std::span<const ActivityClass> labels,
                          const ModelParams& params, const LossWeights& weights, Mode mode,
                          const DropoutMasks& masks, unsigned threads) {
  check_batch(batch, masks);
  if (labels.size() != batch.size()) throw Error("labels and batch differ in length");
  const auto& w = params.weights;
  const std::size_t N = batch.size();
  const DropoutMasks none;
  const DropoutMasks& active = mode == Mode::Train ? masks : none;

  LossAndGrad out;
  std::vector<SampleState> states(N);
  const auto bn = dense_and_stats(batch, params, mode, states, mode == Mode::Train ? &out.bn_stats : nullptr);

  // Per sample: forward, then backward down to the batch-norm output.
  std::vector<Gradients> partial(N);
  std::vector<MatrixXd> d_xhat(N);
  detail::parallel_for(N, threads, [&](std::size_t n) {
    auto& s = states[n];
    forward_sample(params, bn, active, n, s);
    s.loss = sample_loss(s.probs, labels[n], weights);

    Gradients g = Gradients::zeros();
    VectorXd d_logits(kClasses);
    for (int k = 0; k < kClasses; ++k) d_logits(k) = s.probs[k];
    d_logits(static_cast<Index>(index_of(labels[n]))) -= 1.0;
    d_logits *= weights[labels[n]];
    g.dense_out_w.noalias() += d_logits * s.top.transpose();
    g.dense_out_b += d_logits;

    VectorXd d_top = w.dense_out_w.transpose() * d_logits;
    if (!active.empty()) d_top.array() *= active.after_lstm2[n].array();
    MatrixXd d_h2 = MatrixXd::Zero(kHidden, s.v.cols());
    d_h2.col(d_h2.cols() - 1) = d_top;
    MatrixXd d_v = lstm_backward(w.lstm2, s.v, s.l2, d_h2, g.lstm2);
    if (!active.empty()) d_v.array() *= active.after_lstm1[n].array();
    MatrixXd d_u = lstm_backward(w.lstm1, s.u, s.l1, d_v, g.lstm1);
    if (!active.empty()) d_u.array() *= active.after_bn[n].array();

    g.bn_gamma += (d_u.array() * s.xhat.array()).matrix().rowwise().sum();
    g.bn_beta += d_u.rowwise().sum();
    d_xhat[n] = (d_u.array().colwise() * w.bn_gamma.array()).matrix();
    partial[n] = std::move(g);
  });

  out.grad = Gradients::zeros();
  for (std::size_t n = 0; n < N; ++n) {
    out.loss += states[n].loss;
    out.grad += partial[n];
    out.probs.push_back(states[n].probs);
  }
  if (!std::isfinite(out.loss)) throw DivergenceError("non-finite loss");

  // Batch norm backward. In Train mode the statistics depend on every sample.
  VectorXd sum_dxhat = VectorXd::Zero(kDenseDim);
  VectorXd sum_dxhat_xhat = VectorXd::Zero(kDenseDim);
  double count = 0.0;
  if (mode == Mode::Train) {
    for (std::size_t n = 0; n < N; ++n) {
      sum_dxhat += d_xhat[n].rowwise().sum();
      sum_dxhat_xhat += (d_xhat[n].array() * states[n].xhat.array()).matrix().rowwise().sum();
      count += static_cast<double>(d_xhat[n].cols());
    }
  }
  std::vector<MatrixXd> d_w(N);
  std::vector<VectorXd> d_b(N);
  detail::parallel_for(N, threads, [&](std::size_t n) {
    MatrixXd d_z;
    if (mode == Mode::Train) {
      const ArrayXXd centered = (d_xhat[n].array() * count).colwise() - sum_dxhat.array();
      const ArrayXXd corr = states[n].xhat.array().colwise() * sum_dxhat_xhat.array();
      d_z = ((centered - corr).colwise() * (bn.inv_std.array() / count)).matrix();
    } else {
      d_z = (d_xhat[n].array().colwise() * bn.inv_std.array()).matrix();
    }
    d_w[n] = d_z * batch[n].transpose();
    d_b[n] = d_z.rowwise().sum();
  });
  for (std::size_t n = 0; n < N; ++n) {
    out.grad.dense_in_w += d_w[n];
    out.grad.dense_in_b += d_b[n];
  }
  for (const auto& t : tensors(out.grad)) {
    if (!Eigen::Map<const VectorXd>(t.data, t.size()).allFinite()) {
      throw DivergenceError("non-finite gradient in " + t.name);
    }
  }
  return out;
}

}  // namespace falldet::model
