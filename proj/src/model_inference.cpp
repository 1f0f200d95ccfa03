#include <cmath>

#include "falldet/model.hpp"

namespace falldet::model {

template <typename Scalar>
InferenceModel<Scalar>::InferenceModel(const ModelParams& params) {
  params.validate();
  const auto& w = params.weights;
  dense_in_w_ = w.dense_in_w.cast<Scalar>();
  dense_in_b_ = w.dense_in_b.cast<Scalar>();
  // batch norm folded into one affine map per feature
  const Eigen::VectorXd scale =
      (w.bn_gamma.array() * (params.bn.running_var.array() + params.bn.epsilon).rsqrt()).matrix();
  bn_scale_ = scale.cast<Scalar>();
  bn_shift_ = (w.bn_beta.array() - params.bn.running_mean.array() * scale.array()).matrix().cast<Scalar>();
  lstm1_ = {w.lstm1.input.cast<Scalar>(), w.lstm1.recurrent.cast<Scalar>(), w.lstm1.bias.cast<Scalar>()};
  lstm2_ = {w.lstm2.input.cast<Scalar>(), w.lstm2.recurrent.cast<Scalar>(), w.lstm2.bias.cast<Scalar>()};
  dense_out_w_ = w.dense_out_w.cast<Scalar>();
  dense_out_b_ = w.dense_out_b.cast<Scalar>();
  x_.resize(kInputDim);
  u_.resize(kDenseDim);
  h1_.resize(kHidden);
  c1_.resize(kHidden);
  h2_.resize(kHidden);
  c2_.resize(kHidden);
  gates_.resize(4 * kHidden);
}

template <typename Scalar>
void InferenceModel<Scalar>::step(const Cell& cell, const Vector& x, Vector& h, Vector& c) {
  const Eigen::Index H = kHidden;
  gates_.noalias() = cell.input * x;
  gates_.noalias() += cell.recurrent * h;
  gates_ += cell.bias;
  auto sig = [](auto v) { return (Scalar(1) + (-v).exp()).inverse(); };
  gates_.segment(0, 2 * H) = sig(gates_.segment(0, 2 * H).array()).matrix();
  gates_.segment(2 * H, H) = gates_.segment(2 * H, H).array().tanh().matrix();
  gates_.segment(3 * H, H) = sig(gates_.segment(3 * H, H).array()).matrix();
  c = (gates_.segment(H, H).array() * c.array() + gates_.segment(0, H).array() * gates_.segment(2 * H, H).array())
          .matrix();
  h = (gates_.segment(3 * H, H).array() * c.array().tanh()).matrix();
}

template <typename Scalar>
ClassDistribution InferenceModel<Scalar>::predict(const WindowInput& window) {
  if (window.cols() < 1) throw Error("window has no time steps");
  h1_.setZero();
  c1_.setZero();
  h2_.setZero();
  c2_.setZero();
  for (Eigen::Index t = 0; t < window.cols(); ++t) {
    x_ = window.col(t).template cast<Scalar>();
    u_.noalias() = dense_in_w_ * x_;
    u_ = ((u_ + dense_in_b_).array() * bn_scale_.array() + bn_shift_.array()).matrix();
    step(lstm1_, u_, h1_, c1_);
    step(lstm2_, h1_, h2_, c2_);
  }
  Eigen::Matrix<Scalar, kClasses, 1> logits = dense_out_w_ * h2_ + dense_out_b_;
  if (!logits.allFinite()) throw DivergenceError("non-finite logits in inference");
  const Scalar mx = logits.maxCoeff();
  ClassDistribution p{};
  double sum = 0.0;
  for (int k = 0; k < kClasses; ++k) {
    p[k] = static_cast<double>(std::exp(logits(k) - mx));
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

template class InferenceModel<float>;
template class InferenceModel<double>;

}  // namespace falldet::model
