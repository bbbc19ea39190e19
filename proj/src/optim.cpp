#include "mrefg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mrefg {

Optimizer::Optimizer(std::vector<ad::Param*> params, OptimizerConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
  if (cfg_.algo != "adam" && cfg_.algo != "sgd") {
    throw std::invalid_argument("unknown optimizer: " + cfg_.algo);
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ad::Param* p : params_) {
    m_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Optimizer::zero_grad() {
  for (ad::Param* p : params_) p->zero_grad();
}

void Optimizer::step() {
  ++t_;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const ad::Param* p : params_) sq += p->grad.squaredNorm();
    double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) {
      double s = cfg_.clip_norm / norm;
      for (ad::Param* p : params_) p->grad *= s;
    }
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    ad::Param& p = *params_[i];
    if (cfg_.weight_decay > 0.0) p.grad += cfg_.weight_decay * p.value;
    if (cfg_.algo == "sgd") {
      if (cfg_.momentum > 0.0) {
        m_[i] = cfg_.momentum * m_[i] + p.grad;
        p.value -= cfg_.lr * m_[i];
      } else {
        p.value -= cfg_.lr * p.grad;
      }
    } else {  // adam
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad).eval();
      double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      ad::Mat mhat = m_[i] / bc1;
      ad::Mat vhat = v_[i] / bc2;
      p.value -= cfg_.lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg_.eps).matrix());
    }
    p.zero_grad();
  }
}

}  // namespace mrefg
