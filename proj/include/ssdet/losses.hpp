#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ssdet {

// Scalar loss plus its gradient with respect to the predictions passed in.
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

namespace detail {
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace detail

// Mean focal binary cross-entropy over logits. With gamma = 0 and
// alpha = 0.5 this is plain BCE scaled by 1/2. targets are 0/1.
inline LossResult cls_loss(std::span<const double> logits,
                           std::span<const int> targets, double gamma = 2.0,
                           double alpha = 0.25) {
  if (logits.size() != targets.size()) {
    throw std::invalid_argument("cls_loss: logits/targets length mismatch");
  }
  LossResult r;
  r.grad.assign(logits.size(), 0.0);
  if (logits.empty()) return r;
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double p = detail::sigmoid(z);
    if (targets[i] == 1) {
      const double log_p = -detail::softplus(-z);    // log p, stable
      const double q = 1.0 - p;
      const double w = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
      sum += -alpha * w * log_p;
      r.grad[i] = alpha * w * (gamma * p * log_p - q) * inv_n;
    } else {
      const double log_q = -detail::softplus(z);     // log (1 - p)
      const double w = gamma == 0.0 ? 1.0 : std::pow(p, gamma);
      sum += -(1.0 - alpha) * w * log_q;
      r.grad[i] = (1.0 - alpha) * w * (p - gamma * (1.0 - p) * log_q) * inv_n;
    }
  }
  r.value = sum * inv_n;
  return r;
}

// Mean smooth-L1 (Huber-style): 0.5 d^2 / beta inside |d| < beta, else
// |d| - 0.5 beta.
inline LossResult reg_loss(std::span<const double> pred,
                           std::span<const double> target, double beta = 1.0) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("reg_loss: pred/target length mismatch");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("reg_loss: beta must be positive");
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  if (pred.empty()) return r;
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    const double ad = std::abs(d);
    if (ad < beta) {
      sum += 0.5 * d * d / beta;
      r.grad[i] = d / beta * inv_n;
    } else {
      sum += ad - 0.5 * beta;
      r.grad[i] = (d > 0.0 ? 1.0 : -1.0) * inv_n;
    }
  }
  r.value = sum * inv_n;
  return r;
}

// Mean binary cross-entropy with the target IoU as a soft label. The
// gradient is with respect to the predicted probabilities, which must lie
// strictly inside (0, 1).
inline LossResult iou_est_loss(std::span<const double> pred_iou,
                               std::span<const double> target_iou) {
  if (pred_iou.size() != target_iou.size()) {
    throw std::invalid_argument("iou_est_loss: pred/target length mismatch");
  }
  LossResult r;
  r.grad.assign(pred_iou.size(), 0.0);
  if (pred_iou.empty()) return r;
  const double inv_n = 1.0 / static_cast<double>(pred_iou.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_iou.size(); ++i) {
    const double p = pred_iou[i];
    const double t = target_iou[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("iou_est_loss: predictions must lie in (0, 1)");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("iou_est_loss: targets must lie in [0, 1]");
    }
    sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    r.grad[i] = (-t / p + (1.0 - t) / (1.0 - p)) * inv_n;
  }
  r.value = sum * inv_n;
  return r;
}

struct LossBreakdown {
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double rcnn_iou = 0.0;
  double rcnn_reg = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double lambda_u = 1.0;
};

inline void validate(const LossWeights& w) {
  if (!(w.lambda_u >= 0.0)) {
    throw std::invalid_argument("lambda_u must be non-negative");
  }
}

// Labeled-data loss: all four terms contribute.
inline LossBreakdown supervised_total(double rpn_cls, double rpn_reg,
                                      double rcnn_iou, double rcnn_reg) {
  LossBreakdown b{rpn_cls, rpn_reg, rcnn_iou, rcnn_reg, 0.0};
  b.total = b.rpn_cls + b.rpn_reg + b.rcnn_iou + b.rcnn_reg;
  return b;
}

// Unlabeled-data loss: the IoU-estimation branch is dropped, so any
// supplied rcnn_iou value is ignored and reported as zero.
inline LossBreakdown unsupervised_total(double rpn_cls, double rpn_reg,
                                        double /*rcnn_iou*/, double rcnn_reg) {
  LossBreakdown b{rpn_cls, rpn_reg, 0.0, rcnn_reg, 0.0};
  b.total = b.rpn_cls + b.rpn_reg + b.rcnn_reg;
  return b;
}

inline double combined_total(const LossBreakdown& labeled,
                             const LossBreakdown& unlabeled,
                             const LossWeights& w) {
  return labeled.total + w.lambda_u * unlabeled.total;
}

}  // namespace ssdet
