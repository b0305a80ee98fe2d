#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ssdet {

using ParamVector = std::vector<double>;

// Elementwise teacher <- momentum * teacher + (1 - momentum) * student,
// computed in the incremental form teacher += (1 - momentum) * (student -
// teacher) so that teacher == student is a bitwise fixed point. Mutates
// only the teacher vector; callers own the single-writer contract.
inline void ema_update(ParamVector& teacher, const ParamVector& student,
                       double momentum) {
  if (teacher.size() != student.size()) {
    throw std::invalid_argument("ema_update: parameter vectors differ in length");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("ema_update: momentum must lie in [0, 1)");
  }
  const double w = 1.0 - momentum;
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    teacher[i] += w * (student[i] - teacher[i]);
  }
}

// Linear momentum ramp from m_start at t = 0 to m_end at t = warmup_iters,
// constant m_end afterward.
struct MomentumWarmup {
  double m_start = 0.99;
  double m_end = 0.999;
  std::uint64_t warmup_iters = 1000;
};

inline void validate(const MomentumWarmup& w) {
  if (!(w.m_start >= 0.0 && w.m_start <= w.m_end && w.m_end < 1.0)) {
    throw std::invalid_argument("momentum warmup requires 0 <= m_start <= m_end < 1");
  }
  if (w.warmup_iters < 1) {
    throw std::invalid_argument("momentum warmup_iters must be >= 1");
  }
}

inline double momentum_at(const MomentumWarmup& w, std::uint64_t t) {
  if (t == 0) return w.m_start;
  if (t >= w.warmup_iters) return w.m_end;
  const double frac = static_cast<double>(t) / static_cast<double>(w.warmup_iters);
  return w.m_start + (w.m_end - w.m_start) * frac;
}

}  // namespace ssdet
