#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ssdet {

// Step-decay confidence threshold. Starting from sigma_start, the value
// moves by `decay` toward sigma_end every `step_len` iterations and stays
// at sigma_end once reached. Works in both directions (sigma_start above
// or below sigma_end).
struct ThresholdSchedule {
  double sigma_start = 0.6;
  double sigma_end = 0.4;
  std::uint64_t step_len = 1000;
  double decay = 0.1;
};

inline void validate(const ThresholdSchedule& s) {
  if (!(s.sigma_start >= 0.0 && s.sigma_start <= 1.0) ||
      !(s.sigma_end >= 0.0 && s.sigma_end <= 1.0)) {
    throw std::invalid_argument("schedule endpoints must lie in [0, 1]");
  }
  if (s.step_len < 1) throw std::invalid_argument("schedule step_len must be >= 1");
  if (!(s.decay > 0.0)) throw std::invalid_argument("schedule decay must be positive");
}

namespace detail {
// Interior step values are snapped to a 1e-9 decimal grid so that e.g.
// three steps of 0.1 down from 0.6 land on 0.4 exactly; raw binary
// accumulation of decimal decrements drifts by one ulp per step.
inline double quantize_threshold(double v) {
  return std::round(v * 1e9) / 1e9;
}
}  // namespace detail

// Threshold in effect at iteration t. Endpoints are returned as the exact
// stored field values: sigma_start at k = 0 and sigma_end once the raw
// step value crosses it. Interior steps are decimal-quantized (see above)
// and clamped to the closed interval spanned by the endpoints.
inline double value_at(const ThresholdSchedule& s, std::uint64_t t) {
  const std::uint64_t k = t / s.step_len;
  if (k == 0) return s.sigma_start;
  const double delta = static_cast<double>(k) * s.decay;
  if (s.sigma_start >= s.sigma_end) {
    const double raw = s.sigma_start - delta;
    if (raw <= s.sigma_end) return s.sigma_end;
    return std::clamp(detail::quantize_threshold(raw), s.sigma_end, s.sigma_start);
  }
  const double raw = s.sigma_start + delta;
  if (raw >= s.sigma_end) return s.sigma_end;
  return std::clamp(detail::quantize_threshold(raw), s.sigma_start, s.sigma_end);
}

// Literal min-form variant, kept for side-by-side comparison: with
// sigma_end below sigma_start this returns sigma_end already at t = 0 and
// keeps decreasing without bound, rather than starting at sigma_start.
inline double value_at_min_form(const ThresholdSchedule& s, std::uint64_t t) {
  const double k = static_cast<double>(t / s.step_len);
  return std::min(s.sigma_start - s.decay * k, s.sigma_end);
}

// Iteration index from which value_at stays at sigma_end. The small guard
// keeps ratios like 0.2/0.1, which round to just above an integer, from
// ceiling one step too far.
inline std::uint64_t saturation_iteration(const ThresholdSchedule& s) {
  const double span = std::abs(s.sigma_start - s.sigma_end);
  const double steps = std::ceil(span / s.decay - 1e-9);
  return s.step_len * static_cast<std::uint64_t>(std::max(0.0, steps));
}

}  // namespace ssdet
