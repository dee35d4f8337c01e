#include "feg/noise.hpp"

#include "feg/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace feg {

namespace {
constexpr double undefined_v = std::numeric_limits<double>::quiet_NaN();
}

bool VarianceSchedule::defined(int twice_index) const {
  return twice_index >= 0 && twice_index < static_cast<int>(s2.size()) &&
         !std::isnan(s2[twice_index]);
}

double VarianceSchedule::at_twice(int twice_index) const {
  if (!defined(twice_index)) {
    throw std::out_of_range("VarianceSchedule: no variance defined at half-index " +
                            std::to_string(twice_index) + "/2");
  }
  const double v = s2[twice_index];
  if (v < 0.0) throw std::invalid_argument("VarianceSchedule: negative variance");
  return v;
}

bool VarianceSchedule::all_zero() const {
  for (double v : s2) {
    if (!std::isnan(v) && v != 0.0) return false;
  }
  return true;
}

VarianceSchedule VarianceSchedule::for_epsilon(double eps, int K) {
  if (!(eps > 0.0)) throw std::invalid_argument("schedule_for_epsilon: eps must be positive");
  if (K < 1) throw std::invalid_argument("schedule_for_epsilon: K must be >= 1");
  VarianceSchedule s;
  s.s2.assign(static_cast<std::size_t>(2 * K), undefined_v);
  s.s2[0] = eps / 6.0;  // the single query of the first iteration
  for (int k = 1; k < K; ++k) {
    s.s2[2 * k] = eps / (6.0 * k);
    s.s2[2 * k + 1] = eps / (6.0 * (k + 1));
  }
  return s;
}

VarianceSchedule VarianceSchedule::constant(double s2v, int K) {
  if (s2v < 0.0) throw std::invalid_argument("VarianceSchedule::constant: negative variance");
  if (K < 1) throw std::invalid_argument("VarianceSchedule::constant: K must be >= 1");
  VarianceSchedule s;
  s.s2.assign(static_cast<std::size_t>(2 * K), s2v);
  return s;
}

VarianceSchedule VarianceSchedule::zero(int K) { return constant(0.0, K); }

VarianceSchedule schedule_for_epsilon(double eps, int K) {
  return VarianceSchedule::for_epsilon(eps, K);
}

Vec noise_draw(const NoiseModel& noise, int dim, int twice_index, std::uint64_t trial) {
  const double s2 = noise.schedule.at_twice(twice_index);
  Vec xi = Vec::Zero(dim);
  if (s2 == 0.0) return xi;
  const double scale = std::sqrt(s2 / static_cast<double>(dim));
  const std::uint64_t key =
      mix_key(noise.seed, trial, static_cast<std::uint64_t>(twice_index),
              noise.family == NoiseFamily::gaussian_iid ? 0x67ULL : 0x72ULL);
  if (noise.family == NoiseFamily::gaussian_iid) {
    for (int c = 0; c < dim; ++c) {
      xi[c] = scale * gaussian_at(key, static_cast<std::uint64_t>(c));
    }
  } else {
    for (int c = 0; c < dim; ++c) {
      xi[c] = scale * sign_at(key, static_cast<std::uint64_t>(c));
    }
  }
  return xi;
}

Vec noisy_eval(const OperatorHandle& F, const NoiseModel& noise, const Vec& z,
               int twice_index, std::uint64_t trial, Vec* xi_out) {
  Vec out = evaluate_operator(F, z);
  const double s2 = noise.schedule.at_twice(twice_index);
  if (s2 == 0.0) {
    if (xi_out) *xi_out = Vec::Zero(out.size());
    return out;  // bitwise-identical to the exact evaluation
  }
  Vec xi = noise_draw(noise, static_cast<int>(out.size()), twice_index, trial);
  if (xi_out) *xi_out = xi;
  out += xi;
  return out;
}

}  // namespace feg
