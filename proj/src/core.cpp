#include "feg/core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace feg {

bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

Vec evaluate_operator(const OperatorHandle& F, const Vec& z) {
  if (!F.eval) throw std::invalid_argument("evaluate_operator: empty operator");
  if (F.dim <= 0) throw std::invalid_argument("evaluate_operator: operator dim must be positive");
  if (z.size() != F.dim) {
    std::ostringstream os;
    os << "evaluate_operator: dimension mismatch, point has " << z.size()
       << " coordinates but operator expects " << F.dim;
    throw std::invalid_argument(os.str());
  }
  if (!all_finite(z)) throw std::invalid_argument("evaluate_operator: non-finite input point");
  Vec out = F.eval(z);
  if (out.size() != F.dim) {
    throw std::runtime_error("evaluate_operator: operator returned wrong dimension");
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      std::ostringstream os;
      os << "evaluate_operator: non-finite output coordinate " << i << " at z = [";
      for (Eigen::Index j = 0; j < z.size(); ++j) os << (j ? ", " : "") << z[j];
      os << "]";
      throw std::runtime_error(os.str());
    }
  }
  return out;
}

Vec evaluate_operator(const ProblemSpec& p, const Vec& z) {
  return evaluate_operator(p.op, z);
}

Vec vector_combine(const std::vector<std::pair<double, const Vec*>>& terms) {
  if (terms.empty()) throw std::invalid_argument("vector_combine: empty term list");
  const Eigen::Index d = terms.front().second->size();
  for (const auto& [c, p] : terms) {
    (void)c;
    if (p == nullptr) throw std::invalid_argument("vector_combine: null point");
    if (p->size() != d) throw std::invalid_argument("vector_combine: dimension mismatch");
  }
  Vec out(d);
  // Fixed accumulation order: coordinate-wise left-to-right over the list.
  for (Eigen::Index i = 0; i < d; ++i) {
    double acc = terms[0].first * (*terms[0].second)[i];
    for (std::size_t t = 1; t < terms.size(); ++t) {
      acc += terms[t].first * (*terms[t].second)[i];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace feg
