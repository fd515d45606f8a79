#include "sparsemeta/normal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <stdexcept>

namespace sparsemeta {

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p must lie in (0, 1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

}  // namespace sparsemeta
