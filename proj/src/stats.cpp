#include "qccp/stats.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qccp {

namespace {

double sorted_quantile(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, s.size() - 1);
  return s[i] + (pos - static_cast<double>(i)) * (s[j] - s[i]);
}

}  // namespace

Vector linspace(double lo, double hi, Eigen::Index n) {
  if (n < 2) throw_input("linspace: need at least two points");
  return Vector::LinSpaced(n, lo, hi);
}

double silverman_bandwidth(const Vector& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw_input("silverman_bandwidth: need at least two samples");
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> s(samples.data(), samples.data() + n);
  std::sort(s.begin(), s.end());
  const double iqr = sorted_quantile(s, 0.75) - sorted_quantile(s, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

Vector kde(const Vector& samples, const Vector& grid, double bandwidth) {
  const double bw = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * M_PI));
  std::vector<double> s(samples.data(), samples.data() + samples.size());
  std::sort(s.begin(), s.end());
  Vector out(grid.size());
  // kernels beyond 9 bandwidths contribute < 1e-17 each
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    auto lo = std::lower_bound(s.begin(), s.end(), x - 9.0 * bw);
    auto hi = std::upper_bound(s.begin(), s.end(), x + 9.0 * bw);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (x - *it) / bw;
      acc += std::exp(-0.5 * u * u);
    }
    out[g] = acc * norm;
  }
  return out;
}

double ks_distance(const Vector& samples, const std::function<double(double)>& cdf) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw_input("ks_distance: empty sample");
  std::vector<double> s(samples.data(), samples.data() + n);
  std::sort(s.begin(), s.end());
  const double nd = static_cast<double>(n);
  double d = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = cdf(s[static_cast<std::size_t>(i)]);
    d = std::max({d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd});
  }
  return d;
}

double trapezoid(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw_input("trapezoid: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

double integrated_absolute_error(const Vector& grid, const Vector& f, const Vector& g) {
  if (f.size() != grid.size() || g.size() != grid.size()) throw_input("integrated_absolute_error: length mismatch");
  return trapezoid(grid, (f - g).cwiseAbs());
}

}  // namespace qccp
