#pragma once

#include "qccp/numerics.hpp"

#include <functional>

namespace qccp {

Vector linspace(double lo, double hi, Eigen::Index n);

/// 0.9 min(sd, IQR/1.34) n^{-1/5}.
double silverman_bandwidth(const Vector& samples);

/// Gaussian-kernel density estimate on the grid; bandwidth <= 0 picks Silverman.
Vector kde(const Vector& samples, const Vector& grid, double bandwidth = 0.0);

/// sup_z |F_n(z) - F(z)| for the empirical CDF of the samples.
double ks_distance(const Vector& samples, const std::function<double(double)>& cdf);

double trapezoid(const Vector& x, const Vector& y);

/// Trapezoid integral of |f - g| over the grid.
double integrated_absolute_error(const Vector& grid, const Vector& f, const Vector& g);

}  // namespace qccp
