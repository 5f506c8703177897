#pragma once

// Brute-force ordinary kriging used as an independent reference: plain
// nested vectors, Gauss-Jordan explicit inverse, and the bordered
// Lagrange system written out term by term. Nothing here touches Eigen or
// the library's factorization code.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct Pt {
  double x, y;
};

struct Model {
  double tau2, sigma2, phi;
};

inline double dist(Pt a, Pt b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// C(h) for the exponential-with-nugget model; the nugget only enters at h = 0.
inline double cov(double h, const Model& m) {
  if (h == 0.0) return m.tau2 + m.sigma2;
  return m.sigma2 * std::exp(-h / m.phi);
}

inline Matrix inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0) throw std::runtime_error("oracle: singular matrix");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

struct Prediction {
  double mean;
  double variance;
};

/// Ordinary kriging through the bordered system
///   [C 1; 1' 0] [lambda; mu] = [c; 1],
///   variance = prior - lambda'c - mu.
/// `scale` multiplies every distance. `latent` drops the nugget from the
/// target: its prior variance is sigma2 and its covariance with the data is
/// sigma2 exp(-h / phi) even at h = 0.
inline Prediction krige(const std::vector<Pt>& locs, const std::vector<double>& z, Pt s,
                        const Model& m, double scale = 1.0, bool latent = false) {
  const std::size_t n = locs.size();
  Matrix a(n + 1, std::vector<double>(n + 1, 0.0));
  std::vector<double> rhs(n + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = cov(scale * dist(locs[i], locs[j]), m);
    a[i][n] = 1.0;
    a[n][i] = 1.0;
    const double h = scale * dist(locs[i], s);
    rhs[i] = latent ? m.sigma2 * std::exp(-h / m.phi) : cov(h, m);
  }
  const Matrix ainv = inverse(a);
  std::vector<double> sol(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) sol[i] += ainv[i][j] * rhs[j];
  }
  double mean = 0.0;
  double reduction = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!z.empty()) mean += sol[i] * z[i];
    reduction += sol[i] * rhs[i];
  }
  const double prior = latent ? m.sigma2 : m.tau2 + m.sigma2;
  return {mean, prior - reduction - sol[n]};
}

}  // namespace oracle
