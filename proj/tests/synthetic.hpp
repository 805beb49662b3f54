#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mixedlattice/band.hpp"

namespace synthetic {

// One chaotic level eps0 + alpha (beta - beta0) coupled to the regular level
// with strength w; beta - beta0 is wrapped into [-1/2, 1/2). A positive range
// gives the coupling a Gaussian envelope of that width.
struct Line {
  double beta0, w, alpha;
  double range = 0.0;
};

inline double wrap(double b) { return b - std::floor(b + 0.5); }

// Regular level background(beta) coupled to chaotic lines, diagonalized
// directly; the regular weight of each eigenvector is its overlap.
inline mixedlattice::SpectrumSource source(std::vector<Line> lines, std::function<double(double)> background) {
  return [lines, background](double beta) {
    const int n = static_cast<int>(lines.size()) + 1;
    const double e0 = background(beta);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    h(0, 0) = e0;
    for (int k = 1; k < n; ++k) {
      const auto& l = lines[k - 1];
      h(k, k) = e0 + l.alpha * wrap(beta - l.beta0);
      const double d = wrap(beta - l.beta0);
      h(0, k) = h(k, 0) = l.range > 0.0 ? l.w * std::exp(-(d / l.range) * (d / l.range)) : l.w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> weights(n);
    for (int i = 0; i < n; ++i) weights[i] = solver.eigenvectors()(0, i) * solver.eigenvectors()(0, i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weights[a] > weights[b]; });
    mixedlattice::RegularCandidates c;
    c.beta = beta;
    for (int i : order) {
      c.energies.push_back(solver.eigenvalues()[i]);
      c.overlaps.push_back(weights[i]);
    }
    return c;
  };
}

}  // namespace synthetic
