#pragma once

#include <Eigen/Dense>
#include <functional>

namespace calib::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Minimizes f over R^dim starting from x0. Standard simplex moves
// (reflection, expansion, contraction, shrink) with a size-based stop rule.
inline NelderMeadResult nelderMead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0, double initialStep = 0.5,
                                   int maxEvaluations = 2000, double tol = 1e-7) {
  using Eigen::VectorXd;
  const int dim = static_cast<int>(x0.size());
  NelderMeadResult result;

  std::vector<VectorXd> simplex(dim + 1, x0);
  std::vector<double> fx(dim + 1);
  for (int i = 1; i <= dim; ++i) simplex[i][i - 1] += initialStep;
  int evals = 0;
  for (int i = 0; i <= dim; ++i) fx[i] = (++evals, f(simplex[i]));

  auto order = [&] {
    std::vector<int> idx(dim + 1);
    for (int i = 0; i <= dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    std::vector<VectorXd> s2(dim + 1);
    std::vector<double> f2(dim + 1);
    for (int i = 0; i <= dim; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = fx[idx[i]];
    }
    simplex.swap(s2);
    fx.swap(f2);
  };
  order();

  while (evals < maxEvaluations) {
    if (std::abs(fx[dim] - fx[0]) < tol * (1.0 + std::abs(fx[0]))) {
      result.converged = true;
      break;
    }
    VectorXd centroid = VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += simplex[i];
    centroid /= dim;

    const VectorXd reflected = centroid + (centroid - simplex[dim]);
    const double fr = (++evals, f(reflected));
    if (fr < fx[0]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - simplex[dim]);
      const double fe = (++evals, f(expanded));
      if (fe < fr) {
        simplex[dim] = expanded;
        fx[dim] = fe;
      } else {
        simplex[dim] = reflected;
        fx[dim] = fr;
      }
    } else if (fr < fx[dim - 1]) {
      simplex[dim] = reflected;
      fx[dim] = fr;
    } else {
      const VectorXd contracted = centroid + 0.5 * (simplex[dim] - centroid);
      const double fc = (++evals, f(contracted));
      if (fc < fx[dim]) {
        simplex[dim] = contracted;
        fx[dim] = fc;
      } else {
        for (int i = 1; i <= dim; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fx[i] = (++evals, f(simplex[i]));
        }
      }
    }
    order();
  }
  result.x = simplex[0];
  result.value = fx[0];
  result.evaluations = evals;
  return result;
}

}  // namespace calib::detail
