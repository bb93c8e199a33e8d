#ifndef HETNET_ALM_H_
#define HETNET_ALM_H_

// Augmented Lagrangian engine for
//
//   maximize f(z)  s.t.  g_j(z) <= 0,  h_i(z) = 0,  lower <= z <= upper.
//
// Inequalities are handled through squared slacks that are minimised out in
// closed form, which leaves the hinge form
//
//   L(z) = f(z) - sum_i [eta_i h_i + gamma/2 h_i^2]
//               - 1/(2 gamma) sum_j ([lambda_j + gamma g_j]_+^2 - lambda_j^2)
//
// with multiplier steps lambda_j <- [lambda_j + gamma g_j]_+ and
// eta_i <- eta_i + gamma h_i.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hetnet::alm {

using Vector = std::vector<double>;

struct Function {
  std::function<double(std::span<const double>)> value;
  // Writes the gradient into the second argument (same size as z).
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct ConstrainedProblem {
  std::size_t dimension = 0;
  Function objective;                  // maximised
  std::vector<Function> inequalities;  // g_j(z) <= 0
  std::vector<Function> equalities;    // h_i(z) == 0
  Vector lower;                        // empty: unbounded below
  Vector upper;                        // empty: unbounded above

  void validate() const;
  Vector project(Vector z) const;
};

struct MultiplierState {
  Vector lambda;  // >= 0, one per inequality
  Vector eta;     // one per equality
  double gamma = 1.0;

  static MultiplierState zeros(const ConstrainedProblem& prob, double gamma);
};

// (1/2 gamma) ([lambda + gamma g]_+^2 - lambda^2)
double inequality_penalty(double lambda, double gamma, double g);
// d/dg of inequality_penalty; zero at the kink.
inline double inequality_penalty_slope(double lambda, double gamma, double g) {
  const double t = lambda + gamma * g;
  return t > 0.0 ? t : 0.0;
}

double augmented_value(const ConstrainedProblem& prob,
                       std::span<const double> z, const MultiplierState& ms);
Vector augmented_gradient(const ConstrainedProblem& prob,
                          std::span<const double> z,
                          const MultiplierState& ms);

MultiplierState update_multipliers(const MultiplierState& ms,
                                   std::span<const double> inequality_values,
                                   std::span<const double> equality_values);

// max(max_j [g_j]_+, max_i |h_i|)
double max_violation(std::span<const double> inequality_values,
                     std::span<const double> equality_values);

struct Schedule {
  double growth = 2.0;
  double gamma_cap = 1048576.0;
  int max_iter = 50;
  double feasibility_tol = 1e-6;
  double step_tol = 1e-3;  // max |z^{n+1} - z^n|
};

// Maximises augmented_value(prob, ., ms) over the box from `warm`.
using InnerMaximizer = std::function<Vector(
    const ConstrainedProblem&, const MultiplierState&, const Vector& warm)>;

struct Iterate {
  int iteration;
  double objective;
  double augmented;
  double max_violation;
  double step;
  double gamma;  // penalty used for this round
};

struct Result {
  Vector z;
  MultiplierState multipliers;
  std::vector<Iterate> trace;
  bool converged = false;
};

// Alternates inner maximisation and multiplier updates, growing gamma by the
// schedule. On hitting the cap returns the best iterate seen (feasible
// before infeasible, then by objective) with converged = false.
Result alm_solve(const ConstrainedProblem& prob, const Vector& z0,
                 const MultiplierState& ms0, const InnerMaximizer& inner,
                 const Schedule& schedule = {});

// ---------------------------------------------------------------------------
// Projected gradient ascent over a box with Armijo backtracking and
// Barzilai-Borwein trial steps.

struct AscentOptions {
  int max_iter = 300;
  double armijo_slope = 1e-4;
  double shrink = 0.5;
  double step_tol = 1e-10;  // on max |z^{k+1} - z^k|, relative to 1 + |z|
  double initial_step = 0.0;  // <= 0: 1 / max|grad|
  bool record_values = false;
};

struct AscentResult {
  Vector z;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> values;  // accepted objective values when recorded
};

AscentResult projected_gradient_ascent(
    const std::function<double(std::span<const double>)>& value,
    const std::function<void(std::span<const double>, std::span<double>)>&
        gradient,
    const Vector& lower, const Vector& upper, Vector z0,
    const AscentOptions& options = {});

InnerMaximizer make_gradient_maximizer(const AscentOptions& options = {});

}  // namespace hetnet::alm

#endif  // HETNET_ALM_H_
