#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ftau/operator_family.hpp"

namespace ftau {

struct OdeTrace {
    std::vector<double> r_grid;
    std::vector<double> W_values; // raw W = u'/r
    double tolerance = 1e-12;
    std::string method;
};

// Raw radial flow field: dW/dt = Phi(W) with t = ln r, W = u'/r, obtained by
// solving F_tau(lambda_1, W, ..., W) = C0 for lambda_1 = u'' and subtracting W.
double flow_phi(const Operator& op, double W);

// Integrate the raw flow from (r0, W0) to r1 with an embedded RK5(4) pair.
// Throws singularity_error when the flow leaves its domain or blows up.
OdeTrace integrate_flow(const Operator& op, double W0, double r0, double r1, double tol = 1e-12);

// Oriented tail integral int_{+infinity}^{r} f(tau) dtau = -int_r^inf f, for
// integrands bounded by C tau^{decay_hint} with decay_hint < -1 (log factors
// allowed).
double tail_quadrature(const std::function<double(double)>& f, double r, double decay_hint);

// Central-difference Hessian with step h per coordinate.
Eigen::MatrixXd hessian_fd(const std::function<double(const Eigen::VectorXd&)>& u,
                           const Eigen::VectorXd& x, double h);

// F_tau(lambda(D^2 u(x))) - C0 with the Hessian taken by finite differences.
double pde_residual(const Operator& op, const std::function<double(const Eigen::VectorXd&)>& u,
                    const Eigen::VectorXd& x, double h);

} // namespace ftau
