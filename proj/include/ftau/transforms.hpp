#pragma once
#include <string>
#include <vector>

#include "ftau/operator_family.hpp"
#include "ftau/radial_solver.hpp"

namespace ftau {

// Radial section of a rotation-invariant function: values and first two
// radial derivatives on an increasing grid.
struct RadialProfile {
    std::vector<double> r_grid;
    std::vector<double> U, dU, d2U;
};

RadialProfile profile_from_solution(const RadialSolution& sol, double r_lo, double r_hi, int npts);

// Legendre transform of the shifted profile Ubar = U + (shift/2) r^2 in the
// gradient variable s = Ubar'(r). Output grid is s; values are
// v(s) = r s - Ubar(r), v'(s) = r, v''(s) = 1 / Ubar''(r).
RadialProfile legendre_radial(const RadialProfile& p, double shift);

// lambda_tilde = (lambda + a - b) / (lambda + a + b), mapped into (0, 1).
double eigenvalue_map_small(double lambda, double a, double b);

struct ReductionReport {
    bool pass = true;
    double max_residual = 0; // transformed-equation residual over the grid
    double min_margin = 0;   // eigenvalue-bound margin (>= 0 means satisfied)
    std::vector<std::string> notes;
};

// Case tau in (0, pi/4): Legendre transform with shift a+b turns the equation
// into a Monge-Ampere-type constraint sum ln lambda_tilde_i = ln C' for
// u_tilde = |s|^2/2 - 2b v(s); checks the residual, the cross-consistency of
// algebraic vs transformed eigenvalues, and lambda_i >= 2b/(1-C') - a - b.
ReductionReport verify_ma_reduction(const Operator& op, const RadialSolution& sol);

// Case tau = pi/4: Legendre transform with shift 1 turns the equation into
// -Laplace(v) = sqrt(2) C0 / 2; also checks D^2 v <= (-C0/sqrt(2)) I when
// C0 < 0 (flagged, not rejected, otherwise).
ReductionReport verify_poisson_reduction(const Operator& op, const RadialSolution& sol);

struct CaseIvReduction {
    Operator spl;             // reduced operator at tau = pi/2
    double C0_spl = 0;        // b C0 / sqrt(a^2+1) + n pi / 4
    bool supercritical = false; // |C0_spl| > (n-2) pi / 2
    std::string substitution; // v = u/b + (a/(2b)) |x|^2
};

CaseIvReduction reduce_case_iv(const Operator& op);

} // namespace ftau
