#pragma once
#include <string>
#include <vector>

#include "ftau/operator_family.hpp"
#include "ftau/power_series.hpp"

namespace ftau {

// Case-normalized first integral G(W(r)) = c r^{-n} of the radial equation,
// written in the variable W with u'/r = alpha + beta * W:
//   MA:      W = u'/r,                alpha = 0,      beta = 1,    G = w^n - C'
//   Small:   W = (u'/r + a + b)/(2b), alpha = -(a+b), beta = 2b,   G = C' w^n - (w-1)^n
//   Inverse: W = C'(u'/r + 1),        alpha = -1,     beta = 1/C', G = w^n - n w^{n-1}
//   Large:   W = (u'/r + a)/b,        alpha = -a,     beta = b,    G = (w^2+1)^{n/2} sin(n arctan w + q)
//   SPL:     W = u'/r,                alpha = 0,      beta = 1,    G = (w^2+1)^{n/2} sin(n arctan w - C0)
// The Inverse case with C' != 0 is normalized internally to C' = 1; with
// C' = 0 the relation degenerates to G(w) = sign(w)|w|^{n-1} in W = u'/r + 1.
// Small with C0 > 0 is handled through the substitution ubar = -u - a|x|^2,
// which solves the C0 < 0 problem; sign_flipped records this.
struct FirstIntegral {
    Operator op;
    int n = 3;
    double Cn = 0;
    bool inverse_zero = false;
    bool sign_flipped = false;
    double alpha = 0;
    double beta = 1;
    std::vector<double> w_singularities;
    std::string description;

    double G(double w) const;
    double dG(double w) const;
};

FirstIntegral build_first_integral(const Operator& op);

// One maximal monotone piece of G with its image interval (Xi endpoints).
struct Branch {
    FirstIntegral fi;
    int p = 1;
    double w_lo = 0, w_hi = 0;
    double xi_lo = 0, xi_hi = 0;
    std::string xi_lo_name = "xi_lo", xi_hi_name = "xi_hi";
    bool has_w_at_zero = false;
    double w_at_zero = 0;
    bool analytic_at_zero = false;
    bool increasing = true;
    bool tagged = false;   // consistent with admissibility conditions (i)-(v)
    double trig_q = 0;     // Large/SPL: G = (w^2+1)^{n/2} sin(n arctan w + q)
    int trig_k0 = 0;       // n arctan(w_at_zero) + q = trig_k0 * pi

    double G(double w) const;
    double dG(double w) const;
};

std::vector<Branch> branch_catalog(const FirstIntegral& fi);

const Branch& tagged_branch(const std::vector<Branch>& catalog);

double invert_numeric(const Branch& br, double xi);

// Truncated expansion u_J = c2 r^2 + c0 + r^2 sum_{j<=J} c_{-j} (c r^{-n})^j.
struct Expansion {
    int n = 3;
    double c = 0;
    double c2 = 0;
    double c0 = 0;
    std::vector<double> tail_coeffs;
    int J = 0;

    double eval(double r) const;
};

Expansion expansion_coefficients(const Branch& br, const Operator& op, double c, int J);

// Taylor coefficients w_0, w_1, ..., w_order of the branch inverse about xi = 0.
std::vector<double> inverse_series_at_zero(const Branch& br, int order);

struct RadialSolution {
    Operator op;
    Branch branch;
    double c = 0;
    double c0 = 0;
    double r_min = 1.25;
    double alpha = 0;
    double beta = 1;
    bool flipped = false;
    bool anchored_at_rmin = false; // non-analytic tails: u anchored at r_min, not at infinity

    double W(double r) const; // normalized branch variable w(c r^{-n})
    double u(double r) const;
    double du(double r) const;
    double d2u(double r) const;
    // u minus its quadratic-plus-constant part, evaluated without the
    // cancellation of forming u - c2 r^2 - c0 at large r (analytic branches).
    double tail(double r) const;
    double first_integral_check(double r) const;
    std::vector<double> eigenvalues(double r) const; // (u'', u'/r, ..., u'/r)
};

RadialSolution build_solution(const Branch& br, const Operator& op, double c, double c0,
                              double r_min = 1.25);

// Log-log slope of |w(xi) - w(0)| over xi in [1e-8, 1e-4] on the branch side.
double measure_branch_exponent(const Branch& br);

// Log-log slope of the expansion remainder u - u_J over [r_lo, r_hi], computed
// by quad-precision quadrature of the inverted first integral (independent of
// the truncated series being tested).
double measure_remainder_slope(const Branch& br, const Operator& op, double c, int J,
                               double r_lo, double r_hi, int npts = 40);

// Same measurement with tail coefficient c_{-k} perturbed by a relative factor.
double measure_remainder_slope_perturbed(const Branch& br, const Operator& op, double c, int J,
                                         double r_lo, double r_hi, int k, double rel,
                                         int npts = 40);

} // namespace ftau
