#pragma once
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ftau/errors.hpp"

namespace ftau::num {

// Root of f on [lo, hi] assuming a sign change. Bisection with secant
// acceleration; tolerance is on the bracket width relative to |x|.
template <class Real, class F>
Real solve_bracketed(F&& f, Real lo, Real hi, Real xtol, int maxit = 200) {
    Real flo = f(lo), fhi = f(hi);
    if (flo == Real(0)) return lo;
    if (fhi == Real(0)) return hi;
    if ((flo > Real(0)) == (fhi > Real(0)))
        throw numerical_error("solve_bracketed: endpoints do not bracket a root");
    for (int it = 0; it < maxit; ++it) {
        Real mid;
        Real denom = fhi - flo;
        if (denom != Real(0)) {
            mid = lo - flo * (hi - lo) / denom; // secant
            Real lo_guard = lo + (hi - lo) / Real(64);
            Real hi_guard = hi - (hi - lo) / Real(64);
            if (!(mid > lo_guard && mid < hi_guard)) mid = lo + (hi - lo) / Real(2);
        } else {
            mid = lo + (hi - lo) / Real(2);
        }
        Real fm = f(mid);
        if (fm == Real(0)) return mid;
        if ((fm > Real(0)) == (flo > Real(0))) {
            lo = mid; flo = fm;
        } else {
            hi = mid; fhi = fm;
        }
        using std::fabs;
        if (fabs(hi - lo) <= xtol * (Real(1) + fabs(lo) + fabs(hi))) break;
    }
    return lo + (hi - lo) / Real(2);
}

namespace detail {

// Accept a panel when its K15-G7 discrepancy fits within its share of the
// global error budget (pro-rated by length, so the criterion scales correctly
// on short intervals where the integral itself is tiny). Endpoint
// singularities never satisfy the per-length criterion, so the recursion is
// allowed to go deep there; panels is a global safety valve against
// adversarially rough integrands.
template <class F>
void gk_refine(const F& f, double a, double b, double budget_density, int depth, int& panels,
               double& acc) {
    namespace bq = boost::math::quadrature;
    double K = bq::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
    double G = bq::gauss<double, 7>::integrate(f, a, b);
    --panels;
    if (std::fabs(K - G) <= budget_density * (b - a) || depth <= 0 || panels <= 0) {
        acc += K;
        return;
    }
    double m = a + 0.5 * (b - a);
    gk_refine(f, a, m, budget_density, depth - 1, panels, acc);
    gk_refine(f, m, b, budget_density, depth - 1, panels, acc);
}

} // namespace detail

// Adaptive Gauss-Kronrod on [a, b]; tol is a relative error target.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-14) {
    if (a == b) return 0.0;
    namespace bq = boost::math::quadrature;
    double K0 = bq::gauss_kronrod<double, 15>::integrate(f, a, b, 0);
    double scale = std::max(std::fabs(K0), std::numeric_limits<double>::min());
    double acc = 0.0;
    int panels = 100000;
    detail::gk_refine(f, a, b, tol * scale / std::fabs(b - a), 48, panels, acc);
    return acc;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
struct Quadrature {
    std::vector<double> x, w;
};
Quadrature gauss_legendre(int npts);

struct LinFit {
    double slope = 0;
    double intercept = 0;
    double max_resid = 0;
};

// Least-squares line through (xs, ys).
LinFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

// Slope of ln|y| against ln x; pairs with |y| below floor are dropped.
LinFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys,
                  double floor = 1e-300);

// Monotone cubic (Fritsch-Carlson) interpolant on a strictly monotone grid.
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double xq) const;
    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
private:
    std::vector<double> x_, y_, d_;
};

std::vector<double> log_grid(double lo, double hi, int npts);

} // namespace ftau::num
