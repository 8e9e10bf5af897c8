#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "ftau/errors.hpp"

namespace ftau {

// Truncated Taylor series sum_j c[j] (x - base)^j. All arithmetic is dense;
// the orders needed stay small (<= ~16 in double, ~50 in quad precision).
template <class Real>
struct SeriesT {
    Real base = Real(0);
    std::vector<Real> c;

    SeriesT() = default;
    SeriesT(Real b, std::vector<Real> cs) : base(b), c(std::move(cs)) {}
    int order() const { return int(c.size()) - 1; }

    Real eval(Real x) const {
        Real dx = x - base, acc = Real(0);
        for (size_t j = c.size(); j-- > 0;) acc = acc * dx + c[j];
        return acc;
    }
};

using Series = SeriesT<double>;

enum class ArithOp { add, sub, mul, div };
enum class Elementary { arctan, sin, cos, ln1p, pow_alpha, exp };

namespace detail {

template <class Real>
void check_compatible(const SeriesT<Real>& a, const SeriesT<Real>& b) {
    if (a.c.size() != b.c.size() || a.base != b.base)
        throw contract_violation("series: mismatched base point or order");
}

} // namespace detail

template <class Real>
SeriesT<Real> series_add(const SeriesT<Real>& a, const SeriesT<Real>& b) {
    detail::check_compatible(a, b);
    SeriesT<Real> r = a;
    for (size_t j = 0; j < r.c.size(); ++j) r.c[j] += b.c[j];
    return r;
}

template <class Real>
SeriesT<Real> series_sub(const SeriesT<Real>& a, const SeriesT<Real>& b) {
    detail::check_compatible(a, b);
    SeriesT<Real> r = a;
    for (size_t j = 0; j < r.c.size(); ++j) r.c[j] -= b.c[j];
    return r;
}

template <class Real>
SeriesT<Real> series_mul(const SeriesT<Real>& a, const SeriesT<Real>& b) {
    detail::check_compatible(a, b);
    SeriesT<Real> r(a.base, std::vector<Real>(a.c.size(), Real(0)));
    for (size_t i = 0; i < a.c.size(); ++i)
        for (size_t j = 0; i + j < a.c.size() && j < b.c.size(); ++j)
            r.c[i + j] += a.c[i] * b.c[j];
    return r;
}

template <class Real>
SeriesT<Real> series_div(const SeriesT<Real>& a, const SeriesT<Real>& b) {
    detail::check_compatible(a, b);
    if (b.c[0] == Real(0))
        throw singular_series_error("series_div: divisor has zero constant term");
    SeriesT<Real> q(a.base, std::vector<Real>(a.c.size(), Real(0)));
    for (size_t j = 0; j < a.c.size(); ++j) {
        Real acc = a.c[j];
        for (size_t k = 1; k <= j; ++k) acc -= b.c[k] * q.c[j - k];
        q.c[j] = acc / b.c[0];
    }
    return q;
}

template <class Real>
SeriesT<Real> series_scale(const SeriesT<Real>& a, Real s) {
    SeriesT<Real> r = a;
    for (auto& cj : r.c) cj *= s;
    return r;
}

template <class Real>
SeriesT<Real> series_arith(const SeriesT<Real>& a, const SeriesT<Real>& b, ArithOp op) {
    switch (op) {
    case ArithOp::add: return series_add(a, b);
    case ArithOp::sub: return series_sub(a, b);
    case ArithOp::mul: return series_mul(a, b);
    case ArithOp::div: return series_div(a, b);
    }
    throw contract_violation("series_arith: bad op");
}

// outer(inner(x)) truncated at the common order; inner's constant term must
// sit at outer's base point.
template <class Real>
SeriesT<Real> series_compose(const SeriesT<Real>& outer, const SeriesT<Real>& inner) {
    using std::fabs;
    Real tol = Real(1e-10) * (Real(1) + fabs(outer.base));
    if (fabs(inner.c[0] - outer.base) > tol)
        throw contract_violation("series_compose: inner constant term != outer base point");
    const size_t n = inner.c.size();
    SeriesT<Real> d = inner;
    d.c[0] = Real(0); // exact recentering at outer.base
    SeriesT<Real> r(inner.base, std::vector<Real>(n, Real(0)));
    SeriesT<Real> p(inner.base, std::vector<Real>(n, Real(0)));
    p.c[0] = Real(1);
    for (size_t j = 0; j < outer.c.size() && j < n; ++j) {
        for (size_t k = 0; k < n; ++k) r.c[k] += outer.c[j] * p.c[k];
        if (j + 1 < outer.c.size()) p = series_mul(p, d);
    }
    return r;
}

template <class Real>
SeriesT<Real> series_derivative(const SeriesT<Real>& a) {
    SeriesT<Real> r(a.base, std::vector<Real>(a.c.size(), Real(0)));
    for (size_t j = 1; j < a.c.size(); ++j) r.c[j - 1] = a.c[j] * Real(double(j));
    return r;
}

template <class Real>
SeriesT<Real> series_antiderivative(const SeriesT<Real>& a, Real value_at_base) {
    SeriesT<Real> r(a.base, std::vector<Real>(a.c.size(), Real(0)));
    r.c[0] = value_at_base;
    for (size_t j = 0; j + 1 < a.c.size(); ++j) r.c[j + 1] = a.c[j] / Real(double(j + 1));
    return r;
}

// Taylor series of elementary functions about an arbitrary center.
template <class Real>
SeriesT<Real> series_elementary(Elementary f, Real center, int order, Real alpha = Real(0)) {
    using std::atan;
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    if (order < 0) throw contract_violation("series_elementary: negative order");
    const size_t n = size_t(order) + 1;
    SeriesT<Real> r(center, std::vector<Real>(n, Real(0)));
    switch (f) {
    case Elementary::arctan: {
        // integrate 1/(1 + (center + x)^2)
        SeriesT<Real> den(center, std::vector<Real>(n, Real(0)));
        den.c[0] = Real(1) + center * center;
        if (n > 1) den.c[1] = Real(2) * center;
        if (n > 2) den.c[2] = Real(1);
        SeriesT<Real> one(center, std::vector<Real>(n, Real(0)));
        one.c[0] = Real(1);
        r = series_antiderivative(series_div(one, den), atan(center));
        return r;
    }
    case Elementary::sin: {
        Real s = sin(center), c = cos(center);
        Real fact = Real(1);
        for (size_t j = 0; j < n; ++j) {
            if (j > 0) fact *= Real(double(j));
            switch (j % 4) {
            case 0: r.c[j] = s / fact; break;
            case 1: r.c[j] = c / fact; break;
            case 2: r.c[j] = -s / fact; break;
            case 3: r.c[j] = -c / fact; break;
            }
        }
        return r;
    }
    case Elementary::cos: {
        Real s = sin(center), c = cos(center);
        Real fact = Real(1);
        for (size_t j = 0; j < n; ++j) {
            if (j > 0) fact *= Real(double(j));
            switch (j % 4) {
            case 0: r.c[j] = c / fact; break;
            case 1: r.c[j] = -s / fact; break;
            case 2: r.c[j] = -c / fact; break;
            case 3: r.c[j] = s / fact; break;
            }
        }
        return r;
    }
    case Elementary::ln1p: {
        Real u = Real(1) + center;
        if (!(u > Real(0)))
            throw domain_error("series_elementary: ln1p center at or below -1");
        r.c[0] = log(u);
        Real p = Real(1);
        for (size_t j = 1; j < n; ++j) {
            p *= u;
            r.c[j] = (j % 2 ? Real(1) : Real(-1)) / (Real(double(j)) * p);
        }
        return r;
    }
    case Elementary::pow_alpha: {
        // (1 + center + x)^alpha
        Real u = Real(1) + center;
        if (!(u > Real(0)))
            throw domain_error("series_elementary: pow_alpha center at or below -1");
        Real coef = pow(u, alpha);
        Real p = Real(1);
        for (size_t j = 0; j < n; ++j) {
            r.c[j] = coef / p;
            coef *= (alpha - Real(double(j))) / Real(double(j + 1));
            p *= u;
        }
        return r;
    }
    case Elementary::exp: {
        Real e = exp(center);
        Real fact = Real(1);
        for (size_t j = 0; j < n; ++j) {
            if (j > 0) fact *= Real(double(j));
            r.c[j] = e / fact;
        }
        return r;
    }
    }
    throw contract_violation("series_elementary: bad function tag");
}

// Compositional inverse: given G about w0 with G(w0) = xi0 and G'(w0) != 0,
// returns w(xi) about xi0 with G(w(xi)) = xi through the truncation order.
template <class Real>
SeriesT<Real> invert_series(const SeriesT<Real>& G, int order) {
    using std::fabs;
    if (order < 1) throw contract_violation("invert_series: order must be >= 1");
    if (G.c.size() < 2 || G.c[1] == Real(0))
        throw critical_point_error("invert_series: G'(w0) = 0, branch not analytically invertible");
    const size_t n = size_t(order) + 1;
    std::vector<Real> a(n, Real(0)); // G(w0 + x) - xi0 = sum_{j>=1} a_j x^j
    for (size_t j = 1; j < n && j < G.c.size(); ++j) a[j] = G.c[j];
    std::vector<Real> b(n, Real(0)); // x(y) = sum_{j>=1} b_j y^j
    b[1] = Real(1) / a[1];
    std::vector<Real> comp(n, Real(0)); // coefficients of g(x(y)) as b fills in
    for (size_t k = 2; k < n; ++k) {
        // coefficient of y^k in sum_{j=2..k} a_j (x_{<k}(y))^j
        std::vector<Real> pw(n, Real(0));
        pw[0] = Real(1);
        std::fill(comp.begin(), comp.end(), Real(0));
        for (size_t j = 1; j <= k; ++j) {
            std::vector<Real> nxt(n, Real(0));
            for (size_t s = 0; s < n; ++s) {
                if (pw[s] == Real(0)) continue;
                for (size_t t = 1; s + t < n; ++t) {
                    if (b[t] == Real(0)) continue;
                    nxt[s + t] += pw[s] * b[t];
                }
            }
            pw.swap(nxt);
            if (j >= 2)
                for (size_t s = 0; s < n; ++s) comp[s] += a[j] * pw[s];
        }
        b[k] = -comp[k] / a[1];
    }
    SeriesT<Real> w(G.c[0], std::vector<Real>(n, Real(0)));
    w.c[0] = G.base;
    for (size_t j = 1; j < n; ++j) w.c[j] = b[j];
    return w;
}

} // namespace ftau
