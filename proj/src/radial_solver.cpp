#include "ftau/radial_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/float128.hpp>

#include "ftau/errors.hpp"
#include "ftau/numerics.hpp"

namespace ftau {
namespace {

using boost::multiprecision::float128;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

template <class Real>
Real ipow(Real base, int e) {
    Real r(1);
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

double eval_G(Case kind, bool izero, int n, double Cn, double q, double w) {
    switch (kind) {
    case Case::MA: return ipow(w, n) - Cn;
    case Case::Small: return Cn * ipow(w, n) - ipow(w - 1.0, n);
    case Case::Inverse:
        if (izero) {
            double m = std::pow(std::abs(w), n - 1);
            return w < 0 ? -m : m;
        }
        return ipow(w, n) - n * ipow(w, n - 1);
    case Case::Large:
    case Case::SPL: {
        double psi = n * std::atan(w) + q;
        return std::pow(w * w + 1.0, 0.5 * n) * std::sin(psi);
    }
    }
    throw contract_violation("eval_G: bad case");
}

double eval_dG(Case kind, bool izero, int n, double Cn, double q, double w) {
    switch (kind) {
    case Case::MA: return n * ipow(w, n - 1);
    case Case::Small: return n * (Cn * ipow(w, n - 1) - ipow(w - 1.0, n - 1));
    case Case::Inverse:
        if (izero) return (n - 1) * std::pow(std::abs(w), n - 2);
        return n * ipow(w, n - 2) * (w - (n - 1));
    case Case::Large:
    case Case::SPL: {
        double psi = n * std::atan(w) + q;
        return n * std::pow(w * w + 1.0, 0.5 * n - 1.0) * (w * std::sin(psi) + std::cos(psi));
    }
    }
    throw contract_violation("eval_dG: bad case");
}

double default_q(const FirstIntegral& fi) {
    if (fi.op.kind == Case::Large) return -fi.Cn - fi.n * kPi / 4.0;
    if (fi.op.kind == Case::SPL) return -fi.Cn;
    return 0.0;
}

void check_same_op(const Branch& br, const Operator& op) {
    const Operator& o = br.fi.op;
    if (o.kind != op.kind || o.n != op.n || std::abs(o.tau - op.tau) > 1e-12 ||
        std::abs(o.C0 - op.C0) > 1e-12 * (1.0 + std::abs(op.C0)))
        throw contract_violation("operator does not match the branch's first integral");
}

std::pair<double, double> output_affine(const FirstIntegral& fi) {
    if (fi.sign_flipped) return {-fi.alpha - 2.0 * fi.op.a, -fi.beta};
    return {fi.alpha, fi.beta};
}

// -1: xi below xi_lo, +1: above xi_hi, 0: inside the closed interval.
int side_of_range(const Branch& br, double xi) {
    if (xi < br.xi_lo) return -1;
    if (xi > br.xi_hi) return +1;
    return 0;
}

[[noreturn]] void throw_range(const Branch& br, double xi, int side, const char* what) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << xi << " outside branch p=" << br.p << " range [" << br.xi_lo_name
       << ", " << br.xi_hi_name << "] = [" << br.xi_lo << ", " << br.xi_hi << "]; violates "
       << (side < 0 ? br.xi_lo_name : br.xi_hi_name) << " = "
       << (side < 0 ? br.xi_lo : br.xi_hi);
    throw range_error(os.str());
}

Branch base_branch(const FirstIntegral& fi) {
    Branch b;
    b.fi = fi;
    return b;
}

// Shared exact-model evaluator for one branch: shifted first integral
// g(d) = G(w0 + d) - G(w0) in cancellation-free form, its inverse series
// about xi = 0, and a Newton solver for d(xi). Instantiated for double
// (solution evaluators) and float128 (remainder measurements).
template <class Real>
struct Core {
    Branch br;
    Case kind = Case::MA;
    bool izero = false;
    bool trig = false;
    int n = 3;
    Real Cn{0};
    Real q{0};
    int k0 = 0;
    int sgn_k0 = 1;
    Real w0{0};
    Real half_n{0};
    std::vector<Real> gk;        // g(d) = sum_{k>=1} gk[k] d^k for polynomial kinds
    double rad = kInf;           // min |finite xi endpoint|: series trust region
    std::vector<double> seed_c;  // double inverse-series coefficients (Newton seeds)

    explicit Core(const Branch& b) : br(b) {
        using std::acos;
        using std::pow;
        using std::tan;
        kind = b.fi.op.kind;
        izero = b.fi.inverse_zero;
        trig = (kind == Case::Large || kind == Case::SPL);
        n = b.fi.n;
        Cn = Real(b.fi.Cn);
        half_n = Real(n) / 2;
        if (trig) {
            q = Real(b.trig_q);
            k0 = b.trig_k0;
            sgn_k0 = (k0 % 2 == 0) ? 1 : -1;
            const Real PI = acos(Real(-1));
            w0 = tan((Real(k0) * PI - q) / Real(n));
        } else if (izero || !b.analytic_at_zero) {
            w0 = Real(0);
        } else if (kind == Case::MA) {
            w0 = pow(Cn, Real(1) / Real(n));
        } else if (kind == Case::Small) {
            w0 = Real(1) / (Real(1) - pow(Cn, Real(1) / Real(n)));
        } else {
            w0 = Real(n); // Inverse p = 1
        }
        if (!trig && !izero) {
            gk.assign(size_t(n) + 1, Real(0));
            for (int k = 1; k <= n; ++k) {
                Real bk = Real(binom(n, k));
                if (kind == Case::MA) {
                    gk[k] = bk * ipow(w0, n - k);
                } else if (kind == Case::Small) {
                    gk[k] = bk * (Cn * ipow(w0, n - k) - ipow(w0 - Real(1), n - k));
                } else {
                    gk[k] = bk * ipow(w0, n - k);
                    if (k <= n - 1) gk[k] -= Real(n) * Real(binom(n - 1, k)) * ipow(w0, n - 1 - k);
                }
            }
        }
        double rl = std::isfinite(br.xi_lo) ? std::abs(br.xi_lo) : kInf;
        double rh = std::isfinite(br.xi_hi) ? std::abs(br.xi_hi) : kInf;
        rad = std::min(rl, rh);
        if (br.analytic_at_zero) {
            auto ws = inverse_series(10);
            seed_c.resize(ws.c.size());
            for (size_t j = 0; j < ws.c.size(); ++j) seed_c[j] = double(ws.c[j]);
        }
    }

    Real g(Real d) const {
        using std::atan;
        using std::fabs;
        using std::pow;
        using std::sin;
        if (trig) {
            Real ww = w0 + d;
            Real aD = atan(d / (Real(1) + w0 * ww));
            return Real(sgn_k0) * pow(ww * ww + Real(1), half_n) * sin(Real(n) * aD);
        }
        if (izero) {
            Real m = pow(fabs(d), Real(n - 1));
            return d < Real(0) ? -m : m;
        }
        Real acc(0);
        for (int k = n; k >= 1; --k) acc = acc * d + gk[k];
        return acc * d;
    }

    Real dg(Real d) const {
        using std::atan;
        using std::cos;
        using std::fabs;
        using std::pow;
        using std::sin;
        if (trig) {
            Real ww = w0 + d;
            Real aD = atan(d / (Real(1) + w0 * ww));
            Real ps = Real(n) * aD;
            return Real(sgn_k0) * Real(n) * pow(ww * ww + Real(1), half_n - Real(1)) *
                   (ww * sin(ps) + cos(ps));
        }
        if (izero) return Real(n - 1) * pow(fabs(d), Real(n - 2));
        Real acc(0);
        for (int k = n; k >= 1; --k) acc = acc * d + Real(k) * gk[k];
        return acc;
    }

    // Solve g(d) = xi on the branch to full working precision.
    Real delta(Real xi) const {
        using std::fabs;
        using std::pow;
        if (xi == Real(0)) return Real(0);
        if (izero) {
            Real m = pow(fabs(xi), Real(1) / Real(n - 1));
            return xi < Real(0) ? -m : m;
        }
        double xid = double(xi);
        double seed;
        if (!seed_c.empty() && std::abs(xid) <= 0.5 * rad) {
            double acc = 0.0;
            for (size_t j = seed_c.size(); j-- > 1;) acc = acc * xid + seed_c[j];
            seed = acc * xid;
        } else if (!br.analytic_at_zero) {
            double wside = (br.w_lo >= 0.0 || br.w_hi > 0.0) ? 1.0 : -1.0;
            seed = wside * std::pow(std::abs(xid) / n, 1.0 / (n - 1));
        } else {
            double xc = std::min(std::max(xid, br.xi_lo), br.xi_hi);
            seed = invert_numeric(br, xc) - double(w0);
        }
        Real lo = std::isfinite(br.w_lo) ? Real(br.w_lo) - w0 : -Real(kInf);
        Real hi = std::isfinite(br.w_hi) ? Real(br.w_hi) - w0 : Real(kInf);
        Real d(seed);
        const Real eps = std::numeric_limits<Real>::epsilon();
        for (int it = 0; it < 80; ++it) {
            Real fv = g(d) - xi;
            if (fv == Real(0)) break;
            Real gp = dg(d);
            if (gp == Real(0)) {
                d = (d == Real(0)) ? Real(1e-30) : d * Real(1.0000001);
                continue;
            }
            Real dn = d - fv / gp;
            if (dn <= lo) dn = (d + lo) / 2;
            if (dn >= hi) dn = (d + hi) / 2;
            Real ch = fabs(dn - d);
            d = dn;
            if (ch <= Real(8) * eps * fabs(d)) break;
        }
        return d;
    }

    // Taylor series of w(xi) = w0 + d(xi) about xi = 0 (analytic branches).
    SeriesT<Real> inverse_series(int order) const {
        using std::pow;
        if (!br.analytic_at_zero)
            throw critical_point_error("inverse series requires a branch analytic at xi = 0");
        SeriesT<Real> gs(w0, std::vector<Real>(size_t(order) + 1, Real(0)));
        if (!trig) {
            for (int k = 1; k <= std::min(order, n); ++k) gs.c[k] = gk[k];
        } else {
            SeriesT<Real> A = series_elementary<Real>(Elementary::arctan, w0, order);
            SeriesT<Real> arg = series_scale(A, Real(n));
            arg.c[0] = Real(0);
            SeriesT<Real> souter = series_elementary<Real>(Elementary::sin, Real(0), order);
            SeriesT<Real> sin_arg = series_compose(souter, arg);
            SeriesT<Real> uin(w0, std::vector<Real>(size_t(order) + 1, Real(0)));
            Real den = Real(1) + w0 * w0;
            if (order >= 1) uin.c[1] = Real(2) * w0 / den;
            if (order >= 2) uin.c[2] = Real(1) / den;
            SeriesT<Real> pw = series_elementary<Real>(Elementary::pow_alpha, Real(0), order, half_n);
            SeriesT<Real> P = series_scale(series_compose(pw, uin), pow(den, half_n));
            gs = series_scale(series_mul(P, sin_arg), Real(sgn_k0));
            gs.c[0] = Real(0);
        }
        return invert_series(gs, order);
    }
};

double remainder_slope_impl(const Branch& br, const Operator& op, double c, int J, double r_lo,
                            double r_hi, int npts, int k_pert, double rel) {
    check_same_op(br, op);
    if (J < 1) throw contract_violation("remainder slope: J must be >= 1");
    if (!br.analytic_at_zero)
        throw critical_point_error("remainder slope requires a branch analytic at xi = 0");
    if (!(r_lo > 1.0) || !(r_hi > r_lo))
        throw domain_error("remainder slope: need 1 < r_lo < r_hi");
    if (c == 0.0) throw domain_error("remainder slope: need c != 0");
    if (npts < 4) throw contract_violation("remainder slope: need npts >= 4");
    using Q = float128;
    Core<Q> core(br);
    auto ws = core.inverse_series(std::max(J + 2, 10));
    auto ab = output_affine(br.fi);
    const int nn = br.fi.n;
    Q beQ(ab.second), cQ(c);
    Q ex = -Q(2) / nn - Q(1);
    auto bracket = [&](Q s) -> Q {
        using std::pow;
        if (s <= Q(0)) return Q(0);
        Q xi = cQ * s;
        Q d = core.delta(xi);
        Q acc(0);
        for (int j = J; j >= 1; --j) acc = acc * xi + ws.c[j];
        return (d - acc * xi) * pow(s, ex);
    };
    auto rs = num::log_grid(r_lo, r_hi, npts);
    std::vector<double> mags;
    mags.reserve(rs.size());
    for (double r : rs) {
        using std::pow;
        Q sr = pow(Q(r), -nn);
        Q err(0);
        Q I = boost::math::quadrature::gauss_kronrod<Q, 15>::integrate(bracket, Q(0), sr, 12,
                                                                       Q(1e-12), &err);
        Q R = -(beQ / nn) * I;
        if (k_pert > 0) {
            Q cm = beQ * ws.c[k_pert] / (Q(2) - Q(nn) * Q(k_pert));
            R -= Q(rel) * cm * pow(cQ, k_pert) * pow(Q(r), Q(2) - Q(nn) * Q(k_pert));
        }
        mags.push_back(std::abs(double(R)));
    }
    return num::fit_loglog(rs, mags).slope;
}

} // namespace

double FirstIntegral::G(double w) const {
    return eval_G(op.kind, inverse_zero, n, Cn, default_q(*this), w);
}

double FirstIntegral::dG(double w) const {
    return eval_dG(op.kind, inverse_zero, n, Cn, default_q(*this), w);
}

double Branch::G(double w) const {
    return eval_G(fi.op.kind, fi.inverse_zero, fi.n, fi.Cn, trig_q, w);
}

double Branch::dG(double w) const {
    return eval_dG(fi.op.kind, fi.inverse_zero, fi.n, fi.Cn, trig_q, w);
}

FirstIntegral build_first_integral(const Operator& op) {
    FirstIntegral fi;
    fi.op = op;
    fi.n = op.n;
    switch (op.kind) {
    case Case::MA:
        fi.Cn = op.Cprime;
        fi.alpha = 0.0;
        fi.beta = 1.0;
        fi.w_singularities = {0.0};
        fi.description = "G(w) = w^n - C' with w = u'/r";
        break;
    case Case::Small: {
        double Cp = op.Cprime;
        if (std::abs(Cp - 1.0) <= 1e-14)
            throw no_solution_error(
                "C0 = 0 gives C' = 1: no exterior radial solution exists in this regime");
        fi.sign_flipped = (Cp > 1.0);
        fi.Cn = fi.sign_flipped ? 1.0 / Cp : Cp;
        fi.alpha = -(op.a + op.b);
        fi.beta = 2.0 * op.b;
        fi.w_singularities = {1.0 / (1.0 - std::pow(fi.Cn, 1.0 / (op.n - 1)))};
        fi.description = std::string("G(w) = C' w^n - (w-1)^n with w = (u'/r + a + b)/(2b)") +
                         (fi.sign_flipped ? "; solved via ubar = -u - a|x|^2, mapped back on output"
                                          : "");
        break;
    }
    case Case::Inverse:
        if (std::abs(op.Cprime) <= 1e-14) {
            fi.inverse_zero = true;
            fi.Cn = 0.0;
            fi.alpha = -1.0;
            fi.beta = 1.0;
            fi.w_singularities = {0.0};
            fi.description = "G(w) = sign(w)|w|^{n-1} with w = u'/r + 1 (degenerate C' = 0)";
        } else {
            fi.Cn = 1.0;
            fi.alpha = -1.0;
            fi.beta = 1.0 / op.Cprime;
            fi.w_singularities = {0.0, double(op.n - 1)};
            fi.description = "G(w) = w^n - n w^{n-1} with w = C'(u'/r + 1), normalized to C' = 1";
        }
        break;
    case Case::Large:
        fi.Cn = op.Cprime;
        fi.alpha = -op.a;
        fi.beta = op.b;
        fi.w_singularities = {-1.0};
        fi.description = "G(w) = (w^2+1)^{n/2} sin(n arctan w + q) with w = (u'/r + a)/b";
        break;
    case Case::SPL:
        fi.Cn = op.C0;
        fi.alpha = 0.0;
        fi.beta = 1.0;
        fi.description = "G(w) = (w^2+1)^{n/2} sin(n arctan w - C0) with w = u'/r";
        break;
    }
    return fi;
}

std::vector<Branch> branch_catalog(const FirstIntegral& fi) {
    const int n = fi.n;
    std::vector<Branch> out;
    switch (fi.op.kind) {
    case Case::MA: {
        Branch b = base_branch(fi);
        b.p = 1;
        b.w_lo = 0.0;
        b.w_hi = kInf;
        b.xi_lo = -fi.Cn;
        b.xi_hi = kInf;
        b.xi_lo_name = "-C'";
        b.xi_hi_name = "+inf";
        b.has_w_at_zero = true;
        b.w_at_zero = std::pow(fi.Cn, 1.0 / n);
        b.analytic_at_zero = true;
        b.increasing = true;
        b.tagged = true;
        out.push_back(b);
        break;
    }
    case Case::Small: {
        Branch b = base_branch(fi);
        b.p = 1;
        double wc = 1.0 / (1.0 - std::pow(fi.Cn, 1.0 / (n - 1)));
        b.w_lo = wc;
        b.w_hi = kInf;
        b.xi_lo = -kInf;
        b.xi_hi = fi.Cn * ipow(wc, n - 1); // = G(wc) at the critical point
        b.xi_lo_name = "-inf";
        b.xi_hi_name = "Xi_1";
        b.has_w_at_zero = true;
        b.w_at_zero = 1.0 / (1.0 - std::pow(fi.Cn, 1.0 / n));
        b.analytic_at_zero = true;
        b.increasing = false;
        b.tagged = true;
        out.push_back(b);
        break;
    }
    case Case::Inverse: {
        if (fi.inverse_zero) {
            Branch b1 = base_branch(fi);
            b1.p = 1;
            b1.w_lo = 0.0;
            b1.w_hi = kInf;
            b1.xi_lo = 0.0;
            b1.xi_hi = kInf;
            b1.xi_lo_name = "0";
            b1.xi_hi_name = "+inf";
            b1.has_w_at_zero = true;
            b1.w_at_zero = 0.0;
            b1.analytic_at_zero = false;
            b1.increasing = true;
            b1.tagged = true;
            out.push_back(b1);
            Branch b2 = base_branch(fi);
            b2.p = 2;
            b2.w_lo = -kInf;
            b2.w_hi = 0.0;
            b2.xi_lo = -kInf;
            b2.xi_hi = 0.0;
            b2.xi_lo_name = "-inf";
            b2.xi_hi_name = "0";
            b2.has_w_at_zero = true;
            b2.w_at_zero = 0.0;
            b2.analytic_at_zero = false;
            b2.increasing = true;
            out.push_back(b2);
            break;
        }
        double Xi1 = -ipow(double(n - 1), n - 1);
        Branch b1 = base_branch(fi);
        b1.p = 1;
        b1.w_lo = double(n - 1);
        b1.w_hi = kInf;
        b1.xi_lo = Xi1;
        b1.xi_hi = kInf;
        b1.xi_lo_name = "Xi_1";
        b1.xi_hi_name = "+inf";
        b1.has_w_at_zero = true;
        b1.w_at_zero = double(n);
        b1.analytic_at_zero = true;
        b1.increasing = true;
        b1.tagged = true;
        out.push_back(b1);
        Branch b2 = base_branch(fi);
        b2.p = 2;
        b2.w_lo = 0.0;
        b2.w_hi = double(n - 1);
        b2.xi_lo = Xi1;
        b2.xi_hi = 0.0;
        b2.xi_lo_name = "Xi_1";
        b2.xi_hi_name = "0";
        b2.has_w_at_zero = true;
        b2.w_at_zero = 0.0;
        b2.analytic_at_zero = false;
        b2.increasing = false;
        out.push_back(b2);
        Branch b3 = base_branch(fi);
        b3.p = 3;
        b3.w_lo = -kInf;
        b3.w_hi = 0.0;
        b3.has_w_at_zero = true;
        b3.w_at_zero = 0.0;
        b3.analytic_at_zero = false;
        if (n % 2 == 1) {
            b3.increasing = true;
            b3.xi_lo = -kInf;
            b3.xi_hi = 0.0;
            b3.xi_lo_name = "-inf";
            b3.xi_hi_name = "0";
        } else {
            b3.increasing = false;
            b3.xi_lo = 0.0;
            b3.xi_hi = kInf;
            b3.xi_lo_name = "0";
            b3.xi_hi_name = "+inf";
        }
        out.push_back(b3);
        break;
    }
    case Case::Large: {
        const double C = fi.Cn;
        const double tol = 1e-12;
        bool p2a = std::abs(C + (n - 2) * kPi / 2) <= tol; // C' = -(n-2)pi/2
        bool p2b = std::abs(C - (n - 2) * kPi / 2) <= tol; // C' = +(n-2)pi/2
        if (std::abs(C - n * kPi / 4) > tol) {
            Branch b = base_branch(fi);
            b.p = 1;
            b.has_w_at_zero = true;
            b.w_at_zero = std::tan(kPi / 4 + C / n);
            b.analytic_at_zero = true;
            b.tagged = true;
            if (C < n * kPi / 4) {
                // w > -1 family, increasing
                b.trig_q = -C - n * kPi / 4;
                b.trig_k0 = 0;
                b.increasing = true;
                if (C < -(2 * n - 3) * kPi / 4) {
                    b.w_lo = -1.0;
                    b.xi_lo = -std::pow(2.0, 0.5 * n) * std::sin(n * kPi / 2 + C);
                } else {
                    double phi = (C + (n - 2) * kPi / 4) / (n - 1);
                    b.w_lo = std::tan(phi);
                    b.xi_lo = -std::pow(std::abs(1.0 / std::cos(phi)), n - 1);
                }
                b.xi_lo_name = "Xi_1";
                if (C < (n - 3) * kPi / 4) {
                    double phi = (C + (n + 1) * kPi / 4) / (n - 1);
                    b.w_hi = std::tan(phi);
                    b.xi_hi = 0.5 * std::sqrt(2.0) * std::pow(std::abs(1.0 / std::cos(phi)), n - 1) *
                              (std::tan(phi) + 1.0);
                    b.xi_hi_name = "Xi_2";
                } else {
                    b.w_hi = kInf;
                    b.xi_hi = kInf;
                    b.xi_hi_name = "+inf";
                }
            } else {
                // w < -1 family, decreasing
                b.trig_q = -C + (3 * n - 4) * kPi / 4;
                b.trig_k0 = -1;
                b.increasing = false;
                if (C > n * kPi / 2 - kPi / 4) {
                    b.w_hi = -1.0;
                    b.xi_lo = -std::pow(2.0, 0.5 * n) * std::sin(C - (n - 2) * kPi / 2);
                } else {
                    double phi = (C - (3 * n - 2) * kPi / 4) / (n - 1);
                    b.w_hi = std::tan(phi);
                    b.xi_lo = -std::pow(std::abs(1.0 / std::cos(phi)), n - 1);
                }
                b.xi_lo_name = "Xi_1";
                if (C <= (n + 1) * kPi / 4) {
                    b.w_lo = -kInf;
                    b.xi_hi = kInf;
                    b.xi_hi_name = "+inf";
                } else {
                    double phi = (C - (3 * n - 1) * kPi / 4) / (n - 1);
                    b.w_lo = std::tan(phi);
                    b.xi_hi = -0.5 * std::sqrt(2.0) * std::pow(std::abs(1.0 / std::cos(phi)), n - 1) *
                              (std::tan(phi) + 1.0);
                    b.xi_hi_name = "Xi_2";
                }
            }
            out.push_back(b);
        }
        if (p2a) {
            Branch b = base_branch(fi);
            b.p = 2;
            b.trig_q = -C - n * kPi / 4;
            b.trig_k0 = -1;
            b.increasing = false;
            b.w_lo = -1.0;
            b.w_hi = std::tan(-(n - 2) * kPi / (4.0 * (n - 1)));
            b.xi_lo = -std::pow(std::abs(1.0 / std::cos((n - 2) * kPi / (4.0 * (n - 1)))), n - 1);
            b.xi_hi = 0.0;
            b.xi_lo_name = "Xi_3";
            b.xi_hi_name = "0";
            b.has_w_at_zero = true;
            b.w_at_zero = -1.0;
            b.analytic_at_zero = true; // analytic continuation across w = -1
            if (out.empty()) b.tagged = true;
            out.push_back(b);
        }
        if (p2b) {
            Branch b = base_branch(fi);
            b.p = 2;
            b.trig_q = -C + (3 * n - 4) * kPi / 4;
            b.trig_k0 = 0;
            b.increasing = true;
            b.w_hi = -1.0;
            b.xi_hi = 0.0;
            b.xi_hi_name = "0";
            if (n <= 4) {
                b.w_lo = -kInf;
                b.xi_lo = -kInf;
                b.xi_lo_name = "-inf";
            } else {
                b.w_lo = std::tan(-(n + 2) * kPi / (4.0 * (n - 1)));
                b.xi_lo = -std::pow(std::abs(1.0 / std::cos((n + 2) * kPi / (4.0 * (n - 1)))), n - 1);
                b.xi_lo_name = "Xi_4";
            }
            b.has_w_at_zero = true;
            b.w_at_zero = -1.0;
            b.analytic_at_zero = true; // analytic continuation across w = -1
            if (out.empty()) b.tagged = true;
            out.push_back(b);
        }
        break;
    }
    case Case::SPL: {
        const double C = fi.Cn;
        Branch b = base_branch(fi);
        b.p = 1;
        b.trig_q = -C;
        b.trig_k0 = 0;
        b.increasing = true;
        if (C <= -(n - 2) * kPi / 2) {
            b.w_lo = -kInf;
            b.xi_lo = -kInf;
            b.xi_lo_name = "-inf";
        } else {
            double phi = (C - kPi / 2) / (n - 1);
            b.w_lo = std::tan(phi);
            b.xi_lo = -std::pow(std::abs(1.0 / std::cos(phi)), n - 1);
            b.xi_lo_name = "Xi_1";
        }
        if (C >= (n - 2) * kPi / 2) {
            b.w_hi = kInf;
            b.xi_hi = kInf;
            b.xi_hi_name = "+inf";
        } else {
            double phi = (C + kPi / 2) / (n - 1);
            b.w_hi = std::tan(phi);
            b.xi_hi = std::pow(std::abs(1.0 / std::cos(phi)), n - 1);
            b.xi_hi_name = "Xi_2";
        }
        b.has_w_at_zero = true;
        b.w_at_zero = std::tan(C / n);
        b.analytic_at_zero = true;
        b.tagged = true;
        out.push_back(b);
        break;
    }
    }
    return out;
}

const Branch& tagged_branch(const std::vector<Branch>& catalog) {
    for (const auto& b : catalog)
        if (b.tagged) return b;
    throw contract_violation("branch catalog contains no tagged branch");
}

double invert_numeric(const Branch& br, double xi) {
    if (!std::isfinite(xi)) throw domain_error("invert_numeric: xi must be finite");
    int side = side_of_range(br, xi);
    if (side != 0) throw_range(br, xi, side, "invert_numeric: xi");
    if (xi == br.xi_lo) return br.increasing ? br.w_lo : br.w_hi;
    if (xi == br.xi_hi) return br.increasing ? br.w_hi : br.w_lo;
    auto f = [&](double w) { return br.G(w) - xi; };
    const double ref = br.w_at_zero;
    // sign f must take at the w_lo end of the bracket
    double slo = br.increasing ? -1.0 : 1.0;
    double wa, wb;
    if (std::isfinite(br.w_lo)) {
        wa = br.w_lo;
    } else {
        double s = 1.0 + std::abs(ref);
        wa = ref - s;
        for (int guard = 0; slo * f(wa) < 0 && guard < 400; ++guard) {
            s *= 2;
            wa = ref - s;
        }
    }
    if (std::isfinite(br.w_hi)) {
        wb = br.w_hi;
    } else {
        double s = 1.0 + std::abs(ref);
        wb = ref + s;
        for (int guard = 0; slo * f(wb) > 0 && guard < 400; ++guard) {
            s *= 2;
            wb = ref + s;
        }
    }
    double w;
    try {
        w = num::solve_bracketed(f, wa, wb, 1e-15);
    } catch (const numerical_error&) {
        // endpoint rounding can spoil the bracket when xi sits within one ulp
        // of a branch endpoint; fall back to the closer endpoint and polish
        w = (std::abs(f(wa)) <= std::abs(f(wb))) ? wa : wb;
    }
    double fw = std::abs(br.G(w) - xi);
    for (int it = 0; it < 8 && fw > 0; ++it) {
        double gp = br.dG(w);
        if (gp == 0.0 || !std::isfinite(gp)) break;
        double wn = w - (br.G(w) - xi) / gp;
        wn = std::min(std::max(wn, std::min(wa, wb)), std::max(wa, wb));
        double fn = std::abs(br.G(wn) - xi);
        if (fn < fw) {
            w = wn;
            fw = fn;
        } else {
            break;
        }
    }
    if (!(fw <= 1e-9 * std::max(1.0, std::abs(xi))))
        throw numerical_error("invert_numeric: inversion did not converge");
    return w;
}

std::vector<double> inverse_series_at_zero(const Branch& br, int order) {
    if (order < 1) throw contract_violation("inverse_series_at_zero: order must be >= 1");
    if (!br.analytic_at_zero)
        throw critical_point_error("branch is not analytic at xi = 0 (fractional-power tail)");
    Core<double> core(br);
    return core.inverse_series(order).c;
}

double Expansion::eval(double r) const {
    double xi = c * std::pow(r, -double(n));
    double acc = 0.0;
    for (int j = J; j >= 1; --j) acc = acc * xi + tail_coeffs[size_t(j) - 1];
    return c2 * r * r + c0 + r * r * acc * xi;
}

Expansion expansion_coefficients(const Branch& br, const Operator& op, double c, int J) {
    check_same_op(br, op);
    if (J < 1) throw contract_violation("expansion_coefficients: J must be >= 1");
    auto wc = inverse_series_at_zero(br, J);
    auto ab = output_affine(br.fi);
    Expansion e;
    e.n = br.fi.n;
    e.c = c;
    e.J = J;
    e.c2 = 0.5 * (ab.first + ab.second * wc[0]);
    e.c0 = 0.0;
    e.tail_coeffs.resize(size_t(J));
    // c = 0 is the exact quadratic solution; report an identically zero tail.
    if (c != 0.0)
        for (int j = 1; j <= J; ++j)
            e.tail_coeffs[size_t(j) - 1] = ab.second * wc[size_t(j)] / (2.0 - double(br.fi.n) * j);
    return e;
}

double RadialSolution::W(double r) const {
    double xi = c * std::pow(r, -double(op.n));
    return invert_numeric(branch, xi);
}

double RadialSolution::du(double r) const { return r * (alpha + beta * W(r)); }

double RadialSolution::d2u(double r) const {
    double nn = double(op.n);
    double xi = c * std::pow(r, -nn);
    double w = invert_numeric(branch, xi);
    double base = alpha + beta * w;
    if (c == 0.0) return base;
    return base - nn * beta * xi / branch.dG(w);
}

// Tail integral in the substituted variable t = s^{1/n} = 1/r, which removes
// the algebraic endpoint singularity: -(1/n) int delta(c s) s^{-2/n-1} ds
// becomes -int delta(c t^n) t^{-3} dt, analytic at t = 0 on analytic branches.
static double tail_T(const Branch& br, double c, int n, double t_lo, double t_hi) {
    Core<double> core(br);
    double nn = double(n);
    auto f = [&](double t) -> double {
        if (t <= 0.0) return 0.0;
        return double(core.delta(c * std::pow(t, nn))) / (t * t * t);
    };
    // 1e-12 keeps the quadrature from chasing the ~2e-15 relative noise floor
    // of the Newton solves inside delta().
    double I = (t_hi >= t_lo) ? num::integrate(f, t_lo, t_hi, 1e-12)
                              : -num::integrate(f, t_hi, t_lo, 1e-12);
    return -I;
}

double RadialSolution::u(double r) const {
    double C2 = 0.5 * (alpha + beta * branch.w_at_zero);
    if (c == 0.0) return C2 * r * r + c0;
    double T = anchored_at_rmin ? tail_T(branch, c, op.n, 1.0 / r_min, 1.0 / r)
                                : tail_T(branch, c, op.n, 0.0, 1.0 / r);
    return C2 * r * r + c0 + beta * T;
}

double RadialSolution::tail(double r) const {
    if (anchored_at_rmin)
        throw contract_violation(
            "tail: branch is not analytic at infinity, no quadratic-plus-decay split");
    if (c == 0.0) return 0.0;
    return beta * tail_T(branch, c, op.n, 0.0, 1.0 / r);
}

double RadialSolution::first_integral_check(double r) const {
    double xi = c * std::pow(r, -double(op.n));
    double w = invert_numeric(branch, xi);
    return std::abs(branch.G(w) - xi) / std::max(1.0, std::abs(xi));
}

std::vector<double> RadialSolution::eigenvalues(double r) const {
    std::vector<double> lam(size_t(op.n), du(r) / r);
    lam[0] = d2u(r);
    return lam;
}

RadialSolution build_solution(const Branch& br, const Operator& op, double c, double c0,
                              double r_min) {
    check_same_op(br, op);
    if (!(r_min >= 1.0)) throw domain_error("build_solution: r_min must be >= 1");
    if (!std::isfinite(c) || !std::isfinite(c0))
        throw domain_error("build_solution: c and c0 must be finite");
    double xi_min = c * std::pow(r_min, -double(op.n));
    int side = side_of_range(br, xi_min);
    if (side != 0) throw_range(br, xi_min, side, "build_solution: c * r_min^{-n}");
    RadialSolution s;
    s.op = op;
    s.branch = br;
    s.c = c;
    s.c0 = c0;
    s.r_min = r_min;
    s.flipped = br.fi.sign_flipped;
    auto ab = output_affine(br.fi);
    s.alpha = ab.first;
    s.beta = ab.second;
    s.anchored_at_rmin = !br.analytic_at_zero;
    return s;
}

double measure_branch_exponent(const Branch& br) {
    Core<double> core(br);
    double side = (br.xi_hi > 1e-4) ? 1.0 : -1.0;
    auto ts = num::log_grid(1e-8, 1e-4, 9);
    std::vector<double> dws;
    dws.reserve(ts.size());
    for (double t : ts) dws.push_back(std::abs(core.delta(side * t)));
    return num::fit_loglog(ts, dws).slope;
}

double measure_remainder_slope(const Branch& br, const Operator& op, double c, int J, double r_lo,
                               double r_hi, int npts) {
    return remainder_slope_impl(br, op, c, J, r_lo, r_hi, npts, 0, 0.0);
}

double measure_remainder_slope_perturbed(const Branch& br, const Operator& op, double c, int J,
                                         double r_lo, double r_hi, int k, double rel, int npts) {
    if (k < 1 || k > J)
        throw contract_violation("perturbed remainder slope: need 1 <= k <= J");
    return remainder_slope_impl(br, op, c, J, r_lo, r_hi, npts, k, rel);
}

} // namespace ftau
