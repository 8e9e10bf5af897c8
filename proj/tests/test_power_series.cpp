#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ftau/power_series.hpp"

using namespace ftau;

namespace {

Series make(double base, std::vector<double> c) { return Series(base, std::move(c)); }

double max_coeff_diff(const Series& a, const std::vector<double>& want) {
    REQUIRE(a.c.size() == want.size());
    double m = 0;
    for (size_t j = 0; j < want.size(); ++j) m = std::max(m, std::fabs(a.c[j] - want[j]));
    return m;
}

} // namespace

TEST_CASE("arithmetic: (1+x)(1-x) = 1 - x^2") {
    Series p = make(0.0, {1, 1, 0});
    Series q = make(0.0, {1, -1, 0});
    Series r = series_mul(p, q);
    CHECK(max_coeff_diff(r, {1, 0, -1}) == 0.0);
}

TEST_CASE("arithmetic: 1/(1-x) is the geometric series") {
    Series one = make(0.0, {1, 0, 0, 0});
    Series den = make(0.0, {1, -1, 0, 0});
    Series r = series_div(one, den);
    CHECK(max_coeff_diff(r, {1, 1, 1, 1}) == 0.0);
}

TEST_CASE("arithmetic: division round trip on random series") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        int ord = 6;
        Series a(0.5, std::vector<double>(ord + 1)), b = a;
        for (int j = 0; j <= ord; ++j) {
            a.c[j] = U(rng);
            b.c[j] = U(rng);
        }
        b.c[0] = 1.0 + std::fabs(U(rng)); // keep the divisor away from zero
        Series q = series_arith(a, b, ArithOp::div);
        Series back = series_mul(q, b);
        CHECK(max_coeff_diff(back, a.c) < 1e-12);
    }
}

TEST_CASE("arithmetic errors") {
    Series a = make(0.0, {1, 2, 3});
    Series zero_const = make(0.0, {0, 1, 1});
    CHECK_THROWS_AS(series_div(a, zero_const), singular_series_error);
    Series wrong_base = make(1.0, {1, 2, 3});
    CHECK_THROWS_AS(series_add(a, wrong_base), contract_violation);
    Series wrong_order = make(0.0, {1, 2});
    CHECK_THROWS_AS(series_mul(a, wrong_order), contract_violation);
}

TEST_CASE("composition with the identity is the identity") {
    Series outer = series_elementary<double>(Elementary::exp, 0.3, 6);
    Series inner = make(0.0, {0.3, 1, 0, 0, 0, 0, 0});
    Series r = series_compose(outer, inner);
    CHECK(max_coeff_diff(r, outer.c) < 1e-15);
}

TEST_CASE("composition: arctan(2x) doubles each power") {
    int ord = 7;
    Series outer = series_elementary<double>(Elementary::arctan, 0.0, ord);
    Series inner(0.0, std::vector<double>(ord + 1, 0.0));
    inner.c[1] = 2.0;
    Series r = series_compose(outer, inner);
    for (int j = 0; j <= ord; ++j)
        CHECK(std::fabs(r.c[j] - outer.c[j] * std::pow(2.0, j)) < 1e-14);
}

TEST_CASE("composition rejects a mismatched expansion point") {
    Series outer = series_elementary<double>(Elementary::exp, 1.0, 4);
    Series inner = make(0.0, {0.0, 1, 0, 0, 0});
    CHECK_THROWS_AS(series_compose(outer, inner), contract_violation);
}

TEST_CASE("elementary series at the origin") {
    Series at = series_elementary<double>(Elementary::arctan, 0.0, 5);
    CHECK(max_coeff_diff(at, {0, 1, 0, -1.0 / 3.0, 0, 0.2}) < 1e-15);

    Series cs = series_elementary<double>(Elementary::cos, 0.0, 4);
    CHECK(max_coeff_diff(cs, {1, 0, -0.5, 0, 1.0 / 24.0}) < 1e-15);

    Series sn = series_elementary<double>(Elementary::sin, 0.0, 5);
    CHECK(max_coeff_diff(sn, {0, 1, 0, -1.0 / 6.0, 0, 1.0 / 120.0}) < 1e-15);

    Series ln = series_elementary<double>(Elementary::ln1p, 0.0, 4);
    CHECK(max_coeff_diff(ln, {0, 1, -0.5, 1.0 / 3.0, -0.25}) < 1e-15);

    Series pw = series_elementary<double>(Elementary::pow_alpha, 0.0, 2, 1.0 / 3.0);
    CHECK(max_coeff_diff(pw, {1, 1.0 / 3.0, -1.0 / 9.0}) < 1e-15);
}

TEST_CASE("arctan series has odd, sign-alternating support") {
    Series at = series_elementary<double>(Elementary::arctan, 0.0, 11);
    for (int j = 0; j <= 11; ++j) {
        if (j % 2 == 0) {
            CHECK(at.c[j] == 0.0);
        } else {
            int k = (j - 1) / 2;
            double want = (k % 2 ? -1.0 : 1.0) / double(j);
            CHECK(std::fabs(at.c[j] - want) < 1e-16);
        }
    }
}

TEST_CASE("elementary series about a shifted center match finite differences of the function") {
    struct Probe {
        Elementary f;
        double center, alpha;
        double (*fn)(double, double);
    };
    std::vector<Probe> probes = {
        {Elementary::arctan, 0.7, 0, [](double x, double) { return std::atan(x); }},
        {Elementary::sin, -0.4, 0, [](double x, double) { return std::sin(x); }},
        {Elementary::cos, 1.1, 0, [](double x, double) { return std::cos(x); }},
        {Elementary::ln1p, 0.5, 0, [](double x, double) { return std::log1p(x); }},
        {Elementary::exp, -0.2, 0, [](double x, double) { return std::exp(x); }},
        {Elementary::pow_alpha, 0.3, -1.7,
         [](double x, double al) { return std::pow(1.0 + x, al); }},
    };
    for (const auto& p : probes) {
        Series s = series_elementary<double>(p.f, p.center, 8, p.alpha);
        for (double h : {1e-2, 3e-3, -2e-3}) {
            double got = s.eval(p.center + h);
            double want = p.fn(p.center + h, p.alpha);
            CHECK(std::fabs(got - want) < 1e-12);
        }
    }
}

TEST_CASE("derivative and antiderivative invert each other") {
    Series a = make(0.2, {3.0, -1.5, 0.25, 2.0, -0.75});
    Series d = series_derivative(a);
    CHECK(max_coeff_diff(d, {-1.5, 0.5, 6.0, -3.0, 0.0}) < 1e-15);
    Series back = series_antiderivative(d, a.c[0]);
    CHECK(max_coeff_diff(back, a.c) < 1e-15);
}

TEST_CASE("series inversion: w^3 - 1 about w0 = 1 gives binomial coefficients") {
    // G(1 + x) - G(1) = 3x + 3x^2 + x^3, so w(xi) = (1 + xi)^{1/3}.
    Series G = make(1.0, {0.0, 3.0, 3.0, 1.0});
    Series w = invert_series(G, 6);
    CHECK(w.base == 0.0);
    CHECK(w.c[0] == 1.0);
    double coef = 1.0, alpha = 1.0 / 3.0;
    for (int j = 0; j <= 6; ++j) {
        CHECK(std::fabs(w.c[j] - coef) <= 1e-12 * std::max(1.0, std::fabs(coef)));
        coef *= (alpha - j) / double(j + 1);
    }
}

TEST_CASE("series inversion: leading coefficient is 1/G'(w0)") {
    Series G = make(2.0, {5.0, -0.8, 0.3, 0.1, 0.0});
    Series w = invert_series(G, 4);
    CHECK(w.base == 5.0);
    CHECK(w.c[0] == 2.0);
    CHECK(std::fabs(w.c[1] - 1.0 / (-0.8)) < 1e-15);
}

TEST_CASE("series inversion round trip on a fixed quintic") {
    Series G = make(-0.5, {1.25, 1.7, -0.4, 0.09, 0.22, -0.05});
    Series w = invert_series(G, 5);
    Series comp = series_compose(G, w); // G(w(xi)) should be xi
    CHECK(std::fabs(comp.c[0] - G.c[0]) < 1e-10);
    CHECK(std::fabs(comp.c[1] - 1.0) < 1e-10);
    for (int j = 2; j <= 5; ++j) CHECK(std::fabs(comp.c[j]) < 1e-10);
}

TEST_CASE("series inversion round trip on random analytic germs") {
    std::mt19937 rng(98765);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int ord = 8;
    for (int trial = 0; trial < 200; ++trial) {
        Series G(2.0 * U(rng), std::vector<double>(ord + 1));
        G.c[0] = 2.0 * U(rng);
        double slope = 0.1 + 1.9 * std::fabs(U(rng));
        G.c[1] = (U(rng) < 0 ? -slope : slope);
        double decay = 1.0;
        for (int j = 2; j <= ord; ++j) {
            decay *= 0.6; // keep the germ comfortably analytic
            G.c[j] = U(rng) * decay;
        }
        Series w = invert_series(G, ord);
        Series comp = series_compose(G, w);
        double err = std::fabs(comp.c[0] - G.c[0]);
        err = std::max(err, std::fabs(comp.c[1] - 1.0));
        for (int j = 2; j <= ord; ++j) err = std::max(err, std::fabs(comp.c[j]));
        // Roundoff scale: repeat the composition on absolute-valued coefficients.
        // Near-critical slopes inflate the inverse coefficients like (1/slope)^j,
        // and the round trip cancels those magnitudes down to ~eps relative error.
        Series Gabs = G, wabs = w;
        for (auto& v : Gabs.c) v = std::fabs(v);
        for (size_t j = 1; j < wabs.c.size(); ++j) wabs.c[j] = std::fabs(wabs.c[j]);
        Series bound = series_compose(Gabs, wabs);
        double mag = 1.0;
        for (double v : bound.c) mag = std::max(mag, std::fabs(v));
        CHECK(err < 1e-12 * mag);
    }
}

TEST_CASE("series inversion errors") {
    Series flat = make(0.0, {1.0, 0.0, 2.0});
    CHECK_THROWS_AS(invert_series(flat, 2), critical_point_error);
    Series ok = make(0.0, {1.0, 1.0, 2.0});
    CHECK_THROWS_AS(invert_series(ok, 0), contract_violation);
}

TEST_CASE("template instantiation in extended precision") {
    using LD = long double;
    SeriesT<LD> G(LD(1), {LD(0), LD(3), LD(3), LD(1)});
    SeriesT<LD> w = invert_series(G, 10);
    LD coef = 1, alpha = LD(1) / LD(3);
    for (int j = 0; j <= 10; ++j) {
        CHECK(std::fabs(double(w.c[j] - coef)) < 1e-16 * std::max(1.0, std::fabs(double(coef))));
        coef *= (alpha - j) / LD(j + 1);
    }
}
