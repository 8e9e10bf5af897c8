#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ftau/operator_family.hpp"

using namespace ftau;

namespace {

constexpr double PI = 3.14159265358979323846;

// Central-difference gradient of evaluate_F in one eigenvalue slot.
double fd_partial(const Operator& op, std::vector<double> lam, int i, double h) {
    lam[i] += h;
    double fp = evaluate_F(op, lam);
    lam[i] -= 2 * h;
    double fm = evaluate_F(op, lam);
    return (fp - fm) / (2 * h);
}

Eigen::MatrixXd random_rotation(std::mt19937& rng, int n) {
    std::normal_distribution<double> N(0, 1);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = N(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ();
    if (Q.determinant() < 0) Q.col(0) *= -1;
    return Q;
}

} // namespace

TEST_CASE("make_operator classifies the five cases and fills derived constants") {
    Operator ma = make_operator(0.0, 3, 0.2);
    CHECK(ma.kind == Case::MA);
    CHECK(std::fabs(ma.Cprime - std::exp(3 * 0.2)) < 1e-15);
    CHECK_FALSE(ma.has_ab);

    Operator sm = make_operator(PI / 6, 3, -0.5);
    CHECK(sm.kind == Case::Small);
    CHECK(std::fabs(sm.a - std::sqrt(3.0)) < 1e-15);
    CHECK(std::fabs(sm.b - std::sqrt(2.0)) < 1e-15);
    CHECK(std::fabs(sm.Cprime - std::exp(2 * sm.b * -0.5 / 2.0)) < 1e-15);

    Operator lg = make_operator(PI / 3, 3, 1.0);
    CHECK(lg.kind == Case::Large);
    CHECK(std::fabs(lg.a - 1.0 / std::sqrt(3.0)) < 1e-15);
    CHECK(std::fabs(lg.b - std::sqrt(2.0 / 3.0)) < 1e-15);
    CHECK(std::fabs(lg.Cprime - lg.b * 1.0 / std::sqrt(lg.a * lg.a + 1.0)) < 1e-15);

    Operator inv = make_operator(PI / 4, 3, -3.0 * std::sqrt(2.0));
    CHECK(inv.kind == Case::Inverse);
    CHECK(std::fabs(inv.Cprime - 3.0) < 1e-14);

    Operator spl = make_operator(PI / 2, 3, 0.7);
    CHECK(spl.kind == Case::SPL);
    CHECK(spl.Cprime == 0.7);
}

TEST_CASE("make_operator Large case at tau = pi/3 matches closed-form a, b") {
    Operator op = make_operator(PI / 3, 3, 1.0);
    CHECK(std::fabs(op.a - 0.5773502691896258) < 1e-15);
    CHECK(std::fabs(op.b - 0.8164965809277260) < 1e-15);
}

TEST_CASE("make_operator rejects out-of-range inputs") {
    CHECK_THROWS_AS(make_operator(-0.1, 3, 0.0), domain_error);
    CHECK_THROWS_AS(make_operator(PI / 2 + 0.1, 3, 0.0), domain_error);
    CHECK_THROWS_AS(make_operator(0.0, 2, 0.0), domain_error);
    // SPL and Large constants must keep |C'| < n pi / 2.
    CHECK_THROWS_AS(make_operator(PI / 2, 3, 6.0 * PI), domain_error);
    CHECK_THROWS_AS(make_operator(PI / 3, 3, 12.0), domain_error);
}

TEST_CASE("evaluate_F closed-form spot values") {
    Operator spl = make_operator(PI / 2, 3, 0.0);
    CHECK(std::fabs(evaluate_F(spl, {1, 1, 1}) - 3 * PI / 4) < 1e-15);

    Operator ma = make_operator(0.0, 3, 0.0);
    CHECK(std::fabs(evaluate_F(ma, {1, 1, 1})) < 1e-15);
    CHECK(std::fabs(evaluate_F(ma, {2, 2, 2}) - std::log(2.0)) < 1e-15);

    Operator inv = make_operator(PI / 4, 3, 0.0);
    CHECK(std::fabs(evaluate_F(inv, {0, 0, 0}) + 3 * std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("evaluate_F domain errors identify the offending eigenvalue") {
    Operator ma = make_operator(0.0, 3, 0.0);
    CHECK_THROWS_AS(evaluate_F(ma, {1.0, -2.0, 1.0}), domain_error);
    CHECK_THROWS_AS(evaluate_F(ma, {1.0, 1.0}), contract_violation);

    Operator sm = make_operator(PI / 6, 3, -0.5);
    CHECK_THROWS_AS(evaluate_F(sm, {0.0, 1.0, -sm.a}), domain_error);

    Operator inv = make_operator(PI / 4, 3, 0.0);
    CHECK_THROWS_AS(evaluate_F(inv, {0.0, -1.0, 0.0}), domain_error);
}

TEST_CASE("gradient_F closed-form spot values") {
    Operator spl = make_operator(PI / 2, 3, 0.0);
    auto g = gradient_F(spl, {0, 0, 0});
    for (double gi : g) CHECK(gi == 1.0);

    Operator ma = make_operator(0.0, 3, 0.0);
    g = gradient_F(ma, {1, 1, 1});
    for (double gi : g) CHECK(std::fabs(gi - 1.0 / 3.0) < 1e-16);
}

TEST_CASE("gradient_F matches finite differences of evaluate_F in every case") {
    std::mt19937 rng(2026);
    std::uniform_real_distribution<double> U(0, 1);
    struct Sample {
        Operator op;
        double lo, hi;
    };
    std::vector<Sample> samples = {
        {make_operator(0.0, 3, 0.1), 0.2, 5.0},
        {make_operator(PI / 6, 3, -0.5), -std::sqrt(3.0) + std::sqrt(2.0) + 0.2, 4.0},
        {make_operator(PI / 4, 3, -2.0), -0.7, 4.0},
        {make_operator(PI / 3, 3, -1.0), -0.8, 4.0},
        {make_operator(PI / 2, 3, 0.3), -4.0, 4.0},
        {make_operator(0.0, 4, 0.0), 0.2, 5.0},
    };
    for (const auto& s : samples) {
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> lam(size_t(s.op.n));
            for (auto& l : lam) l = s.lo + (s.hi - s.lo) * U(rng);
            auto g = gradient_F(s.op, lam);
            for (int i = 0; i < s.op.n; ++i) {
                double h = 1e-6 * std::max(1.0, std::fabs(lam[i]));
                double fd = fd_partial(s.op, lam, i, h);
                CHECK(std::fabs(g[i] - fd) <= 1e-6 * std::max(1.0, std::fabs(g[i])));
                CHECK(g[i] > 0.0); // degenerate ellipticity: strictly increasing in each slot
            }
        }
    }
}

TEST_CASE("dF_dlambda agrees with gradient_F componentwise") {
    Operator op = make_operator(PI / 3, 3, -1.0);
    std::vector<double> lam = {-0.3, 0.7, 2.5};
    auto g = gradient_F(op, lam);
    for (int i = 0; i < 3; ++i) CHECK(g[i] == dF_dlambda(op, lam[i]));
}

TEST_CASE("DF_matrix on isotropic and diagonal input") {
    Operator ma = make_operator(0.0, 3, 0.0);
    Eigen::MatrixXd A = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd D = DF_matrix(ma, A);
    CHECK((D - (1.0 / 6.0) * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);

    Eigen::MatrixXd diag = Eigen::Vector3d(1, 2, 3).asDiagonal();
    D = DF_matrix(ma, diag);
    Eigen::MatrixXd want = Eigen::Vector3d(1.0 / 3, 1.0 / 6, 1.0 / 9).asDiagonal();
    CHECK((D - want).norm() < 1e-13);
}

TEST_CASE("DF_matrix is rotation covariant") {
    std::mt19937 rng(777);
    std::normal_distribution<double> N(0, 1);
    Operator spl = make_operator(PI / 2, 3, 0.0);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::MatrixXd M(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M(i, j) = N(rng);
        Eigen::MatrixXd A = 0.5 * (M + M.transpose());
        Eigen::MatrixXd Q = random_rotation(rng, 3);
        Eigen::MatrixXd lhs = DF_matrix(spl, Q * A * Q.transpose());
        Eigen::MatrixXd rhs = Q * DF_matrix(spl, A) * Q.transpose();
        CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("DF_matrix rejects bad input") {
    Operator ma = make_operator(0.0, 3, 0.0);
    Eigen::MatrixXd bad(3, 3);
    bad << 1, 2, 0, 0, 1, 0, 0, 0, 1;
    CHECK_THROWS_AS(DF_matrix(ma, bad), contract_violation);
    CHECK_THROWS_AS(DF_matrix(ma, Eigen::MatrixXd::Identity(4, 4)), contract_violation);
    Eigen::MatrixXd neg = Eigen::Vector3d(1, -1, 1).asDiagonal();
    CHECK_THROWS_AS(DF_matrix(ma, neg), domain_error);
}

TEST_CASE("check_admissibility happy paths") {
    Operator ma = make_operator(0.0, 3, 0.0);
    auto rep = check_admissibility(ma, {1, 2, 3});
    CHECK(rep.satisfied);
    CHECK(rep.condition_id == Condition::i);
    CHECK(std::fabs(rep.margin - 1.0) < 1e-15);

    Operator sm = make_operator(PI / 6, 3, -0.5);
    rep = check_admissibility(sm, {0.0, 1.0, 2.0});
    CHECK(rep.satisfied);
    CHECK(rep.condition_id == Condition::ii);
    CHECK(std::fabs(rep.margin - (sm.a - sm.b)) < 1e-14);

    Operator inv = make_operator(PI / 4, 3, -2.0);
    rep = check_admissibility(inv, {-0.5, 0.0, 1.0});
    CHECK(rep.satisfied);
    CHECK(rep.condition_id == Condition::iii);
    CHECK(std::fabs(rep.margin - 0.5) < 1e-15);

    // Supercritical SPL constant: condition (v_b) holds for any spectrum.
    Operator spl = make_operator(PI / 2, 3, 0.6 * PI);
    rep = check_admissibility(spl, {-50.0, 0.0, 1.0});
    CHECK(rep.satisfied);
    CHECK(rep.condition_id == Condition::v_b);
    CHECK(std::fabs(rep.margin - 0.1 * PI) < 1e-14);
}

TEST_CASE("check_admissibility flags a Large spectrum below the eigenvalue floor") {
    // C' = -3 pi / 4 puts the phase condition (iv_b) exactly on its boundary,
    // so only the eigenvalue-floor condition (iv_a) can certify; with K = 0.5
    // the floor is -(a + b/2) and lambda_min sits below it.
    Operator op = make_operator(PI / 3, 3, -0.75 * PI * std::sqrt(2.0));
    CHECK(op.kind == Case::Large);
    CHECK(std::fabs(op.Cprime + 0.75 * PI) < 1e-12);
    double lmin = -op.a - op.b + 1e-3;
    auto rep = check_admissibility(op, {lmin, 1.0, 1.0}, 0.5);
    CHECK_FALSE(rep.satisfied);
    CHECK(rep.margin < 0.0);
    CHECK(rep.condition_id == Condition::iv_a);

    // The default (huge) K certifies the same spectrum through (iv_a).
    rep = check_admissibility(op, {lmin, 1.0, 1.0});
    CHECK(rep.satisfied);
    CHECK(rep.condition_id == Condition::iv_a);
}

TEST_CASE("check_admissibility margin sign matches the satisfied flag") {
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> U(-3, 3);
    std::vector<Operator> ops = {
        make_operator(0.0, 3, 0.0),       make_operator(PI / 6, 3, -0.5),
        make_operator(PI / 4, 3, -2.0),   make_operator(PI / 3, 3, -1.0),
        make_operator(PI / 2, 3, 0.3),
    };
    for (const auto& op : ops) {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> lam = {U(rng), U(rng), U(rng)};
            auto rep = check_admissibility(op, lam, 1.0);
            CHECK(rep.satisfied == (rep.margin > 0));
        }
    }
}

TEST_CASE("arctan difference identity behind the Large and SPL integrals") {
    // arctan((w-1)/(w+1)) equals arctan(w) - pi/4 for w > -1 and
    // arctan(w) + 3 pi/4 for w < -1.
    for (double mag = 1e-6; mag < 1e6; mag *= 10) {
        for (double w : {mag, -mag}) {
            if (std::fabs(w + 1.0) < 1e-6) continue;
            double lhs = std::atan((w - 1.0) / (w + 1.0));
            double rhs = std::atan(w) + (w > -1.0 ? -PI / 4 : 3 * PI / 4);
            CHECK(std::fabs(lhs - rhs) < 1e-12);
        }
    }
}
