#include "ftau/ode_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ftau/errors.hpp"
#include "ftau/numerics.hpp"

namespace ftau {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPhiBlowup = 1e12;

[[noreturn]] void throw_singular(double r, const char* detail) {
    std::ostringstream os;
    os.precision(17);
    os << "radial flow leaves its domain near r = " << r << " (" << detail << ")";
    throw singularity_error(os.str(), r);
}

} // namespace

double flow_phi(const Operator& op, double W) {
    const int n = op.n;
    switch (op.kind) {
    case Case::MA:
        return (op.Cprime - std::pow(W, n)) / std::pow(W, n - 1);
    case Case::Small: {
        double rho = (W + op.a + op.b) / (W + op.a - op.b);
        double kap = op.Cprime * std::pow(rho, n - 1);
        double lam1 = -op.a + op.b * (1.0 + kap) / (1.0 - kap);
        return lam1 - W;
    }
    case Case::Inverse: {
        double K = op.Cprime; // -C0/sqrt(2)
        double V = 1.0 + W;
        return V * (n - K * V) / (K * V - (n - 1));
    }
    case Case::Large: {
        double theta = op.Cprime - (n - 1) * std::atan((W + op.a - op.b) / (W + op.a + op.b));
        double lam1 = -op.a + op.b * std::tan(kPi / 4 + theta);
        return lam1 - W;
    }
    case Case::SPL:
        return std::tan(op.C0 - (n - 1) * std::atan(W)) - W;
    }
    throw contract_violation("flow_phi: bad case");
}

OdeTrace integrate_flow(const Operator& op, double W0, double r0, double r1, double tol) {
    if (!(r0 > 0) || !(r1 > 0)) throw domain_error("integrate_flow: radii must be positive");
    if (!(tol > 0) || tol > 1e-2) throw domain_error("integrate_flow: tol must be in (0, 1e-2]");
    if (!std::isfinite(W0)) throw domain_error("integrate_flow: W0 must be finite");

    // Dormand-Prince 5(4) tableau (autonomous RHS, time nodes unused)
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    auto phi = [&](double W) {
        double v = flow_phi(op, W);
        return v;
    };

    double t = std::log(r0), t_end = std::log(r1);
    double W = W0;
    double dir = (t_end >= t) ? 1.0 : -1.0;

    OdeTrace trace;
    trace.tolerance = tol;
    trace.method = "Dormand-Prince RK5(4), PI step control";
    trace.r_grid.push_back(r0);
    trace.W_values.push_back(W0);
    if (t == t_end) return trace;

    double k1 = phi(W);
    if (!std::isfinite(k1) || std::abs(k1) > kPhiBlowup) throw_singular(r0, "flow singular at start");

    double h = dir * std::min(0.1, std::abs(t_end - t) / 4.0);
    h = dir * std::max(std::abs(h) / (1.0 + std::abs(k1)), 1e-10);
    double err_prev = 1.0;
    int steps = 0;
    const int max_steps = 2000000;

    while (dir * (t_end - t) > 0) {
        if (++steps > max_steps)
            throw numerical_error("integrate_flow: step limit exceeded");
        if (dir * (t + h - t_end) > 0) h = t_end - t;

        double k2 = phi(W + h * a21 * k1);
        double k3 = phi(W + h * (a31 * k1 + a32 * k2));
        double k4 = phi(W + h * (a41 * k1 + a42 * k2 + a43 * k3));
        double k5 = phi(W + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        double k6 = phi(W + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        double Wn = W + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        double k7 = phi(Wn);

        bool bad = !std::isfinite(k2) || !std::isfinite(k3) || !std::isfinite(k4) ||
                   !std::isfinite(k5) || !std::isfinite(k6) || !std::isfinite(k7) ||
                   !std::isfinite(Wn);
        double err_est =
            bad ? std::numeric_limits<double>::infinity()
                : std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        // Relative-dominant control: first-integral checks read the deviation of W
        // from its limit, so absolute-only control would let G(W)r^n drift by
        // tol*r^n. The 1e-6 floor guards trajectories that cross W = 0.
        double scale = tol * (1e-6 + std::max(std::abs(W), std::abs(Wn)));
        double err = err_est / scale;

        if (err <= 1.0) {
            t += h;
            W = Wn;
            k1 = k7;
            trace.r_grid.push_back(std::exp(t));
            trace.W_values.push_back(W);
            if (!std::isfinite(k1) || std::abs(k1) > kPhiBlowup)
                throw_singular(std::exp(t), "flow magnitude blew up");
            double fac = 0.9 * std::pow(1.0 / std::max(err, 1e-10), 0.2) *
                         std::pow(err_prev / std::max(err, 1e-10), 0.08);
            err_prev = std::max(err, 1e-10);
            h *= std::min(5.0, std::max(0.2, fac));
        } else {
            h *= std::max(0.2, 0.9 * std::pow(1.0 / err, 0.2));
        }
        if (std::abs(h) < 1e-14 * (1.0 + std::abs(t)))
            throw_singular(std::exp(t), "step size underflow near a flow singularity");
    }
    return trace;
}

double tail_quadrature(const std::function<double(double)>& f, double r, double decay_hint) {
    if (!(r > 0)) throw domain_error("tail_quadrature: r must be positive");
    if (!(decay_hint < -1.0))
        throw contract_violation(
            "tail_quadrature: decay_hint must be below -1 for an integrable tail");
    // Compactify with tau = r s^{-gamma}, gamma = 1/(p-1), p = -decay_hint:
    // a pure tau^{-p} integrand becomes constant in s, so the quadrature sees
    // only f's deviation from its leading decay (log factors included).
    const double p = -decay_hint;
    const double gamma = 1.0 / (p - 1.0);
    auto g = [&](double s) {
        double tau = r * std::pow(s, -gamma);
        if (!(tau < 1e300)) return 0.0; // decay makes the far tail negligible
        return f(tau) * gamma * r * std::pow(s, -gamma - 1.0);
    };
    double I = num::integrate(g, 0.0, 1.0, 1e-14);
    return -I; // oriented from +infinity down to r
}

Eigen::MatrixXd hessian_fd(const std::function<double(const Eigen::VectorXd&)>& u,
                           const Eigen::VectorXd& x, double h) {
    if (!(h > 0)) throw domain_error("hessian_fd: h must be positive");
    const int n = int(x.size());
    Eigen::MatrixXd H(n, n);
    const double u0 = u(x);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        H(i, i) = (u(xp) - 2.0 * u0 + u(xm)) / (h * h);
        for (int j = i + 1; j < n; ++j) {
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h; xpp[j] += h;
            xpm[i] += h; xpm[j] -= h;
            xmp[i] -= h; xmp[j] += h;
            xmm[i] -= h; xmm[j] -= h;
            double v = (u(xpp) - u(xpm) - u(xmp) + u(xmm)) / (4.0 * h * h);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

double pde_residual(const Operator& op, const std::function<double(const Eigen::VectorXd&)>& u,
                    const Eigen::VectorXd& x, double h) {
    Eigen::MatrixXd H = hessian_fd(u, x, h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    std::vector<double> lam(es.eigenvalues().data(), es.eigenvalues().data() + x.size());
    return evaluate_F(op, lam) - op.C0;
}

} // namespace ftau
