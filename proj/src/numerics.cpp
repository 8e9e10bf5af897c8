#include "ftau/numerics.hpp"

#include <algorithm>

namespace ftau::num {

Quadrature gauss_legendre(int npts) {
    if (npts < 1) throw contract_violation("gauss_legendre: npts must be >= 1");
    Quadrature q;
    q.x.resize(npts);
    q.w.resize(npts);
    const int m = (npts + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < npts; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = npts * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        q.x[i] = -z;
        q.x[npts - 1 - i] = z;
        q.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        q.w[npts - 1 - i] = q.w[i];
    }
    return q;
}

LinFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw contract_violation("fit_line: need two equal-length samples");
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    LinFit f;
    double det = n * sxx - sx * sx;
    if (det == 0) throw numerical_error("fit_line: degenerate abscissae");
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < xs.size(); ++i)
        f.max_resid = std::max(f.max_resid, std::fabs(ys[i] - f.slope * xs[i] - f.intercept));
    return f;
}

LinFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys, double floor) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (std::fabs(ys[i]) > floor && xs[i] > 0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(std::fabs(ys[i])));
        }
    }
    if (lx.size() < 2) throw numerical_error("fit_loglog: too few usable samples");
    return fit_line(lx, ly);
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw contract_violation("Pchip: need >= 2 nodes");
    bool inc = x_[1] > x_[0];
    if (!inc) {
        std::reverse(x_.begin(), x_.end());
        std::reverse(y_.begin(), y_.end());
    }
    for (size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i])) throw contract_violation("Pchip: grid not strictly monotone");
    std::vector<double> h(n - 1), del(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        del[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] > 0) {
            double w1 = 2 * h[i] + h[i - 1];
            double w2 = h[i] + 2 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0) d = 0;
        else if (d0 * d1 < 0 && std::fabs(d) > 3 * std::fabs(d0)) d = 3 * d0;
        return d;
    };
    if (n == 2) {
        d_[0] = d_[1] = del[0];
    } else {
        d_[0] = end_slope(h[0], h[1], del[0], del[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    }
}

double Pchip::operator()(double xq) const {
    const size_t n = x_.size();
    size_t i = std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin();
    if (i == 0) i = 1;
    if (i >= n) i = n - 1;
    --i;
    double h = x_[i + 1] - x_[i];
    double t = (xq - x_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1;
    double h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2;
    double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

std::vector<double> log_grid(double lo, double hi, int npts) {
    if (!(lo > 0 && hi > lo) || npts < 2) throw contract_violation("log_grid: bad range");
    std::vector<double> g(npts);
    double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < npts; ++i) g[i] = std::exp(a + (b - a) * i / (npts - 1));
    return g;
}

} // namespace ftau::num
