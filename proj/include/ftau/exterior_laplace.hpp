#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ftau/operator_family.hpp"

namespace ftau {

using FieldFn = std::function<double(const Eigen::VectorXd&)>;
using RadialFn = std::function<double(double)>;

// Real orthonormal spherical harmonics on S^{n-1}. The full basis (with a
// product Gauss-Legendre x uniform quadrature) is provided for n = 3; for
// general n only the scalar ladder Lambda_k and multiplicities m_k.
struct HarmonicBasis {
    int n = 3;
    int K_max = 8;
    std::vector<double> ct, st, wt; // polar nodes cos/sin(theta) and weights
    std::vector<double> phi;        // uniform azimuthal nodes, weight 2 pi / #phi
    std::vector<double> Ytab;       // Y at quadrature nodes, [(it*#phi+ip)*(K+1)^2 + k^2 + m_idx]
    double lambda_k(int k) const { return double(k) * double(k + n - 2); }
    int m_count(int k) const;
    // Y_{k,m}; m_idx in [0, 2k] maps to m = m_idx - k (sin side negative, cos side positive)
    double Y(int k, int m_idx, double cos_theta, double ph) const;
    Eigen::Vector3d node(size_t it, size_t ip) const;
    double weight(size_t it) const;
};

HarmonicBasis make_basis(int n = 3, int K_max = 8);

enum class ModeProvenance { fast_decay_lowk, fast_decay_highk, homogeneous };

struct ModeFunction {
    int k = 0;
    int m = 0;
    RadialFn a_km;
    RadialFn da_km;  // analytic first derivative (b-kernel terms cancel)
    RadialFn d2a_km; // analytic second derivative
    ModeProvenance provenance = ModeProvenance::homogeneous;
};

struct HarmonicTail {
    int k_lo = 0;
    int k_hi = -1;                      // coefficients for k in [k_lo, k_hi]
    std::vector<std::vector<double>> c; // c[k - k_lo][m_idx]
    double remainder_slope = 0;
    double remainder_log_power = 0;
};

// Projections b_{k,m}(r) of v onto the basis at radius r (n = 3).
std::vector<std::vector<double>> project_modes(const FieldFn& v, double r,
                                               const HarmonicBasis& basis);

// Decaying solution of the degree-k mode ODE a'' + (n-1)/r a' - Lambda_k/r^2 a = b
// by variation of parameters; the source must satisfy |b| <= C r^{-k1} (ln r)^{k2}
// with k1 > 2. r_in marks the inner edge of the intended evaluation range.
ModeFunction solve_mode(int k, int n, const RadialFn& b, double k1, double r_in);

// Solution of Laplace v = g for fast-decaying g; callable on R^3.
struct FastDecaySolution {
    HarmonicBasis basis;
    FieldFn g;
    double k1 = 0, k2 = 0;
    double tail_energy = 0;          // angular energy beyond K_max at a probe radius
    std::string truncation_warning;  // non-empty if tail_energy is significant
    std::vector<std::vector<double>> coeffs_at(double r) const; // a_{k,m}(r)
    double operator()(const Eigen::VectorXd& x) const;

  private:
    mutable double cached_r_ = -1.0;
    mutable std::vector<std::vector<double>> cached_;
    friend FastDecaySolution fast_decay_poisson(const FieldFn&, double, double,
                                                const HarmonicBasis&);
};

FastDecaySolution fast_decay_poisson(const FieldFn& g, double k1, double k2,
                                     const HarmonicBasis& basis);

// Extract the decaying-mode amplitudes of a harmonic function on the exterior
// region, degrees k in [max(0, k3-n), k1-n-1]; growing amplitudes above
// tolerance raise not_decaying_error.
HarmonicTail harmonic_tail_decompose(const FieldFn& v, int k3, int k1,
                                     const HarmonicBasis& basis);

// Same decomposition after straightening coordinates by Q = a_inf^{1/2}:
// coefficients of V(x) = v(Qx), i.e. of the normal form
// c_{k,m} (x^T a_inf^{-1} x)^{(2-n-k)/2} Y(theta), theta = Q^{-1}x/|Q^{-1}x|.
HarmonicTail affine_decompose(const FieldFn& v, const Eigen::MatrixXd& a_inf, int k3, int k1,
                              const HarmonicBasis& basis);

// Mean-value linearization coefficients a_ij(x): the t-integral over [0,1] of
// the matrix derivative of F_tau at A + t (D^2 u(x) - A).
Eigen::MatrixXd linearization_coefficients(const Operator& op, const FieldFn& u,
                                           const Eigen::MatrixXd& A, const Eigen::VectorXd& x);

Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& M);

} // namespace ftau
