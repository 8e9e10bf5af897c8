#include "ftau/operator_family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ftau {

namespace {

constexpr double kCaseTol = 1e-12;

double sq(double x) { return x * x; }

void check_lambda_size(const Operator& op, const std::vector<double>& lambda) {
    if (int(lambda.size()) != op.n)
        throw contract_violation("lambda vector length does not match operator dimension");
}

} // namespace

std::string case_name(Case c) {
    switch (c) {
    case Case::MA: return "MA";
    case Case::Small: return "Small";
    case Case::Inverse: return "Inverse";
    case Case::Large: return "Large";
    case Case::SPL: return "SPL";
    }
    return "?";
}

std::string condition_name(Condition c) {
    switch (c) {
    case Condition::i: return "i";
    case Condition::ii: return "ii";
    case Condition::iii: return "iii";
    case Condition::iv_a: return "iv_a";
    case Condition::iv_b: return "iv_b";
    case Condition::v_a: return "v_a";
    case Condition::v_b: return "v_b";
    }
    return "?";
}

Operator make_operator(double tau, int n, double C0) {
    if (!(tau >= -kCaseTol && tau <= M_PI_2 + kCaseTol))
        throw domain_error("make_operator: tau outside [0, pi/2]");
    if (n < 3) throw domain_error("make_operator: dimension n must be >= 3");
    Operator op;
    op.tau = tau;
    op.n = n;
    op.C0 = C0;
    if (std::fabs(tau) <= kCaseTol) {
        op.kind = Case::MA;
        op.Cprime = std::exp(n * C0);
    } else if (std::fabs(tau - M_PI_4) <= kCaseTol) {
        op.kind = Case::Inverse;
        op.Cprime = -C0 / std::sqrt(2.0);
    } else if (std::fabs(tau - M_PI_2) <= kCaseTol) {
        op.kind = Case::SPL;
        op.Cprime = C0;
        if (!(std::fabs(C0) < n * M_PI_2)) {
            std::ostringstream os;
            os << "make_operator: C0 outside (-" << n << "*pi/2, " << n << "*pi/2)";
            throw domain_error(os.str());
        }
    } else {
        double cot = std::cos(tau) / std::sin(tau);
        op.a = cot;
        op.b = std::sqrt(std::fabs(cot * cot - 1.0));
        op.has_ab = true;
        if (tau < M_PI_4) {
            op.kind = Case::Small;
            op.Cprime = std::exp(2.0 * op.b * C0 / std::sqrt(op.a * op.a + 1.0));
        } else {
            op.kind = Case::Large;
            op.Cprime = op.b * C0 / std::sqrt(op.a * op.a + 1.0);
            if (!(std::fabs(op.Cprime) < n * M_PI_2)) {
                std::ostringstream os;
                os << "make_operator: reduced constant C' = " << op.Cprime << " outside (-" << n
                   << "*pi/2, " << n << "*pi/2)";
                throw domain_error(os.str());
            }
        }
    }
    return op;
}

double evaluate_F(const Operator& op, const std::vector<double>& lambda) {
    check_lambda_size(op, lambda);
    double s = 0;
    for (int i = 0; i < op.n; ++i) {
        double l = lambda[i];
        switch (op.kind) {
        case Case::MA:
            if (!(l > 0)) {
                std::ostringstream os;
                os << "evaluate_F: lambda[" << i << "] = " << l << " not positive (MA domain)";
                throw domain_error(os.str());
            }
            s += std::log(l);
            break;
        case Case::Small: {
            double num = l + op.a - op.b, den = l + op.a + op.b;
            if (!(num * den > 0)) {
                std::ostringstream os;
                os << "evaluate_F: lambda[" << i << "] = " << l
                   << " inside the singular band [-a-b, -a+b]";
                throw domain_error(os.str());
            }
            s += std::log(num / den);
            break;
        }
        case Case::Inverse:
            if (l == -1.0) {
                std::ostringstream os;
                os << "evaluate_F: lambda[" << i << "] = -1 singular";
                throw domain_error(os.str());
            }
            s += 1.0 / (1.0 + l);
            break;
        case Case::Large: {
            double den = l + op.a + op.b;
            if (den == 0.0) {
                std::ostringstream os;
                os << "evaluate_F: lambda[" << i << "] = " << l << " at the singular value -a-b";
                throw domain_error(os.str());
            }
            s += std::atan((l + op.a - op.b) / den);
            break;
        }
        case Case::SPL:
            s += std::atan(l);
            break;
        }
    }
    switch (op.kind) {
    case Case::MA: return s / op.n;
    case Case::Small: return std::sqrt(op.a * op.a + 1.0) / (2.0 * op.b) * s;
    case Case::Inverse: return -std::sqrt(2.0) * s;
    case Case::Large: return std::sqrt(op.a * op.a + 1.0) / op.b * s;
    case Case::SPL: return s;
    }
    return 0;
}

double dF_dlambda(const Operator& op, double l) {
    switch (op.kind) {
    case Case::MA:
        if (!(l > 0)) throw domain_error("dF_dlambda: lambda not positive (MA domain)");
        return 1.0 / (op.n * l);
    case Case::Small: {
        double d = sq(l + op.a) - sq(op.b);
        if (!(d > 0)) throw domain_error("dF_dlambda: lambda inside the singular band");
        return std::sqrt(op.a * op.a + 1.0) / d;
    }
    case Case::Inverse:
        if (l == -1.0) throw domain_error("dF_dlambda: lambda = -1 singular");
        return std::sqrt(2.0) / sq(1.0 + l);
    case Case::Large:
        return std::sqrt(op.a * op.a + 1.0) / (sq(l + op.a) + sq(op.b));
    case Case::SPL:
        return 1.0 / (1.0 + l * l);
    }
    return 0;
}

std::vector<double> gradient_F(const Operator& op, const std::vector<double>& lambda) {
    check_lambda_size(op, lambda);
    std::vector<double> g(lambda.size());
    for (size_t i = 0; i < lambda.size(); ++i) g[i] = dF_dlambda(op, lambda[i]);
    return g;
}

Eigen::MatrixXd DF_matrix(const Operator& op, const Eigen::MatrixXd& A) {
    if (A.rows() != op.n || A.cols() != op.n)
        throw contract_violation("DF_matrix: matrix dimension does not match operator");
    double scale = std::max(1.0, A.norm());
    if ((A - A.transpose()).norm() > 1e-12 * scale)
        throw contract_violation("DF_matrix: input matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw numerical_error("DF_matrix: eigensolver failed");
    Eigen::VectorXd d(op.n);
    for (int i = 0; i < op.n; ++i) d(i) = dF_dlambda(op, es.eigenvalues()(i));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

AdmissibilityReport check_admissibility(const Operator& op, const std::vector<double>& lambda,
                                        double K, double eps_n) {
    check_lambda_size(op, lambda);
    double lmin = *std::min_element(lambda.begin(), lambda.end());
    AdmissibilityReport rep;
    switch (op.kind) {
    case Case::MA:
        rep.condition_id = Condition::i;
        rep.margin = lmin;
        break;
    case Case::Small:
        rep.condition_id = Condition::ii;
        rep.margin = lmin - (-op.a + op.b);
        break;
    case Case::Inverse:
        rep.condition_id = Condition::iii;
        rep.margin = lmin + 1.0;
        break;
    case Case::Large: {
        double strict = lmin + op.a + op.b;
        double phase = std::fabs(op.Cprime + op.n * M_PI_4) - (op.n - 2) * M_PI_2;
        double margin_b = std::min(strict, phase);
        double weak_bound = (op.n <= 4) ? -(op.a + op.b * K)
                                        : -(op.a + op.b / std::sqrt(3.0) + op.b * eps_n);
        double margin_a = std::min(strict, lmin - weak_bound);
        if (margin_b > 0) {
            rep.condition_id = Condition::iv_b;
            rep.margin = margin_b;
        } else if (margin_a > 0) {
            rep.condition_id = Condition::iv_a;
            rep.margin = margin_a;
        } else {
            rep.condition_id = (margin_b >= margin_a) ? Condition::iv_b : Condition::iv_a;
            rep.margin = std::max(margin_a, margin_b);
        }
        break;
    }
    case Case::SPL: {
        double margin_b = std::fabs(op.C0) - (op.n - 2) * M_PI_2;
        double weak_bound = (op.n <= 4) ? -K : -(1.0 / std::sqrt(3.0) + eps_n);
        double margin_a = lmin - weak_bound;
        if (margin_b > 0) {
            rep.condition_id = Condition::v_b;
            rep.margin = margin_b;
        } else if (margin_a > 0) {
            rep.condition_id = Condition::v_a;
            rep.margin = margin_a;
        } else {
            rep.condition_id = (margin_b >= margin_a) ? Condition::v_b : Condition::v_a;
            rep.margin = std::max(margin_a, margin_b);
        }
        break;
    }
    }
    rep.satisfied = rep.margin > 0;
    return rep;
}

} // namespace ftau
