#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftau/errors.hpp"

namespace ftau {

enum class Case { MA, Small, Inverse, Large, SPL };

std::string case_name(Case c);

// The five-case operator family F_tau acting on Hessian eigenvalues.
//   MA      (tau = 0):            (1/n) sum ln lambda_i
//   Small   (tau in (0, pi/4)):   sqrt(a^2+1)/(2b) sum ln((l+a-b)/(l+a+b))
//   Inverse (tau = pi/4):         -sqrt(2) sum 1/(1+l)
//   Large   (tau in (pi/4,pi/2)): sqrt(a^2+1)/b sum arctan((l+a-b)/(l+a+b))
//   SPL     (tau = pi/2):         sum arctan l
// with a = cot tau, b = sqrt(|cot^2 tau - 1|).
struct Operator {
    double tau = 0;
    int n = 3;
    double C0 = 0;
    Case kind = Case::MA;
    bool has_ab = false;
    double a = 0;
    double b = 0;
    double Cprime = 0; // case-specific reduced constant C'
};

enum class Condition { i, ii, iii, iv_a, iv_b, v_a, v_b };

std::string condition_name(Condition c);

struct AdmissibilityReport {
    bool satisfied = false;
    Condition condition_id = Condition::i;
    double margin = 0; // signed distance to the constraint boundary
};

Operator make_operator(double tau, int n, double C0);

double evaluate_F(const Operator& op, const std::vector<double>& lambda);

std::vector<double> gradient_F(const Operator& op, const std::vector<double>& lambda);

// Scalar derivative dF/dlambda at a single eigenvalue.
double dF_dlambda(const Operator& op, double lambda);

Eigen::MatrixXd DF_matrix(const Operator& op, const Eigen::MatrixXd& A);

AdmissibilityReport check_admissibility(const Operator& op, const std::vector<double>& lambda,
                                        double K = 1e6, double eps_n = 0.0);

} // namespace ftau
