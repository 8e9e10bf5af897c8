#pragma once
#include <stdexcept>
#include <string>

namespace ftau {

// Error taxonomy shared by the whole library. The CLI maps these onto exit
// codes: invalid-input kinds -> 2, numerical kinds -> 3.
enum class error_kind {
    domain,          // argument outside the mathematical domain
    range,           // value outside a branch / interval range
    critical_point,  // inversion attempted where G'(w0) = 0
    singular_series, // series division by zero constant term
    contract,        // API precondition violated
    singularity,     // trajectory or evaluation hit a singular set
    no_solution,     // parameter set admits no solution
    not_decaying,    // growing harmonic mode detected
    convexity,       // convexity precondition violated
    numerical        // internal convergence failure
};

class error : public std::runtime_error {
public:
    error(error_kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
    error_kind kind() const { return kind_; }
private:
    error_kind kind_;
};

struct domain_error : error {
    explicit domain_error(const std::string& m) : error(error_kind::domain, m) {}
};
struct range_error : error {
    explicit range_error(const std::string& m) : error(error_kind::range, m) {}
};
struct critical_point_error : error {
    explicit critical_point_error(const std::string& m) : error(error_kind::critical_point, m) {}
};
struct singular_series_error : error {
    explicit singular_series_error(const std::string& m) : error(error_kind::singular_series, m) {}
};
struct contract_violation : error {
    explicit contract_violation(const std::string& m) : error(error_kind::contract, m) {}
};
struct singularity_error : error {
    singularity_error(const std::string& m, double r) : error(error_kind::singularity, m), radius(r) {}
    double radius;
};
struct no_solution_error : error {
    explicit no_solution_error(const std::string& m) : error(error_kind::no_solution, m) {}
};
struct not_decaying_error : error {
    explicit not_decaying_error(const std::string& m) : error(error_kind::not_decaying, m) {}
};
struct convexity_error : error {
    convexity_error(const std::string& m, double r) : error(error_kind::convexity, m), radius(r) {}
    double radius;
};
struct numerical_error : error {
    explicit numerical_error(const std::string& m) : error(error_kind::numerical, m) {}
};

inline bool is_invalid_input(error_kind k) {
    switch (k) {
    case error_kind::domain:
    case error_kind::range:
    case error_kind::critical_point:
    case error_kind::contract:
    case error_kind::no_solution:
    case error_kind::convexity:
        return true;
    default:
        return false;
    }
}

} // namespace ftau
