#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace adcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an argument violates a documented precondition (dimensions,
/// ranges, finiteness).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation fails numerically (singular factorization,
/// loss of positive semidefiniteness, non-finite intermediate).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

inline void require_dims(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ContractViolation(std::string(name) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

inline void require_size(const Vector& v, Eigen::Index n, std::string_view name) {
    if (v.size() != n) {
        throw ContractViolation(std::string(name) + ": expected length " + std::to_string(n) + ", got " +
                                std::to_string(v.size()));
    }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, std::string_view name) {
    if (!m.allFinite()) throw ContractViolation(std::string(name) + ": non-finite entries");
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
inline double min_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Symmetric PSD square root via eigendecomposition (negative eigenvalues clipped).
inline Matrix sqrt_psd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail
}  // namespace adcs
