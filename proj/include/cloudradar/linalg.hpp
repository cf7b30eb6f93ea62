#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cloudradar {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Complex Hermitian matrix. Construction checks symmetry to 1e-12 (relative)
/// and stores the exactly symmetrized value.
class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(CMatrix m);

    /// Forces Hermitian symmetry on a computed matrix without the tolerance check.
    static HermitianMatrix symmetrized(const CMatrix& m);
    static HermitianMatrix identity(Eigen::Index dim);
    static HermitianMatrix zero(Eigen::Index dim);
    static HermitianMatrix diagonal(std::span<const double> d);

    const CMatrix& mat() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    double trace() const { return m_.diagonal().real().sum(); }
    cdouble operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    /// Quadratic form v^H M v (real for Hermitian M).
    double quad(const CVector& v) const { return v.dot(m_ * v).real(); }

    HermitianMatrix operator+(const HermitianMatrix& o) const;
    HermitianMatrix operator-(const HermitianMatrix& o) const;
    HermitianMatrix operator*(double s) const;

    /// Eigenvalues in ascending order.
    RVector eigenvalues() const;

    /// PSD flag: all eigenvalues >= -1e-10 * largest eigenvalue.
    bool is_psd() const;

private:
    CMatrix m_;
};

inline HermitianMatrix operator*(double s, const HermitianMatrix& m) { return m * s; }

/// Cholesky factorization of a Hermitian PD matrix with the project-wide
/// eigenvalue floor (1e-12 * trace / dim). Throws SingularMatrix otherwise.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const CMatrix& m);
    explicit CholeskyFactor(const HermitianMatrix& m) : CholeskyFactor(m.mat()) {}

    CVector solve(const CVector& b) const { return llt_.solve(b); }
    CMatrix solve(const CMatrix& b) const { return llt_.solve(b); }
    CMatrix inverse() const;
    double logdet() const;
    /// x^H M^{-1} x
    double inv_quad(const CVector& x) const;
    const Eigen::LLT<CMatrix>& llt() const { return llt_; }
    CMatrix lower() const { return llt_.matrixL(); }

private:
    Eigen::LLT<CMatrix> llt_;
};

/// Returns true when m is Hermitian PD and passes the eigenvalue floor, without throwing.
bool try_cholesky(const CMatrix& m, Eigen::LLT<CMatrix>& out);

/// Hermitian inverse square root r with r m r = I. Requires the smallest
/// eigenvalue of m to exceed 1e-12 * trace(m) / dim.
HermitianMatrix inv_sqrt(const HermitianMatrix& m);

/// Natural log-determinant via eigenvalues. Throws SingularMatrix if any
/// eigenvalue is <= 0.
double logdet(const HermitianMatrix& m);

/// Real symmetric matrix with entries rho^{|i-j|}.
HermitianMatrix exp_corr_matrix(double rho, int k);

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped to floor).
HermitianMatrix project_psd(const HermitianMatrix& m, double floor = 0.0);

/// Hermitian square root of a PSD matrix (negative eigenvalues clipped to 0).
CMatrix psd_sqrt(const HermitianMatrix& m);

HermitianMatrix block_diag(std::span<const HermitianMatrix> blocks);

/// Rank-one outer product x x^H.
CMatrix outer(const CVector& x);

double db_to_linear(double db);
double linear_to_db(double lin);

}  // namespace cloudradar
