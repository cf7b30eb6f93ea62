#include "cloudradar/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cloudradar/errors.hpp"

namespace cloudradar {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kEigFloor = 1e-12;
constexpr double kPsdTol = 1e-10;

double floor_for(const CMatrix& m) {
    const double tr = m.diagonal().real().sum();
    return kEigFloor * std::abs(tr) / static_cast<double>(m.rows());
}

}  // namespace

HermitianMatrix::HermitianMatrix(CMatrix m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("HermitianMatrix: matrix is not square");
    }
    const double scale = std::max(1.0, m.norm());
    if ((m - m.adjoint()).norm() > kSymmetryTol * scale) {
        throw std::invalid_argument("HermitianMatrix: matrix is not Hermitian");
    }
    m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::symmetrized(const CMatrix& m) {
    HermitianMatrix h;
    h.m_ = 0.5 * (m + m.adjoint());
    return h;
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index dim) {
    return symmetrized(CMatrix::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index dim) {
    return symmetrized(CMatrix::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> d) {
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    }
    return symmetrized(m);
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const { return symmetrized(m_ + o.m_); }
HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const { return symmetrized(m_ - o.m_); }
HermitianMatrix HermitianMatrix::operator*(double s) const { return symmetrized(m_ * s); }

RVector HermitianMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

bool HermitianMatrix::is_psd() const {
    if (dim() == 0) return true;
    const RVector ev = eigenvalues();
    const double largest = std::max(ev.maxCoeff(), 0.0);
    return ev.minCoeff() >= -kPsdTol * largest;
}

bool try_cholesky(const CMatrix& m, Eigen::LLT<CMatrix>& out) {
    out.compute(m);
    if (out.info() != Eigen::Success) return false;
    // Pivot screen: every Cholesky pivot bounds the smallest eigenvalue from above.
    const double fl = floor_for(m);
    const auto& l = out.matrixLLT();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double piv = std::norm(l(i, i));
        if (!(piv > fl) || !std::isfinite(piv)) return false;
    }
    return true;
}

CholeskyFactor::CholeskyFactor(const CMatrix& m) {
    if (!try_cholesky(m, llt_)) {
        throw SingularMatrix("Cholesky factorization failed (matrix not positive definite)");
    }
}

CMatrix CholeskyFactor::inverse() const {
    const Eigen::Index n = llt_.matrixLLT().rows();
    CMatrix inv = llt_.solve(CMatrix::Identity(n, n));
    return 0.5 * (inv + inv.adjoint());
}

double CholeskyFactor::logdet() const {
    const auto& l = llt_.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i).real());
    return 2.0 * s;
}

double CholeskyFactor::inv_quad(const CVector& x) const {
    const CVector y = llt_.matrixL().solve(x);
    return y.squaredNorm();
}

HermitianMatrix inv_sqrt(const HermitianMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.mat());
    if (es.info() != Eigen::Success) throw SingularMatrix("inv_sqrt: eigendecomposition failed");
    const RVector& ev = es.eigenvalues();
    const double fl = floor_for(m.mat());
    if (!(ev.minCoeff() > fl)) {
        throw SingularMatrix("inv_sqrt: smallest eigenvalue " + std::to_string(ev.minCoeff()) +
                             " below floor");
    }
    const CMatrix& v = es.eigenvectors();
    const RVector s = ev.array().rsqrt();
    return HermitianMatrix::symmetrized(v * s.cast<cdouble>().asDiagonal() * v.adjoint());
}

double logdet(const HermitianMatrix& m) {
    const RVector ev = m.eigenvalues();
    if (!(ev.minCoeff() > 0.0)) throw SingularMatrix("logdet: matrix is not positive definite");
    return ev.array().log().sum();
}

HermitianMatrix exp_corr_matrix(double rho, int k) {
    if (std::abs(rho) > 1.0) throw std::invalid_argument("exp_corr_matrix: |rho| must be <= 1");
    if (k <= 0) throw std::invalid_argument("exp_corr_matrix: k must be positive");
    CMatrix m(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            m(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return HermitianMatrix::symmetrized(m);
}

HermitianMatrix project_psd(const HermitianMatrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.mat());
    const RVector ev = es.eigenvalues().cwiseMax(floor);
    const CMatrix& v = es.eigenvectors();
    return HermitianMatrix::symmetrized(v * ev.cast<cdouble>().asDiagonal() * v.adjoint());
}

CMatrix psd_sqrt(const HermitianMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.mat());
    const RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMatrix& v = es.eigenvectors();
    return v * ev.cast<cdouble>().asDiagonal() * v.adjoint();
}

HermitianMatrix block_diag(std::span<const HermitianMatrix> blocks) {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.dim();
    CMatrix m = CMatrix::Zero(n, n);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        m.block(off, off, b.dim(), b.dim()) = b.mat();
        off += b.dim();
    }
    return HermitianMatrix::symmetrized(m);
}

CMatrix outer(const CVector& x) { return x * x.adjoint(); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace cloudradar
