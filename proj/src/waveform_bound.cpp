#include "cloudradar/waveform_bound.hpp"

#include <cmath>

namespace cloudradar {

double neg_bhattacharyya_y(double sig_t, double beta, double y) {
    const double lambda = sig_t * y / (1.0 + beta * y);
    return -std::log1p((beta + 0.5 * sig_t) * y) + std::log1p(beta * y) + 0.5 * std::log1p(lambda);
}

// The three terms of neg_bhattacharyya_y are handled separately:
//  - ln(1 + b y) and 0.5 ln(1 + lambda(y)) are concave in y, hence bounded by
//    their tangents at y0, which are linear in y(x) = x^H R^{-1} x;
//  - -ln(1 + a ||w||^2), w = R^{-1/2} x, has Hessian bounded by a/4 in the
//    real embedding, so a ||w - w0||^2 plus its tangent majorizes it.
WaveformBoundTerm waveform_bound_term(double sig_t, double beta, const HermitianMatrix& r, const CVector& x0) {
    const CholeskyFactor chol(r);
    WaveformBoundTerm t;
    t.r_inv = HermitianMatrix::symmetrized(chol.inverse());
    t.sig_t = sig_t;
    t.beta = beta;
    const CVector rx = t.r_inv.mat() * x0;
    const double y0 = x0.dot(rx).real();
    const double a = beta + 0.5 * sig_t;
    const double by = 1.0 + beta * y0;
    t.y0 = y0;
    t.lambda0 = sig_t * y0 / by;
    t.phi = beta / by + a + 0.5 * sig_t / ((1.0 + t.lambda0) * by * by);
    t.d = (2.0 * a / (1.0 + a * y0) + 2.0 * a) * rx;
    t.constant = neg_bhattacharyya_y(sig_t, beta, y0) - t.phi * y0 + t.d.dot(x0).real();
    return t;
}

double WaveformBoundTerm::value(const CVector& x) const {
    return phi * r_inv.quad(x) - d.dot(x).real() + constant;
}

CVector WaveformBoundTerm::gradient(const CVector& x) const {
    return 2.0 * phi * (r_inv.mat() * x) - d;
}

double WaveformBoundTerm::exact(const CVector& x) const {
    return neg_bhattacharyya_y(sig_t, beta, r_inv.quad(x));
}

}  // namespace cloudradar
