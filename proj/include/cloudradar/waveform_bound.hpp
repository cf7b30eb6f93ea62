#pragma once

#include "cloudradar/linalg.hpp"

namespace cloudradar {

/// Negative Bhattacharyya distance between CN(0, b x x^H + R) and
/// CN(0, (b + s) x x^H + R) expressed through y = x^H R^{-1} x:
///   -ln(1 + (b + s/2) y) + ln(1 + b y) + 0.5 ln(1 + s y / (1 + b y)).
double neg_bhattacharyya_y(double sig_t, double beta, double y);

/// Locally tight quadratic majorizer of the above as a function of x,
///   U(x) = phi x^H R^{-1} x - Re(d^H x) + constant,
/// anchored at x0.
struct WaveformBoundTerm {
    HermitianMatrix r_inv;
    double sig_t = 0.0;
    double beta = 0.0;
    double phi = 0.0;
    CVector d;
    double constant = 0.0;
    double y0 = 0.0;
    double lambda0 = 0.0;

    double value(const CVector& x) const;
    /// Complex gradient g with dU = Re(g^H dx): 2 phi R^{-1} x - d.
    CVector gradient(const CVector& x) const;
    /// The majorized function itself at x.
    double exact(const CVector& x) const;
};

/// Throws SingularMatrix when r is not PD.
WaveformBoundTerm waveform_bound_term(double sig_t, double beta, const HermitianMatrix& r, const CVector& x0);

}  // namespace cloudradar
