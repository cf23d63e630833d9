#pragma once

#include <cmath>
#include <vector>

#include "qdyn/errors.hpp"
#include "qdyn/pulse.hpp"

// Closed-form occupation probabilities for the family1/family2 pulses and
// their infinite-time averages. The expressions are transcribed term by term
// as printed (no algebraic refactoring) so that a transcription slip shows up
// against the integration oracle instead of being hidden by simplification.

namespace qdyn {

// P1_up(tau; xi), oscillation half-frequency Theta = sqrt(1+xi^2).
template <class S>
S p1_up(S tau, S xi) {
    using std::sin; using std::cos; using std::sqrt;
    const S x2 = xi * xi;
    const S th2 = 1 + x2;
    const S th = sqrt(th2);
    const S t2 = tau * tau;
    const S a = 1 - 3 * x2;
    const S c = cos(th * tau), s = sin(th * tau), s2 = sin(2 * th * tau);
    const S num = 16 * x2 * x2 * th2 * t2 * c * c
                + 4 * x2 * th * tau * a * s2
                + (4 * x2 * th2 * th2 * t2 + a * a) * s * s;
    return num / (th2 * th2 * th2 * (1 + 4 * x2 * t2));
}

// Monotone trapping case xi^2 = 1/3: P = tau^2 / (1 + 4 tau^2 / 3) -> 3/4.
template <class S>
S p1_up_monotone(S tau) {
    return tau * tau / (1 + 4 * tau * tau / 3);
}

// Time-averaged P1_up; maximum 25/32 = 0.78125 at xi^2 = 3/5.
template <class S>
S p1_avg(S xi) {
    const S x2 = xi * xi;
    return (1 + 5 * x2) / (2 * (1 + x2) * (1 + x2));
}

template <class S>
struct QTriple {
    S q1, q2, q3;
};

// Q1 = 0 (at xi^2 = 1 -+ 2/sqrt5) kills the oscillatory bracket of P2_up.
template <class S>
QTriple<S> q_triple(S tau, S xi) {
    using std::sqrt;
    const S x2 = xi * xi, x4 = x2 * x2, x6 = x4 * x2;
    const S th2 = 1 + x2;
    const S th = sqrt(th2);
    const S t2 = tau * tau, t4 = t2 * t2, t6 = t4 * t2;
    const S q1 = 1 - 10 * x2 + 5 * x4;
    const S q2 = 64 * x6 * th2 * th2 * t6
               + 48 * x4 * (1 - 18 * x2 - 19 * x4) * t4
               + 36 * x2 * (3 - 2 * x2 + 11 * x4) * t2
               + 9 * q1;
    const S q3 = 12 * x2 * th * tau *
                 (th2 * (16 * x4 * t4 + 7) + 2 * (4 * x2 * t2 + 1) * (1 - 5 * x2));
    return {q1, q2, q3};
}

template <class S>
S p2_up(S tau, S xi) {
    using std::sin; using std::sqrt;
    const S x2 = xi * xi, x4 = x2 * x2, x6 = x4 * x2;
    const S th2 = 1 + x2;
    const S th = sqrt(th2);
    const S t2 = tau * tau, t4 = t2 * t2, t6 = t4 * t2;
    const QTriple<S> q = q_triple(tau, xi);
    const S nonosc = 16 * x4 * th2 * t2 *
                     (16 * x4 * th2 * th2 * t4
                      + 24 * x2 * (3 - 14 * x2 + 7 * x4) * t2
                      + 9 * (9 - 6 * x2 + x4));
    const S osc = q.q1 * (q.q2 * sin(th * tau) * sin(th * tau)
                          + q.q3 * sin(2 * th * tau));
    const S den = th2 * th2 * th2 * th2 * th2 *
                  (9 + 108 * x2 * t2 + 48 * x4 * t4 + 64 * x6 * t6);
    return (nonosc + osc) / den;
}

// Time-averaged P2_up; maximum ~0.9085 at xi ~ 1.4584.
template <class S>
S p2_avg(S xi) {
    const S x2 = xi * xi;
    return (1 - 2 * x2 + 13 * x2 * x2) / (2 * (1 + x2) * (1 + x2) * (1 + x2));
}

// Bias scales at which the probability stops oscillating (positive roots;
// the negative mirrors are also trapping by evenness).
// family1: xi = 1/sqrt3. family2: roots of 5 xi^4 - 10 xi^2 + 1 = 0,
// i.e. xi = sqrt(1 -+ 2/sqrt5).
inline std::vector<double> trapping_xis(Family family) {
    switch (family) {
        case Family::Family1:
            return {1.0 / std::sqrt(3.0)};
        case Family::Family2:
            return {std::sqrt(1.0 - 2.0 / std::sqrt(5.0)),
                    std::sqrt(1.0 + 2.0 / std::sqrt(5.0))};
        default:
            throw Unsupported("trapping_xis: no trapping criterion for " +
                              std::string(family_name(family)));
    }
}

} // namespace qdyn
