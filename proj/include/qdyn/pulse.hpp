#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "qdyn/errors.hpp"

// Bias pulse families in dimensionless units: energies in units of the
// tunneling amplitude Delta, time as tau = Delta*t, xi = eps0/Delta.
//
//   family1:  eps1(tau) = xi - 4 xi / (1 + 4 xi^2 tau^2)
//   family2:  eps2(tau) = xi (45 - 180 u^2 - 144 u^4 + 64 u^6)
//                            / (9 + 108 u^2 + 48 u^4 + 64 u^6),  u = xi tau
//   family3:  eps3(tau) = xi + 2 w^2 / (b cos(2 w tau + phi) - xi),
//             b = +sqrt(xi^2 - w^2), requires b^2 > 0
//
// All three approach eps = xi at large |tau| (families 1, 2) or average
// around it (family 3); family3 with the limit phase degenerates to family1
// as w -> 0.

namespace qdyn {

enum class Family { Constant, Family1, Family2, Family3 };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Constant: return "constant";
        case Family::Family1: return "family1";
        case Family::Family2: return "family2";
        case Family::Family3: return "family3";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "constant") return Family::Constant;
    if (s == "family1") return Family::Family1;
    if (s == "family2") return Family::Family2;
    if (s == "family3") return Family::Family3;
    throw InvalidParams("unknown pulse family '" + s +
                        "' (expected constant|family1|family2|family3)");
}

struct PulseParams {
    Family family = Family::Constant;
    double xi = 0.0;     // eps0/Delta; for Constant this is the bias value itself
    double omega = 0.0;  // family3 only
    double phi = 0.0;    // family3 only
};

// Scalar-templated family formulas, usable with double / long double.

template <class S>
S eval_family1(S tau, S xi) {
    return xi - 4 * xi / (1 + 4 * xi * xi * tau * tau);
}

template <class S>
S eval_family2(S tau, S xi) {
    const S u2 = xi * tau * (xi * tau);
    const S u4 = u2 * u2, u6 = u4 * u2;
    return xi * (45 - 180 * u2 - 144 * u4 + 64 * u6) /
           (9 + 108 * u2 + 48 * u4 + 64 * u6);
}

// Denominator b cos(th) - xi evaluated as -2 b sin^2(th/2) - w^2/(b + xi).
// Algebraically identical (b - xi = -w^2/(b+xi)) but keeps the O(w^2)
// magnitude intact at small w, where the direct difference cancels to
// rounding noise and destroys the w->0 convergence order.
template <class S>
S eval_family3(S tau, S xi, S omega, S phi, S b) {
    using std::sin;
    const S s = sin((omega * tau) + phi / 2);  // sin(th/2), th = 2 w tau + phi
    const S den = -2 * b * s * s - omega * omega / (b + xi);
    return xi + 2 * omega * omega / den;
}

class BiasPulse {
public:
    explicit BiasPulse(const PulseParams& p) : p_(p) {
        if (!std::isfinite(p.xi) || !std::isfinite(p.omega) || !std::isfinite(p.phi))
            throw NonFinite("pulse parameters must be finite");
        theta_ = std::sqrt(1.0 + p.xi * p.xi);
        if (p.family == Family::Family3) {
            if (p.omega < 0)
                throw InvalidParams("family3 requires omega >= 0");
            const double b2 = p.xi * p.xi - p.omega * p.omega;
            if (b2 <= 0)
                throw InvalidParams(
                    "family3 requires b^2 = xi^2 - omega^2 > 0 (got xi^2=" +
                    std::to_string(p.xi * p.xi) + ", omega^2=" +
                    std::to_string(p.omega * p.omega) + ")");
            b_ = std::sqrt(b2);
            if (p.omega == 0.0) {
                // Degenerate w=0: the bias is the constant xi unless the
                // frozen denominator -2 b sin^2(phi/2) vanishes, which is a
                // pole at every tau.
                const double s = std::sin(0.5 * p.phi);
                if (s * s == 0.0)
                    throw InvalidParams(
                        "family3 with omega=0 and cos(phi)=1 has a vanishing "
                        "denominator at every tau");
            }
        }
    }

    double operator()(double tau) const {
        switch (p_.family) {
            case Family::Constant: return p_.xi;
            case Family::Family1: return eval_family1(tau, p_.xi);
            case Family::Family2: return eval_family2(tau, p_.xi);
            case Family::Family3:
                return eval_family3(tau, p_.xi, p_.omega, p_.phi, b_);
        }
        return 0.0;
    }

    const PulseParams& params() const { return p_; }
    Family family() const { return p_.family; }
    double xi() const { return p_.xi; }
    double theta() const { return theta_; }  // sqrt(1 + xi^2)
    double b() const { return b_; }          // family3 only, else 0

private:
    PulseParams p_;
    double theta_ = 1.0;
    double b_ = 0.0;
};

inline BiasPulse make_pulse(const PulseParams& p) { return BiasPulse(p); }

// Phase that makes family3 degenerate into family1 as omega -> 0:
//   phi = arctan(w / 2 xi) - (1/2) arctan(w / b)
inline double family3_limit_phase(double xi, double omega) {
    if (!std::isfinite(xi) || !std::isfinite(omega))
        throw NonFinite("family3_limit_phase: arguments must be finite");
    if (omega == 0.0) return 0.0;
    const double b2 = xi * xi - omega * omega;
    if (b2 <= 0)
        throw InvalidParams("family3_limit_phase requires xi^2 - omega^2 > 0");
    return std::atan(omega / (2 * xi)) - 0.5 * std::atan(omega / std::sqrt(b2));
}

// Direct (xi, b, phi) parametrization: omega^2 = xi^2 - b^2.
inline PulseParams family3_params_from_b(double xi, double b, double phi) {
    if (!std::isfinite(xi) || !std::isfinite(b) || !std::isfinite(phi))
        throw NonFinite("family3_params_from_b: arguments must be finite");
    const double w2 = xi * xi - b * b;
    if (w2 < 0)
        throw InvalidParams(
            "family3 requires b^2 = xi^2 - omega^2 > 0, so |b| <= |xi| "
            "(got b^2=" + std::to_string(b * b) + " > xi^2=" +
            std::to_string(xi * xi) + ")");
    return PulseParams{Family::Family3, xi, std::sqrt(w2), phi};
}

namespace detail {

// Golden-section maximum of f on [a,b] (unimodal assumed), interval tol.
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + r * (b - a); f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - r * (b - a); f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

// Analytic ranges where available; family2 numerically (grid + refinement).
// family1 for xi>0: min -3xi at tau=0, sup xi approached as tau->inf;
// family3: denominator extremes give exactly [-xi-2b, -xi+2b].
inline std::pair<double, double> pulse_range(const BiasPulse& pulse) {
    const auto& p = pulse.params();
    switch (p.family) {
        case Family::Constant:
            return {p.xi, p.xi};
        case Family::Family1: {
            const double lo = std::min(-3 * p.xi, p.xi);
            const double hi = std::max(-3 * p.xi, p.xi);
            return {lo, hi};
        }
        case Family::Family3: {
            if (p.omega == 0.0) return {p.xi, p.xi};  // constant degenerate
            return {-p.xi - 2 * pulse.b(), -p.xi + 2 * pulse.b()};
        }
        case Family::Family2: break;
    }
    // family2: even in tau; extremes live at u = xi*tau in [0, ~1]; scan to
    // u = 3 with the documented step, then refine brackets to 1e-8.
    const double axi = std::abs(p.xi);
    if (axi == 0.0) return {0.0, 0.0};
    const double step = 1e-2 / std::max(axi, 1.0);
    const double tau_max = 3.0 / axi;
    const int n = static_cast<int>(std::ceil(tau_max / step));
    double lo = pulse(0.0), hi = lo;
    int ilo = 0, ihi = 0;
    for (int i = 1; i <= n; ++i) {
        const double v = pulse(i * step);
        if (v < lo) { lo = v; ilo = i; }
        if (v > hi) { hi = v; ihi = i; }
    }
    auto refine = [&](int i, double sign) {
        const double a = std::max(0.0, (i - 1) * step);
        const double b = std::min(static_cast<double>(n), double(i + 1)) * step;
        const double t = detail::golden_max(
            [&](double tau) { return sign * pulse(tau); }, a, b, 1e-8);
        return pulse(t);
    };
    lo = std::min(lo, refine(ilo, -1.0));
    hi = std::max(hi, refine(ihi, +1.0));
    return {lo, hi};
}

} // namespace qdyn
