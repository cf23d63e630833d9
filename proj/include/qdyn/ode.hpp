#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qdyn/errors.hpp"

// Adaptive Dormand-Prince 5(4) with FSAL, PI step-size control and the
// method's free continuous extension for dense output onto a caller-supplied
// sample grid. State is any fixed-size Eigen vector (real or complex).
// (A plain cubic Hermite interpolant is an order too low here: its wiggle is
// far above the step error at tight tolerances and breaks norm conservation
// at sample points.)

namespace qdyn {

struct OdeOptions {
    double tol = 1e-9;        // used as both absolute and relative tolerance
    double max_step = 0.0;    // 0 = no cap
    double initial_step = 0.0; // 0 = automatic
    // Project onto the ||y|| = ||y(0)|| manifold after each accepted step.
    // For flows that exactly conserve the 2-norm (unitary evolution, pure
    // Bloch precession) this pins the invariant to rounding level instead of
    // letting it drift linearly with the step count.
    bool renormalize = false;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double tol) {
    const auto sc = (tol + tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).eval();
    const double s = (err.cwiseAbs().array() / sc).square().sum();
    return std::sqrt(s / static_cast<double>(err.size()));
}

// Hairer-style automatic initial step.
template <class State, class Rhs>
double initial_step_guess(Rhs& rhs, double t0, const State& y0, const State& f0,
                          double span, double tol) {
    const auto sc = (tol + tol * y0.cwiseAbs().array()).eval();
    const double n = static_cast<double>(y0.size());
    const double d0 = std::sqrt((y0.cwiseAbs().array() / sc).square().sum() / n);
    const double d1 = std::sqrt((f0.cwiseAbs().array() / sc).square().sum() / n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const State y1 = y0 + h0 * f0;
    const State f1 = rhs(t0 + h0, y1);
    const double d2 =
        std::sqrt(((f1 - f0).cwiseAbs().array() / sc).square().sum() / n) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100 * h0, h1, span});
}

} // namespace detail

// Integrates y' = rhs(t, y) from t0 to t1, invoking sample(g, y(g)) at every
// grid point g (grid must be sorted, within [t0, t1]). Returns the final
// state. Interior grid points are filled by cubic Hermite interpolation over
// each accepted step.
template <class State, class Rhs, class SampleFn>
State integrate_dopri5(Rhs&& rhs, State y, double t0, double t1,
                       const std::vector<double>& grid, SampleFn&& sample,
                       const OdeOptions& opt = {}, OdeStats* stats = nullptr) {
    if (!(opt.tol > 0) || !std::isfinite(opt.tol))
        throw InvalidParams("integrator tolerance must be positive and finite");
    if (!(t1 >= t0) || !std::isfinite(t0) || !std::isfinite(t1))
        throw InvalidParams("integration interval must be finite with t1 >= t0");

    std::size_t gi = 0;
    while (gi < grid.size() && grid[gi] <= t0) {
        sample(grid[gi], y);
        ++gi;
    }
    if (t1 == t0) return y;

    // Dormand-Prince coefficients.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    // dense-output weights of the 5th-order continuous extension
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0,
                            d7 = 69997945.0 / 29380423.0;
    // PI controller (beta = 0.04), as in the reference dopri5 implementation.
    static constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    static constexpr double facmin = 0.2, facmax = 10.0;

    double t = t0;
    const double target_norm = opt.renormalize ? y.norm() : 0.0;
    State k1 = rhs(t, y);
    double h = opt.initial_step > 0
                   ? opt.initial_step
                   : detail::initial_step_guess(rhs, t, y, k1, t1 - t0, opt.tol);
    if (opt.max_step > 0) h = std::min(h, opt.max_step);
    double facold = 1e-4;
    bool last_rejected = false;
    OdeStats local{};

    while (t1 - t > 1e-14 * std::max(1.0, std::abs(t1))) {
        const double hmin = 1e-14 * std::max(1.0, std::abs(t));
        if (h < hmin)
            throw StepSizeUnderflow("step size underflow at tau=" + std::to_string(t));
        if (t + h > t1) h = t1 - t;

        const State k2 = rhs(t + c2 * h, y + h * (a21 * k1));
        const State k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const State k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const State k5 = rhs(t + c5 * h,
                             y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 +
                                             a64 * k4 + a65 * k5));
        State ynew =
            y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const State k7 = rhs(t + h, ynew);  // FSAL
        const State errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 +
                                e6 * k6 + e7 * k7);

        double err = std::numeric_limits<double>::infinity();
        if (ynew.allFinite() && errv.allFinite())
            err = detail::error_norm(errv, y, ynew, opt.tol);

        if (!(err <= 1.0)) {  // rejected (also catches non-finite states)
            ++local.rejected;
            if (!std::isfinite(err)) {
                h *= 0.25;
                if (h < hmin)
                    throw NonFiniteState("state became non-finite at tau=" +
                                         std::to_string(t));
            } else {
                const double fac11 = std::pow(err, expo1);
                h /= std::min(1.0 / facmin, fac11 / safe);
            }
            last_rejected = true;
            continue;
        }

        // accepted
        if (opt.renormalize) {
            const double n = ynew.norm();
            if (n > 0) ynew *= target_norm / n;
        }

        // emit dense output on (t, t+h]
        const double tnew = t + h;
        if (gi < grid.size() && grid[gi] <= tnew + 1e-14 * std::max(1.0, tnew)) {
            const State ydiff = ynew - y;
            const State r3 = h * k1 - ydiff;
            const State r4 = ydiff - h * k7 - r3;
            const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 +
                                  d6 * k6 + d7 * k7);
            while (gi < grid.size() &&
                   grid[gi] <= tnew + 1e-14 * std::max(1.0, tnew)) {
                const double g = grid[gi];
                if (g >= tnew) {
                    sample(g, ynew);
                } else {
                    const double th = (g - t) / h;
                    State u =
                        y + th * (ydiff + (1 - th) * (r3 + th * (r4 + (1 - th) * r5)));
                    if (opt.renormalize) {
                        const double n = u.norm();
                        if (n > 0) u *= target_norm / n;
                    }
                    sample(g, u);
                }
                ++gi;
            }
        }

        ++local.accepted;
        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(1.0 / facmax, std::min(1.0 / facmin, fac / safe));
        double hnew = h / fac;
        if (last_rejected) hnew = std::min(hnew, h);
        facold = std::max(err, 1e-4);
        last_rejected = false;

        y = ynew;
        k1 = k7;
        t = tnew;
        h = hnew;
        if (opt.max_step > 0) h = std::min(h, opt.max_step);
    }

    while (gi < grid.size()) {  // grid points at/after t1 within rounding
        sample(grid[gi], y);
        ++gi;
    }
    if (stats) *stats = local;
    return y;
}

} // namespace qdyn
