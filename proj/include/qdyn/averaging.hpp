#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qdyn/dynamics.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/pulse.hpp"

// Long-time averages of occupation probabilities and 1-d peak location.

namespace qdyn {

struct AverageResult {
    double value = 0.0;
    double window = 0.0;
    // |avg over window - avg over window/2|: a crude but honest convergence
    // indicator for the infinite-window limit.
    double error_estimate = 0.0;
};

// Mean of f over [0, window] by composite trapezoid with Kahan summation.
// If the caller knows the natural oscillation period, passing it selects the
// resolution (32 samples per period) and arms the window check: averaging
// over fewer than 100 periods throws WindowTooSmall.
inline AverageResult time_average(const std::function<double(double)>& f,
                                  double window, double period = 0.0) {
    if (!(window > 0) || !std::isfinite(window))
        throw InvalidParams("averaging window must be positive and finite");
    if (period < 0 || !std::isfinite(period))
        throw InvalidParams("period must be finite and non-negative");
    if (period > 0 && window < 100.0 * period)
        throw WindowTooSmall("window " + std::to_string(window) +
                             " spans fewer than 100 periods of " +
                             std::to_string(period));

    const double h0 = period > 0 ? period / 32.0 : window / 4096.0;
    long n = static_cast<long>(std::ceil(window / h0));
    if (n < 8) n = 8;
    if (n % 2) ++n;

    // Trapezoid weights are 1 except 1/2 at both ends; accumulate with Kahan
    // compensation since n can reach ~10^6 for slow dissipative windows.
    double sum = 0.0, comp = 0.0;
    double sum_half = 0.0; // running value at i = n/2 (end weight fixed below)
    double fn_half = 0.0;
    for (long i = 0; i <= n; ++i) {
        const double x = window * static_cast<double>(i) / static_cast<double>(n);
        const double fx = f(x);
        if (!std::isfinite(fx))
            throw NonFiniteState("average integrand is not finite at tau=" +
                                 std::to_string(x));
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double term = w * fx - comp;
        const double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        if (i == n / 2) {
            sum_half = sum;
            fn_half = fx;
        }
    }
    const double avg = sum / static_cast<double>(n);
    const double avg_half =
        (sum_half - 0.5 * fn_half) / static_cast<double>(n / 2);
    return {avg, window, std::abs(avg - avg_half)};
}

// Trapezoid mean of p_up along an already-computed trajectory.
inline AverageResult average_trajectory(const Trajectory& traj) {
    const auto& s = traj.samples;
    if (s.size() < 2) throw InvalidParams("trajectory has fewer than 2 samples");
    const double span = s.back().tau - s.front().tau;
    const double t_half = s.front().tau + 0.5 * span;
    double acc = 0.0, acc_half = 0.0;
    bool past_half = false;
    double span_half = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        acc += 0.5 * (s[i].p_up + s[i - 1].p_up) * (s[i].tau - s[i - 1].tau);
        if (!past_half && s[i].tau >= t_half) {
            past_half = true;
            acc_half = acc;
            span_half = s[i].tau - s.front().tau;
        }
    }
    const double avg = acc / span;
    const double avg_half = span_half > 0 ? acc_half / span_half : avg;
    return {avg, span, std::abs(avg - avg_half)};
}

// Total time the upper-level occupation exceeds 1/2 along a trajectory
// (the inverse-population window), with linear interpolation of crossings.
inline double super_half_duration(const Trajectory& traj) {
    const auto& s = traj.samples;
    double acc = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double a = s[i - 1].p_plus - 0.5;
        const double b = s[i].p_plus - 0.5;
        const double dt = s[i].tau - s[i - 1].tau;
        if (a > 0 && b > 0)
            acc += dt;
        else if (a > 0 && b <= 0)
            acc += dt * a / (a - b);
        else if (a <= 0 && b > 0)
            acc += dt * b / (b - a);
    }
    return acc;
}

// Locates the maximum of f on [lo, hi]: a 64-interval coarse scan guards
// against multiple separated near-maximal regions (NotUnimodal), then a
// golden-section refinement sharpens the bracket around the winning sample.
// A function flat to within 1e-6 over the whole range yields the midpoint.
inline std::pair<double, double> find_peak(const std::function<double(double)>& f,
                                           double lo, double hi,
                                           double xtol = 1e-8) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InvalidParams("find_peak needs a finite interval with lo < hi");
    if (!(xtol > 0)) throw InvalidParams("find_peak xtol must be positive");

    constexpr int kIntervals = 64;
    std::vector<double> xs(kIntervals + 1), vs(kIntervals + 1);
    double vmax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kIntervals; ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / kIntervals;
        vs[i] = f(xs[i]);
        if (!std::isfinite(vs[i]))
            throw NonFiniteState("find_peak objective is not finite at x=" +
                                 std::to_string(xs[i]));
        vmax = std::max(vmax, vs[i]);
    }

    // Cluster the near-maximal samples; separated clusters mean the coarse
    // shape is not unimodal, so refinement could silently pick a wrong lobe.
    constexpr double kTie = 1e-6;
    int first = -1, last = -1;
    int clusters = 0;
    bool in_run = false;
    for (int i = 0; i <= kIntervals; ++i) {
        const bool cand = vs[i] >= vmax - kTie;
        if (cand && !in_run) {
            ++clusters;
            if (clusters == 1) first = i;
        }
        if (cand) last = i;
        in_run = cand;
    }
    if (clusters > 1)
        throw NotUnimodal("objective has " + std::to_string(clusters) +
                          " separated near-maximal regions on the scan grid");
    if (first == 0 && last == kIntervals) { // flat within the tie tolerance
        const double mid = 0.5 * (lo + hi);
        return {mid, f(mid)};
    }

    const int m = (first + last) / 2;
    const double a = xs[std::max(m - 1, 0)];
    const double b = xs[std::min(m + 1, kIntervals)];
    const double xpk = detail::golden_max(f, a, b, xtol);
    return {xpk, f(xpk)};
}

} // namespace qdyn
