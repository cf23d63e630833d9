#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qdyn/errors.hpp"
#include "qdyn/ode.hpp"
#include "qdyn/pulse.hpp"

// Time evolution of the driven two-level system, either as Schrodinger
// amplitudes or as a dissipative Bloch vector. Units: energies in Delta,
// times in 1/Delta (hbar = 1); the bias enters as epsilon(tau) in units of
// Delta.

namespace qdyn {

using QubitAmplitudes = Eigen::Vector2cd;
using BlochVector = Eigen::Vector3d;

struct DissipationRates {
    double gamma_phi = 0.0;   // pure dephasing
    double gamma_relax = 0.0; // energy relaxation toward the initial Z
};

struct TrajectorySample {
    double tau;
    double epsilon;
    double x, y, z;
    double p_up;
    double p_plus;
};

struct TrajectoryMeta {
    double tol = 0.0;
    long steps = 0;
    long rejections = 0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    TrajectoryMeta meta;
};

struct EvolveOptions {
    double tol = 1e-9;
    double max_step = 0.0; // 0 = uncapped
};

// (X, Y, Z) of the state |psi> = psi1|down> + psi2|up>.
inline BlochVector bloch_from_amplitudes(const QubitAmplitudes& psi) {
    const double n2 = psi.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-6)
        throw NotNormalized("amplitudes have |psi|^2 = " + std::to_string(n2));
    const std::complex<double> coh = psi(0) * std::conj(psi(1));
    return BlochVector(2.0 * coh.real(), -2.0 * coh.imag(),
                       std::norm(psi(0)) - std::norm(psi(1)));
}

// Occupation of the instantaneous upper eigenstate of the spin-boson-form
// Hamiltonian -(sigma_x + epsilon sigma_z) at bias epsilon. Written to stay
// finite for arbitrarily large |epsilon|.
inline double prob_plus(const BlochVector& r, double epsilon) {
    double proj; // (X + eps Z) / sqrt(1 + eps^2)
    if (std::abs(epsilon) <= 1.0) {
        proj = (r.x() + epsilon * r.z()) / std::sqrt(1.0 + epsilon * epsilon);
    } else {
        const double t = 1.0 / epsilon; // |t| < 1
        proj = (r.x() * std::abs(t) + std::copysign(1.0, epsilon) * r.z()) /
               std::sqrt(1.0 + t * t);
    }
    return 0.5 * (1.0 - proj);
}

inline std::vector<double> uniform_grid(double tau_end, double dtau) {
    if (!(tau_end >= 0) || !std::isfinite(tau_end))
        throw InvalidParams("tau_end must be finite and non-negative");
    if (!(dtau > 0) || !std::isfinite(dtau))
        throw InvalidParams("grid spacing must be positive and finite");
    const long n = std::lround(tau_end / dtau);
    if (n <= 0) return {0.0};
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i)
        g.push_back(tau_end * static_cast<double>(i) / static_cast<double>(n));
    return g;
}

namespace detail {

inline void check_evolve_args(const std::vector<double>& grid, double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-4))
        throw InvalidParams("tolerance must lie in [1e-12, 1e-4]");
    if (grid.empty()) throw InvalidParams("sample grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0)
            throw InvalidParams("grid points must be finite and non-negative");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw InvalidParams("grid must be strictly increasing");
    }
}

inline std::vector<double> with_leading_zero(std::vector<double> grid) {
    if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
    return grid;
}

} // namespace detail

// Integrates i psi1' = psi2 + eps(tau) psi1, i psi2' = psi1 - eps(tau) psi2
// from psi(0) = psi0 and samples the trajectory on `grid` (a leading tau = 0
// point is added if absent).
inline Trajectory evolve_schrodinger(const BiasPulse& pulse,
                                     const std::vector<double>& grid,
                                     const EvolveOptions& opt = {},
                                     const QubitAmplitudes& psi0 = QubitAmplitudes(1, 0)) {
    detail::check_evolve_args(grid, opt.tol);
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-6)
        throw NotNormalized("initial amplitudes are not normalized");
    const auto g = detail::with_leading_zero(grid);

    const std::complex<double> mi(0, -1);
    auto rhs = [&](double tau, const QubitAmplitudes& psi) -> QubitAmplitudes {
        const double eps = pulse(tau);
        return QubitAmplitudes(mi * (psi(1) + eps * psi(0)),
                               mi * (psi(0) - eps * psi(1)));
    };

    Trajectory traj;
    traj.samples.reserve(g.size());
    auto emit = [&](double tau, const QubitAmplitudes& psi) {
        const double eps = pulse(tau);
        const std::complex<double> coh = psi(0) * std::conj(psi(1));
        const double x = 2.0 * coh.real();
        const double y = -2.0 * coh.imag();
        const double z = std::norm(psi(0)) - std::norm(psi(1));
        traj.samples.push_back({tau, eps, x, y, z, std::norm(psi(1)),
                                prob_plus(BlochVector(x, y, z), eps)});
    };

    // The exact flow is unitary, so pin the norm each step.
    OdeOptions oopt{opt.tol, opt.max_step, 0.0, true};
    OdeStats stats;
    integrate_dopri5(rhs, QubitAmplitudes(psi0), 0.0, g.back(), g, emit, oopt, &stats);
    traj.meta = {opt.tol, stats.accepted, stats.rejected};
    return traj;
}

// Dissipative Bloch equations:
//   X' = -2 eps Y - gamma_phi X
//   Y' = -2 Z + 2 eps X - gamma_phi Y
//   Z' =  2 Y - gamma_relax (Z - Z(0))
inline Trajectory evolve_bloch(const BiasPulse& pulse, const DissipationRates& rates,
                               const std::vector<double>& grid,
                               const EvolveOptions& opt = {},
                               const BlochVector& r0 = BlochVector(0, 0, 1)) {
    detail::check_evolve_args(grid, opt.tol);
    if (!(rates.gamma_phi >= 0) || !(rates.gamma_relax >= 0) ||
        !std::isfinite(rates.gamma_phi) || !std::isfinite(rates.gamma_relax))
        throw InvalidParams("dissipation rates must be finite and non-negative");
    if (r0.norm() > 1.0 + 1e-6)
        throw NotNormalized("initial Bloch vector lies outside the unit ball");
    const auto g = detail::with_leading_zero(grid);

    const double z_eq = r0.z();
    auto rhs = [&](double tau, const BlochVector& r) -> BlochVector {
        const double eps = pulse(tau);
        return BlochVector(-2.0 * eps * r.y() - rates.gamma_phi * r.x(),
                           -2.0 * r.z() + 2.0 * eps * r.x() - rates.gamma_phi * r.y(),
                           2.0 * r.y() - rates.gamma_relax * (r.z() - z_eq));
    };

    Trajectory traj;
    traj.samples.reserve(g.size());
    auto emit = [&](double tau, const BlochVector& r) {
        const double eps = pulse(tau);
        traj.samples.push_back({tau, eps, r.x(), r.y(), r.z(),
                                0.5 * (1.0 - r.z()), prob_plus(r, eps)});
    };

    // Dissipationless precession conserves |r|; with damping it contracts.
    const bool unitary = rates.gamma_phi == 0.0 && rates.gamma_relax == 0.0;
    OdeOptions oopt{opt.tol, opt.max_step, 0.0, unitary};
    OdeStats stats;
    integrate_dopri5(rhs, BlochVector(r0), 0.0, g.back(), g, emit, oopt, &stats);
    traj.meta = {opt.tol, stats.accepted, stats.rejected};
    return traj;
}

} // namespace qdyn
