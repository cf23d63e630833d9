#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdyn/analytic.hpp"
#include "qdyn/dynamics.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/pulse.hpp"

// Self-checks: closed forms vs direct integration, Schrodinger/Bloch
// consistency, conserved quantities, and an empirical convergence order.
// The amplitude->Bloch map is injectable so the harness can prove the checks
// actually bite (a deliberately wrong map must fail them).

namespace qdyn {

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_err = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    double convergence_order = 0.0;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

using AmplitudeMap = BlochVector (*)(const QubitAmplitudes&);

inline BlochVector bloch_from_amplitudes_yflip(const QubitAmplitudes& psi) {
    BlochVector r = bloch_from_amplitudes(psi);
    r.y() = -r.y();
    return r;
}

namespace detail {

// Re-integrates the Schrodinger amplitudes to compare against `map` and the
// Bloch evolution; shared by several checks.
struct VerifyCase {
    PulseParams pulse;
    double tau_end;
};

inline const std::vector<VerifyCase>& verify_cases() {
    static const std::vector<VerifyCase> cases = {
        {{Family::Family1, 1.0 / std::sqrt(3.0), 0.0, 0.0}, 30.0},
        {{Family::Family2, std::sqrt(1.0 + 2.0 / std::sqrt(5.0)), 0.0, 0.0}, 30.0},
        {{Family::Family3, std::sqrt(48.0), 6.88, 0.0}, 30.0},
    };
    return cases;
}

} // namespace detail

inline VerifyReport run_verify(double tol = 1e-9,
                               AmplitudeMap map = &bloch_from_amplitudes) {
    VerifyReport rep;
    const double agree_thresh = std::max(1e-6, 100.0 * tol);

    // 1-2: closed forms against direct integration.
    const std::vector<double> xis = {0.3, 1.0 / std::sqrt(3.0), 1.0, 2.0};
    for (int fam_i = 0; fam_i < 2; ++fam_i) {
        const Family fam = fam_i == 0 ? Family::Family1 : Family::Family2;
        double worst = 0.0;
        for (double xi : xis) {
            const BiasPulse pulse = make_pulse({fam, xi, 0.0, 0.0});
            const auto traj =
                evolve_schrodinger(pulse, uniform_grid(30.0, 0.05), {tol, 0.0});
            for (const auto& s : traj.samples) {
                const double ref = fam == Family::Family1 ? p1_up(s.tau, xi)
                                                          : p2_up(s.tau, xi);
                worst = std::max(worst, std::abs(s.p_up - ref));
            }
        }
        rep.checks.push_back({fam_i == 0 ? "closed_form_family1"
                                         : "closed_form_family2",
                              worst <= agree_thresh, worst, agree_thresh,
                              "max |closed form - integrated| over xi in "
                              "{0.3, 0.577, 1, 2}, tau in [0,30]"});
    }

    // 3: dissipationless Bloch evolution matches mapped amplitudes.
    {
        double worst = 0.0;
        double worst_norm = 0.0;
        for (const auto& vc : detail::verify_cases()) {
            const BiasPulse pulse = make_pulse(vc.pulse);
            const auto grid = uniform_grid(vc.tau_end, 0.05);
            const auto bl = evolve_bloch(pulse, {0.0, 0.0}, grid, {tol, 0.0});

            // Re-run the amplitudes and map through the injectable hook.
            std::vector<BlochVector> mapped;
            mapped.reserve(grid.size());
            const std::complex<double> mi(0, -1);
            auto rhs = [&](double tau, const QubitAmplitudes& psi) {
                const double eps = pulse(tau);
                return QubitAmplitudes(mi * (psi(1) + eps * psi(0)),
                                       mi * (psi(0) - eps * psi(1))).eval();
            };
            auto emit = [&](double, const QubitAmplitudes& psi) {
                worst_norm = std::max(worst_norm, std::abs(psi.squaredNorm() - 1.0));
                mapped.push_back(map(psi));
            };
            integrate_dopri5(rhs, QubitAmplitudes(1, 0), 0.0, vc.tau_end, grid,
                             emit, {tol, 0.0, 0.0, true});
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const auto& s = bl.samples[i];
                const BlochVector d =
                    mapped[i] - BlochVector(s.x, s.y, s.z);
                worst = std::max(worst, d.cwiseAbs().maxCoeff());
            }
        }
        rep.checks.push_back({"bloch_agreement_gamma0", worst <= agree_thresh,
                              worst, agree_thresh,
                              "componentwise Schrodinger vs Bloch, all three "
                              "pulse shapes, Gamma = 0"});
        rep.checks.push_back({"norm_conservation", worst_norm <= 10.0 * tol,
                              worst_norm, 10.0 * tol,
                              "| |psi|^2 - 1 | along the Schrodinger runs"});
    }

    // 4: dissipative trajectories stay inside the Bloch ball.
    {
        const BiasPulse pulse =
            make_pulse({Family::Family1, 1.0 / std::sqrt(3.0), 0.0, 0.0});
        double worst = 0.0;
        for (double gamma : {0.01, 0.1}) {
            const auto traj = evolve_bloch(pulse, {gamma, gamma},
                                           uniform_grid(20.0, 0.05), {tol, 0.0});
            for (const auto& s : traj.samples) {
                const double r2 = s.x * s.x + s.y * s.y + s.z * s.z;
                worst = std::max(worst, r2 - 1.0);
            }
        }
        rep.checks.push_back({"bloch_ball_containment", worst <= 10.0 * tol,
                              worst, 10.0 * tol,
                              "max(X^2+Y^2+Z^2 - 1) with gamma_phi = "
                              "gamma_relax in {0.01, 0.1}"});
    }

    // 5: empirical convergence order. The adaptive controller keeps the
    // tolerance-to-error map near linear whatever the method order, so the
    // order is measured the classical way: cap the step so it is effectively
    // fixed, halve it, and fit the slope of the final-state error. Final
    // states are raw integrator output (no interpolation involved).
    {
        const BiasPulse pulse = make_pulse({Family::Family1, 1.0, 0.0, 0.0});
        auto p_at_end = [&](double t, double h) {
            const auto traj = evolve_schrodinger(pulse, {20.0}, {t, h});
            return traj.samples.back().p_up;
        };
        const double ref = p_at_end(1e-12, 0.0);
        std::vector<double> lh, le;
        for (double h : {0.1, 0.05, 0.025, 0.0125}) {
            const double err =
                std::max(std::abs(p_at_end(1e-4, h) - ref), 1e-15);
            lh.push_back(std::log(h));
            le.push_back(std::log(err));
        }
        double mh = 0, me = 0;
        for (std::size_t i = 0; i < lh.size(); ++i) { mh += lh[i]; me += le[i]; }
        mh /= lh.size(); me /= le.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < lh.size(); ++i) {
            num += (lh[i] - mh) * (le[i] - me);
            den += (lh[i] - mh) * (lh[i] - mh);
        }
        rep.convergence_order = num / den; // slope of log err vs log h
        rep.checks.push_back({"convergence_order", rep.convergence_order >= 4.0,
                              rep.convergence_order, 4.0,
                              "slope of final-state error under step halving; "
                              "threshold is a lower bound"});
    }

    return rep;
}

inline nlohmann::json report_json(const VerifyReport& rep) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : rep.checks)
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"max_err", c.max_err},
                               {"threshold", c.threshold},
                               {"note", c.note}});
    j["convergence_order"] = rep.convergence_order;
    j["all_pass"] = rep.all_pass();
    return j;
}

} // namespace qdyn
