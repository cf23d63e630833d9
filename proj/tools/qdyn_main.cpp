// Command-line front end: pulse tables, trajectory evolution, closed-form
// series, long-time averages, xi sweeps, figure reproduction and self-checks.
//
// Exit codes: 0 success, 2 usage error, 3 validation error, 4 numerical
// failure (including failed verify checks).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdyn/analytic.hpp"
#include "qdyn/averaging.hpp"
#include "qdyn/dynamics.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/figures.hpp"
#include "qdyn/io.hpp"
#include "qdyn/pulse.hpp"
#include "qdyn/verify.hpp"

namespace {

int g_exit = 0;

struct CommonOpts {
    std::string family = "family1";
    double xi = 1.0;
    double omega = 0.0;
    double phi = 0.0;
    double gamma_phi = 0.0;
    double gamma_relax = 0.0;
    double tau_end = 100.0;
    double tol = 1e-9;
    double grid = 0.01;
    double max_step = 0.0;
    double window = 500.0;
    std::string method = "auto";
    std::string format = "csv";
    std::string out;
};

qdyn::Family parse_family(const std::string& s) {
    if (s == "1" || s == "2" || s == "3") return qdyn::family_from_name("family" + s);
    return qdyn::family_from_name(s);
}

qdyn::BiasPulse pulse_from(const CommonOpts& o) {
    qdyn::PulseParams p;
    p.family = parse_family(o.family);
    p.xi = o.xi;
    p.omega = o.omega;
    p.phi = o.phi;
    return qdyn::make_pulse(p);
}

std::string resolve_out(const std::string& out) {
    if (out.empty()) return out;
    std::filesystem::path p(out);
    if (p.is_relative())
        if (const char* dir = std::getenv("QDYN_OUT_DIR"))
            return (std::filesystem::path(dir) / p).string();
    return out;
}

void emit(const qdyn::Table& t, const std::string& format, const std::string& out) {
    const std::string path = resolve_out(out);
    if (path.empty()) {
        qdyn::write_table(std::cout, t, format);
        return;
    }
    std::ofstream f(path);
    if (!f) throw qdyn::ValidationError("cannot open output file '" + path + "'");
    qdyn::write_table(f, t, format);
}

void add_pulse_flags(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--family", o.family,
                    "pulse shape: constant|family1|family2|family3 (or 1|2|3)")
        ->capture_default_str();
    sub->add_option("--xi", o.xi, "bias amplitude in units of the tunneling energy")
        ->capture_default_str();
    sub->add_option("--omega", o.omega, "oscillation frequency (family3)")
        ->capture_default_str();
    sub->add_option("--phi", o.phi, "phase offset (family3)")->capture_default_str();
}

void add_rate_flags(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--gamma-phi", o.gamma_phi, "pure dephasing rate")
        ->capture_default_str();
    sub->add_option("--gamma-relax", o.gamma_relax, "relaxation rate")
        ->capture_default_str();
}

void add_output_flags(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--out", o.out,
                    "output file (default stdout; relative paths resolve "
                    "under $QDYN_OUT_DIR if set)");
}

// Config files are read by the top-level --config option (sections named
// after the subcommand); fallthrough lets the flag be given after the
// subcommand name as well.
void add_config_flags(CLI::App* sub) {
    sub->fallthrough();
    sub->add_flag_callback(
            "--dump-config",
            [sub] {
                std::cout << '[' << sub->get_name() << "]\n"
                          << sub->config_to_str(true, true);
                throw CLI::Success{};
            },
            "print the effective config (usable as a --config file) and exit")
        ->configurable(false);
}

// `figure` and `verify` carry their own callbacks; the rest funnel here.
qdyn::Trajectory evolve_auto(const qdyn::BiasPulse& pulse, const CommonOpts& o,
                             double tau_end) {
    const bool dissipative = o.gamma_phi > 0 || o.gamma_relax > 0;
    std::string m = o.method;
    if (m == "auto") m = dissipative ? "bloch" : "schrodinger";
    const auto grid = qdyn::uniform_grid(tau_end, o.grid);
    if (m == "schrodinger") {
        if (dissipative)
            throw qdyn::InvalidParams(
                "method=schrodinger cannot represent dissipation; use bloch");
        return qdyn::evolve_schrodinger(pulse, grid, {o.tol, o.max_step});
    }
    return qdyn::evolve_bloch(pulse, {o.gamma_phi, o.gamma_relax}, grid,
                              {o.tol, o.max_step});
}

qdyn::ParamList run_params(const qdyn::BiasPulse& pulse, const CommonOpts& o,
                           bool with_rates) {
    auto params = qdyn::pulse_params(pulse);
    if (with_rates) {
        params.emplace_back("gamma_phi", qdyn::g17(o.gamma_phi));
        params.emplace_back("gamma_relax", qdyn::g17(o.gamma_relax));
    }
    return params;
}

void run_bias(const CommonOpts& o) {
    const auto pulse = pulse_from(o);
    qdyn::Table t;
    t.columns = {"tau", "epsilon"};
    qdyn::TableBlock blk;
    blk.params = qdyn::pulse_params(pulse);
    const auto range = qdyn::pulse_range(pulse);
    blk.params.emplace_back("epsilon_min", qdyn::g17(range.first));
    blk.params.emplace_back("epsilon_max", qdyn::g17(range.second));
    for (double tau : qdyn::uniform_grid(o.tau_end, o.grid))
        blk.rows.push_back({tau, pulse(tau)});
    t.blocks.push_back(std::move(blk));
    emit(t, o.format, o.out);
}

void run_evolve(const CommonOpts& o) {
    const auto pulse = pulse_from(o);
    const auto traj = evolve_auto(pulse, o, o.tau_end);
    auto params = run_params(pulse, o, true);
    params.emplace_back("method", o.gamma_phi > 0 || o.gamma_relax > 0 ||
                                          o.method == "bloch"
                                      ? "bloch"
                                      : "schrodinger");
    emit(qdyn::trajectory_table(traj, std::move(params)), o.format, o.out);
}

void run_analytic(const CommonOpts& o) {
    const qdyn::Family fam = parse_family(o.family);
    if (fam != qdyn::Family::Family1 && fam != qdyn::Family::Family2)
        throw qdyn::InvalidParams(
            "closed-form series exist for family1 and family2 only");
    qdyn::Table t;
    t.columns = {"tau", "p_up"};
    qdyn::TableBlock blk;
    blk.params = {{"family", qdyn::family_name(fam)},
                  {"xi", qdyn::g17(o.xi)},
                  {"method", "closed_form"}};
    for (double tau : qdyn::uniform_grid(o.tau_end, o.grid))
        blk.rows.push_back({tau, fam == qdyn::Family::Family1
                                     ? qdyn::p1_up(tau, o.xi)
                                     : qdyn::p2_up(tau, o.xi)});
    t.blocks.push_back(std::move(blk));
    emit(t, o.format, o.out);
}

void run_average(const CommonOpts& o) {
    const qdyn::Family fam = parse_family(o.family);
    qdyn::Table t;
    t.columns = {"xi", "window", "value", "error_estimate"};
    qdyn::TableBlock blk;

    if (o.method == "analytic") {
        if (fam != qdyn::Family::Family1 && fam != qdyn::Family::Family2)
            throw qdyn::InvalidParams(
                "closed-form averages exist for family1 and family2 only");
        if (o.gamma_phi > 0 || o.gamma_relax > 0)
            throw qdyn::InvalidParams(
                "closed-form averages are dissipationless; drop the rates or "
                "use --method numeric");
        const double v = fam == qdyn::Family::Family1 ? qdyn::p1_avg(o.xi)
                                                      : qdyn::p2_avg(o.xi);
        blk.params = {{"family", qdyn::family_name(fam)},
                      {"method", "closed_form"}};
        blk.rows.push_back({o.xi, 0.0, v, 0.0});
    } else {
        const auto pulse = pulse_from(o);
        CommonOpts g = o;
        if (g.grid == 0.01) g.grid = 0.02; // coarser default is plenty here
        const auto traj = evolve_auto(pulse, g, o.window);
        const auto ar = qdyn::average_trajectory(traj);
        blk.params = run_params(pulse, o, true);
        blk.params.emplace_back("method", "trajectory_mean");
        blk.rows.push_back({o.xi, ar.window, ar.value, ar.error_estimate});
    }
    t.blocks.push_back(std::move(blk));
    emit(t, o.format, o.out);
}

struct SweepOpts {
    std::string param = "xi";
    double lo = 0.0, hi = 0.0;
    long steps = 0;
    std::string observable;
};

void run_sweep(const CommonOpts& o, const SweepOpts& s) {
    const qdyn::Family fam = parse_family(o.family);
    auto one = [&](double xi) -> double {
        if (s.observable == "p_avg_analytic") {
            if (fam == qdyn::Family::Family1) return qdyn::p1_avg(xi);
            if (fam == qdyn::Family::Family2) return qdyn::p2_avg(xi);
            throw qdyn::InvalidParams(
                "p_avg_analytic exists for family1 and family2 only");
        }
        CommonOpts local = o;
        local.xi = xi;
        const auto pulse = pulse_from(local);
        if (s.observable == "p_avg_numeric") {
            CommonOpts g = local;
            if (g.grid == 0.01) g.grid = 0.02;
            return qdyn::average_trajectory(evolve_auto(pulse, g, o.window)).value;
        }
        const auto traj = evolve_auto(pulse, local, o.tau_end);
        if (s.observable == "p_plus_max") {
            double m = 0.0;
            for (const auto& smp : traj.samples) m = std::max(m, smp.p_plus);
            return m;
        }
        return qdyn::super_half_duration(traj); // super_half_duration
    };

    std::vector<double> xis(static_cast<std::size_t>(s.steps));
    for (long i = 0; i < s.steps; ++i)
        xis[static_cast<std::size_t>(i)] =
            s.lo + (s.hi - s.lo) * static_cast<double>(i) /
                       static_cast<double>(s.steps - 1);

    std::vector<double> vals(xis.size());
    if (s.observable == "p_avg_analytic") {
        for (std::size_t i = 0; i < xis.size(); ++i) vals[i] = one(xis[i]);
    } else {
        std::vector<std::future<double>> futs;
        futs.reserve(xis.size());
        for (double xi : xis)
            futs.push_back(std::async(std::launch::async, one, xi));
        for (std::size_t i = 0; i < futs.size(); ++i) vals[i] = futs[i].get();
    }

    qdyn::Table t;
    t.columns = {"xi", s.observable};
    qdyn::TableBlock blk;
    blk.params = {{"family", qdyn::family_name(fam)},
                  {"observable", s.observable},
                  {"gamma_phi", qdyn::g17(o.gamma_phi)},
                  {"gamma_relax", qdyn::g17(o.gamma_relax)}};
    if (s.observable == "p_avg_numeric")
        blk.params.emplace_back("window", qdyn::g17(o.window));
    if (s.observable == "p_plus_max" || s.observable == "super_half_duration")
        blk.params.emplace_back("tau_end", qdyn::g17(o.tau_end));
    for (std::size_t i = 0; i < xis.size(); ++i)
        blk.rows.push_back({xis[i], vals[i]});
    t.blocks.push_back(std::move(blk));
    emit(t, o.format, o.out);
}

void run_figure(const std::string& name, const CommonOpts& o, double xi_step) {
    qdyn::FigureOptions fo;
    fo.tol = o.tol;
    fo.dtau = o.grid; // 0 = per-figure default
    fo.xi_step = xi_step;
    emit(qdyn::figure_table(name, fo), o.format, o.out);
}

void run_verify(const CommonOpts& o, bool inject_y_flip) {
    const auto rep = qdyn::run_verify(
        o.tol, inject_y_flip ? &qdyn::bloch_from_amplitudes_yflip
                             : &qdyn::bloch_from_amplitudes);
    for (const auto& c : rep.checks)
        std::cerr << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                  << "  max_err=" << qdyn::g17(c.max_err)
                  << "  threshold=" << qdyn::g17(c.threshold) << '\n';
    std::cerr << "convergence order estimate: "
              << qdyn::g17(rep.convergence_order) << '\n';

    const std::string path = resolve_out(o.out);
    const std::string body = qdyn::report_json(rep).dump(2) + "\n";
    if (path.empty()) {
        std::cout << body;
    } else {
        std::ofstream f(path);
        if (!f)
            throw qdyn::ValidationError("cannot open output file '" + path + "'");
        f << body;
    }
    if (!rep.all_pass()) g_exit = 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Driven two-level system: exactly solvable bias pulses, closed-form "
        "occupation probabilities, dissipative Bloch dynamics"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "ini file with one [subcommand] section per command; "
                   "command-line flags override");

    CommonOpts bias_o, evolve_o, analytic_o, average_o, sweep_o, figure_o,
        verify_o;
    SweepOpts sweep_s;
    std::string figure_name;
    double figure_xi_step = 0.0;
    bool inject_y_flip = false;

    auto* bias = app.add_subcommand("bias", "tabulate the bias pulse epsilon(tau)");
    add_pulse_flags(bias, bias_o);
    bias->add_option("--tau-end", bias_o.tau_end, "end of the time grid")
        ->capture_default_str();
    bias->add_option("--grid", bias_o.grid, "time grid spacing")
        ->capture_default_str();
    add_output_flags(bias, bias_o);
    add_config_flags(bias);
    bias->callback([&] { run_bias(bias_o); });

    auto* evolve = app.add_subcommand(
        "evolve", "integrate the dynamics and tabulate the trajectory");
    add_pulse_flags(evolve, evolve_o);
    add_rate_flags(evolve, evolve_o);
    evolve->add_option("--tau-end", evolve_o.tau_end, "end of the time grid")
        ->capture_default_str();
    evolve->add_option("--tol", evolve_o.tol, "integrator tolerance")
        ->capture_default_str();
    evolve->add_option("--grid", evolve_o.grid, "time grid spacing")
        ->capture_default_str();
    evolve->add_option("--max-step", evolve_o.max_step,
                       "cap on the adaptive step (0 = uncapped)")
        ->capture_default_str();
    evolve
        ->add_option("--method", evolve_o.method,
                     "integration picture (auto picks bloch when dissipative)")
        ->check(CLI::IsMember({"auto", "schrodinger", "bloch"}))
        ->capture_default_str();
    add_output_flags(evolve, evolve_o);
    add_config_flags(evolve);
    evolve->callback([&] { run_evolve(evolve_o); });

    auto* analytic = app.add_subcommand(
        "analytic", "tabulate the closed-form occupation probability");
    add_pulse_flags(analytic, analytic_o);
    analytic->add_option("--tau-end", analytic_o.tau_end, "end of the time grid")
        ->capture_default_str();
    analytic->add_option("--grid", analytic_o.grid, "time grid spacing")
        ->capture_default_str();
    add_output_flags(analytic, analytic_o);
    add_config_flags(analytic);
    analytic->callback([&] { run_analytic(analytic_o); });

    auto* average = app.add_subcommand(
        "average", "long-time mean occupation for one parameter point");
    add_pulse_flags(average, average_o);
    add_rate_flags(average, average_o);
    average->add_option("--window", average_o.window, "averaging window")
        ->capture_default_str();
    average
        ->add_option("--method", average_o.method, "numeric|analytic")
        ->check(CLI::IsMember({"numeric", "analytic", "auto"}))
        ->capture_default_str();
    average->add_option("--tol", average_o.tol, "integrator tolerance")
        ->capture_default_str();
    average->add_option("--grid", average_o.grid, "time grid spacing")
        ->capture_default_str();
    add_output_flags(average, average_o);
    add_config_flags(average);
    average->callback([&] {
        if (average_o.method == "auto") average_o.method = "numeric";
        run_average(average_o);
    });

    auto* sweep = app.add_subcommand(
        "sweep", "tabulate an observable across a range of xi");
    add_pulse_flags(sweep, sweep_o);
    add_rate_flags(sweep, sweep_o);
    sweep->add_option("--param", sweep_s.param, "swept parameter")
        ->check(CLI::IsMember({"xi"}))
        ->capture_default_str();
    sweep->add_option("--lo", sweep_s.lo, "lower end of the sweep")->required();
    sweep->add_option("--hi", sweep_s.hi, "upper end of the sweep")->required();
    sweep->add_option("--steps", sweep_s.steps, "number of sweep points (>= 2)")
        ->required()
        ->check(CLI::Range(static_cast<long>(2), static_cast<long>(1000000)));
    sweep
        ->add_option("--observable", sweep_s.observable, "what to tabulate")
        ->required()
        ->check(CLI::IsMember({"p_avg_numeric", "p_avg_analytic", "p_plus_max",
                               "super_half_duration"}));
    sweep->add_option("--window", sweep_o.window,
                      "averaging window (p_avg_numeric)")
        ->capture_default_str();
    sweep->add_option("--tau-end", sweep_o.tau_end,
                      "trajectory end (p_plus_max, super_half_duration)")
        ->capture_default_str();
    sweep->add_option("--tol", sweep_o.tol, "integrator tolerance")
        ->capture_default_str();
    sweep->add_option("--grid", sweep_o.grid, "time grid spacing")
        ->capture_default_str();
    add_output_flags(sweep, sweep_o);
    add_config_flags(sweep);
    sweep->callback([&] {
        if (!(sweep_s.lo < sweep_s.hi))
            throw CLI::ValidationError("--lo/--hi", "sweep needs lo < hi");
        run_sweep(sweep_o, sweep_s);
    });

    auto* figure = app.add_subcommand(
        "figure", "emit the data series for a canned figure");
    figure->add_option("name", figure_name, "one of: fig1a fig1b fig2a fig2b fig3 fig4a fig4b fig5a fig5b")
        ->required();
    figure->add_option("--tol", figure_o.tol, "integrator tolerance")
        ->capture_default_str();
    figure->add_option("--grid", figure_o.grid,
                       "time grid spacing (0 = figure default)")
        ->default_val(0.0);
    figure->add_option("--xi-step", figure_xi_step,
                       "xi grid spacing for averaged figures (0 = default)")
        ->capture_default_str();
    add_output_flags(figure, figure_o);
    add_config_flags(figure);
    figure->callback([&] { run_figure(figure_name, figure_o, figure_xi_step); });

    auto* verify = app.add_subcommand(
        "verify", "run the self-check suite and emit a JSON report");
    verify->add_option("--tol", verify_o.tol, "integrator tolerance")
        ->capture_default_str();
    verify->add_flag("--inject-y-flip", inject_y_flip,
                     "test hook: corrupt the amplitude->Bloch map to prove "
                     "the checks can fail");
    verify->add_option("--out", verify_o.out, "write the JSON report here");
    add_config_flags(verify);
    verify->callback([&] { run_verify(verify_o, inject_y_flip); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) { // help, version, --dump-config
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const qdyn::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 3;
    } catch (const qdyn::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 4;
    }
    return g_exit;
}
