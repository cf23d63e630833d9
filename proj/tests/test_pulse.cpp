#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qdyn/pulse.hpp"

using namespace qdyn;

TEST_CASE("family names round-trip") {
    for (Family f : {Family::Constant, Family::Family1, Family::Family2,
                     Family::Family3})
        CHECK(family_from_name(family_name(f)) == f);
    CHECK_THROWS_AS(family_from_name("family4"), InvalidParams);
    CHECK_THROWS_AS(family_from_name(""), InvalidParams);
}

TEST_CASE("family1 values and symmetry") {
    const BiasPulse p = make_pulse({Family::Family1, 1.0, 0, 0});
    CHECK(p(0.0) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(p(1000.0) == doctest::Approx(0.99999900000025).epsilon(1e-15));
    CHECK(p(2.5) == p(-2.5)); // even in tau
    const BiasPulse q = make_pulse({Family::Family1, 0.5, 0, 0});
    CHECK(q(0.0) == doctest::Approx(-1.5).epsilon(1e-15));
}

TEST_CASE("family2 values, symmetry, asymptote") {
    const BiasPulse p = make_pulse({Family::Family2, 0.5, 0, 0});
    CHECK(p(0.0) == doctest::Approx(2.5).epsilon(1e-15)); // 45/9 * xi
    CHECK(p(2.0) == doctest::Approx(-0.46943231441048033).epsilon(1e-14));
    CHECK(p(3.25) == p(-3.25));
    const BiasPulse q = make_pulse({Family::Family2, 0.7, 0, 0});
    CHECK(std::abs(q(1e4) - 0.7) < 1e-6);
}

TEST_CASE("family3 validation") {
    // omega^2 >= xi^2 leaves no oscillation window
    CHECK_THROWS_AS(make_pulse({Family::Family3, 0.5, 0.5, 0}), InvalidParams);
    CHECK_THROWS_AS(make_pulse({Family::Family3, 0.5, 0.9, 0}), InvalidParams);
    try {
        make_pulse({Family::Family3, 0.5, 0.9, 0});
    } catch (const InvalidParams& e) {
        CHECK(std::string(e.what()).find("b^2 = xi^2 - omega^2 > 0") !=
              std::string::npos);
    }
    CHECK_THROWS_AS(make_pulse({Family::Family3, 1.0, -0.1, 0}), InvalidParams);
    // degenerate omega=0: pole when cos(phi)=1, constant bias otherwise
    CHECK_THROWS_AS(make_pulse({Family::Family3, 1.0, 0.0, 0.0}), InvalidParams);
    const BiasPulse c = make_pulse({Family::Family3, 1.0, 0.0, M_PI});
    CHECK(c(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c(7.7) == doctest::Approx(1.0).epsilon(1e-15));
    // non-finite parameters
    CHECK_THROWS_AS(make_pulse({Family::Family1, std::nan(""), 0, 0}), NonFinite);
}

TEST_CASE("family3 oscillation parameters") {
    const BiasPulse p = make_pulse({Family::Family3, std::sqrt(48.0), 6.88, 0});
    CHECK(p.b() == doctest::Approx(0.8158431221748486).epsilon(1e-13));
    // periodic with period pi/omega
    const double period = M_PI / 6.88;
    for (double tau : {0.3, 1.1, 2.9})
        CHECK(p(tau) == doctest::Approx(p(tau + period)).epsilon(1e-12));
    CHECK(p.theta() == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("family3 stays on the stable branch at moderate omega") {
    // the rewritten denominator must agree with the textbook form when no
    // cancellation happens
    const double xi = 1.0, w = 0.6, phi = 0.37;
    const BiasPulse p = make_pulse({Family::Family3, xi, w, phi});
    const double b = std::sqrt(xi * xi - w * w);
    for (double tau : {0.0, 0.21, 1.8, 4.4, 9.9}) {
        const double naive = xi + 2 * w * w / (b * std::cos(2 * w * tau + phi) - xi);
        CHECK(p(tau) == doctest::Approx(naive).epsilon(1e-12));
    }
}

TEST_CASE("family3 limit phase recovers family1 as omega -> 0") {
    const double xi = 1.0;
    CHECK(family3_limit_phase(xi, 0.0) == 0.0);
    CHECK(family3_limit_phase(1.0, 0.6) ==
          doctest::Approx(-0.030293759918775087).epsilon(1e-14));
    CHECK_THROWS_AS(family3_limit_phase(0.5, 0.9), InvalidParams);

    const double w = 1e-3 * xi;
    const BiasPulse p3 =
        make_pulse({Family::Family3, xi, w, family3_limit_phase(xi, w)});
    const BiasPulse p1 = make_pulse({Family::Family1, xi, 0, 0});
    double sup = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double tau = 10.0 * i / 1000.0;
        sup = std::max(sup, std::abs(p3(tau) - p1(tau)));
    }
    CHECK(sup < 1.1e-6);  // O(w^2): ~1e-6 at w = 1e-3
    CHECK(sup > 0.8e-6);  // and not accidentally zero
}

TEST_CASE("direct (xi, b, phi) parametrization") {
    const auto pp = family3_params_from_b(std::sqrt(48.0), 0.8158431221748486, 0.0);
    CHECK(pp.family == Family::Family3);
    CHECK(pp.omega == doctest::Approx(6.88).epsilon(1e-12));
    CHECK_THROWS_AS(family3_params_from_b(1.0 / std::sqrt(3.0),
                                          std::sqrt(15.0) / 2.0, 0.0),
                    InvalidParams);
    try {
        family3_params_from_b(1.0 / std::sqrt(3.0), std::sqrt(15.0) / 2.0, 0.0);
    } catch (const InvalidParams& e) {
        CHECK(std::string(e.what()).find("|b| <= |xi|") != std::string::npos);
    }
}

TEST_CASE("pulse ranges") {
    const auto c = pulse_range(make_pulse({Family::Constant, 0.3, 0, 0}));
    CHECK(c.first == 0.3);
    CHECK(c.second == 0.3);

    const auto f1 = pulse_range(make_pulse({Family::Family1, 0.5, 0, 0}));
    CHECK(f1.first == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK(f1.second == doctest::Approx(0.5).epsilon(1e-15));
    const auto f1n = pulse_range(make_pulse({Family::Family1, -0.5, 0, 0}));
    CHECK(f1n.first == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(f1n.second == doctest::Approx(1.5).epsilon(1e-15));

    const auto f3 = pulse_range(make_pulse({Family::Family3, 1.0, 0.6, 0.1}));
    CHECK(f3.first == doctest::Approx(-2.6).epsilon(1e-12));  // -xi - 2b, b=0.8
    CHECK(f3.second == doctest::Approx(0.6).epsilon(1e-12));  // -xi + 2b

    // family2 extremes found numerically; exact envelope is [-xi, 5 xi]
    const auto f2 = pulse_range(make_pulse({Family::Family2, 0.7, 0, 0}));
    CHECK(f2.first == doctest::Approx(-0.7).epsilon(1e-6));
    CHECK(f2.second == doctest::Approx(3.5).epsilon(1e-9)); // attained at tau=0
    const auto f2z = pulse_range(make_pulse({Family::Family2, 0.0, 0, 0}));
    CHECK(f2z.first == 0.0);
    CHECK(f2z.second == 0.0);
}

TEST_CASE("scalar-templated formulas instantiate for long double") {
    const long double v = eval_family1<long double>(2.5L, 0.7L);
    CHECK(static_cast<double>(v) ==
          doctest::Approx(eval_family1(2.5, 0.7)).epsilon(1e-15));
    const long double w = eval_family2<long double>(1.5L, 1.1L);
    CHECK(static_cast<double>(w) ==
          doctest::Approx(eval_family2(1.5, 1.1)).epsilon(1e-15));
}
