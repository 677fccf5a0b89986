// SPDX-License-Identifier: Apache-2.0
//
// isacbf - PCRB-optimal transmit beamforming for multi-user ISAC
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "fixtures.hpp"
#include "prior.hpp"

#include <doctest.h>

#include <cmath>

using namespace isacbf;

namespace
{
    // Dense midpoint rule, independent of make_grid
    template <typename F>
    double integrate_circle(F f, int n = 200000)
    {
        double s = 0.0;
        const double h = kTwoPi / n;
        for (int i = 0; i < n; ++i)
            s += f(-kPi + (i + 0.5) * h);
        return s * h;
    }
}

TEST_CASE("scaled Bessel functions match the standard library")
{
    for (int n : {0, 1, 2, 3})
        for (double x : {0.0, 1e-3, 0.5, 2.0, 10.0, 55.5, 250.0, 370.0, 540.0})
        {
            const double ref = std::cyl_bessel_i(double(n), x) * std::exp(-x);
            const double got = bessel_i_scaled(n, x);
            if (ref == 0.0)
                CHECK(std::abs(got) < 1e-300);
            else
                CHECK(std::abs(got - ref) / ref <= 1e-12);
        }
    CHECK_THROWS_AS(bessel_i_scaled(0, -1.0), Error);
}

TEST_CASE("mixture density is normalized")
{
    for (double kappa : {0.0, 1.0, 30.0, 250.0, 540.0})
    {
        const PriorModel p({{0.6, 0.3, kappa}, {0.4, -2.9, kappa * 0.5}});
        const double mass = integrate_circle([&](double t) { return p.pdf(t); });
        CHECK(std::abs(mass - 1.0) <= 1e-8);
    }
    const auto def = fixtures::default_scenario();
    CHECK(std::abs(integrate_circle([&](double t) { return def.prior.pdf(t); }) - 1.0) <= 1e-8);
}

TEST_CASE("prior score")
{
    const PriorModel p({{0.31, -1.15, 370.0}, {0.22, -1.0, 250.0}, {0.37, -0.6, 380.0}, {0.10, 1.1, 540.0}});
    SUBCASE("finite-difference derivative of the log density")
    {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(-kPi, kPi);
        for (int i = 0; i < 100; ++i)
        {
            const double t = u(rng), h = 1e-6;
            const double fd = (std::log(p.pdf(t + h)) - std::log(p.pdf(t - h))) / (2 * h);
            const double an = p.log_pdf_derivative(t);
            CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
        }
    }
    SUBCASE("score has zero mean")
    {
        const double m = integrate_circle([&](double t) { return p.pdf(t) * p.log_pdf_derivative(t); });
        CHECK(std::abs(m) < 1e-8);
    }
}

TEST_CASE("single von Mises prior information closed form")
{
    for (double kappa : {0.5, 5.0, 40.0, 370.0, 540.0})
    {
        const PriorModel p({{1.0, 0.4, kappa}});
        const double closed = 0.5 * kappa * kappa * (1.0 - std::cyl_bessel_i(2.0, kappa) / std::cyl_bessel_i(0.0, kappa));
        const double j = prior_fisher(p, make_grid(4096));
        CHECK(fixtures::rel_diff(j, closed) <= 1e-6);
    }
    CHECK(prior_fisher(PriorModel({{1.0, 0.0, 0.0}}), make_grid(64)) == doctest::Approx(0.0));
}

TEST_CASE("quadrature refinement and rotation")
{
    const auto s = fixtures::default_scenario();
    const double j4 = prior_fisher(s.prior, make_grid(4096));
    const double j8 = prior_fisher(s.prior, make_grid(8192));
    CHECK(fixtures::rel_diff(j4, j8) <= 1e-10);
    CHECK(fixtures::rel_diff(prior_fisher(s.prior.rotated(0.77), make_grid(4096)), j4) <= 1e-9);
    CHECK(std::abs(s.prior.rotated(0.5).pdf(0.2) - s.prior.pdf(-0.3)) < 1e-10);
}

TEST_CASE("grid construction and helpers")
{
    const auto g = make_grid(64);
    CHECK(g.size() == 64);
    CHECK(g.nodes[0] == doctest::Approx(-kPi));
    CHECK(g.weights.sum() == doctest::Approx(kTwoPi));
    CHECK_THROWS_AS(make_grid(8), Error);
    CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
    CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - kTwoPi));
}

TEST_CASE("most probable angle")
{
    const auto s = fixtures::default_scenario();
    const double t4 = most_probable_angle(s.prior, make_grid(4096));
    const double t16 = most_probable_angle(s.prior, make_grid(16384));
    CHECK(std::abs(t4 - t16) <= kTwoPi / 4096);
    CHECK(std::abs(t4 + 0.6) < 0.05);
    // Uniform density: every node ties, the smallest angle wins
    CHECK(most_probable_angle(PriorModel({{1.0, 0.0, 0.0}}), make_grid(32)) == doctest::Approx(-kPi));
}

TEST_CASE("invalid priors are rejected")
{
    CHECK_THROWS_AS(PriorModel(std::vector<VonMisesComponent>{}), Error);
    CHECK_THROWS_AS(PriorModel({{0.5, 0.0, 1.0}}), Error);
    CHECK_THROWS_AS(PriorModel({{1.0, 0.0, -1.0}}), Error);
    CHECK_THROWS_AS(PriorModel({{1.0, NAN, 1.0}}), Error);
}
