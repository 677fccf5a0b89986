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

// Shared scenarios and seeded generators for the test programs.

#ifndef ISACBF_TESTS_FIXTURES_HPP
#define ISACBF_TESTS_FIXTURES_HPP

#include "bench.hpp"
#include "scenario.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fixtures
{
    using namespace isacbf;

    inline Scenario default_scenario() { return load_scenario(default_scenario_document()); }

    // Uniform prior and a single user off the array axes; the relaxed optimum has a rank-2 W_S
    // here, so the rank reduction has work to do.
    inline Scenario reduction_scenario(double rate = 2.0, double user_azimuth = kPi / 4.0 + 0.1)
    {
        Scenario s = default_scenario();
        s.prior = PriorModel({{0.5, -1.0, 0.0}, {0.5, 1.5, 0.0}});
        s.users.resize(1);
        s.users[0].azimuth_rad = user_azimuth;
        s.finalize();
        return s.with_common_rate(rate);
    }

    // Two transmit antennas, a single user, random geometry and prior.
    inline Scenario small_random_scenario(std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Scenario s = default_scenario();
        s.geometry.tx_rows = 1;
        s.geometry.tx_cols = 2;
        s.geometry.rx_rows = 1;
        s.geometry.rx_cols = 3;
        s.users.resize(1);
        auto &u = s.users[0];
        u.azimuth_rad = -kPi + kTwoPi * unit(rng);
        u.range_m = 200.0 + 600.0 * unit(rng);
        u.rate_target_bps_hz = 0.5 + 3.5 * unit(rng);
        const int modes = 1 + int(unit(rng) * 2.0);
        std::vector<VonMisesComponent> comps;
        for (int m = 0; m < modes; ++m)
            comps.push_back({0.2 + unit(rng), -kPi + kTwoPi * unit(rng), 2.0 + 100.0 * unit(rng)});
        double wsum = 0.0;
        for (const auto &c : comps)
            wsum += c.weight;
        for (auto &c : comps)
            c.weight /= wsum;
        s.prior = PriorModel(comps);
        s.quadrature_points = 2048;
        s.finalize();
        return s;
    }

    inline CVec random_cvec(std::mt19937_64 &rng, int n)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        CVec v(n);
        for (int i = 0; i < n; ++i)
            v[i] = cdouble(g(rng), g(rng));
        return v;
    }

    inline CMat random_cmat(std::mt19937_64 &rng, int rows, int cols)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        CMat m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                m(i, j) = cdouble(g(rng), g(rng));
        return m;
    }

    inline CMat random_hermitian(std::mt19937_64 &rng, int n)
    {
        const CMat m = random_cmat(rng, n, n);
        return 0.5 * (m + m.adjoint());
    }

    // G G^H with G of n x rank
    inline CMat random_psd(std::mt19937_64 &rng, int n, int rank)
    {
        const CMat g = random_cmat(rng, n, rank);
        return g * g.adjoint();
    }

    inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}

#endif
