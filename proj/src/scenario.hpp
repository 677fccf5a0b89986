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

#ifndef ISACBF_SCENARIO_HPP
#define ISACBF_SCENARIO_HPP

#include "array.hpp"
#include "prior.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isacbf
{
    struct UserSpec
    {
        double azimuth_rad = 0.0;
        double range_m = 100.0; // 3-D distance to the BS phase centre
        double height_m = 0.0;
        double noise_power_dbm = -90.0;
        std::optional<double> channel_gain_db; // overrides the distance-based path gain
        double rate_target_bps_hz = 0.0;

        double gamma = 0.0; // SINR target 2^R - 1, filled by Scenario::finalize()
    };

    struct TargetSpec
    {
        double range_m = 50.0;
        double height_m = 0.0;
        std::optional<double> elevation_rad;

        // Composite echo SNR factor 2 |alpha|^2 L / sigma_S^2 (per unit transmit power)
        double echo_gain = 1.0;
    };

    // One complete problem instance. Immutable once loaded.
    struct Scenario
    {
        ArrayGeometry geometry;
        TargetSpec target;
        std::vector<UserSpec> users;
        double power_budget_w = 1.0;
        double reference_gain_db = -40.0; // path gain at 1 m
        PriorModel prior;
        int quadrature_points = 4096;

        int num_users() const { return int(users.size()); }

        // Target elevation below the BS horizontal plane
        double target_elevation() const;

        // Elevation of user k, atan2(dh, horizontal distance)
        double user_elevation(int k) const;

        // Scalar path gain g_k (linear)
        double user_path_gain(int k) const;

        double noise_power_w(int k) const;

        // Validates all invariants and fills the per-user SINR targets.
        void finalize();

        // Copy with every rate target set to `rate`
        Scenario with_common_rate(double rate) const;
    };

    // Parses a JSON scenario document; throws Error(parse | invalid_argument).
    Scenario load_scenario(const std::string &config_text);

    Scenario load_scenario_file(const std::string &path);

    // The default scenario used throughout the numerical section, in document form.
    std::string default_scenario_document();

    // LoS channel h_k = sqrt(g_k) a(phi_k, theta_k)
    CVec user_channel(const Scenario &scenario, int k);

    // Achievable rates with perfect sensing-interference cancellation.
    RVec achievable_rate(const Scenario &scenario, const std::vector<CVec> &beams);

    // 2^R - 1, checked for overflow
    double sinr_target(double rate_bps_hz);
}

#endif
