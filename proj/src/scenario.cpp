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

#include "scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace isacbf
{
    using json = nlohmann::json;

    double sinr_target(double rate_bps_hz)
    {
        if (!(rate_bps_hz >= 0.0) || !std::isfinite(rate_bps_hz))
            throw Error(ErrorCode::invalid_argument, "Rate targets must be finite and non-negative.");
        const double g = std::exp2(rate_bps_hz) - 1.0;
        if (!std::isfinite(g))
            throw Error(ErrorCode::invalid_argument, "Rate target overflows the SINR target 2^R - 1.");
        return g;
    }

    namespace
    {
        // atan2(dh, horizontal) for a point at 3-D distance `range` and height difference `dh`
        double elevation_from_range(double range, double dh, const char *what)
        {
            if (std::abs(dh) > range)
                throw Error(ErrorCode::invalid_argument,
                            std::string(what) + " range is shorter than its height difference to the BS.");
            return std::atan2(dh, std::sqrt(range * range - dh * dh));
        }
    }

    double Scenario::target_elevation() const
    {
        if (target.elevation_rad)
            return *target.elevation_rad;
        return elevation_from_range(target.range_m, geometry.bs_height_m - target.height_m, "Target");
    }

    double Scenario::user_elevation(int k) const
    {
        const auto &u = users.at(size_t(k));
        return elevation_from_range(u.range_m, geometry.bs_height_m - u.height_m, "User");
    }

    double Scenario::user_path_gain(int k) const
    {
        const auto &u = users.at(size_t(k));
        if (u.channel_gain_db)
            return db_to_linear(*u.channel_gain_db);
        return db_to_linear(reference_gain_db) / (u.range_m * u.range_m);
    }

    double Scenario::noise_power_w(int k) const
    {
        return dbm_to_watt(users.at(size_t(k)).noise_power_dbm);
    }

    void Scenario::finalize()
    {
        geometry.validate();
        if (!(power_budget_w > 0.0) || !std::isfinite(power_budget_w))
            throw Error(ErrorCode::invalid_argument, "Power budget must be positive.");
        if (!(target.range_m > 0.0))
            throw Error(ErrorCode::invalid_argument, "Target range must be positive.");
        if (!(target.echo_gain > 0.0) || !std::isfinite(target.echo_gain))
            throw Error(ErrorCode::invalid_argument, "Echo gain must be positive.");
        if (num_users() > geometry.n_tx())
            throw Error(ErrorCode::invalid_argument, "Number of users exceeds the number of transmit antennas.");
        if (quadrature_points < 16)
            throw Error(ErrorCode::invalid_argument, "Quadrature needs at least 16 points.");
        if (prior.size() == 0)
            throw Error(ErrorCode::invalid_argument, "Scenario has no prior.");
        (void)target_elevation();

        for (int k = 0; k < num_users(); ++k)
        {
            auto &u = users[size_t(k)];
            if (!(u.range_m > 0.0))
                throw Error(ErrorCode::invalid_argument, "User range must be positive.");
            if (!(u.height_m >= 0.0))
                throw Error(ErrorCode::invalid_argument, "User height cannot be negative.");
            if (!std::isfinite(u.azimuth_rad) || !std::isfinite(u.noise_power_dbm))
                throw Error(ErrorCode::invalid_argument, "User angle and noise power must be finite.");
            (void)user_elevation(k);
            u.gamma = sinr_target(u.rate_target_bps_hz);
        }
    }

    Scenario Scenario::with_common_rate(double rate) const
    {
        Scenario s = *this;
        for (auto &u : s.users)
            u.rate_target_bps_hz = rate;
        s.finalize();
        return s;
    }

    namespace
    {
        template <typename T>
        T require(const json &j, const char *key, const char *section)
        {
            if (!j.contains(key))
                throw Error(ErrorCode::parse, std::string("Missing required field '") + key + "' in " + section + ".");
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw Error(ErrorCode::parse, std::string("Field '") + key + "' in " + section + ": " + e.what());
            }
        }

        template <typename T>
        T optional_field(const json &j, const char *key, T fallback)
        {
            if (!j.contains(key))
                return fallback;
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw Error(ErrorCode::parse, std::string("Field '") + key + "': " + e.what());
            }
        }
    }

    Scenario load_scenario(const std::string &config_text)
    {
        json doc;
        try
        {
            doc = json::parse(config_text);
        }
        catch (const json::parse_error &e)
        {
            throw Error(ErrorCode::parse, std::string("Scenario document does not parse: ") + e.what());
        }
        if (!doc.is_object())
            throw Error(ErrorCode::parse, "Scenario document must be an object.");

        Scenario s;

        const json arr = doc.value("array", json::object());
        s.geometry.tx_rows = require<int>(arr, "tx_rows", "array");
        s.geometry.tx_cols = require<int>(arr, "tx_cols", "array");
        s.geometry.rx_rows = require<int>(arr, "rx_rows", "array");
        s.geometry.rx_cols = require<int>(arr, "rx_cols", "array");
        s.geometry.spacing_wavelengths = optional_field(arr, "spacing_wavelengths", 0.5);
        s.geometry.bs_height_m = optional_field(arr, "bs_height_m", 0.0);

        if (doc.contains("power_budget_w"))
            s.power_budget_w = require<double>(doc, "power_budget_w", "document");
        else
            s.power_budget_w = dbm_to_watt(require<double>(doc, "power_budget_dbm", "document"));
        s.reference_gain_db = optional_field(doc, "reference_gain_db", -40.0);
        s.quadrature_points = optional_field(doc, "quadrature_points", 4096);

        const json tgt = require<json>(doc, "target", "document");
        s.target.range_m = require<double>(tgt, "range_m", "target");
        s.target.height_m = optional_field(tgt, "height_m", 0.0);
        if (tgt.contains("elevation_rad"))
            s.target.elevation_rad = require<double>(tgt, "elevation_rad", "target");
        if (tgt.contains("echo_gain"))
            s.target.echo_gain = require<double>(tgt, "echo_gain", "target");
        else
        {
            // P |alpha|^2 L / sigma_S^2 in dB; the composite factor carries a 2 and is per watt
            const double snr_db = optional_field(tgt, "echo_snr_db", -5.0);
            s.target.echo_gain = 2.0 * db_to_linear(snr_db) / s.power_budget_w;
        }

        const json users = doc.value("users", json::array());
        if (!users.is_array())
            throw Error(ErrorCode::parse, "'users' must be an array.");
        for (const auto &ju : users)
        {
            UserSpec u;
            u.azimuth_rad = require<double>(ju, "azimuth_rad", "user");
            u.range_m = require<double>(ju, "range_m", "user");
            u.height_m = optional_field(ju, "height_m", 0.0);
            u.noise_power_dbm = require<double>(ju, "noise_power_dbm", "user");
            if (ju.contains("channel_gain_db"))
                u.channel_gain_db = require<double>(ju, "channel_gain_db", "user");
            u.rate_target_bps_hz = optional_field(ju, "rate_target_bps_hz", 0.0);
            s.users.push_back(u);
        }

        const json pr = require<json>(doc, "prior", "document");
        const json comps = require<json>(pr, "components", "prior");
        if (!comps.is_array())
            throw Error(ErrorCode::parse, "'prior.components' must be an array.");
        std::vector<VonMisesComponent> vm;
        for (const auto &jc : comps)
        {
            VonMisesComponent c;
            c.weight = require<double>(jc, "weight", "prior component");
            c.mean_rad = require<double>(jc, "mean_rad", "prior component");
            c.kappa = require<double>(jc, "kappa", "prior component");
            vm.push_back(c);
        }
        s.prior = PriorModel(std::move(vm));

        s.finalize();
        return s;
    }

    Scenario load_scenario_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::io, "Cannot open scenario file '" + path + "'.");
        std::stringstream ss;
        ss << in.rdbuf();
        return load_scenario(ss.str());
    }

    std::string default_scenario_document()
    {
        return R"({
  "array": {
    "tx_rows": 3, "tx_cols": 3,
    "rx_rows": 3, "rx_cols": 4,
    "spacing_wavelengths": 0.5,
    "bs_height_m": 10.0
  },
  "power_budget_dbm": 30.0,
  "reference_gain_db": -40.0,
  "quadrature_points": 4096,
  "target": {
    "range_m": 50.0,
    "height_m": 0.0,
    "echo_snr_db": -5.0
  },
  "users": [
    { "azimuth_rad": -1.0, "range_m": 750.0, "height_m": 1.0, "noise_power_dbm": -90.0, "rate_target_bps_hz": 4.5 },
    { "azimuth_rad":  1.2, "range_m": 650.0, "height_m": 1.0, "noise_power_dbm": -90.0, "rate_target_bps_hz": 4.5 },
    { "azimuth_rad": -2.3, "range_m": 600.0, "height_m": 1.0, "noise_power_dbm": -90.0, "rate_target_bps_hz": 4.5 }
  ],
  "prior": {
    "components": [
      { "weight": 0.31, "mean_rad": -1.15, "kappa": 370.0 },
      { "weight": 0.22, "mean_rad": -1.00, "kappa": 250.0 },
      { "weight": 0.37, "mean_rad": -0.60, "kappa": 380.0 },
      { "weight": 0.10, "mean_rad":  1.10, "kappa": 540.0 }
    ]
  }
}
)";
    }

    CVec user_channel(const Scenario &scenario, int k)
    {
        if (k < 0 || k >= scenario.num_users())
            throw Error(ErrorCode::invalid_argument, "User index out of range.");
        const auto &u = scenario.users[size_t(k)];
        return std::sqrt(scenario.user_path_gain(k)) *
               steering(scenario.geometry, ArraySide::tx, scenario.user_elevation(k), u.azimuth_rad);
    }

    RVec achievable_rate(const Scenario &scenario, const std::vector<CVec> &beams)
    {
        const int K = scenario.num_users();
        if (int(beams.size()) != K)
            throw Error(ErrorCode::invalid_argument, "Expected one beam per user.");
        for (const auto &w : beams)
            if (w.size() != scenario.geometry.n_tx())
                throw Error(ErrorCode::invalid_argument, "Beam length does not match the transmit array.");

        RVec rates(K);
        for (int k = 0; k < K; ++k)
        {
            const CVec h = user_channel(scenario, k);
            double signal = 0.0, interference = 0.0;
            for (int i = 0; i < K; ++i)
            {
                const double g = std::norm(h.dot(beams[size_t(i)])); // |h^H w_i|^2
                if (i == k)
                    signal = g;
                else
                    interference += g;
            }
            rates[k] = std::log2(1.0 + signal / (interference + scenario.noise_power_w(k)));
        }
        return rates;
    }
}
