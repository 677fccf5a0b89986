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


#include "isacbf.h"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace
{
    struct Str
    {
        char *p = nullptr;
        ~Str() { isacbf_string_free(p); }
    };

    std::string read_file(const std::string &path)
    {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
}

TEST_CASE("options and version")
{
    isacbf_options o;
    isacbf_options_init(&o);
    CHECK(o.tol == 1e-9);
    CHECK(o.max_iterations == 200);
    CHECK(o.rank_threshold == 1e-7);
    CHECK(o.threads == 0);
    CHECK(std::string(isacbf_version()) == "0.1.0");
    CHECK(isacbf_set_log_level("error") == ISACBF_OK);
    CHECK(isacbf_set_log_level("loud") == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(std::string(isacbf_last_error()).find("loud") != std::string::npos);
}

TEST_CASE("scenario handles")
{
    isacbf_scenario *sc = nullptr;
    REQUIRE(isacbf_scenario_default(&sc) == ISACBF_OK);
    CHECK(isacbf_scenario_num_users(sc) == 3);
    CHECK(isacbf_scenario_num_tx(sc) == 9);
    CHECK(isacbf_scenario_set_common_rate(sc, -2.0) == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(isacbf_scenario_set_common_rate(sc, 2.0) == ISACBF_OK);
    isacbf_scenario_free(sc);

    isacbf_scenario *f = nullptr;
    CHECK(isacbf_scenario_from_file(ISACBF_SOURCE_DIR "/configs/default.json", &f) == ISACBF_OK);
    isacbf_scenario_free(f);

    isacbf_scenario *bad = nullptr;
    CHECK(isacbf_scenario_from_string("{oops", &bad) == ISACBF_ERR_PARSE);
    CHECK(bad == nullptr);
    CHECK(std::string(isacbf_last_error()).size() > 0);
    CHECK(isacbf_scenario_from_file("/nonexistent.json", &bad) == ISACBF_ERR_IO);
    CHECK(isacbf_scenario_from_string(nullptr, &bad) == ISACBF_ERR_INVALID_ARGUMENT);
    isacbf_scenario_free(nullptr);
}

TEST_CASE("solve through the C interface")
{
    isacbf_scenario *sc = nullptr;
    REQUIRE(isacbf_scenario_default(&sc) == ISACBF_OK);
    isacbf_result *res = nullptr;
    REQUIRE(isacbf_solve(sc, nullptr, &res) == ISACBF_OK);
    REQUIRE(res != nullptr);
    CHECK(isacbf_result_status(res) == ISACBF_OK);
    const double pcrb = isacbf_result_pcrb(res);
    CHECK(pcrb > 0.0);
    CHECK(pcrb < 2.0);
    CHECK(std::abs(isacbf_result_power(res) - 1.0) <= 1e-6);
    CHECK(isacbf_result_sensing_rank(res) <= 1);

    std::vector<double> rates(3);
    REQUIRE(isacbf_result_rates(res, rates.data(), rates.size()) == ISACBF_OK);
    for (double r : rates)
        CHECK(r >= 4.5 - 1e-6);
    CHECK(isacbf_result_rates(res, rates.data(), 2) == ISACBF_ERR_INVALID_ARGUMENT);

    std::vector<double> re(9), im(9);
    double power = 0.0;
    for (int k = -1; k < 3; ++k)
    {
        REQUIRE(isacbf_result_beam(res, k, re.data(), im.data(), 9) == ISACBF_OK);
        for (int i = 0; i < 9; ++i)
            power += re[size_t(i)] * re[size_t(i)] + im[size_t(i)] * im[size_t(i)];
    }
    CHECK(power == doctest::Approx(isacbf_result_power(res)).epsilon(1e-12));
    CHECK(isacbf_result_beam(res, 3, re.data(), im.data(), 9) == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(isacbf_result_beam(res, 0, re.data(), im.data(), 4) == ISACBF_ERR_INVALID_ARGUMENT);

    Str json;
    REQUIRE(isacbf_result_to_json(res, &json.p) == ISACBF_OK);
    const auto doc = nlohmann::json::parse(json.p);
    CHECK(doc["solution"]["pcrb"].get<double>() == pcrb);

    Str csv;
    REQUIRE(isacbf_result_pattern_csv(res, 90, &csv.p) == ISACBF_OK);
    CHECK(std::count(csv.p, csv.p + std::string(csv.p).size(), '\n') == 91);
    CHECK(isacbf_result_pattern_csv(res, 0, &csv.p) != ISACBF_OK);

    isacbf_result_free(res);
    isacbf_scenario_free(sc);
}

TEST_CASE("infeasible solve carries the certificate")
{
    isacbf_scenario *sc = nullptr;
    REQUIRE(isacbf_scenario_default(&sc) == ISACBF_OK);
    REQUIRE(isacbf_scenario_set_common_rate(sc, 50.0) == ISACBF_OK);
    isacbf_result *res = nullptr;
    CHECK(isacbf_solve(sc, nullptr, &res) == ISACBF_ERR_INFEASIBLE);
    REQUIRE(res != nullptr);
    CHECK(isacbf_result_status(res) == ISACBF_ERR_INFEASIBLE);
    CHECK(isacbf_result_min_power(res) > 1.0);
    CHECK(std::isnan(isacbf_result_pcrb(res)));
    CHECK(isacbf_result_sensing_rank(res) == -1);
    double r[3];
    CHECK(isacbf_result_rates(res, r, 3) == ISACBF_ERR_INVALID_ARGUMENT);
    isacbf_result_free(res);
    isacbf_scenario_free(sc);
}

TEST_CASE("sweep and plot scripts")
{
    isacbf_scenario *sc = nullptr;
    REQUIRE(isacbf_scenario_default(&sc) == ISACBF_OK);
    isacbf_options o;
    isacbf_options_init(&o);
    o.threads = 1;
    Str a, b;
    REQUIRE(isacbf_sweep_csv(sc, 1.0, 3.0, 3, &o, 0, &a.p) == ISACBF_OK);
    REQUIRE(isacbf_sweep_csv(sc, 1.0, 3.0, 3, &o, 0, &b.p) == ISACBF_OK);
    CHECK(std::string(a.p) == std::string(b.p));
    CHECK(std::count(a.p, a.p + std::string(a.p).size(), '\n') == 4);
    Str c;
    CHECK(isacbf_sweep_csv(sc, 3.0, 1.0, 3, &o, 0, &c.p) == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(c.p == nullptr);

    Str g;
    CHECK(isacbf_gnuplot_script("sweep", "s.csv", 0, &g.p) == ISACBF_OK);
    CHECK(std::string(g.p).find("'s.csv'") != std::string::npos);
    Str h;
    CHECK(isacbf_gnuplot_script("histogram", "s.csv", 0, &h.p) == ISACBF_ERR_INVALID_ARGUMENT);
    isacbf_scenario_free(sc);
}

TEST_CASE("null handles")
{
    isacbf_result *res = nullptr;
    CHECK(isacbf_solve(nullptr, nullptr, &res) == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(isacbf_result_status(nullptr) == ISACBF_ERR_INVALID_ARGUMENT);
    CHECK(std::isnan(isacbf_result_pcrb(nullptr)));
    CHECK(isacbf_scenario_num_users(nullptr) < 0);
    isacbf_result_free(nullptr);
    isacbf_string_free(nullptr);
}
