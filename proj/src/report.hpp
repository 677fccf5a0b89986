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

#ifndef ISACBF_REPORT_HPP
#define ISACBF_REPORT_HPP

#include "bench.hpp"

#include <string>
#include <vector>

namespace isacbf
{
    // One row of the PCRB versus rate-target table
    struct SweepRecord
    {
        double rate_target = 0.0;
        double pcrb_proposed = 0.0;
        double pcrb_sensing_only = 0.0;
        double pcrb_dual_functional = 0.0;
        double pcrb_most_probable = 0.0;
        int sensing_rank = -1;
        std::string status;
        double wall_ms = 0.0;
    };

    struct SweepOptions
    {
        double rate_min = 1.0;
        double rate_max = 6.0;
        int steps = 6;
        int threads = 0; // 0: hardware concurrency
        PipelineOptions pipeline;
    };

    // Rate targets rate_min + i (rate_max - rate_min) / (steps - 1), applied to every user.
    std::vector<double> sweep_rates(const SweepOptions &options);

    // Runs every sweep point on a worker pool; rows come back in rate order.
    std::vector<SweepRecord> run_sweep(const Scenario &scenario, const SweepOptions &options);

    // rate_target,pcrb_proposed,pcrb_sensing_only,pcrb_dual_functional,pcrb_most_probable,sensing_rank,status,wall_ms
    // 12 significant digits, "\n" line endings. Unavailable values are written as "nan".
    // Without timing, wall_ms is written as 0 so the file is byte-stable.
    std::string sweep_csv(const std::vector<SweepRecord> &records, bool include_timing = true);

    // theta,pdf,pattern_w1..pattern_wK,pattern_ws on grid_n uniform azimuths in [-pi, pi),
    // at the target elevation.
    std::string pattern_csv(const Scenario &scenario, const BeamformingSolution &solution, int grid_n);

    // Result document of a single solve (JSON text).
    std::string result_json(const Scenario &scenario, const PipelineResult &result);

    // Plot scripts for the CSV outputs (gnuplot syntax).
    std::string sweep_gnuplot_script(const std::string &csv_path);
    std::string pattern_gnuplot_script(const std::string &csv_path, int num_users);

    // printf("%.12g") independent of the global locale; "nan" for non-finite values
    std::string format_number(double v);
}

#endif
