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

#ifndef ISACBF_BENCH_HPP
#define ISACBF_BENCH_HPP

#include "pipeline.hpp"

namespace isacbf
{
    enum class BenchmarkScheme
    {
        sensing_only,
        dual_functional,
        most_probable_angle,
    };

    const char *to_string(BenchmarkScheme scheme);

    struct BenchmarkResult
    {
        BenchmarkScheme scheme = BenchmarkScheme::sensing_only;
        bool feasible = false;
        double pcrb = 2.0;         // of the reported design, under the prior-averaged Fisher matrices
        double pcrb_relaxed = 2.0; // of the relaxed optimum (differs only for dual_functional)
        RVec rates;
        Covariances cov;
        bool rank_one = true;  // dual_functional: relaxed W_k were already rank one
        double theta_star = 0.0; // most_probable_angle: design direction
        std::string message;
    };

    // Maximizes the effective Fisher information under the power budget only; W_k = 0.
    BenchmarkResult sensing_only(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options = {});

    // The relaxation without W_S. Communication covariances of rank above one are projected
    // with W h h^H W / (h^H W h) and the projected design is the one reported.
    BenchmarkResult dual_functional(const Scenario &scenario, const FisherMatrices &fm,
                                    const PipelineOptions &options = {});

    // Designs for a point-mass prior at the grid argmax of the density (no prior information term),
    // then evaluates that design under the prior-averaged matrices `fm`.
    BenchmarkResult most_probable_angle(const Scenario &scenario, const FisherMatrices &fm,
                                        const PipelineOptions &options = {});
}

#endif
