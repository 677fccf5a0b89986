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

#ifndef ISACBF_FIM_HPP
#define ISACBF_FIM_HPP

#include "scenario.hpp"

#include <ostream>

namespace isacbf
{
    // Prior-averaged matrices of the posterior Fisher information, everything the
    // periodic PCRB needs besides the transmit covariance R_X.
    //
    //   A1 = E[ |b_dot|^2 a a^H + N_R a_dot a_dot^H ]   (Hermitian PSD)
    //   A2 = N_R E[ a_dot a^H ]                          (general)
    //   A3 = N_R E[ a a^H ]                              (Hermitian PSD)
    struct FisherMatrices
    {
        CMat A1;
        CMat A2;
        CMat A3;
        double j_prior = 0.0;
        double echo_gain = 1.0;

        int n_tx() const { return int(A1.rows()); }
    };

    // Quadrature over the prior at the target elevation.
    // Throws if the grid spacing exceeds 0.5/sqrt(kappa_max); warns above 0.1/sqrt(kappa_max).
    FisherMatrices build_fisher(const Scenario &scenario, const QuadratureGrid &grid);

    FisherMatrices build_fisher(const Scenario &scenario);

    // Point-mass version at a single azimuth with no prior information (j_prior = 0).
    FisherMatrices build_point_fisher(const Scenario &scenario, double theta);

    // tr(A1 R) - |tr(A2 R)|^2 / tr(A3 R). Throws Error(numerical) when tr(A3 R) is not positive.
    double effective_fisher(const FisherMatrices &fm, const CMat &rx);

    // 2 - 2 / sqrt(1 + 1 / (j_prior + echo_gain * t_eff)) from the effective information
    double pcrb_from_information(const FisherMatrices &fm, double t_eff);

    double pcrb_periodic(const FisherMatrices &fm, const CMat &rx);

    // [[tr(A1 R) - t, tr(A2 R)], [tr(A2^H R), tr(A3 R)]]
    Eigen::Matrix2cd schur_block(const FisherMatrices &fm, const CMat &rx, double t);

    // D = A1 + z2 A2^H + conj(z2) A2 + |z2|^2 A3
    CMat d_matrix(const FisherMatrices &fm, cdouble z2);

    // Per-angle integrand of D at azimuth theta
    CMat d_bar(const ArrayGeometry &geometry, double phi, double theta, cdouble z2);

    // Writes the matrices in a plain text dump (one "name rows cols" header, then re im pairs).
    void dump_fisher(std::ostream &os, const FisherMatrices &fm);
}

#endif
