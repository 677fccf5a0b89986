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

#ifndef ISACBF_SDP_HPP
#define ISACBF_SDP_HPP

#include "common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isacbf::sdp
{
    // sum_j Re tr(C_j X_j) + t_coef * t + constant.
    // An empty (0x0) coefficient means the block does not enter the function.
    struct AffineReal
    {
        std::vector<CMat> block_coef;
        double t_coef = 0.0;
        double constant = 0.0;
    };

    // sum_j tr(C_j X_j) + t_coef * t + constant, with general complex C_j
    struct AffineComplex
    {
        std::vector<CMat> block_coef;
        cdouble t_coef = 0.0;
        cdouble constant = 0.0;
    };

    // [[f11, f12], [conj(f12), f22]] >= 0
    struct Lmi2
    {
        AffineReal f11;
        AffineComplex f12;
        AffineReal f22;
    };

    // maximize objective(X, t)
    // s.t.     inequalities_i(X, t) >= 0, equalities_e(X, t) = 0, lmi(X, t) >= 0, X_j >= 0
    //
    // X_j are Hermitian PSD blocks, t is an optional free scalar.
    struct SdpProblem
    {
        std::vector<int> block_sizes;
        bool has_t = false;
        AffineReal objective;
        std::vector<AffineReal> inequalities;
        std::vector<AffineReal> equalities;
        std::optional<Lmi2> lmi;

        // Throws Error(invalid_argument) on inconsistent dimensions or non-Hermitian data
        void validate() const;

        int num_blocks() const { return int(block_sizes.size()); }
    };

    enum class SdpStatus
    {
        optimal,
        primal_infeasible,
        dual_infeasible,
        max_iterations,
        numerical_error,
    };

    const char *to_string(SdpStatus status);

    struct SdpSolution
    {
        SdpStatus status = SdpStatus::numerical_error;
        std::vector<CMat> blocks;
        double t = 0.0;
        double objective = 0.0;      // primal value of the maximization
        double dual_objective = 0.0; // upper bound from the dual

        Eigen::Matrix2cd z_lmi = Eigen::Matrix2cd::Zero(); // Z_B
        RVec ineq_duals;                                   // >= 0
        RVec eq_duals;
        std::vector<CMat> block_duals; // Z_j >= 0

        double primal_residual = 0.0; // relative
        double dual_residual = 0.0;   // relative
        double gap = 0.0;             // relative duality gap
        int iterations = 0;
    };

    struct SdpOptions
    {
        double tol = 1e-8;
        int max_iterations = 200;
    };

    // Primal-dual path-following solve (HKM direction, Mehrotra predictor-corrector) over the
    // real embedding of the Hermitian blocks.
    SdpSolution solve(const SdpProblem &problem, const SdpOptions &options = {});

    // H = Re + j Im  ->  [[Re, -Im], [Im, Re]]
    RMat real_embedding(const CMat &h);

    // Inverse of real_embedding for matrices in its image; averages the duplicated copies.
    CMat real_unembedding(const RMat &m);

    // Evaluation helpers
    double evaluate(const AffineReal &f, const std::vector<CMat> &blocks, double t);
    cdouble evaluate(const AffineComplex &f, const std::vector<CMat> &blocks, double t);
    Eigen::Matrix2cd evaluate(const Lmi2 &lmi, const std::vector<CMat> &blocks, double t);

    // Complementary slackness and stationarity of the Lagrangian
    //   L = obj + tr(Z_B F) + sum mu_i g_i + sum nu_e h_e + sum tr(Z_j X_j)
    struct KktResiduals
    {
        double lmi_slackness = 0.0;           // |tr(Z_B F)|
        std::vector<double> ineq_slackness;   // |mu_i g_i|
        std::vector<double> block_slackness;  // |tr(Z_j X_j)|
        std::vector<double> block_stationarity; // ||dL/dX_j||_F
        double t_stationarity = 0.0;          // |dL/dt|
        double max_ineq_violation = 0.0;
        double max_eq_violation = 0.0;
        double lmi_min_eigenvalue = 0.0;
        double z_lmi_determinant = 0.0;
    };

    KktResiduals kkt_residuals(const SdpProblem &problem, const SdpSolution &solution);
}

#endif
