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

#ifndef ISACBF_PIPELINE_HPP
#define ISACBF_PIPELINE_HPP

#include "fim.hpp"
#include "sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isacbf
{
    struct PipelineOptions
    {
        double tol = 1e-9;            // SDP relative tolerance
        int max_iterations = 200;    // SDP iteration cap
        double rank_threshold = 1e-7; // eigenvalues below threshold * lambda_max count as zero
    };

    // Communication covariances W_k (one per user, zero for users without a rate target)
    // and the dedicated sensing covariance W_S, in watts.
    struct Covariances
    {
        std::vector<CMat> W;
        CMat WS;

        CMat total() const;     // R_X = sum W_k + W_S
        double power() const;   // tr(R_X)
    };

    // Which parts of the relaxation to include; the benchmarks drop one or the other.
    struct P2rLayout
    {
        bool users = true;
        bool sensing = true;
        bool idle_users = false; // keep W_k variables for users without a rate target
    };

    // The relaxation in solver form. Variables are normalized by the power budget and the
    // Fisher matrices by `fisher_scale`, so t = t_normalized * power * fisher_scale.
    struct P2rProblem
    {
        sdp::SdpProblem sdp;
        std::vector<int> user_block; // block index per user, -1 when W_k is fixed to zero
        int sensing_block = -1;
        double power = 1.0;
        double fisher_scale = 1.0;
    };

    P2rProblem assemble_p2r(const Scenario &scenario, const FisherMatrices &fm, P2rLayout layout = {});

    struct RelaxedSolution
    {
        Covariances cov;
        double t = 0.0; // effective Fisher information bound from the solver
        sdp::SdpSolution sdp;
        sdp::KktResiduals kkt;
        cdouble z2_dual = 0.0; // z2 / z1 from the LMI multiplier
    };

    // Solves the assembled relaxation and maps the blocks back to watts.
    RelaxedSolution solve_p2r(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options = {},
                              P2rLayout layout = {});

    // Minimum transmit power meeting all rate targets without sensing beams.
    struct FeasibilityCertificate
    {
        bool feasible = true;
        double min_power_w = 0.0; // infinity when no finite power suffices
        int limiting_user = -1;   // user whose single-user bound already exceeds the budget
        std::string reason;
    };

    FeasibilityCertificate check_feasibility(const Scenario &scenario, const PipelineOptions &options = {});

    // W_k -> W_k h h^H W_k / (h^H W_k h), residue moved into W_S
    Covariances restore_rank_one(const Covariances &cov, const Scenario &scenario);

    // -tr(A2 R) / tr(A3 R)
    cdouble recover_z2(const FisherMatrices &fm, const CMat &rx);

    struct RankReductionState
    {
        std::vector<CVec> f; // W_k = f_k f_k^H
        CMat J;              // W_S = J J^H, N_T x M_S
        RVec delta_users;
        CMat delta_sensing;
        double xi = 0.0;

        int sensing_rank() const { return int(J.cols()); }
        Covariances covariances() const;
    };

    // Factors rank-one W_k and the numerically low-rank W_S.
    RankReductionState factor_covariances(const Covariances &cov, double rank_threshold);

    // Invariants tracked across one reduction iteration
    struct RankReductionStep
    {
        int rank_before = 0;
        int rank_after = 0;
        double t_before = 0.0;
        double t_after = 0.0;
        double power_before = 0.0;
        double power_after = 0.0;
        RVec rate_slack_before; // h^H (W_k - gamma_k sum W_i) h - gamma_k sigma_k^2
        RVec rate_slack_after;
        double lemma_residual = 0.0; // |tr((A2 + z2 A3) R)| / tr(A3 R) after the step
        double xi = 0.0;
    };

    struct RankReductionResult
    {
        Covariances cov;
        RankReductionState state;
        std::vector<RankReductionStep> steps;
    };

    RankReductionResult rank_reduce(const Covariances &restored, const Scenario &scenario, const FisherMatrices &fm,
                                    cdouble z2, double rank_threshold = 1e-7);

    // h^H (W_k - gamma_k sum_{i != k} W_i) h - gamma_k sigma_k^2 per user
    RVec rate_slacks(const Scenario &scenario, const Covariances &cov);

    struct BeamformingSolution
    {
        Covariances cov;
        std::vector<CVec> w;
        CVec s; // zero when no sensing beam is needed
        double t = 0.0;          // effective Fisher information of the final design
        double t_relaxed = 0.0;  // objective of the relaxation
        double pcrb = 0.0;
        double pcrb_relaxed = 0.0;
        RVec rates;
        double power_used = 0.0;
        int sensing_rank = 0;
        cdouble z2 = 0.0;
        cdouble z2_dual = 0.0;
        RVec beta; // ||w_k||^2 / P

        sdp::SdpSolution sdp;
        sdp::KktResiduals kkt;
        std::vector<RankReductionStep> reduction;
    };

    // Dominant eigenpairs of rank-one blocks; throws Error(numerical) if a block is not rank one.
    BeamformingSolution extract_beams(const Covariances &cov, const Scenario &scenario, const FisherMatrices &fm,
                                      double rank_threshold = 1e-7);

    struct VerificationItem
    {
        std::string name;
        double value = 0.0;
        double tolerance = 0.0;
        bool passed = false;
    };

    struct VerificationReport
    {
        std::vector<VerificationItem> items;

        bool passed() const;
        const VerificationItem *find(const std::string &name) const;
    };

    // sdp_tol is the tolerance the relaxation was solved to; the duality-gap check uses it.
    VerificationReport verify_solution(const Scenario &scenario, const FisherMatrices &fm,
                                       const BeamformingSolution &solution, double sdp_tol = 1e-8);

    enum class PipelineStatus
    {
        ok,
        infeasible,
        verification_failed,
        numerical_error,
    };

    const char *to_string(PipelineStatus status);

    struct PipelineResult
    {
        PipelineStatus status = PipelineStatus::numerical_error;
        FeasibilityCertificate feasibility;
        std::optional<BeamformingSolution> solution;
        VerificationReport verification;
        std::string message;
    };

    // Feasibility check, relaxation, rank-one restoration, rank reduction, extraction, verification.
    PipelineResult run_pipeline(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options = {});
}

#endif
