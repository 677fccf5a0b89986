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

#include "bench.hpp"

#include <spdlog/spdlog.h>

namespace isacbf
{
    const char *to_string(BenchmarkScheme scheme)
    {
        switch (scheme)
        {
        case BenchmarkScheme::sensing_only:
            return "sensing_only";
        case BenchmarkScheme::dual_functional:
            return "dual_functional";
        case BenchmarkScheme::most_probable_angle:
            return "most_probable_angle";
        }
        return "unknown";
    }

    namespace
    {
        std::vector<CVec> beams_of(const Covariances &cov)
        {
            std::vector<CVec> out;
            for (const auto &w : cov.W)
            {
                const Eigen::Index n = w.rows();
                Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(w));
                const double l = std::max(es.eigenvalues()[n - 1], 0.0);
                out.push_back(std::sqrt(l) * es.eigenvectors().col(n - 1));
            }
            return out;
        }

        void evaluate(BenchmarkResult &r, const Scenario &s, const FisherMatrices &fm)
        {
            r.pcrb = pcrb_periodic(fm, r.cov.total());
            r.rates = achievable_rate(s, beams_of(r.cov));
        }
    }

    BenchmarkResult sensing_only(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options)
    {
        BenchmarkResult r;
        r.scheme = BenchmarkScheme::sensing_only;
        P2rLayout layout;
        layout.users = false;
        const RelaxedSolution rel = solve_p2r(scenario, fm, options, layout);
        r.cov = rel.cov;
        evaluate(r, scenario, fm);
        r.pcrb_relaxed = pcrb_from_information(fm, rel.t);
        r.feasible = true;
        return r;
    }

    BenchmarkResult dual_functional(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options)
    {
        BenchmarkResult r;
        r.scheme = BenchmarkScheme::dual_functional;
        r.rates = RVec::Zero(scenario.num_users());
        if (scenario.num_users() == 0)
        {
            r.message = "No users to carry the sensing signal.";
            return r;
        }
        const FeasibilityCertificate cert = check_feasibility(scenario, options);
        if (!cert.feasible)
        {
            r.message = cert.reason;
            return r;
        }

        P2rLayout layout;
        layout.sensing = false;
        layout.idle_users = true;
        const RelaxedSolution rel = solve_p2r(scenario, fm, options, layout);
        r.pcrb_relaxed = pcrb_from_information(fm, rel.t);

        r.cov.WS = CMat::Zero(fm.n_tx(), fm.n_tx());
        for (int k = 0; k < scenario.num_users(); ++k)
        {
            const CMat w = hermitian_part(rel.cov.W[size_t(k)]);
            const Eigen::Index n = w.rows();
            const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(w, Eigen::EigenvaluesOnly).eigenvalues();
            const bool rank_one = n < 2 || ev[n - 2] <= options.rank_threshold * std::max(ev[n - 1], 0.0);
            r.rank_one = r.rank_one && rank_one;

            const CVec h = user_channel(scenario, k);
            const CVec v = w * h;
            const double q = h.dot(v).real();
            if (rank_one || !(q > 0.0))
            {
                // Dominant eigenpair; exact for rank one
                const CVec f = beams_of(Covariances{{w}, CMat()}).front();
                r.cov.W.push_back(f * f.adjoint());
            }
            else
                r.cov.W.push_back(v * v.adjoint() / q);
        }
        if (!r.rank_one)
            spdlog::info("dual-functional relaxation is not rank one; reporting the projected design");

        evaluate(r, scenario, fm);
        r.feasible = true;
        for (int k = 0; k < scenario.num_users(); ++k)
            if (r.rates[k] < scenario.users[size_t(k)].rate_target_bps_hz - 1e-6)
                r.feasible = false;
        if (!r.feasible)
            r.message = "Projected rank-one design misses a rate target.";
        return r;
    }

    BenchmarkResult most_probable_angle(const Scenario &scenario, const FisherMatrices &fm,
                                        const PipelineOptions &options)
    {
        BenchmarkResult r;
        r.scheme = BenchmarkScheme::most_probable_angle;
        r.rates = RVec::Zero(scenario.num_users());
        const FeasibilityCertificate cert = check_feasibility(scenario, options);
        if (!cert.feasible)
        {
            r.message = cert.reason;
            return r;
        }
        r.theta_star = most_probable_angle(scenario.prior, make_grid(scenario.quadrature_points));
        const FisherMatrices point = build_point_fisher(scenario, r.theta_star);
        const RelaxedSolution rel = solve_p2r(scenario, point, options);
        r.cov = restore_rank_one(rel.cov, scenario);
        evaluate(r, scenario, fm);
        r.pcrb_relaxed = r.pcrb;
        r.feasible = true;
        return r;
    }
}
