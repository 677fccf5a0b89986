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

#include "pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace isacbf
{
    CMat Covariances::total() const
    {
        CMat r = WS;
        for (const auto &w : W)
            r += w;
        return r;
    }

    double Covariances::power() const { return total().trace().real(); }

    namespace
    {
        bool active_user(const Scenario &s, int k) { return s.users[size_t(k)].gamma > 0.0; }

        double lambda_max(const CMat &m)
        {
            if (m.size() == 0)
                return 0.0;
            return Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        }

        // Adds the rate rows h~^H (X_k - gamma_k sum_{i != k} X_i) h~ - gamma_k >= 0 for the active users,
        // with h~ = h sqrt(P / sigma^2) so that X = W / P.
        void add_rate_rows(sdp::SdpProblem &p, const Scenario &s, const std::vector<int> &user_block)
        {
            const int K = s.num_users();
            const double P = s.power_budget_w;
            for (int k = 0; k < K; ++k)
            {
                if (user_block[size_t(k)] < 0)
                    continue;
                const double gamma = s.users[size_t(k)].gamma;
                const CVec h = user_channel(s, k) * std::sqrt(P / s.noise_power_w(k));
                const CMat hh = h * h.adjoint();
                sdp::AffineReal g;
                g.block_coef.assign(p.block_sizes.size(), CMat());
                for (int i = 0; i < K; ++i)
                {
                    const int b = user_block[size_t(i)];
                    if (b < 0)
                        continue;
                    g.block_coef[size_t(b)] = (i == k ? 1.0 : -gamma) * hh;
                }
                g.constant = -gamma;
                p.inequalities.push_back(std::move(g));
            }
        }
    }

    P2rProblem assemble_p2r(const Scenario &scenario, const FisherMatrices &fm, P2rLayout layout)
    {
        const int n = fm.n_tx();
        if (n != scenario.geometry.n_tx())
            throw Error(ErrorCode::invalid_argument, "Fisher matrices do not match the transmit array.");

        P2rProblem out;
        out.power = scenario.power_budget_w;
        out.fisher_scale = std::max({fm.A1.norm(), fm.A3.norm(), 1e-300});
        out.user_block.assign(size_t(scenario.num_users()), -1);

        auto &p = out.sdp;
        if (layout.users)
            for (int k = 0; k < scenario.num_users(); ++k)
                if (active_user(scenario, k) || layout.idle_users)
                {
                    out.user_block[size_t(k)] = int(p.block_sizes.size());
                    p.block_sizes.push_back(n);
                }
        if (layout.sensing)
        {
            out.sensing_block = int(p.block_sizes.size());
            p.block_sizes.push_back(n);
        }
        if (p.block_sizes.empty())
            throw Error(ErrorCode::invalid_argument, "Relaxation has no variable blocks.");

        const size_t nb = p.block_sizes.size();
        const CMat a1 = fm.A1 / out.fisher_scale;
        const CMat a2 = fm.A2 / out.fisher_scale;
        const CMat a3 = fm.A3 / out.fisher_scale;

        p.has_t = true;
        p.objective.t_coef = 1.0;

        sdp::Lmi2 lmi;
        lmi.f11.block_coef.assign(nb, a1);
        lmi.f11.t_coef = -1.0;
        lmi.f12.block_coef.assign(nb, a2);
        lmi.f22.block_coef.assign(nb, a3);
        p.lmi = std::move(lmi);

        add_rate_rows(p, scenario, out.user_block);

        sdp::AffineReal power;
        power.block_coef.assign(nb, -CMat::Identity(n, n));
        power.constant = 1.0;
        p.inequalities.push_back(std::move(power));
        return out;
    }

    RelaxedSolution solve_p2r(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options,
                              P2rLayout layout)
    {
        const P2rProblem prob = assemble_p2r(scenario, fm, layout);
        sdp::SdpOptions so;
        so.tol = options.tol;
        so.max_iterations = options.max_iterations;

        RelaxedSolution out;
        out.sdp = sdp::solve(prob.sdp, so);
        if (out.sdp.status == sdp::SdpStatus::primal_infeasible)
            throw Error(ErrorCode::infeasible, "Relaxation is infeasible.");
        if (out.sdp.status != sdp::SdpStatus::optimal)
            throw Error(ErrorCode::numerical,
                        std::string("Relaxation solve ended with status ") + sdp::to_string(out.sdp.status) + ".");
        spdlog::debug("relaxation solved in {} iterations, gap {:.2e}", out.sdp.iterations, out.sdp.gap);

        const int n = fm.n_tx();
        const double P = prob.power;
        out.cov.W.assign(size_t(scenario.num_users()), CMat::Zero(n, n));
        for (int k = 0; k < scenario.num_users(); ++k)
            if (prob.user_block[size_t(k)] >= 0)
                out.cov.W[size_t(k)] = P * out.sdp.blocks[size_t(prob.user_block[size_t(k)])];
        out.cov.WS = prob.sensing_block >= 0 ? CMat(P * out.sdp.blocks[size_t(prob.sensing_block)])
                                              : CMat(CMat::Zero(n, n));
        out.t = out.sdp.t * P * prob.fisher_scale;
        out.kkt = sdp::kkt_residuals(prob.sdp, out.sdp);
        const cdouble z1 = out.sdp.z_lmi(0, 0);
        out.z2_dual = std::abs(z1) > 0.0 ? out.sdp.z_lmi(0, 1) / z1 : cdouble(0.0);
        return out;
    }

    FeasibilityCertificate check_feasibility(const Scenario &scenario, const PipelineOptions &options)
    {
        FeasibilityCertificate cert;
        const double P = scenario.power_budget_w;
        const int K = scenario.num_users();

        std::vector<int> user_block(size_t(K), -1);
        sdp::SdpProblem p;
        for (int k = 0; k < K; ++k)
        {
            if (!active_user(scenario, k))
                continue;
            // Interference-free single-user bound gamma sigma^2 / ||h||^2
            const double bound = scenario.users[size_t(k)].gamma * scenario.noise_power_w(k) /
                                 user_channel(scenario, k).squaredNorm();
            if (bound > cert.min_power_w)
            {
                cert.min_power_w = bound;
                if (bound > P)
                    cert.limiting_user = k;
            }
            user_block[size_t(k)] = int(p.block_sizes.size());
            p.block_sizes.push_back(scenario.geometry.n_tx());
        }
        if (cert.limiting_user >= 0)
        {
            cert.feasible = false;
            cert.reason = "Rate target of user " + std::to_string(cert.limiting_user + 1) +
                          " needs more than the power budget even without interference.";
            return cert;
        }
        if (p.block_sizes.empty())
            return cert;

        const int n = scenario.geometry.n_tx();
        p.objective.block_coef.assign(p.block_sizes.size(), -CMat::Identity(n, n));
        add_rate_rows(p, scenario, user_block);

        sdp::SdpOptions so;
        so.tol = options.tol;
        so.max_iterations = options.max_iterations;
        const sdp::SdpSolution sol = sdp::solve(p, so);
        if (sol.status == sdp::SdpStatus::primal_infeasible)
        {
            cert.feasible = false;
            cert.min_power_w = std::numeric_limits<double>::infinity();
            cert.reason = "Rate targets cannot be met at any transmit power.";
            return cert;
        }
        if (sol.status != sdp::SdpStatus::optimal)
            throw Error(ErrorCode::numerical,
                        std::string("Minimum-power solve ended with status ") + sdp::to_string(sol.status) + ".");
        cert.min_power_w = -sol.objective * P;
        if (cert.min_power_w >= P)
        {
            cert.feasible = false;
            cert.reason = "Minimum power meeting the rate targets exceeds the budget.";
        }
        return cert;
    }

    Covariances restore_rank_one(const Covariances &cov, const Scenario &scenario)
    {
        if (int(cov.W.size()) != scenario.num_users())
            throw Error(ErrorCode::invalid_argument, "Expected one covariance per user.");
        Covariances out;
        out.WS = cov.WS;
        out.W.reserve(cov.W.size());
        for (int k = 0; k < scenario.num_users(); ++k)
        {
            const CMat &w = cov.W[size_t(k)];
            const CMat wk = hermitian_part(w);
            if (!active_user(scenario, k))
            {
                out.W.push_back(CMat::Zero(w.rows(), w.cols()));
                out.WS += wk;
                continue;
            }
            const CVec h = user_channel(scenario, k);
            const CVec v = wk * h;
            const double q = h.dot(v).real();
            if (!(q > 0.0))
                throw Error(ErrorCode::infeasible,
                            "User " + std::to_string(k + 1) + " receives no signal power; rank-one restoration fails.");
            const CMat wbar = v * v.adjoint() / q;
            out.W.push_back(wbar);
            out.WS += wk - wbar;
        }
        out.WS = hermitian_part(out.WS);
        return out;
    }

    cdouble recover_z2(const FisherMatrices &fm, const CMat &rx)
    {
        const double a3 = re_trace_product(fm.A3, rx);
        const double scale = std::max(fm.A3.norm() * rx.norm(), 1e-300);
        if (!(a3 > 1e-14 * scale))
            throw Error(ErrorCode::numerical, "Degenerate illumination: tr(A3 R) is not positive.");
        return -trace_product(fm.A2, rx) / a3;
    }

    Covariances RankReductionState::covariances() const
    {
        Covariances c;
        for (const auto &fk : f)
            c.W.push_back(fk * fk.adjoint());
        c.WS = J.cols() > 0 ? CMat(J * J.adjoint()) : CMat(CMat::Zero(J.rows(), J.rows()));
        return c;
    }

    RankReductionState factor_covariances(const Covariances &cov, double rank_threshold)
    {
        RankReductionState st;
        const double ref = lambda_max(cov.total());
        for (const auto &w : cov.W)
        {
            const Eigen::Index n = w.rows();
            if (w.norm() == 0.0)
            {
                st.f.push_back(CVec::Zero(n));
                continue;
            }
            Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(w));
            const double lmax = es.eigenvalues()[n - 1];
            if (n > 1 && es.eigenvalues()[n - 2] > rank_threshold * std::max(lmax, 0.0))
                throw Error(ErrorCode::numerical, "Communication covariance is not rank one.");
            st.f.push_back(lmax > 0.0 ? CVec(std::sqrt(lmax) * es.eigenvectors().col(n - 1)) : CVec(CVec::Zero(n)));
        }

        const Eigen::Index n = cov.WS.rows();
        Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(cov.WS));
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = n - 1; i >= 0; --i)
            if (es.eigenvalues()[i] > rank_threshold * ref)
                keep.push_back(i);
        st.J.resize(n, Eigen::Index(keep.size()));
        for (size_t c = 0; c < keep.size(); ++c)
            st.J.col(Eigen::Index(c)) = std::sqrt(es.eigenvalues()[keep[c]]) * es.eigenvectors().col(keep[c]);
        return st;
    }

    RVec rate_slacks(const Scenario &scenario, const Covariances &cov)
    {
        const int K = scenario.num_users();
        RVec out(K);
        for (int k = 0; k < K; ++k)
        {
            const CVec h = user_channel(scenario, k);
            const double gamma = scenario.users[size_t(k)].gamma;
            double v = h.dot(cov.W[size_t(k)] * h).real();
            for (int i = 0; i < K; ++i)
                if (i != k)
                    v -= gamma * h.dot(cov.W[size_t(i)] * h).real();
            out[k] = v - gamma * scenario.noise_power_w(k);
        }
        return out;
    }

    namespace
    {
        // tr(M E_p) for the real basis of Hermitian M_S x M_S matrices:
        // e_ii, then e_ij + e_ji and j (e_ij - e_ji) for i < j.
        std::vector<cdouble> hermitian_basis_traces(const CMat &m)
        {
            const Eigen::Index ms = m.rows();
            std::vector<cdouble> out;
            for (Eigen::Index i = 0; i < ms; ++i)
                out.push_back(m(i, i));
            for (Eigen::Index i = 0; i < ms; ++i)
                for (Eigen::Index j = i + 1; j < ms; ++j)
                {
                    out.push_back(m(j, i) + m(i, j));
                    out.push_back(cdouble(0.0, 1.0) * (m(j, i) - m(i, j)));
                }
            return out;
        }

        CMat hermitian_from_basis(const RVec &x, Eigen::Index offset, Eigen::Index ms)
        {
            CMat d = CMat::Zero(ms, ms);
            Eigen::Index p = offset;
            for (Eigen::Index i = 0; i < ms; ++i)
                d(i, i) = x[p++];
            for (Eigen::Index i = 0; i < ms; ++i)
                for (Eigen::Index j = i + 1; j < ms; ++j)
                {
                    const double re = x[p++];
                    const double im = x[p++];
                    d(i, j) += cdouble(re, im);
                    d(j, i) += cdouble(re, -im);
                }
            return d;
        }

        struct Snapshot
        {
            double t, power, lemma;
            RVec slack;
        };

        Snapshot snapshot(const RankReductionState &st, const Scenario &s, const FisherMatrices &fm, cdouble z2)
        {
            const Covariances c = st.covariances();
            const CMat r = c.total();
            Snapshot snap;
            snap.t = effective_fisher(fm, r);
            snap.power = r.trace().real();
            snap.slack = rate_slacks(s, c);
            snap.lemma = std::abs(trace_product(fm.A2 + z2 * fm.A3, r)) / re_trace_product(fm.A3, r);
            return snap;
        }
    }

    RankReductionResult rank_reduce(const Covariances &restored, const Scenario &scenario, const FisherMatrices &fm,
                                    cdouble z2, double rank_threshold)
    {
        RankReductionResult res;
        RankReductionState &st = res.state;
        st = factor_covariances(restored, rank_threshold);

        const int K = scenario.num_users();
        const CMat g = fm.A2 + z2 * fm.A3;
        std::vector<int> act;
        for (int k = 0; k < K; ++k)
            if (st.f[size_t(k)].squaredNorm() > 0.0)
                act.push_back(k);
        const int ka = int(act.size());
        std::vector<CVec> h(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k)
            h[size_t(k)] = user_channel(scenario, k);

        while (st.J.cols() >= 2)
        {
            const Eigen::Index ms = st.J.cols();
            const Snapshot before = snapshot(st, scenario, fm, z2);

            const Eigen::Index nx = ka + ms * ms;
            RMat a = RMat::Zero(ka + 3, nx);
            // Re / Im of the Lemma-1 identity
            for (int c = 0; c < ka; ++c)
            {
                const CVec &fk = st.f[size_t(act[size_t(c)])];
                const cdouble v = fk.dot(g * fk);
                a(0, c) = v.real();
                a(1, c) = v.imag();
            }
            const auto tg = hermitian_basis_traces(st.J.adjoint() * g * st.J);
            for (size_t p = 0; p < tg.size(); ++p)
            {
                a(0, ka + Eigen::Index(p)) = tg[p].real();
                a(1, ka + Eigen::Index(p)) = tg[p].imag();
            }
            // Rate equalities
            for (int r = 0; r < ka; ++r)
            {
                const int k = act[size_t(r)];
                const double gamma = scenario.users[size_t(k)].gamma;
                for (int c = 0; c < ka; ++c)
                {
                    const double gain = std::norm(st.f[size_t(act[size_t(c)])].dot(h[size_t(k)]));
                    a(2 + r, c) = (c == r) ? gain : -gamma * gain;
                }
            }
            // Power
            for (int c = 0; c < ka; ++c)
                a(2 + ka, c) = st.f[size_t(act[size_t(c)])].squaredNorm();
            const auto tp = hermitian_basis_traces(st.J.adjoint() * st.J);
            for (size_t p = 0; p < tp.size(); ++p)
                a(2 + ka, ka + Eigen::Index(p)) = tp[p].real();

            for (Eigen::Index r = 0; r < a.rows(); ++r)
            {
                const double m = a.row(r).cwiseAbs().maxCoeff();
                if (m > 0.0)
                    a.row(r) /= m;
            }

            Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeFullV);
            RVec x = svd.matrixV().col(nx - 1);
            Eigen::Index imax = 0;
            x.cwiseAbs().maxCoeff(&imax);
            x /= x[imax];

            st.delta_users = x.head(ka);
            st.delta_sensing = hermitian_from_basis(x, ka, ms);

            Eigen::SelfAdjointEigenSolver<CMat> des(st.delta_sensing, Eigen::EigenvaluesOnly);
            const RVec ev = des.eigenvalues();
            const double best = std::max(ev.cwiseAbs().maxCoeff(), ka > 0 ? st.delta_users.cwiseAbs().maxCoeff() : 0.0);
            Eigen::Index pick = -1;
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                if (std::abs(ev[i]) >= best * (1.0 - 1e-12))
                    pick = i;
            if (pick < 0)
                throw Error(ErrorCode::numerical,
                            "Rank reduction step is attained by a communication beam; the relaxation is not accurate enough.");
            st.xi = ev[pick];

            for (int c = 0; c < ka; ++c)
                st.f[size_t(act[size_t(c)])] *= std::sqrt(std::max(0.0, 1.0 - st.delta_users[c] / st.xi));

            // W_S <- J (I - Delta_S / xi) J^H, refactored through a thin QR of J
            const CMat m = CMat::Identity(ms, ms) - st.delta_sensing / st.xi;
            Eigen::HouseholderQR<CMat> qr(st.J);
            const CMat q = qr.householderQ() * CMat::Identity(st.J.rows(), ms);
            const CMat rfac = q.adjoint() * st.J;
            Eigen::SelfAdjointEigenSolver<CMat> nes(hermitian_part(rfac * m * rfac.adjoint()));
            const double nmax = nes.eigenvalues().maxCoeff();
            std::vector<Eigen::Index> keep;
            for (Eigen::Index i = ms - 1; i >= 0; --i)
                if (nes.eigenvalues()[i] > 1e-12 * nmax)
                    keep.push_back(i);
            if (Eigen::Index(keep.size()) >= ms)
                throw Error(ErrorCode::numerical, "Rank reduction step did not lower the sensing rank.");
            CMat jn(st.J.rows(), Eigen::Index(keep.size()));
            for (size_t c = 0; c < keep.size(); ++c)
                jn.col(Eigen::Index(c)) = std::sqrt(nes.eigenvalues()[keep[c]]) * (q * nes.eigenvectors().col(keep[c]));
            st.J = jn;

            const Snapshot after = snapshot(st, scenario, fm, z2);
            RankReductionStep step;
            step.rank_before = int(ms);
            step.rank_after = int(st.J.cols());
            step.t_before = before.t;
            step.t_after = after.t;
            step.power_before = before.power;
            step.power_after = after.power;
            step.rate_slack_before = before.slack;
            step.rate_slack_after = after.slack;
            step.lemma_residual = after.lemma;
            step.xi = st.xi;
            spdlog::debug("rank reduction: M_S {} -> {}, t {:.12g} -> {:.12g}", step.rank_before, step.rank_after,
                          step.t_before, step.t_after);
            res.steps.push_back(std::move(step));
        }
        res.cov = st.covariances();
        return res;
    }

    namespace
    {
        // Dominant eigenvector scaled by sqrt(lambda); zero if the matrix is zero.
        CVec rank_one_factor(const CMat &w, double rank_threshold, const char *what)
        {
            const Eigen::Index n = w.rows();
            if (w.norm() == 0.0)
                return CVec::Zero(n);
            Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(w));
            const double lmax = es.eigenvalues()[n - 1];
            if (!(lmax > 0.0))
                return CVec::Zero(n);
            if (n > 1 && es.eigenvalues()[n - 2] > rank_threshold * lmax)
                throw Error(ErrorCode::numerical, std::string(what) + " is not rank one; rank reduction is incomplete.");
            return std::sqrt(lmax) * es.eigenvectors().col(n - 1);
        }

        // Removes the global phase: makes `ref^H v` real positive, or the largest entry if ref^H v = 0.
        CVec fix_phase(const CVec &v, const CVec *ref)
        {
            if (v.size() == 0 || v.norm() == 0.0)
                return v;
            cdouble c = 0.0;
            if (ref)
                c = ref->dot(v);
            if (std::abs(c) <= 1e-300)
            {
                Eigen::Index i = 0;
                v.cwiseAbs().maxCoeff(&i);
                c = v[i];
            }
            return v * (std::abs(c) / c);
        }
    }

    BeamformingSolution extract_beams(const Covariances &cov, const Scenario &scenario, const FisherMatrices &fm,
                                      double rank_threshold)
    {
        const int K = scenario.num_users();
        if (int(cov.W.size()) != K)
            throw Error(ErrorCode::invalid_argument, "Expected one covariance per user.");

        BeamformingSolution sol;
        for (int k = 0; k < K; ++k)
        {
            const CVec h = user_channel(scenario, k);
            sol.w.push_back(fix_phase(rank_one_factor(cov.W[size_t(k)], rank_threshold, "Communication covariance"), &h));
        }
        sol.s = fix_phase(rank_one_factor(cov.WS, rank_threshold, "Sensing covariance"), nullptr);

        for (const auto &w : sol.w)
            sol.cov.W.push_back(w * w.adjoint());
        sol.cov.WS = sol.s * sol.s.adjoint();
        const CMat r = sol.cov.total();

        sol.t = effective_fisher(fm, r);
        sol.pcrb = pcrb_from_information(fm, sol.t);
        sol.rates = achievable_rate(scenario, sol.w);
        sol.power_used = r.trace().real();
        sol.sensing_rank = sol.s.squaredNorm() > 0.0 ? 1 : 0;
        sol.z2 = recover_z2(fm, r);
        sol.beta = RVec(K);
        for (int k = 0; k < K; ++k)
            sol.beta[k] = sol.w[size_t(k)].squaredNorm() / scenario.power_budget_w;
        return sol;
    }

    bool VerificationReport::passed() const
    {
        return std::all_of(items.begin(), items.end(), [](const VerificationItem &i) { return i.passed; });
    }

    const VerificationItem *VerificationReport::find(const std::string &name) const
    {
        for (const auto &i : items)
            if (i.name == name)
                return &i;
        return nullptr;
    }

    namespace
    {
        int numerical_rank(const CMat &w, double rank_threshold)
        {
            if (w.size() == 0 || w.norm() == 0.0)
                return 0;
            const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(w), Eigen::EigenvaluesOnly).eigenvalues();
            const double lmax = ev.maxCoeff();
            if (!(lmax > 0.0))
                return 0;
            return int((ev.array() > rank_threshold * lmax).count());
        }
    }

    VerificationReport verify_solution(const Scenario &scenario, const FisherMatrices &fm,
                                       const BeamformingSolution &sol, double sdp_tol)
    {
        VerificationReport rep;
        auto add = [&rep](std::string name, double value, double tol)
        { rep.items.push_back({std::move(name), value, tol, value <= tol}); };

        const double P = scenario.power_budget_w;
        const int K = scenario.num_users();
        CMat r = sol.s * sol.s.adjoint();
        std::vector<CVec> beams;
        for (const auto &w : sol.w)
        {
            r += w * w.adjoint();
            beams.push_back(w);
        }
        const double power = r.trace().real();

        add("power_budget", (power - P) / P, 1e-6);
        add("power_active", std::abs(power - P) / P, 1e-6);

        const RVec rates = achievable_rate(scenario, beams);
        for (int k = 0; k < K; ++k)
            add("rate_user_" + std::to_string(k + 1), scenario.users[size_t(k)].rate_target_bps_hz - rates[k], 1e-6);

        add("sensing_rank", double(numerical_rank(sol.s * sol.s.adjoint(), 1e-7)), 1.0);

        double pcrb = 2.0, t = 0.0, lemma = std::numeric_limits<double>::infinity();
        try
        {
            t = effective_fisher(fm, r);
            pcrb = pcrb_from_information(fm, t);
            lemma = std::abs(trace_product(fm.A2 + sol.z2 * fm.A3, r)) / re_trace_product(fm.A3, r);
        }
        catch (const Error &)
        {
        }
        add("pcrb_recomputation", std::abs(pcrb - sol.pcrb) / std::max(sol.pcrb, 1e-300), 1e-8);
        add("relaxation_gap", std::abs(t - sol.t_relaxed) / std::max(std::abs(sol.t_relaxed), 1e-300), 1e-6);
        add("lemma1_residual", lemma, 1e-8);
        add("beta_sum", (sol.beta.size() ? sol.beta.sum() : 0.0) - 1.0, 1e-9);

        const auto &z = sol.sdp.z_lmi;
        add("duality_gap", sol.sdp.gap, std::max(sdp_tol, 1e-8));
        add("z1", std::abs(z(0, 0).real() - 1.0), 1e-8);
        const double det = (z(0, 0) * z(1, 1) - std::norm(z(0, 1))).real();
        const double tr = (z(0, 0) + z(1, 1)).real();
        add("z_lmi_determinant", std::abs(det) / std::max(tr * tr, 1e-300), 1e-8);

        double stat = 0.0;
        for (size_t j = 0; j < sol.kkt.block_stationarity.size(); ++j)
            stat = std::max(stat, sol.kkt.block_stationarity[j]);
        add("kkt_stationarity", stat, 1e-6);
        return rep;
    }

    const char *to_string(PipelineStatus status)
    {
        switch (status)
        {
        case PipelineStatus::ok:
            return "ok";
        case PipelineStatus::infeasible:
            return "infeasible";
        case PipelineStatus::verification_failed:
            return "verification_failed";
        case PipelineStatus::numerical_error:
            return "numerical_error";
        }
        return "unknown";
    }

    PipelineResult run_pipeline(const Scenario &scenario, const FisherMatrices &fm, const PipelineOptions &options)
    {
        PipelineResult res;
        try
        {
            res.feasibility = check_feasibility(scenario, options);
        }
        catch (const Error &e)
        {
            res.status = PipelineStatus::numerical_error;
            res.message = e.what();
            return res;
        }
        if (!res.feasibility.feasible)
        {
            res.status = PipelineStatus::infeasible;
            res.message = res.feasibility.reason;
            return res;
        }

        PipelineOptions opt = options;
        for (int attempt = 0; attempt < 2; ++attempt)
        {
            try
            {
                const RelaxedSolution relaxed = solve_p2r(scenario, fm, opt);
                const Covariances restored = restore_rank_one(relaxed.cov, scenario);
                const cdouble z2 = recover_z2(fm, restored.total());
                const RankReductionResult red = rank_reduce(restored, scenario, fm, z2, opt.rank_threshold);

                BeamformingSolution sol = extract_beams(red.cov, scenario, fm, opt.rank_threshold);
                sol.t_relaxed = relaxed.t;
                sol.pcrb_relaxed = pcrb_from_information(fm, relaxed.t);
                sol.z2_dual = relaxed.z2_dual;
                sol.sdp = relaxed.sdp;
                sol.kkt = relaxed.kkt;
                sol.reduction = red.steps;

                res.verification = verify_solution(scenario, fm, sol, options.tol);
                res.solution = std::move(sol);
                res.status = res.verification.passed() ? PipelineStatus::ok : PipelineStatus::verification_failed;
                if (!res.verification.passed())
                    for (const auto &i : res.verification.items)
                        if (!i.passed)
                            spdlog::warn("verification item {} failed: {:.3e} > {:.3e}", i.name, i.value, i.tolerance);
                return res;
            }
            catch (const Error &e)
            {
                res.message = e.what();
                if (e.code() == ErrorCode::infeasible)
                {
                    res.status = PipelineStatus::infeasible;
                    return res;
                }
                if (attempt == 0)
                {
                    spdlog::warn("{} Retrying with a tighter tolerance.", e.what());
                    opt.tol = options.tol * 1e-2;
                    opt.max_iterations = options.max_iterations * 2;
                    continue;
                }
            }
        }
        res.status = PipelineStatus::numerical_error;
        return res;
    }
}
