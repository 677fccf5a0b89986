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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include "bench.hpp"
#include "fixtures.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

using namespace isacbf;

namespace
{
    using Clock = std::chrono::steady_clock;

    const std::vector<double> kRates = {1.0, 2.0, 3.0, 4.0, 4.5, 5.0, 5.5, 6.0};

    struct Outcome
    {
        bool pass = true;
        std::ostringstream detail;

        // Records a failed check; keeps the first few messages
        void fail(const std::string &what)
        {
            if (pass)
                detail << what;
            else if (detail.tellp() < 400)
                detail << "; " << what;
            pass = false;
        }
    };

    std::string fmt(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3e", v);
        return buf;
    }

    double lambda_max(const CMat &m)
    {
        if (m.size() == 0)
            return 0.0;
        return Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    }

    int rank_rel(const CMat &m, double thr)
    {
        if (m.norm() == 0.0)
            return 0;
        const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues();
        const double lmax = ev.maxCoeff();
        return lmax > 0.0 ? int((ev.array() > thr * lmax).count()) : 0;
    }

    double wrapped_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

    // Default-scenario runs shared by several criteria
    struct DefaultRuns
    {
        Scenario base;
        FisherMatrices fm;
        std::map<double, PipelineResult> proposed;
        double seconds = 0.0;
    };

    DefaultRuns &default_runs()
    {
        static DefaultRuns runs = []
        {
            DefaultRuns r;
            const auto t0 = Clock::now();
            r.base = fixtures::default_scenario();
            r.fm = build_fisher(r.base);
            for (double rate : kRates)
                r.proposed[rate] = run_pipeline(r.base.with_common_rate(rate), r.fm);
            r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            return r;
        }();
        return runs;
    }

    // 1: final sensing covariance rank at every feasible rate target
    Outcome rank_bound()
    {
        Outcome o;
        const auto &runs = default_runs();
        int worst = 0, feasible = 0;
        for (const auto &[rate, res] : runs.proposed)
        {
            if (res.status == PipelineStatus::infeasible)
                continue;
            if (res.status != PipelineStatus::ok || !res.solution)
            {
                o.fail("R=" + fmt(rate) + " status " + to_string(res.status) + ": " + res.message);
                continue;
            }
            ++feasible;
            // Measured on the reduced covariance, before beam extraction
            const Scenario sc = runs.base.with_common_rate(rate);
            const RelaxedSolution rel = solve_p2r(sc, runs.fm);
            const Covariances rest = restore_rank_one(rel.cov, sc);
            const RankReductionResult red = rank_reduce(rest, sc, runs.fm, recover_z2(runs.fm, rest.total()));
            const int r = std::max(rank_rel(red.cov.WS, 1e-7), rank_rel(res.solution->cov.WS, 1e-7));
            worst = std::max(worst, r);
            if (r > 1)
                o.fail("R=" + fmt(rate) + " rank(W_S)=" + std::to_string(r));
        }
        if (feasible == 0)
            o.fail("no feasible rate target");
        if (runs.seconds >= 120.0)
            o.fail("runtime " + fmt(runs.seconds) + " s");
        o.detail << (o.pass ? "" : " | ") << feasible << " feasible points, max rank(W_S)=" << worst << ", "
                 << fmt(runs.seconds) << " s";
        return o;
    }

    // 2: restored rank-one solutions keep the relaxed objective, the rates and R_X
    Outcome sdr_tightness()
    {
        Outcome o;
        std::vector<Scenario> cases;
        for (double rate : kRates)
            cases.push_back(fixtures::default_scenario().with_common_rate(rate));
        cases.push_back(fixtures::reduction_scenario());
        double worst_t = 0.0, worst_rate = 0.0, worst_r = 0.0;
        for (const auto &s : cases)
        {
            const FisherMatrices fm = build_fisher(s);
            if (!check_feasibility(s).feasible)
                continue;
            const RelaxedSolution rel = solve_p2r(s, fm);
            const Covariances rest = restore_rank_one(rel.cov, s);
            const double t = effective_fisher(fm, rest.total());
            worst_t = std::max(worst_t, std::abs(t - rel.t) / std::abs(rel.t));
            worst_r = std::max(worst_r, (rest.total() - rel.cov.total()).norm() / rel.cov.total().norm());
            for (int k = 0; k < s.num_users(); ++k)
            {
                const CVec h = user_channel(s, k);
                const double sig = h.dot(rest.W[size_t(k)] * h).real();
                double interf = s.noise_power_w(k);
                for (int i = 0; i < s.num_users(); ++i)
                    if (i != k)
                        interf += h.dot(rest.W[size_t(i)] * h).real();
                const double rate = std::log2(1.0 + sig / interf);
                worst_rate = std::max(worst_rate, s.users[size_t(k)].rate_target_bps_hz - rate);
                if (rank_rel(rest.W[size_t(k)], 1e-7) != 1)
                    o.fail("restored W_" + std::to_string(k + 1) + " is not rank one");
            }
        }
        if (worst_t > 1e-6)
            o.fail("objective deviation " + fmt(worst_t));
        if (worst_rate > 1e-6)
            o.fail("rate shortfall " + fmt(worst_rate));
        if (worst_r > 1e-9)
            o.fail("R_X change " + fmt(worst_r));
        o.detail << (o.pass ? "" : " | ") << cases.size() << " instances, max |dt|/t=" << fmt(worst_t)
                 << ", max rate shortfall=" << fmt(std::max(worst_rate, 0.0)) << ", max dR/R=" << fmt(worst_r);
        return o;
    }

    // 3: invariants of every rank-reduction iteration on instances that need it
    Outcome reduction_conservation()
    {
        Outcome o;
        int instances = 0, steps = 0;
        double worst_t = 0.0, worst_slack = 0.0, worst_p = 0.0, worst_lemma = 0.0;
        for (double azimuth : {kPi / 4.0 + 0.1, -3.0 * kPi / 4.0 + 0.1})
            for (double rate : {1.0, 1.5, 2.0, 2.5, 3.0})
                {
                    const Scenario s = fixtures::reduction_scenario(rate, azimuth);
                    const FisherMatrices fm = build_fisher(s);
                    const PipelineResult r = run_pipeline(s, fm);
                    if (r.status != PipelineStatus::ok || !r.solution)
                    {
                        o.fail("azimuth=" + fmt(azimuth) + " R=" + fmt(rate) + ": " + to_string(r.status));
                        continue;
                    }
                    const auto &sol = *r.solution;
                    if (sol.reduction.empty())
                        continue;
                    ++instances;
                    const double P = s.power_budget_w;
                    for (const auto &st : sol.reduction)
                    {
                        ++steps;
                        worst_t = std::max(worst_t, std::abs(st.t_after - st.t_before) / sol.t_relaxed);
                        for (int k = 0; k < s.num_users(); ++k)
                        {
                            const double unit = s.users[size_t(k)].gamma * s.noise_power_w(k);
                            worst_slack = std::max(worst_slack,
                                                   std::abs(st.rate_slack_after[k] - st.rate_slack_before[k]) / unit);
                        }
                        worst_p = std::max(worst_p, std::abs(st.power_after - st.power_before) / P);
                        worst_lemma = std::max(worst_lemma, st.lemma_residual);
                        if (!(st.rank_after < st.rank_before))
                            o.fail("M_S did not decrease");
                    }
                    if (sol.sensing_rank > 1)
                        o.fail("final M_S above one");
                }
        if (steps == 0)
            o.fail("no instance triggered a reduction step");
        if (worst_t > 1e-7)
            o.fail("|dt|/t " + fmt(worst_t));
        if (worst_slack > 1e-7)
            o.fail("rate slack change " + fmt(worst_slack));
        if (worst_p > 1e-7)
            o.fail("power change " + fmt(worst_p));
        if (worst_lemma > 1e-8)
            o.fail("lemma residual " + fmt(worst_lemma));
        o.detail << (o.pass ? "" : " | ") << instances << " instances, " << steps << " steps, max |dt|/t=" << fmt(worst_t)
                 << ", slack=" << fmt(worst_slack) << " (units of gamma sigma^2), power=" << fmt(worst_p)
                 << " P, lemma=" << fmt(worst_lemma);
        return o;
    }

    // 4: benchmark ordering and monotonicity across the sweep
    Outcome benchmark_ordering()
    {
        Outcome o;
        const auto &runs = default_runs();
        const double so = sensing_only(runs.base, runs.fm).pcrb;
        double prev = 0.0;
        double min_margin = std::numeric_limits<double>::infinity();
        for (double rate : kRates)
        {
            const auto &res = runs.proposed.at(rate);
            if (res.status != PipelineStatus::ok)
            {
                o.fail("R=" + fmt(rate) + " proposed " + to_string(res.status));
                continue;
            }
            const Scenario s = runs.base.with_common_rate(rate);
            const double prop = res.solution->pcrb;
            const BenchmarkResult df = dual_functional(s, runs.fm);
            const BenchmarkResult mp = most_probable_angle(s, runs.fm);
            if (!df.feasible || !mp.feasible)
            {
                o.fail("R=" + fmt(rate) + " benchmark not feasible");
                continue;
            }
            if (so > prop + 1e-6)
                o.fail("R=" + fmt(rate) + " sensing-only above proposed");
            if (prop > std::min(df.pcrb, mp.pcrb) + 1e-6)
                o.fail("R=" + fmt(rate) + " proposed above a benchmark");
            if (prop < prev - 1e-6)
                o.fail("R=" + fmt(rate) + " proposed decreased");
            min_margin = std::min(min_margin, std::min(df.pcrb, mp.pcrb) - prop);
            prev = prop;
        }
        o.detail << (o.pass ? "" : " | ") << "sensing-only " << fmt(so) << ", proposed " << fmt(runs.proposed.at(1.0).solution ? runs.proposed.at(1.0).solution->pcrb : NAN)
                 << " .. " << fmt(prev) << ", min benchmark margin " << fmt(min_margin);
        return o;
    }

    // 5: two antennas, one user, against a seeded random search over rank-one designs
    Outcome small_instance_oracle()
    {
        Outcome o;
        const auto t0 = Clock::now();
        std::mt19937_64 rng(20240501);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = -std::numeric_limits<double>::infinity();
        int solved = 0;
        for (int trial = 0; trial < 20; ++trial)
        {
            const Scenario s = fixtures::small_random_scenario(rng);
            const FisherMatrices fm = build_fisher(s);
            const PipelineResult r = run_pipeline(s, fm);
            if (r.status != PipelineStatus::ok || !r.solution)
            {
                o.fail("trial " + std::to_string(trial) + " " + to_string(r.status) + ": " + r.message);
                continue;
            }
            ++solved;
            const auto &sol = *r.solution;
            const double P = s.power_budget_w;
            if (sol.rates[0] < s.users[0].rate_target_bps_hz - 1e-6 || sol.power_used > P * (1.0 + 1e-6))
                o.fail("trial " + std::to_string(trial) + " extracted design infeasible");

            const Eigen::Matrix2cd a1 = fm.A1, a2 = fm.A2, a3 = fm.A3;
            const Eigen::Vector2cd h = user_channel(s, 0);
            const double need = s.users[0].gamma * s.noise_power_w(0);
            double best = 0.0;
            int drawn = 0;
            while (drawn < 100000)
            {
                const Eigen::Vector2cd u = fixtures::random_cvec(rng, 2).normalized();
                const Eigen::Vector2cd v = fixtures::random_cvec(rng, 2).normalized();
                const double pmin = need / std::norm(h.dot(u));
                if (pmin > P)
                    continue;
                ++drawn;
                const double pw = pmin + (P - pmin) * unit(rng);
                const Eigen::Matrix2cd rx = pw * u * u.adjoint() + (P - pw) * v * v.adjoint();
                const double t1 = (a1 * rx).trace().real();
                const cdouble t2 = (a2 * rx).trace();
                const double t3 = (a3 * rx).trace().real();
                best = std::max(best, t1 - std::norm(t2) / t3);
            }
            worst = std::max(worst, (best - sol.t) / sol.t);
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (worst > 1e-4)
            o.fail("random design beats the pipeline by " + fmt(worst));
        if (secs >= 60.0)
            o.fail("runtime " + fmt(secs) + " s");
        o.detail << (o.pass ? "" : " | ") << solved << "/20 solved, max (best random - pipeline)/pipeline=" << fmt(worst)
                 << ", " << fmt(secs) << " s";
        return o;
    }

    // 6: numerical building blocks
    Outcome numerics()
    {
        Outcome o;
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> az(-kPi, kPi), el(0.0, 1.4), zz(-3.0, 3.0);
        const Scenario s = fixtures::default_scenario();

        double worst_fd = 0.0;
        for (int i = 0; i < 100; ++i)
        {
            const double phi = el(rng), th = az(rng), h = 1e-6;
            for (ArraySide side : {ArraySide::tx, ArraySide::rx})
            {
                const CVec d = steering_derivative(s.geometry, side, phi, th);
                const CVec fd =
                    (steering(s.geometry, side, phi, th + h) - steering(s.geometry, side, phi, th - h)) / (2.0 * h);
                worst_fd = std::max(worst_fd, (d - fd).norm() / d.norm());
            }
        }
        if (worst_fd > 1e-6)
            o.fail("steering derivative " + fmt(worst_fd));

        double worst_norm = 0.0, worst_closed = 0.0;
        for (double kappa : {0.0, 1.0, 10.0, 100.0, 250.0, 370.0, 540.0})
        {
            const PriorModel p({{1.0, az(rng), kappa}});
            const int n = 200000;
            double mass = 0.0;
            for (int i = 0; i < n; ++i)
                mass += p.pdf(-kPi + (i + 0.5) * kTwoPi / n);
            worst_norm = std::max(worst_norm, std::abs(mass * kTwoPi / n - 1.0));
            if (kappa > 0.0)
            {
                const double closed =
                    0.5 * kappa * kappa * (1.0 - std::cyl_bessel_i(2.0, kappa) / std::cyl_bessel_i(0.0, kappa));
                worst_closed = std::max(worst_closed, std::abs(prior_fisher(p, make_grid(4096)) - closed) / closed);
            }
        }
        if (worst_norm > 1e-8)
            o.fail("prior normalization " + fmt(worst_norm));
        if (worst_closed > 1e-6)
            o.fail("prior information " + fmt(worst_closed));

        double worst_psd = 0.0;
        for (int i = 0; i < 100; ++i)
        {
            const CMat d = d_bar(s.geometry, s.target_elevation(), az(rng), cdouble(zz(rng), zz(rng)));
            const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(d)).eigenvalues();
            worst_psd = std::max(worst_psd, -ev.minCoeff() / std::max(1.0, ev.maxCoeff()));
        }
        if (worst_psd > 1e-10)
            o.fail("D-bar not PSD " + fmt(worst_psd));

        const FisherMatrices fm = build_fisher(s);
        const double expect = double(s.geometry.n_rx() * s.geometry.n_tx());
        const double tr_err = std::abs(fm.A3.trace().real() - expect) / expect;
        if (tr_err > 1e-6)
            o.fail("tr(A3) " + fmt(tr_err));

        o.detail << (o.pass ? "" : " | ") << "derivative " << fmt(worst_fd) << ", normalization " << fmt(worst_norm)
                 << ", closed form " << fmt(worst_closed) << ", PSD " << fmt(worst_psd) << ", tr(A3) " << fmt(tr_err);
        return o;
    }

    // 7: optimality certificates of the default solve
    Outcome kkt_certificates()
    {
        Outcome o;
        const auto &res = default_runs().proposed.at(4.5);
        if (res.status != PipelineStatus::ok || !res.solution)
        {
            o.fail(std::string("default solve ") + to_string(res.status));
            return o;
        }
        const auto &sol = *res.solution;
        const auto &z = sol.sdp.z_lmi;
        const double gap = sol.sdp.gap;
        const double z1 = std::abs(z(0, 0).real() - 1.0);
        const double tr = (z(0, 0) + z(1, 1)).real();
        const double det = std::abs((z(0, 0) * z(1, 1) - std::norm(z(0, 1))).real()) / (tr * tr);
        const double P = default_runs().base.power_budget_w;
        const double pw = std::abs(sol.power_used - P) / P;
        if (gap > 1e-8)
            o.fail("duality gap " + fmt(gap));
        if (z1 > 1e-8)
            o.fail("|z1 - 1| " + fmt(z1));
        if (det > 1e-8)
            o.fail("det(Z_B)/tr(Z_B)^2 " + fmt(det));
        if (pw > 1e-6)
            o.fail("power slack " + fmt(pw));
        o.detail << (o.pass ? "" : " | ") << "gap " << fmt(gap) << ", |z1-1| " << fmt(z1) << ", det/tr^2 " << fmt(det)
                 << ", |P_used-P|/P " << fmt(pw) << ", " << sol.sdp.iterations << " iterations";
        return o;
    }

    // 8: beampattern shape at 4.5 bps/Hz
    Outcome beampattern_shape()
    {
        Outcome o;
        const auto &runs = default_runs();
        const auto &res = runs.proposed.at(4.5);
        if (res.status != PipelineStatus::ok || !res.solution)
        {
            o.fail(std::string("solve ") + to_string(res.status));
            return o;
        }
        const auto &sol = *res.solution;
        const Scenario &s = runs.base;
        double mode_dist = NAN;
        if (sol.sensing_rank != 1)
            o.fail("no sensing beam");
        else
        {
            const int n = 3600;
            const RVec grid = RVec::LinSpaced(n, -kPi, kPi - kTwoPi / n);
            const RVec p = radiation_pattern(s.geometry, sol.cov.WS, s.target_elevation(), grid);
            Eigen::Index imax;
            p.maxCoeff(&imax);
            mode_dist = std::numeric_limits<double>::infinity();
            for (const auto &c : s.prior.components())
                mode_dist = std::min(mode_dist, wrapped_distance(grid[imax], c.mean_rad));
            if (mode_dist > 0.15)
                o.fail("sensing argmax " + fmt(grid[imax]) + " is " + fmt(mode_dist) + " rad from the nearest mode");
        }
        double min_ratio = std::numeric_limits<double>::infinity();
        const int K = s.num_users();
        for (int k = 0; k < K; ++k)
        {
            auto gain_at = [&](int j)
            {
                const CVec a = steering(s.geometry, ArraySide::tx, s.user_elevation(j), s.users[size_t(j)].azimuth_rad);
                return std::norm(a.dot(sol.w[size_t(k)]));
            };
            const double own = gain_at(k);
            for (int j = 0; j < K; ++j)
                if (j != k)
                {
                    const double other = gain_at(j);
                    min_ratio = std::min(min_ratio, own / std::max(other, 1e-300));
                    if (!(own > other))
                        o.fail("beam " + std::to_string(k + 1) + " stronger toward user " + std::to_string(j + 1));
                }
        }
        o.detail << (o.pass ? "" : " | ") << "sensing peak " << fmt(mode_dist) << " rad from a mode, min own/other gain "
                 << fmt(min_ratio);
        return o;
    }
}

int main()
{
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"rank bound on the sensing covariance", rank_bound},
        {"SDR tightness after rank-one restoration", sdr_tightness},
        {"rank-reduction conservation", reduction_conservation},
        {"benchmark ordering and monotonicity", benchmark_ordering},
        {"small-instance random-search oracle", small_instance_oracle},
        {"numerics suite", numerics},
        {"KKT and duality certificates", kkt_certificates},
        {"beampattern shape", beampattern_shape},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i)
    {
        const auto t0 = Clock::now();
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
