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

#include "report.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace isacbf
{
    std::string format_number(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
        return std::string(buf, res.ptr);
    }

    std::vector<double> sweep_rates(const SweepOptions &o)
    {
        if (o.steps < 1)
            throw Error(ErrorCode::invalid_argument, "Sweep needs at least one step.");
        if (!(o.rate_min <= o.rate_max) || o.rate_min < 0.0)
            throw Error(ErrorCode::invalid_argument, "Sweep needs 0 <= rate_min <= rate_max.");
        std::vector<double> r;
        for (int i = 0; i < o.steps; ++i)
            r.push_back(o.steps == 1 ? o.rate_min
                                     : o.rate_min + (o.rate_max - o.rate_min) * double(i) / double(o.steps - 1));
        return r;
    }

    std::vector<SweepRecord> run_sweep(const Scenario &scenario, const SweepOptions &options)
    {
        const std::vector<double> rates = sweep_rates(options);
        const FisherMatrices fm = build_fisher(scenario);
        const double nan = std::numeric_limits<double>::quiet_NaN();

        // Rate independent, shared by every row
        double pcrb_sensing = nan;
        try
        {
            pcrb_sensing = sensing_only(scenario, fm, options.pipeline).pcrb;
        }
        catch (const Error &e)
        {
            spdlog::warn("sensing-only benchmark failed: {}", e.what());
        }

        std::vector<SweepRecord> out(rates.size());
        std::atomic<size_t> next{0};
        auto worker = [&]()
        {
            for (size_t i = next++; i < rates.size(); i = next++)
            {
                const auto t0 = std::chrono::steady_clock::now();
                SweepRecord &rec = out[i];
                rec.rate_target = rates[i];
                rec.pcrb_sensing_only = pcrb_sensing;
                rec.pcrb_proposed = rec.pcrb_dual_functional = rec.pcrb_most_probable = nan;
                try
                {
                    const Scenario s = scenario.with_common_rate(rates[i]);
                    const PipelineResult pr = run_pipeline(s, fm, options.pipeline);
                    rec.status = to_string(pr.status);
                    if (pr.solution)
                    {
                        rec.pcrb_proposed = pr.solution->pcrb;
                        rec.sensing_rank = pr.solution->sensing_rank;
                    }
                    if (pr.status != PipelineStatus::infeasible)
                    {
                        const BenchmarkResult d = dual_functional(s, fm, options.pipeline);
                        if (d.feasible)
                            rec.pcrb_dual_functional = d.pcrb;
                        const BenchmarkResult m = most_probable_angle(s, fm, options.pipeline);
                        if (m.feasible)
                            rec.pcrb_most_probable = m.pcrb;
                    }
                }
                catch (const std::exception &e)
                {
                    rec.status = "error";
                    spdlog::warn("sweep point {} failed: {}", rates[i], e.what());
                }
                rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            }
        };

        int threads = options.threads > 0 ? options.threads : int(std::thread::hardware_concurrency());
        threads = std::clamp(threads, 1, int(rates.size()));
        std::vector<std::thread> pool;
        for (int t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
        for (auto &t : pool)
            t.join();
        return out;
    }

    std::string sweep_csv(const std::vector<SweepRecord> &records, bool include_timing)
    {
        std::string s = "rate_target,pcrb_proposed,pcrb_sensing_only,pcrb_dual_functional,pcrb_most_probable,"
                        "sensing_rank,status,wall_ms\n";
        for (const auto &r : records)
        {
            s += format_number(r.rate_target) + ',' + format_number(r.pcrb_proposed) + ',' +
                 format_number(r.pcrb_sensing_only) + ',' + format_number(r.pcrb_dual_functional) + ',' +
                 format_number(r.pcrb_most_probable) + ',' +
                 (r.sensing_rank >= 0 ? std::to_string(r.sensing_rank) : std::string("nan")) + ',' + r.status + ',' +
                 format_number(include_timing ? std::round(r.wall_ms * 1000.0) / 1000.0 : 0.0) + '\n';
        }
        return s;
    }

    std::string pattern_csv(const Scenario &scenario, const BeamformingSolution &solution, int grid_n)
    {
        if (grid_n < 1)
            throw Error(ErrorCode::invalid_argument, "Pattern grid needs at least one point.");
        const int K = scenario.num_users();
        RVec theta(grid_n);
        for (int i = 0; i < grid_n; ++i)
            theta[i] = -kPi + kTwoPi * double(i) / double(grid_n);
        const double phi = scenario.target_elevation();

        std::vector<RVec> cols;
        for (int k = 0; k < K; ++k)
        {
            const CVec &w = solution.w[size_t(k)];
            cols.push_back(radiation_pattern(scenario.geometry, w * w.adjoint(), phi, theta));
        }
        cols.push_back(radiation_pattern(scenario.geometry, solution.s * solution.s.adjoint(), phi, theta));

        std::string s = "theta,pdf";
        for (int k = 0; k < K; ++k)
            s += ",pattern_w" + std::to_string(k + 1);
        s += ",pattern_ws\n";
        for (int i = 0; i < grid_n; ++i)
        {
            s += format_number(theta[i]) + ',' + format_number(scenario.prior.pdf(theta[i]));
            for (const auto &c : cols)
                s += ',' + format_number(c[i]);
            s += '\n';
        }
        return s;
    }

    namespace
    {
        using json = nlohmann::json;

        json num(double v)
        {
            return std::isfinite(v) ? json(v) : json(nullptr);
        }

        json complex_json(cdouble z) { return json::array({z.real(), z.imag()}); }

        json vector_json(const CVec &v)
        {
            json re = json::array(), im = json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i)
            {
                re.push_back(v[i].real());
                im.push_back(v[i].imag());
            }
            return {{"re", re}, {"im", im}};
        }

        json matrix_json(const CMat &m)
        {
            json re = json::array(), im = json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r)
            {
                json rr = json::array(), ri = json::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                {
                    rr.push_back(m(r, c).real());
                    ri.push_back(m(r, c).imag());
                }
                re.push_back(rr);
                im.push_back(ri);
            }
            return {{"re", re}, {"im", im}};
        }

        json real_vector_json(const RVec &v)
        {
            json a = json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i)
                a.push_back(num(v[i]));
            return a;
        }
    }

    std::string result_json(const Scenario &scenario, const PipelineResult &result)
    {
        json doc;
        doc["status"] = to_string(result.status);
        doc["message"] = result.message;

        const auto &f = result.feasibility;
        doc["feasibility"] = {{"feasible", f.feasible},
                              {"min_power_w", num(f.min_power_w)},
                              {"power_budget_w", scenario.power_budget_w},
                              {"limiting_user", f.limiting_user >= 0 ? json(f.limiting_user + 1) : json(nullptr)},
                              {"reason", f.reason}};

        json targets = json::array();
        for (const auto &u : scenario.users)
            targets.push_back(u.rate_target_bps_hz);
        doc["scenario"] = {{"n_tx", scenario.geometry.n_tx()},
                           {"n_rx", scenario.geometry.n_rx()},
                           {"num_users", scenario.num_users()},
                           {"power_budget_w", scenario.power_budget_w},
                           {"echo_gain", scenario.target.echo_gain},
                           {"target_elevation_rad", scenario.target_elevation()},
                           {"rate_targets_bps_hz", targets}};

        if (result.solution)
        {
            const auto &s = *result.solution;
            json beams = json::array(), covs = json::array();
            for (size_t k = 0; k < s.w.size(); ++k)
            {
                beams.push_back(vector_json(s.w[k]));
                covs.push_back(matrix_json(s.cov.W[k]));
            }
            json steps = json::array();
            for (const auto &st : s.reduction)
                steps.push_back({{"rank_before", st.rank_before},
                                 {"rank_after", st.rank_after},
                                 {"t_before", st.t_before},
                                 {"t_after", st.t_after},
                                 {"power_before_w", st.power_before},
                                 {"power_after_w", st.power_after},
                                 {"lemma_residual", st.lemma_residual},
                                 {"xi", st.xi}});
            const auto &z = s.sdp.z_lmi;
            doc["solution"] = {{"pcrb", num(s.pcrb)},
                               {"pcrb_relaxed", num(s.pcrb_relaxed)},
                               {"effective_fisher", num(s.t)},
                               {"effective_fisher_relaxed", num(s.t_relaxed)},
                               {"power_used_w", s.power_used},
                               {"sensing_rank", s.sensing_rank},
                               {"rates_bps_hz", real_vector_json(s.rates)},
                               {"beta", real_vector_json(s.beta)},
                               {"z2", complex_json(s.z2)},
                               {"z2_dual", complex_json(s.z2_dual)},
                               {"beams", beams},
                               {"sensing_beam", vector_json(s.s)},
                               {"covariances", {{"W", covs}, {"WS", matrix_json(s.cov.WS)}}},
                               {"rank_reduction", steps},
                               {"sdp",
                                {{"status", sdp::to_string(s.sdp.status)},
                                 {"iterations", s.sdp.iterations},
                                 {"gap", s.sdp.gap},
                                 {"primal_residual", s.sdp.primal_residual},
                                 {"dual_residual", s.sdp.dual_residual},
                                 {"z1", z(0, 0).real()},
                                 {"z2", complex_json(z(0, 1))},
                                 {"z3", z(1, 1).real()}}}};
        }
        else
            doc["solution"] = nullptr;

        json items = json::array();
        for (const auto &i : result.verification.items)
            items.push_back({{"name", i.name}, {"value", num(i.value)}, {"tolerance", i.tolerance}, {"passed", i.passed}});
        doc["verification"] = {{"passed", result.solution.has_value() && result.verification.passed()},
                               {"items", items}};
        return doc.dump(2) + "\n";
    }

    std::string sweep_gnuplot_script(const std::string &csv_path)
    {
        return "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'rate target [bps/Hz]'\n"
               "set ylabel 'PCRB'\n"
               "set logscale y\n"
               "set grid\n"
               "plot '" + csv_path + "' using 1:2 with linespoints title 'proposed', \\\n"
               "     '' using 1:3 with lines title 'sensing only', \\\n"
               "     '' using 1:4 with linespoints title 'dual functional', \\\n"
               "     '' using 1:5 with linespoints title 'most probable angle'\n";
    }

    std::string pattern_gnuplot_script(const std::string &csv_path, int num_users)
    {
        std::string s = "set datafile separator ','\n"
                        "set xlabel 'azimuth [rad]'\n"
                        "set ylabel 'beampattern'\n"
                        "set y2label 'prior density'\n"
                        "set y2tics\n"
                        "set grid\n"
                        "plot '" + csv_path + "' using 1:2 axes x1y2 with lines title 'prior'";
        for (int k = 0; k < num_users; ++k)
            s += ", \\\n     '' using 1:" + std::to_string(k + 3) + " with lines title 'user " + std::to_string(k + 1) + "'";
        s += ", \\\n     '' using 1:" + std::to_string(num_users + 3) + " with lines title 'sensing'\n";
        return s;
    }
}
