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

// Command-line driver: solve, sweep, pattern.
//
// Exit codes: 0 success, 1 usage error, 2 infeasible rate targets, 3 verification or
// numerical failure, 4 IO or parse error.

#include "isacbf.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    enum Exit
    {
        exit_ok = 0,
        exit_usage = 1,
        exit_infeasible = 2,
        exit_verification = 3,
        exit_io = 4,
    };

    int exit_for(isacbf_status s)
    {
        switch (s)
        {
        case ISACBF_OK:
            return exit_ok;
        case ISACBF_ERR_INFEASIBLE:
            return exit_infeasible;
        case ISACBF_ERR_VERIFICATION:
        case ISACBF_ERR_NUMERICAL:
        case ISACBF_ERR_INTERNAL:
            return exit_verification;
        case ISACBF_ERR_PARSE:
        case ISACBF_ERR_IO:
            return exit_io;
        case ISACBF_ERR_INVALID_ARGUMENT:
            return exit_usage;
        }
        return exit_verification;
    }

    int report(isacbf_status s)
    {
        std::cerr << "isacbf: " << isacbf_last_error() << '\n';
        return exit_for(s);
    }

    // Owns a string returned by the library
    struct LibString
    {
        char *p = nullptr;
        ~LibString() { isacbf_string_free(p); }
        std::string str() const { return p ? std::string(p) : std::string(); }
    };

    // Writes through a temporary file and a rename so a failed run leaves no partial output.
    bool write_output(const std::string &path, const std::string &text)
    {
        if (path.empty() || path == "-")
        {
            std::cout << text;
            std::cout.flush();
            return bool(std::cout);
        }
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
            {
                std::cerr << "isacbf: cannot write '" << path << "'\n";
                return false;
            }
            out << text;
            out.close();
            if (!out)
            {
                std::remove(tmp.c_str());
                std::cerr << "isacbf: cannot write '" << path << "'\n";
                return false;
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
        {
            std::remove(tmp.c_str());
            std::cerr << "isacbf: cannot write '" << path << "': " << ec.message() << '\n';
            return false;
        }
        return true;
    }

    struct Common
    {
        std::string config;
        std::string out;
        std::optional<double> rate;
        double tol = 0.0;
        int max_iterations = 0;
    };

    isacbf_status load(const Common &c, isacbf_scenario **sc)
    {
        isacbf_status s = c.config.empty() ? isacbf_scenario_default(sc) : isacbf_scenario_from_file(c.config.c_str(), sc);
        if (s == ISACBF_OK && c.rate)
        {
            s = isacbf_scenario_set_common_rate(*sc, *c.rate);
            if (s != ISACBF_OK)
            {
                isacbf_scenario_free(*sc);
                *sc = nullptr;
            }
        }
        return s;
    }

    isacbf_options options_of(const Common &c, int threads)
    {
        isacbf_options o;
        isacbf_options_init(&o);
        if (c.tol > 0.0)
            o.tol = c.tol;
        if (c.max_iterations > 0)
            o.max_iterations = c.max_iterations;
        o.threads = threads;
        return o;
    }

    void add_common(CLI::App *cmd, Common &c)
    {
        cmd->add_option("--config", c.config, "Scenario JSON file (default: built-in default scenario)");
        cmd->add_option("--out", c.out, "Output file ('-' or omitted: stdout)");
        cmd->add_option("--tol", c.tol, "SDP relative tolerance")->check(CLI::PositiveNumber);
        cmd->add_option("--max-iterations", c.max_iterations, "SDP iteration cap")->check(CLI::PositiveNumber);
    }

    int cmd_solve(const Common &c)
    {
        isacbf_scenario *sc = nullptr;
        isacbf_status s = load(c, &sc);
        if (s != ISACBF_OK)
            return report(s);
        const isacbf_options o = options_of(c, 0);
        isacbf_result *res = nullptr;
        s = isacbf_solve(sc, &o, &res);
        isacbf_scenario_free(sc);
        if (!res)
            return report(s);
        if (s != ISACBF_OK)
            std::cerr << "isacbf: " << isacbf_last_error() << '\n';

        LibString doc;
        const isacbf_status js = isacbf_result_to_json(res, &doc.p);
        isacbf_result_free(res);
        if (js != ISACBF_OK)
            return report(js);
        if (!write_output(c.out, doc.str()))
            return exit_io;
        return exit_for(s);
    }

    int cmd_sweep(const Common &c, double rate_min, double rate_max, int steps, int threads, bool timing,
                  const std::string &gnuplot)
    {
        isacbf_scenario *sc = nullptr;
        isacbf_status s = load(c, &sc);
        if (s != ISACBF_OK)
            return report(s);
        const isacbf_options o = options_of(c, threads);
        LibString csv;
        s = isacbf_sweep_csv(sc, rate_min, rate_max, steps, &o, timing ? 1 : 0, &csv.p);
        isacbf_scenario_free(sc);
        if (s != ISACBF_OK)
            return report(s);
        if (!write_output(c.out, csv.str()))
            return exit_io;
        if (!gnuplot.empty())
        {
            LibString script;
            if (isacbf_gnuplot_script("sweep", c.out.empty() ? "sweep.csv" : c.out.c_str(), 0, &script.p) != ISACBF_OK)
                return report(ISACBF_ERR_INTERNAL);
            if (!write_output(gnuplot, script.str()))
                return exit_io;
        }
        return exit_ok;
    }

    int cmd_pattern(const Common &c, int grid, const std::string &gnuplot)
    {
        isacbf_scenario *sc = nullptr;
        isacbf_status s = load(c, &sc);
        if (s != ISACBF_OK)
            return report(s);
        const int users = isacbf_scenario_num_users(sc);
        const isacbf_options o = options_of(c, 0);
        isacbf_result *res = nullptr;
        s = isacbf_solve(sc, &o, &res);
        isacbf_scenario_free(sc);
        if (!res || isacbf_result_status(res) == ISACBF_ERR_INFEASIBLE)
        {
            const int rc = report(s);
            isacbf_result_free(res);
            return rc;
        }
        if (s != ISACBF_OK)
            std::cerr << "isacbf: " << isacbf_last_error() << '\n';

        LibString csv;
        const isacbf_status ps = isacbf_result_pattern_csv(res, grid, &csv.p);
        isacbf_result_free(res);
        if (ps != ISACBF_OK)
            return report(ps);
        if (!write_output(c.out, csv.str()))
            return exit_io;
        if (!gnuplot.empty())
        {
            LibString script;
            if (isacbf_gnuplot_script("pattern", c.out.empty() ? "pattern.csv" : c.out.c_str(), users, &script.p) !=
                ISACBF_OK)
                return report(ISACBF_ERR_INTERNAL);
            if (!write_output(gnuplot, script.str()))
                return exit_io;
        }
        return exit_for(s);
    }
}

int main(int argc, char **argv)
{
    if (const char *lvl = std::getenv("ISACBF_LOG_LEVEL"))
        if (isacbf_set_log_level(lvl) != ISACBF_OK)
            std::cerr << "isacbf: " << isacbf_last_error() << '\n';

    CLI::App app{"PCRB-optimal transmit beamforming for multi-user ISAC"};
    app.set_version_flag("--version", std::string(isacbf_version()));
    app.require_subcommand(1);

    Common solve_opts;
    auto *solve = app.add_subcommand("solve", "Design beamformers and write the result document (JSON)");
    add_common(solve, solve_opts);
    double solve_rate = -1.0;
    auto *rate_opt = solve->add_option("--rate", solve_rate, "Common rate target for all users [bps/Hz]");

    Common sweep_opts;
    auto *sweep = app.add_subcommand("sweep", "PCRB versus common rate target (CSV)");
    add_common(sweep, sweep_opts);
    double rate_min = 1.0, rate_max = 6.0;
    int steps = 6, threads = 0;
    bool no_timing = false;
    std::string sweep_plot;
    sweep->add_option("--rate-min", rate_min, "First rate target [bps/Hz]");
    sweep->add_option("--rate-max", rate_max, "Last rate target [bps/Hz]");
    sweep->add_option("--steps", steps, "Number of rate targets")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sweep->add_flag("--no-timing", no_timing, "Write 0 in the wall_ms column (byte-stable output)");
    sweep->add_option("--gnuplot", sweep_plot, "Also write a gnuplot script to this file");

    Common pattern_opts;
    auto *pattern = app.add_subcommand("pattern", "Beampatterns of the designed beams (CSV)");
    add_common(pattern, pattern_opts);
    int grid = 720;
    double pattern_rate = -1.0;
    auto *pattern_rate_opt = pattern->add_option("--rate", pattern_rate, "Common rate target for all users [bps/Hz]");
    std::string pattern_plot;
    pattern->add_option("--grid", grid, "Number of azimuth samples")->check(CLI::PositiveNumber);
    pattern->add_option("--gnuplot", pattern_plot, "Also write a gnuplot script to this file");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    if (*solve)
    {
        if (*rate_opt)
            solve_opts.rate = solve_rate;
        return cmd_solve(solve_opts);
    }
    if (*sweep)
        return cmd_sweep(sweep_opts, rate_min, rate_max, steps, threads, !no_timing, sweep_plot);
    if (*pattern_rate_opt)
        pattern_opts.rate = pattern_rate;
    return cmd_pattern(pattern_opts, grid, pattern_plot);
}
