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

#include "isacbf.h"

#include "report.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <new>

struct isacbf_scenario
{
    isacbf::Scenario scenario;
};

struct isacbf_result
{
    isacbf::Scenario scenario;
    isacbf::PipelineResult result;
    isacbf_status status = ISACBF_OK;
};

namespace
{
    thread_local std::string g_last_error;

    void init_logging()
    {
        static std::once_flag once;
        std::call_once(once,
                       []
                       {
                           auto logger = spdlog::stderr_color_mt("isacbf");
                           spdlog::set_default_logger(logger);
                           const char *env = std::getenv("ISACBF_LOG_LEVEL");
                           spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
                       });
    }

    isacbf_status to_status(isacbf::ErrorCode c)
    {
        using isacbf::ErrorCode;
        switch (c)
        {
        case ErrorCode::invalid_argument:
            return ISACBF_ERR_INVALID_ARGUMENT;
        case ErrorCode::parse:
            return ISACBF_ERR_PARSE;
        case ErrorCode::io:
            return ISACBF_ERR_IO;
        case ErrorCode::infeasible:
            return ISACBF_ERR_INFEASIBLE;
        case ErrorCode::verification:
            return ISACBF_ERR_VERIFICATION;
        case ErrorCode::numerical:
            return ISACBF_ERR_NUMERICAL;
        }
        return ISACBF_ERR_INTERNAL;
    }

    isacbf_status fail(isacbf_status s, const std::string &msg)
    {
        g_last_error = msg;
        return s;
    }

    // Runs f, translating exceptions into status codes.
    template <typename F>
    isacbf_status guarded(F &&f)
    {
        init_logging();
        g_last_error.clear();
        try
        {
            return f();
        }
        catch (const isacbf::Error &e)
        {
            return fail(to_status(e.code()), e.what());
        }
        catch (const std::bad_alloc &)
        {
            return fail(ISACBF_ERR_INTERNAL, "Out of memory.");
        }
        catch (const std::exception &e)
        {
            return fail(ISACBF_ERR_INTERNAL, e.what());
        }
    }

    isacbf::PipelineOptions pipeline_options(const isacbf_options *o)
    {
        isacbf::PipelineOptions p;
        if (o)
        {
            if (!(o->tol > 0.0) || o->max_iterations < 1 || !(o->rank_threshold > 0.0))
                throw isacbf::Error(isacbf::ErrorCode::invalid_argument, "Invalid solver options.");
            p.tol = o->tol;
            p.max_iterations = o->max_iterations;
            p.rank_threshold = o->rank_threshold;
        }
        return p;
    }

    isacbf_status give_string(const std::string &s, char **out)
    {
        char *buf = static_cast<char *>(std::malloc(s.size() + 1));
        if (!buf)
            return fail(ISACBF_ERR_INTERNAL, "Out of memory.");
        std::memcpy(buf, s.c_str(), s.size() + 1);
        *out = buf;
        return ISACBF_OK;
    }

    isacbf_status make_scenario(isacbf::Scenario s, isacbf_scenario **out)
    {
        *out = new isacbf_scenario{std::move(s)};
        return ISACBF_OK;
    }

    const isacbf::BeamformingSolution *solution_of(const isacbf_result *r)
    {
        return r && r->result.solution ? &*r->result.solution : nullptr;
    }
}

extern "C" {

void isacbf_options_init(isacbf_options *options)
{
    if (!options)
        return;
    const isacbf::PipelineOptions d;
    options->tol = d.tol;
    options->max_iterations = d.max_iterations;
    options->rank_threshold = d.rank_threshold;
    options->threads = 0;
}

const char *isacbf_version(void) { return "0.1.0"; }

const char *isacbf_last_error(void) { return g_last_error.c_str(); }

isacbf_status isacbf_set_log_level(const char *level)
{
    return guarded(
        [&]
        {
            if (!level)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null log level.");
            const auto l = spdlog::level::from_str(level);
            if (l == spdlog::level::off && std::strcmp(level, "off") != 0)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, std::string("Unknown log level '") + level + "'.");
            spdlog::set_level(l);
            return ISACBF_OK;
        });
}

isacbf_status isacbf_scenario_from_file(const char *path, isacbf_scenario **out)
{
    return guarded(
        [&]
        {
            if (!path || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            *out = nullptr;
            return make_scenario(isacbf::load_scenario_file(path), out);
        });
}

isacbf_status isacbf_scenario_from_string(const char *json_text, isacbf_scenario **out)
{
    return guarded(
        [&]
        {
            if (!json_text || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            *out = nullptr;
            return make_scenario(isacbf::load_scenario(json_text), out);
        });
}

isacbf_status isacbf_scenario_default(isacbf_scenario **out)
{
    return guarded(
        [&]
        {
            if (!out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            *out = nullptr;
            return make_scenario(isacbf::load_scenario(isacbf::default_scenario_document()), out);
        });
}

void isacbf_scenario_free(isacbf_scenario *scenario) { delete scenario; }

isacbf_status isacbf_scenario_set_common_rate(isacbf_scenario *scenario, double rate_bps_hz)
{
    return guarded(
        [&]
        {
            if (!scenario)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null scenario.");
            scenario->scenario = scenario->scenario.with_common_rate(rate_bps_hz);
            return ISACBF_OK;
        });
}

int isacbf_scenario_num_users(const isacbf_scenario *scenario)
{
    return scenario ? scenario->scenario.num_users() : -1;
}

int isacbf_scenario_num_tx(const isacbf_scenario *scenario)
{
    return scenario ? scenario->scenario.geometry.n_tx() : -1;
}

isacbf_status isacbf_solve(const isacbf_scenario *scenario, const isacbf_options *options, isacbf_result **out)
{
    return guarded(
        [&]
        {
            if (!scenario || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            *out = nullptr;
            const isacbf::PipelineOptions opt = pipeline_options(options);
            const isacbf::FisherMatrices fm = isacbf::build_fisher(scenario->scenario);

            auto r = std::make_unique<isacbf_result>();
            r->scenario = scenario->scenario;
            r->result = isacbf::run_pipeline(r->scenario, fm, opt);
            switch (r->result.status)
            {
            case isacbf::PipelineStatus::ok:
                r->status = ISACBF_OK;
                break;
            case isacbf::PipelineStatus::infeasible:
                r->status = ISACBF_ERR_INFEASIBLE;
                break;
            case isacbf::PipelineStatus::verification_failed:
                r->status = ISACBF_ERR_VERIFICATION;
                break;
            case isacbf::PipelineStatus::numerical_error:
                return fail(ISACBF_ERR_NUMERICAL, r->result.message);
            }
            const isacbf_status s = r->status;
            if (s != ISACBF_OK)
                g_last_error = r->result.message.empty() ? "Verification failed." : r->result.message;
            *out = r.release();
            return s;
        });
}

void isacbf_result_free(isacbf_result *result) { delete result; }

isacbf_status isacbf_result_status(const isacbf_result *result)
{
    return result ? result->status : ISACBF_ERR_INVALID_ARGUMENT;
}

double isacbf_result_pcrb(const isacbf_result *result)
{
    const auto *s = solution_of(result);
    return s ? s->pcrb : std::numeric_limits<double>::quiet_NaN();
}

double isacbf_result_power(const isacbf_result *result)
{
    const auto *s = solution_of(result);
    return s ? s->power_used : std::numeric_limits<double>::quiet_NaN();
}

double isacbf_result_min_power(const isacbf_result *result)
{
    return result ? result->result.feasibility.min_power_w : std::numeric_limits<double>::quiet_NaN();
}

int isacbf_result_sensing_rank(const isacbf_result *result)
{
    const auto *s = solution_of(result);
    return s ? s->sensing_rank : -1;
}

isacbf_status isacbf_result_rates(const isacbf_result *result, double *rates, size_t n)
{
    return guarded(
        [&]
        {
            const auto *s = solution_of(result);
            if (!s || !rates)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Result has no solution or null buffer.");
            if (n != size_t(s->rates.size()))
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Buffer length must equal the number of users.");
            for (size_t k = 0; k < n; ++k)
                rates[k] = s->rates[Eigen::Index(k)];
            return ISACBF_OK;
        });
}

isacbf_status isacbf_result_beam(const isacbf_result *result, int k, double *re, double *im, size_t n)
{
    return guarded(
        [&]
        {
            const auto *s = solution_of(result);
            if (!s || !re || !im)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Result has no solution or null buffer.");
            if (k < -1 || k >= int(s->w.size()))
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Beam index out of range.");
            const isacbf::CVec &v = k < 0 ? s->s : s->w[size_t(k)];
            if (n != size_t(v.size()))
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Buffer length must equal the number of transmit antennas.");
            for (size_t i = 0; i < n; ++i)
            {
                re[i] = v[Eigen::Index(i)].real();
                im[i] = v[Eigen::Index(i)].imag();
            }
            return ISACBF_OK;
        });
}

isacbf_status isacbf_result_to_json(const isacbf_result *result, char **out)
{
    return guarded(
        [&]
        {
            if (!result || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            return give_string(isacbf::result_json(result->scenario, result->result), out);
        });
}

isacbf_status isacbf_result_pattern_csv(const isacbf_result *result, int grid_n, char **out)
{
    return guarded(
        [&]
        {
            const auto *s = solution_of(result);
            if (!s || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Result has no solution or null buffer.");
            return give_string(isacbf::pattern_csv(result->scenario, *s, grid_n), out);
        });
}

isacbf_status isacbf_sweep_csv(const isacbf_scenario *scenario, double rate_min, double rate_max, int steps,
                               const isacbf_options *options, int include_timing, char **out)
{
    return guarded(
        [&]
        {
            if (!scenario || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            isacbf::SweepOptions so;
            so.rate_min = rate_min;
            so.rate_max = rate_max;
            so.steps = steps;
            so.threads = options ? options->threads : 0;
            so.pipeline = pipeline_options(options);
            const auto rows = isacbf::run_sweep(scenario->scenario, so);
            return give_string(isacbf::sweep_csv(rows, include_timing != 0), out);
        });
}

isacbf_status isacbf_gnuplot_script(const char *kind, const char *csv_path, int num_users, char **out)
{
    return guarded(
        [&]
        {
            if (!kind || !csv_path || !out)
                return fail(ISACBF_ERR_INVALID_ARGUMENT, "Null argument.");
            if (std::strcmp(kind, "sweep") == 0)
                return give_string(isacbf::sweep_gnuplot_script(csv_path), out);
            if (std::strcmp(kind, "pattern") == 0)
                return give_string(isacbf::pattern_gnuplot_script(csv_path, num_users), out);
            return fail(ISACBF_ERR_INVALID_ARGUMENT, "Unknown plot kind.");
        });
}

void isacbf_string_free(char *s) { std::free(s); }
}
