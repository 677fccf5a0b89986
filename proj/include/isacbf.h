/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * isacbf - PCRB-optimal transmit beamforming for multi-user ISAC
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 * ------------------------------------------------------------------------
 *
 * C interface. All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Functions return an isacbf_status; on failure the message of the
 * most recent error on the calling thread is available from isacbf_last_error().
 * Strings returned through char** out-parameters must be released with isacbf_string_free().
 */

#ifndef ISACBF_H
#define ISACBF_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(ISACBF_BUILDING_LIBRARY)
#define ISACBF_API __declspec(dllexport)
#else
#define ISACBF_API __declspec(dllimport)
#endif
#else
#define ISACBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum isacbf_status
{
    ISACBF_OK = 0,
    ISACBF_ERR_INVALID_ARGUMENT = 1,
    ISACBF_ERR_PARSE = 2,
    ISACBF_ERR_IO = 3,
    ISACBF_ERR_INFEASIBLE = 4,
    ISACBF_ERR_VERIFICATION = 5,
    ISACBF_ERR_NUMERICAL = 6,
    ISACBF_ERR_INTERNAL = 7
} isacbf_status;

typedef struct isacbf_scenario isacbf_scenario;
typedef struct isacbf_result isacbf_result;

typedef struct isacbf_options
{
    double tol;            /* SDP relative tolerance */
    int max_iterations;    /* SDP iteration cap */
    double rank_threshold; /* relative eigenvalue threshold for numerical rank */
    int threads;           /* sweep workers, 0 = hardware concurrency */
} isacbf_options;

/* Fills the defaults (tol 1e-9, 200 iterations, rank threshold 1e-7, threads 0). */
ISACBF_API void isacbf_options_init(isacbf_options *options);

ISACBF_API const char *isacbf_version(void);

/* Message of the last failed call on this thread, "" if none. */
ISACBF_API const char *isacbf_last_error(void);

/* "trace", "debug", "info", "warn", "error", "off". The ISACBF_LOG_LEVEL environment variable
 * sets the initial level (default "warn"). Log lines go to stderr. */
ISACBF_API isacbf_status isacbf_set_log_level(const char *level);

/* ---- scenarios ---- */

ISACBF_API isacbf_status isacbf_scenario_from_file(const char *path, isacbf_scenario **out);
ISACBF_API isacbf_status isacbf_scenario_from_string(const char *json_text, isacbf_scenario **out);
ISACBF_API isacbf_status isacbf_scenario_default(isacbf_scenario **out);
ISACBF_API void isacbf_scenario_free(isacbf_scenario *scenario);

/* Sets every user's rate target to `rate_bps_hz`. */
ISACBF_API isacbf_status isacbf_scenario_set_common_rate(isacbf_scenario *scenario, double rate_bps_hz);

ISACBF_API int isacbf_scenario_num_users(const isacbf_scenario *scenario);
ISACBF_API int isacbf_scenario_num_tx(const isacbf_scenario *scenario);

/* ---- solving ---- */

/* Runs the full design. A result is produced for ISACBF_OK, ISACBF_ERR_INFEASIBLE (carrying the
 * minimum-power certificate) and ISACBF_ERR_VERIFICATION; *out is NULL otherwise. */
ISACBF_API isacbf_status isacbf_solve(const isacbf_scenario *scenario, const isacbf_options *options,
                                      isacbf_result **out);
ISACBF_API void isacbf_result_free(isacbf_result *result);

/* Status the result was produced with */
ISACBF_API isacbf_status isacbf_result_status(const isacbf_result *result);

ISACBF_API double isacbf_result_pcrb(const isacbf_result *result);
ISACBF_API double isacbf_result_power(const isacbf_result *result);
ISACBF_API double isacbf_result_min_power(const isacbf_result *result);
ISACBF_API int isacbf_result_sensing_rank(const isacbf_result *result);

/* Copies `n` = number of users achieved rates. */
ISACBF_API isacbf_status isacbf_result_rates(const isacbf_result *result, double *rates, size_t n);

/* Copies beam `k` (0-based user index, -1 for the sensing beam) as n = N_T real and imaginary parts. */
ISACBF_API isacbf_status isacbf_result_beam(const isacbf_result *result, int k, double *re, double *im, size_t n);

ISACBF_API isacbf_status isacbf_result_to_json(const isacbf_result *result, char **out);

/* Beampattern CSV of a solved design, grid_n uniform azimuths. */
ISACBF_API isacbf_status isacbf_result_pattern_csv(const isacbf_result *result, int grid_n, char **out);

/* PCRB versus rate-target table. include_timing = 0 writes 0 into wall_ms. */
ISACBF_API isacbf_status isacbf_sweep_csv(const isacbf_scenario *scenario, double rate_min, double rate_max,
                                          int steps, const isacbf_options *options, int include_timing,
                                          char **out);

/* gnuplot script for a sweep CSV ("sweep") or a pattern CSV ("pattern"). */
ISACBF_API isacbf_status isacbf_gnuplot_script(const char *kind, const char *csv_path, int num_users, char **out);

ISACBF_API void isacbf_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif
