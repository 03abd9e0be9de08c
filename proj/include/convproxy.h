/*
   Copyright 2026 The convproxy Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

/*
 * C API for the convection-proxy benchmark library.
 *
 * All objects are opaque handles created and destroyed by these functions.
 * Every call returns a cvp_status; on failure cvp_last_error() describes
 * what went wrong (the message is thread-local).  Strings returned through
 * char** out-parameters are heap copies owned by the caller; release them
 * with cvp_string_free().
 */

#ifndef CONVPROXY_H_
#define CONVPROXY_H_

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cvp_status {
  CVP_OK = 0,
  CVP_ERR_INVALID = 1,  /* null handle, bad argument, internal failure */
  CVP_ERR_CONFIG = 2,   /* config parse/validation, unknown family/schema */
  CVP_ERR_NUMERIC = 3,  /* kernel numeric failure (non-convergence, NaN) */
  CVP_ERR_CHECK = 4,    /* validation check failed (envelope, divergence) */
  CVP_ERR_IO = 5        /* file read/write failure */
} cvp_status;

typedef struct cvp_config cvp_config;   /* experiment configuration */
typedef struct cvp_records cvp_records; /* benchmark record set */

/* Library semantic version, static storage. */
const char* cvp_version(void);

/* Last error message on this thread; empty string when the last call on
 * this thread succeeded.  Static storage, valid until the next call. */
const char* cvp_last_error(void);

void cvp_string_free(char* s);

/* --- Configuration ----------------------------------------------------- */

/* Creates a configuration holding the documented defaults. */
cvp_status cvp_config_create(cvp_config** out);

/* Parses INI text; rejects unknown sections/keys with line diagnostics. */
cvp_status cvp_config_parse(const char* text, cvp_config** out);

/* Reads and parses an INI file. */
cvp_status cvp_config_load(const char* path, cvp_config** out);

/* Applies one "section.key" = value override. */
cvp_status cvp_config_set(cvp_config* cfg, const char* dotted_key,
                          const char* value);

/* Canonical INI serialization; parse(serialize(c)) == c. */
cvp_status cvp_config_serialize(const cvp_config* cfg, char** out_text);

/* 16-hex-digit hash of the canonical serialization. */
cvp_status cvp_config_hash(const cvp_config* cfg, char** out_hex);

void cvp_config_free(cvp_config* cfg);

/* --- Experiments -------------------------------------------------------- */

/* Executes one experiment family: "run", "sweep-chunk",
 * "bench-firstprivate", "bench-falseshare", "bench-hetero", "error-growth".
 */
cvp_status cvp_run_experiment(const cvp_config* cfg, const char* family,
                              cvp_records** out);

/* Error-growth scenario: per-timestep series as CSV
 * ("timestep,rms_mod,rms_pert"), whether the modified run stayed inside the
 * perturbation envelope, and the worst rms_mod/rms_pert ratio.  Any output
 * pointer may be NULL when the caller does not need that value. */
cvp_status cvp_error_growth(const cvp_config* cfg, char** out_series_csv,
                            int* out_envelope_ok, double* out_worst_ratio);

/* Projected days of compute saved: sec_saved_per_run every
 * run_interval_days over `years` years. */
cvp_status cvp_extrapolate_savings(double sec_saved_per_run,
                                   double run_interval_days, double years,
                                   double* out_days);

/* --- Records ------------------------------------------------------------ */

cvp_status cvp_records_count(const cvp_records* recs, long long* out_n);

/* CSV with the pinned schema:
 * experiment,config_hash,rep,wall_s,overhead_pct,imbalance,copy_s,transfer_s,notes
 */
cvp_status cvp_records_csv(const cvp_records* recs, char** out_csv);

cvp_status cvp_records_save(const cvp_records* recs, const char* path);

/* Loads records written by cvp_records_save; validates the schema. */
cvp_status cvp_records_load(const char* path, cvp_records** out);

/* Markdown report for the records' experiment family. */
cvp_status cvp_report_markdown(const cvp_records* recs, char** out_md);

/* Markdown table for one savings projection, including the bundled
 * reference scenario row. */
cvp_status cvp_extrapolation_report(double sec_saved_per_run,
                                    double run_interval_days, double years,
                                    char** out_md);

void cvp_records_free(cvp_records* recs);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CONVPROXY_H_ */
