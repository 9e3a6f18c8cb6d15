/* C interface to the branching mean-field-game toolkit.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call returns a bmfg_status; on failure bmfg_last_error() describes
 * the problem (thread-local, valid until the next call on the same thread). */
#ifndef BMFG_H
#define BMFG_H

#include <stddef.h>

#if defined(_WIN32)
#define BMFG_API __declspec(dllexport)
#else
#define BMFG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bmfg_status {
    BMFG_OK = 0,
    BMFG_ERR_CONFIG = 1,
    BMFG_ERR_NUMERICAL = 2,
    BMFG_ERR_EXPLOSION = 3,
    BMFG_ERR_LOOKUP = 4,
    BMFG_ERR_EQUILIBRIUM_UNDEFINED = 5,
    BMFG_ERR_SINGULAR = 6,
    BMFG_ERR_IO = 7,
    BMFG_ERR_INVALID_ARGUMENT = 8,
    BMFG_ERR_INTERNAL = 9
} bmfg_status;

BMFG_API const char* bmfg_version(void);
BMFG_API const char* bmfg_last_error(void);
BMFG_API const char* bmfg_status_name(bmfg_status status);

/* ---- finite measures ---------------------------------------------------- */

typedef struct bmfg_measure bmfg_measure;

BMFG_API bmfg_status bmfg_measure_from_atoms(const double* positions, const double* weights, size_t count,
                                             double base_point, bmfg_measure** out);
/* Atom CSV (position,weight) or density CSV (x_cell_center,density_value). */
BMFG_API bmfg_status bmfg_measure_read_csv(const char* path, double base_point, bmfg_measure** out);
BMFG_API bmfg_status bmfg_measure_mass(const bmfg_measure* m, double* out);
/* p is 1 or 2. */
BMFG_API bmfg_status bmfg_measure_moment(const bmfg_measure* m, int p, double* out);
BMFG_API bmfg_status bmfg_w1(const bmfg_measure* a, const bmfg_measure* b, double* out);
BMFG_API void bmfg_measure_free(bmfg_measure* m);

/* ---- linear-quadratic equilibrium --------------------------------------- */

typedef struct bmfg_lq_params {
    double T;
    double gamma;
    double lambda;
    double delta;
    double x0;
    double rho0;
    double v0;
    size_t ode_steps;
} bmfg_lq_params;

typedef struct bmfg_lq_summary {
    double theta;
    double theta_hat;
    double rho_T;
    double v_T;
    size_t knots;
} bmfg_lq_summary;

typedef struct bmfg_scan_row {
    double lambda;
    double delta_theta; /* NaN after blow-up */
    double rho_T;
    int status;         /* 0 ok, 1 singular, 2 blow-up */
    double blowup_time; /* NaN unless status == 2 */
} bmfg_scan_row;

typedef struct bmfg_lq bmfg_lq;

BMFG_API void bmfg_lq_default_params(bmfg_lq_params* out);
BMFG_API bmfg_status bmfg_lq_a_coeff(const bmfg_lq_params* p, double t, double* out);
/* On BMFG_ERR_EQUILIBRIUM_UNDEFINED *detail receives the blow-up time, on
 * BMFG_ERR_SINGULAR it receives theta. detail may be NULL. */
BMFG_API bmfg_status bmfg_lq_solve(const bmfg_lq_params* p, bmfg_lq** out, double* detail);
BMFG_API bmfg_status bmfg_lq_get_summary(const bmfg_lq* eq, bmfg_lq_summary* out);
/* Any of the output pointers may be NULL. */
BMFG_API bmfg_status bmfg_lq_knot(const bmfg_lq* eq, size_t i, double* t, double* a, double* b, double* v,
                                  double* rho);
BMFG_API void bmfg_lq_free(bmfg_lq* eq);
BMFG_API bmfg_status bmfg_lq_scan(const bmfg_lq_params* p, const double* lambdas, size_t count,
                                  bmfg_scan_row* rows);

/* ---- coefficient expressions -------------------------------------------- */

typedef struct bmfg_expr bmfg_expr;

BMFG_API bmfg_status bmfg_expr_parse(const char* text, bmfg_expr** out);
BMFG_API bmfg_status bmfg_expr_eval(const bmfg_expr* e, double t, double x, double mass, double mean, double a,
                                    double* out);
/* Fully parenthesized form. Writes at most `capacity` bytes including the
 * terminating zero; *needed (optional) receives the full length + 1. */
BMFG_API bmfg_status bmfg_expr_print(const bmfg_expr* e, char* buffer, size_t capacity, size_t* needed);
BMFG_API void bmfg_expr_free(bmfg_expr* e);

/* ---- configuration and runs --------------------------------------------- */

typedef struct bmfg_config bmfg_config;

/* On BMFG_ERR_CONFIG bmfg_last_error() lists every problem, one per line. */
BMFG_API bmfg_status bmfg_config_parse(const char* text, bmfg_config** out);
BMFG_API bmfg_status bmfg_config_read_file(const char* path, bmfg_config** out);
/* section "" addresses the top-level keys (command, seed, threads). */
BMFG_API bmfg_status bmfg_config_set(bmfg_config* cfg, const char* section, const char* key, const char* value);
BMFG_API void bmfg_config_free(bmfg_config* cfg);

/* Runs the configured command, writing into out_dir; progress goes to
 * stdout and diagnostics to stderr. *exit_code receives the process exit
 * status: 0 ok, 1 I/O or unexpected failure, 2 configuration error,
 * 3 numerical failure, 4 unconverged but reported. */
BMFG_API bmfg_status bmfg_run(const bmfg_config* cfg, const char* out_dir, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
