/* The public header used from plain C. */
#include "bmfg/bmfg.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                                                       \
    do {                                                                                                   \
        if (!(cond)) {                                                                                     \
            fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, __LINE__, #cond,            \
                    bmfg_last_error());                                                                    \
            ++failures;                                                                                    \
        }                                                                                                  \
    } while (0)

int main(void) {
    EXPECT(strlen(bmfg_version()) > 0);

    double one = 1.0, minus = -1.0, w = 1.0, d = 0.0, m = 0.0;
    bmfg_measure *a = NULL, *b = NULL;
    EXPECT(bmfg_measure_from_atoms(&one, &w, 1, 0.0, &a) == BMFG_OK);
    EXPECT(bmfg_measure_from_atoms(&minus, &w, 1, 0.0, &b) == BMFG_OK);
    EXPECT(bmfg_w1(a, b, &d) == BMFG_OK && fabs(d - 2.0) < 1e-15);
    EXPECT(bmfg_measure_moment(a, 2, &m) == BMFG_OK && m == 1.0);
    EXPECT(bmfg_measure_moment(a, 3, &m) == BMFG_ERR_CONFIG);
    EXPECT(bmfg_w1(a, NULL, &d) == BMFG_ERR_INVALID_ARGUMENT);
    bmfg_measure_free(a);
    bmfg_measure_free(b);
    EXPECT(bmfg_measure_read_csv("/nonexistent/file.csv", 0.0, &a) != BMFG_OK);

    bmfg_lq_params p;
    bmfg_lq_default_params(&p);
    EXPECT(p.T == 1.0 && p.gamma == 0.2 && p.delta == 0.5 && p.x0 == 5.0);
    double a_T = 0.0;
    EXPECT(bmfg_lq_a_coeff(&p, 1.0, &a_T) == BMFG_OK && fabs(a_T - 1.5) < 1e-14);
    bmfg_lq* eq = NULL;
    bmfg_lq_summary s;
    EXPECT(bmfg_lq_solve(&p, &eq, NULL) == BMFG_OK);
    EXPECT(bmfg_lq_get_summary(eq, &s) == BMFG_OK && s.rho_T > 0.0 && s.rho_T < 5.0 && s.knots == p.ode_steps + 1);
    double t = -1.0, rho = -1.0;
    EXPECT(bmfg_lq_knot(eq, s.knots - 1, &t, NULL, NULL, NULL, &rho) == BMFG_OK && t == 1.0 && fabs(rho - s.rho_T) < 1e-6 * fabs(s.rho_T));
    EXPECT(bmfg_lq_knot(eq, s.knots, &t, NULL, NULL, NULL, NULL) == BMFG_ERR_LOOKUP);
    bmfg_lq_free(eq);

    p.lambda = 2.0;
    double blowup = 0.0;
    EXPECT(bmfg_lq_solve(&p, &eq, &blowup) == BMFG_ERR_EQUILIBRIUM_UNDEFINED && blowup > 0.0 && blowup < 1.0);

    double lambdas[3] = {0.0, 0.5, 0.6};
    bmfg_scan_row rows[3];
    p.lambda = 0.0;
    EXPECT(bmfg_lq_scan(&p, lambdas, 3, rows) == BMFG_OK);
    EXPECT(rows[0].status == 0 && rows[0].delta_theta < 1.0 && rows[2].status == 2 && isnan(rows[2].delta_theta));

    bmfg_expr* e = NULL;
    double v = 0.0;
    char text[64];
    size_t need = 0;
    EXPECT(bmfg_expr_parse("1 + (0.35/0.2)*x^2", &e) == BMFG_OK);
    EXPECT(bmfg_expr_eval(e, 0.0, 1.0, 0.0, 0.0, 0.0, &v) == BMFG_OK && fabs(v - 2.75) < 1e-14);
    EXPECT(bmfg_expr_print(e, text, sizeof text, &need) == BMFG_OK && need == strlen(text) + 1);
    EXPECT(bmfg_expr_print(e, text, 4, &need) == BMFG_OK && strlen(text) == 3);
    bmfg_expr_free(e);
    EXPECT(bmfg_expr_parse("1 +", &e) == BMFG_ERR_CONFIG && strstr(bmfg_last_error(), "column") != NULL);

    bmfg_config* cfg = NULL;
    EXPECT(bmfg_config_parse("[lq]\ndelta = -1\nbogus = 2\n", &cfg) == BMFG_ERR_CONFIG);
    EXPECT(strstr(bmfg_last_error(), "line 2") != NULL && strstr(bmfg_last_error(), "line 3") != NULL);
    EXPECT(bmfg_config_parse("command = lq\n", &cfg) == BMFG_OK);
    EXPECT(bmfg_config_set(cfg, "lq", "lambda", "0.35") == BMFG_OK);
    EXPECT(bmfg_config_set(cfg, "lq", "lambda", "-1") == BMFG_ERR_CONFIG);
    int code = -1;
    EXPECT(bmfg_run(cfg, "capi_smoke_out", &code) == BMFG_OK && code == 0);
    EXPECT(bmfg_config_set(cfg, "lq", "lambda", "2") == BMFG_OK);
    EXPECT(bmfg_run(cfg, "capi_smoke_out", &code) == BMFG_OK && code == 3);
    bmfg_config_free(cfg);

    EXPECT(strcmp(bmfg_status_name(BMFG_ERR_SINGULAR), "singular fixed point") == 0);
    if (failures == 0) printf("capi smoke: all checks passed\n");
    return failures == 0 ? 0 : 1;
}
