#include "bmfg/bmfg.h"

#include "bmfg/app.hpp"
#include "bmfg/config.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/expr.hpp"
#include "bmfg/lq.hpp"
#include "bmfg/measures.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

struct bmfg_measure {
    bmfg::FiniteMeasure m;
};
struct bmfg_lq {
    bmfg::LQEquilibrium eq;
};
struct bmfg_expr {
    bmfg::expr::Node tree;
    bmfg::expr::Expression compiled;
};
struct bmfg_config {
    bmfg::config::ExperimentConfig cfg;
};

namespace {

thread_local std::string last_error;

bmfg_status fail(bmfg_status s, const std::string& what) {
    last_error = what;
    return s;
}

// Maps the current exception to a status.
bmfg_status translate() {
    try {
        throw;
    } catch (const bmfg::ConfigError& e) {
        return fail(BMFG_ERR_CONFIG, e.what());
    } catch (const bmfg::expr::ParseError& e) {
        return fail(BMFG_ERR_CONFIG, e.what());
    } catch (const bmfg::ExplosionError& e) {
        return fail(BMFG_ERR_EXPLOSION, e.what());
    } catch (const bmfg::NumericalError& e) {
        return fail(BMFG_ERR_NUMERICAL, e.what());
    } catch (const bmfg::LookupError& e) {
        return fail(BMFG_ERR_LOOKUP, e.what());
    } catch (const bmfg::EquilibriumUndefinedError& e) {
        return fail(BMFG_ERR_EQUILIBRIUM_UNDEFINED, e.what());
    } catch (const bmfg::SingularityError& e) {
        return fail(BMFG_ERR_SINGULAR, e.what());
    } catch (const bmfg::IoError& e) {
        return fail(BMFG_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(BMFG_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(BMFG_ERR_INTERNAL, "unknown exception");
    }
}

template <class F>
bmfg_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return BMFG_OK;
    } catch (...) {
        return translate();
    }
}

bmfg::LQParams to_params(const bmfg_lq_params& p) {
    bmfg::LQParams q;
    q.T = p.T;
    q.gamma = p.gamma;
    q.lambda = p.lambda;
    q.delta = p.delta;
    q.x0 = p.x0;
    q.rho0 = p.rho0;
    q.v0 = p.v0;
    q.ode_steps = p.ode_steps;
    return q;
}

#define REQUIRE(cond)                                                                                          \
    do {                                                                                                       \
        if (!(cond)) return fail(BMFG_ERR_INVALID_ARGUMENT, "invalid argument: " #cond);                       \
    } while (0)

} // namespace

extern "C" {

const char* bmfg_version(void) { return bmfg::version(); }

const char* bmfg_last_error(void) { return last_error.c_str(); }

const char* bmfg_status_name(bmfg_status s) {
    switch (s) {
    case BMFG_OK: return "ok";
    case BMFG_ERR_CONFIG: return "configuration error";
    case BMFG_ERR_NUMERICAL: return "numerical failure";
    case BMFG_ERR_EXPLOSION: return "population explosion";
    case BMFG_ERR_LOOKUP: return "lookup error";
    case BMFG_ERR_EQUILIBRIUM_UNDEFINED: return "equilibrium undefined";
    case BMFG_ERR_SINGULAR: return "singular fixed point";
    case BMFG_ERR_IO: return "i/o error";
    case BMFG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BMFG_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

bmfg_status bmfg_measure_from_atoms(const double* positions, const double* weights, size_t count, double base_point,
                                    bmfg_measure** out) {
    REQUIRE(out && (count == 0 || (positions && weights)));
    return guarded([&] {
        std::vector<bmfg::Atom> atoms(count);
        for (size_t i = 0; i < count; ++i) atoms[i] = {positions[i], weights[i]};
        *out = new bmfg_measure{bmfg::FiniteMeasure::atoms(std::move(atoms), base_point)};
    });
}

bmfg_status bmfg_measure_read_csv(const char* path, double base_point, bmfg_measure** out) {
    REQUIRE(path && out);
    return guarded([&] { *out = new bmfg_measure{bmfg::read_measure_csv(path, base_point)}; });
}

bmfg_status bmfg_measure_mass(const bmfg_measure* m, double* out) {
    REQUIRE(m && out);
    return guarded([&] { *out = bmfg::mass(m->m); });
}

bmfg_status bmfg_measure_moment(const bmfg_measure* m, int p, double* out) {
    REQUIRE(m && out);
    return guarded([&] { *out = bmfg::moment(m->m, p); });
}

bmfg_status bmfg_w1(const bmfg_measure* a, const bmfg_measure* b, double* out) {
    REQUIRE(a && b && out);
    return guarded([&] { *out = bmfg::w1(a->m, b->m); });
}

void bmfg_measure_free(bmfg_measure* m) { delete m; }

void bmfg_lq_default_params(bmfg_lq_params* out) {
    if (!out) return;
    const bmfg::LQParams d;
    *out = {d.T, d.gamma, d.lambda, d.delta, d.x0, d.rho0, d.v0, d.ode_steps};
}

bmfg_status bmfg_lq_a_coeff(const bmfg_lq_params* p, double t, double* out) {
    REQUIRE(p && out);
    return guarded([&] {
        const auto q = to_params(*p);
        q.validate();
        if (!(t >= 0.0 && t <= q.T)) throw bmfg::ConfigError("t must lie in [0, T]");
        *out = bmfg::a_coeff(t, q);
    });
}

bmfg_status bmfg_lq_solve(const bmfg_lq_params* p, bmfg_lq** out, double* detail) {
    REQUIRE(p && out);
    try {
        *out = new bmfg_lq{bmfg::solve_equilibrium(to_params(*p))};
        last_error.clear();
        return BMFG_OK;
    } catch (const bmfg::EquilibriumUndefinedError& e) {
        if (detail) *detail = e.blowup_time();
        return fail(BMFG_ERR_EQUILIBRIUM_UNDEFINED, e.what());
    } catch (const bmfg::SingularityError& e) {
        if (detail) *detail = e.theta();
        return fail(BMFG_ERR_SINGULAR, e.what());
    } catch (...) {
        return translate();
    }
}

bmfg_status bmfg_lq_get_summary(const bmfg_lq* eq, bmfg_lq_summary* out) {
    REQUIRE(eq && out);
    const auto& e = eq->eq;
    *out = {e.theta, e.theta_hat, e.rho_T, e.v.back(), e.t.size()};
    return BMFG_OK;
}

bmfg_status bmfg_lq_knot(const bmfg_lq* eq, size_t i, double* t, double* a, double* b, double* v, double* rho) {
    REQUIRE(eq);
    const auto& e = eq->eq;
    if (i >= e.t.size()) return fail(BMFG_ERR_LOOKUP, "knot index out of range");
    if (t) *t = e.t[i];
    if (a) *a = e.a[i];
    if (b) *b = e.b[i];
    if (v) *v = e.v[i];
    if (rho) *rho = e.rho[i];
    return BMFG_OK;
}

void bmfg_lq_free(bmfg_lq* eq) { delete eq; }

bmfg_status bmfg_lq_scan(const bmfg_lq_params* p, const double* lambdas, size_t count, bmfg_scan_row* rows) {
    REQUIRE(p && (count == 0 || (lambdas && rows)));
    return guarded([&] {
        const auto report = bmfg::singularity_scan(to_params(*p), std::vector<double>(lambdas, lambdas + count));
        for (size_t i = 0; i < count; ++i) {
            const auto& r = report.rows[i];
            rows[i] = {r.lambda, r.delta_theta, r.rho_T, static_cast<int>(r.status),
                       r.blowup_time ? *r.blowup_time : std::numeric_limits<double>::quiet_NaN()};
        }
    });
}

bmfg_status bmfg_expr_parse(const char* text, bmfg_expr** out) {
    REQUIRE(text && out);
    return guarded([&] {
        auto tree = bmfg::expr::parse(text);
        bmfg::expr::Expression compiled(tree);
        *out = new bmfg_expr{std::move(tree), std::move(compiled)};
    });
}

bmfg_status bmfg_expr_eval(const bmfg_expr* e, double t, double x, double mass, double mean, double a, double* out) {
    REQUIRE(e && out);
    *out = e->compiled(t, x, mass, mean, a);
    return BMFG_OK;
}

bmfg_status bmfg_expr_print(const bmfg_expr* e, char* buffer, size_t capacity, size_t* needed) {
    REQUIRE(e && (buffer || capacity == 0));
    const std::string s = bmfg::expr::print(e->tree);
    if (needed) *needed = s.size() + 1;
    if (capacity == 0) return BMFG_OK;
    const size_t n = std::min(capacity - 1, s.size());
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
    return BMFG_OK;
}

void bmfg_expr_free(bmfg_expr* e) { delete e; }

bmfg_status bmfg_config_parse(const char* text, bmfg_config** out) {
    REQUIRE(text && out);
    return guarded([&] {
        auto parsed = bmfg::config::parse_config(text);
        if (!parsed.ok()) {
            std::string msg;
            for (const auto& d : parsed.errors) msg += (msg.empty() ? "" : "\n") + d.to_string();
            throw bmfg::ConfigError(msg);
        }
        *out = new bmfg_config{std::move(parsed.config)};
    });
}

bmfg_status bmfg_config_read_file(const char* path, bmfg_config** out) {
    REQUIRE(path && out);
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(BMFG_ERR_CONFIG, std::string("cannot read configuration file '") + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return bmfg_config_parse(buf.str().c_str(), out);
}

bmfg_status bmfg_config_set(bmfg_config* cfg, const char* section, const char* key, const char* value) {
    REQUIRE(cfg && section && key && value);
    return guarded([&] {
        const auto errors = cfg->cfg.set(section, key, value);
        if (!errors.empty()) {
            std::string msg;
            for (const auto& d : errors) msg += (msg.empty() ? "" : "\n") + d.to_string();
            throw bmfg::ConfigError(msg);
        }
    });
}

void bmfg_config_free(bmfg_config* cfg) { delete cfg; }

bmfg_status bmfg_run(const bmfg_config* cfg, const char* out_dir, int* exit_code) {
    REQUIRE(cfg && out_dir && exit_code);
    return guarded([&] { *exit_code = bmfg::run_experiment(cfg->cfg, out_dir, std::cout, std::cerr).exit_code; });
}

} // extern "C"
