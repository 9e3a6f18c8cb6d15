#pragma once

// Closed-form equilibrium of the linear-quadratic branching MFG:
//   HJB:  d_t u + u_xx - |u_x|^2 / 2 - gamma u = 0,
//   FP:   d_t m - m_xx - (m u_x)_x - lambda x^2 m = 0,
//   g(x, mu) = (x - x0)^2 / 2 + delta (x - mean(mu))^2 / 2.
// Du(t, x) = a_t x + b_t, and the normalized density stays N(rho_t, v_t).

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bmfg {

struct LQParams {
    double T = 1.0;
    double gamma = 0.2;
    double lambda = 0.0;
    double delta = 0.5;
    double x0 = 5.0;
    double rho0 = 0.0;
    double v0 = 1.0;
    std::size_t ode_steps = 1000;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

/// gamma (1 + delta) / ((1 + delta + gamma) e^{gamma (T - t)} - (1 + delta)).
double a_coeff(double t, const LQParams& p);

struct RiccatiPath {
    std::vector<double> t;  // uniform grid, truncated at the blow-up step
    std::vector<double> v;
    std::optional<double> blowup_time;
};

inline constexpr double kBlowupThreshold = 1e6;

/// RK4 for v' = 2 lambda v^2 - 2 a v + 2 from v0.
RiccatiPath solve_riccati(const LQParams& p);
/// Same with a user-supplied a(t) in place of the closed form.
RiccatiPath solve_riccati(const LQParams& p, const std::function<double(double)>& a);

struct LQEquilibrium {
    LQParams params;
    std::vector<double> t, a, b, v, rho;
    double theta = 0.0;
    double theta_hat = 0.0;
    double rho_T = 0.0;

    /// Linear interpolation on the ODE grid (a is exact).
    double a_at(double time) const;
    double b_at(double time) const;
    double v_at(double time) const;
    double rho_at(double time) const;
    /// exp(int_0^t lambda (v + rho^2) ds): total mass of the Gaussian ansatz.
    std::vector<double> mass() const;
};

/// Throws EquilibriumUndefinedError when v blows up before T and
/// SingularityError when |1 - delta theta| < 1e-8.
LQEquilibrium solve_equilibrium(const LQParams& p);

enum class ScanStatus { ok, singular, blowup };
const char* to_string(ScanStatus s);

struct ScanRow {
    double lambda = 0.0;
    double delta_theta = 0.0;  // NaN after blow-up
    double theta_hat = 0.0;
    double rho_T = 0.0;
    ScanStatus status = ScanStatus::ok;
    std::optional<double> blowup_time;
};

struct ScanReport {
    std::vector<ScanRow> rows;
    /// Consecutive lambdas between which delta theta - 1 changes sign.
    std::optional<std::pair<double, double>> crossing;
    std::optional<double> first_blowup_lambda;
};

/// `lambdas` must be sorted ascending.
ScanReport singularity_scan(const LQParams& p, const std::vector<double>& lambdas, std::size_t threads = 1);

/// t,a,b,v,rho,mass
void write_equilibrium_csv(const std::string& path, const LQEquilibrium& eq);
/// lambda,delta_theta,theta_hat,rho_T,status,blowup_time
void write_scan_csv(const std::string& path, const ScanReport& report);

/// One data file per lambda (t,rho,v), plotted two rows by two columns:
/// mean and variance before the singularity on top, after it below.
struct FigurePanel {
    double lambda = 0.0;
    std::string data_file;  // relative to the script
    bool post_singularity = false;
};
void write_figure_script(const std::string& path, const std::vector<FigurePanel>& panels,
                         const std::string& image_name);

} // namespace bmfg
