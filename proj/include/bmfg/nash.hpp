#pragma once

// Monte-Carlo estimate of the gain a tagged initial agent can obtain by
// deviating from the equilibrium feedback in the game with n initial players,
// where everybody interacts through the empirical measure (1/n) sum delta_{X^k}.

#include "bmfg/branching.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bmfg {

struct Deviation {
    std::string name;
    ControlPolicy policy;
};

/// zero, half, double, plus_one, minus_one.
std::vector<Deviation> standard_deviations(const ControlPolicy& equilibrium);

struct NashExperiment {
    ModelSpec model;
    ControlPolicy equilibrium;
    std::vector<Deviation> deviations;
    std::vector<std::size_t> n_values;
    std::size_t replicas = 1000;
    double dt = 0.01;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t max_population = 1'000'000;
    /// Paired runs share every per-label random stream; otherwise the
    /// deviating run draws fresh streams.
    bool common_random_numbers = true;
    std::vector<double> checkpoints = {0.25, 0.5, 0.75, 1.0};
    /// Replicas on which the leave-one-out bound is checked for every living
    /// particle; on the others only the tagged agent is checked.
    std::size_t full_check_replicas = 20;

    void validate() const;
};

struct GainEstimate {
    std::size_t n = 0;
    std::string deviation;
    double gain = 0.0;  // J(equilibrium) - J(deviation), positive means deviating pays
    double se = 0.0;
    bool noisy = false;  // se > |gain|
};

struct EpsilonEstimate {
    std::size_t n = 0;
    double epsilon = 0.0;  // max over deviations of the gain
    double se = 0.0;       // se of the maximizing deviation
    std::string argmax;
};

struct NashReport {
    std::vector<GainEstimate> gains;
    std::vector<EpsilonEstimate> epsilon;
    std::size_t leave_one_out_checks = 0;
    std::size_t leave_one_out_violations = 0;
    double leave_one_out_worst_ratio = 0.0;  // max of w1 / ((1 + |x|) / n)
};

NashReport run_nash(const NashExperiment& exp);

/// n,deviation,gain,se,epsilon_hat
void write_nash_csv(const std::string& path, const NashReport& report);

struct GapPoint {
    double time = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

/// E[w1(nu^n_t, reference(t))] at the checkpoints, all players on `policy`.
std::vector<GapPoint> empirical_measure_gap(std::size_t n, std::size_t replicas, std::uint64_t seed,
                                            const ModelSpec& model, const ControlPolicy& policy,
                                            const MeasurePath& reference, double dt,
                                            const std::vector<double>& checkpoints, std::size_t threads = 1);

/// nu^n at the checkpoints for one replica of the run above.
MeasurePath empirical_measure_path(std::size_t n, std::size_t replica, std::uint64_t seed,
                                   const ModelSpec& model, const ControlPolicy& policy, double dt,
                                   const std::vector<double>& checkpoints);

} // namespace bmfg
