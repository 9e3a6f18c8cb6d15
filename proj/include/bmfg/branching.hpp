#pragma once

// Monte-Carlo simulation of controlled branching diffusions in one space
// dimension. Particles move by Euler-Maruyama, die through per-step thinning
// against a global rate bound and are replaced by a random number of children
// at their death position. Children of particle k are labelled k.1, ..., k.l.

#include "bmfg/measures.hpp"
#include "bmfg/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bmfg {

/// Ulam-Harris-Neveu genealogy index.
class Label {
public:
    Label() = default;
    explicit Label(std::vector<std::uint32_t> digits);
    static Label root(std::uint32_t i) { return Label({i}); }

    Label child(std::uint32_t i) const;
    std::span<const std::uint32_t> digits() const { return digits_; }
    std::uint32_t ancestor() const { return digits_.front(); }
    std::size_t generation() const { return digits_.size(); }

    /// Strict prefix, i.e. `this` is a proper ancestor of `other`.
    bool is_strict_prefix_of(const Label& other) const;
    /// "1.2.1"
    std::string to_string() const;
    static Label parse(const std::string& dotted);

    friend bool operator==(const Label&, const Label&) = default;
    friend auto operator<=>(const Label&, const Label&) = default;

private:
    std::vector<std::uint32_t> digits_;
};

/// What the coefficients see of the environment measure.
struct EnvState {
    double mass = 0.0;
    double mean = 0.0;  // normalized first moment
};

EnvState summarize(const FiniteMeasure& m);

/// b, sigma, gamma and f all take (t, x, environment, control).
using Coefficient = std::function<double(double t, double x, const EnvState& env, double a)>;
using TerminalCost = std::function<double(double x, const EnvState& env)>;
using ControlPolicy = std::function<double(double t, double x)>;

/// Offspring distribution p_0..p_L, truncated to L = max_offspring and renormalized.
class OffspringLaw {
public:
    using Fn = std::function<void(double t, double x, const EnvState& env, std::span<double> out)>;

    /// p_1 = 1: a death is replaced by one child.
    OffspringLaw() : constant_{0.0, 1.0, 0.0, 0.0, 0.0} {}
    /// Throws ConfigError on negative entries or zero total mass after truncation.
    static OffspringLaw constant(std::vector<double> probabilities, std::size_t max_offspring = 4);
    /// `fn` fills out[0..L]; the result is renormalized on every call.
    static OffspringLaw state_dependent(Fn fn, std::size_t max_offspring = 4);

    std::size_t max_offspring() const { return max_offspring_; }
    bool is_constant() const { return !fn_; }
    /// Writes max_offspring() + 1 probabilities summing to 1.
    void probabilities(double t, double x, const EnvState& env, std::span<double> out) const;
    /// sum over l of l * p_l.
    double mean(double t, double x, const EnvState& env) const;
    /// Constant law only.
    std::span<const double> constant_probabilities() const { return constant_; }

private:
    std::size_t max_offspring_ = 4;
    std::vector<double> constant_;
    Fn fn_;
};

struct ModelSpec {
    Coefficient drift;
    Coefficient diffusion;
    Coefficient death_rate;
    double death_rate_bound = 0.0;  // gamma_max
    OffspringLaw offspring;
    Coefficient running_cost;
    TerminalCost terminal_cost;
    double horizon = 1.0;
    FiniteMeasure initial_law = FiniteMeasure::dirac(0.0);

    /// b = a, sigma = sqrt(2), gamma = 0, p_1 = 1, f = a^2 / 2, g = 0, T = 1, m0 = delta_0.
    static ModelSpec controlled();
};

enum class EventKind { birth, death };

struct Event {
    double time = 0.0;
    Label label;
    EventKind kind = EventKind::birth;
    std::size_t offspring_count = 0;
    double position = 0.0;
};

struct ParticleRecord {
    Label label;
    double position = 0.0;
    double birth_time = 0.0;
};

struct PopulationState {
    double time = 0.0;
    std::vector<ParticleRecord> particles;
};

/// Lifetime summary of one particle. `survived` is true iff the particle was
/// alive at the horizon; end_time is then equal to T.
struct ParticleSummary {
    Label label;
    double birth_time = 0.0;
    double end_time = 0.0;
    bool survived = false;
    double final_position = 0.0;
    double running_cost = 0.0;  // left-endpoint Riemann sum of f over [birth, end]
};

struct BranchingTrajectory {
    std::vector<PopulationState> snapshots;
    std::vector<Event> events;
    std::vector<ParticleSummary> particles;
    std::uint64_t rng_seed = 0;
    double dt = 0.0;
    double horizon = 0.0;

    const ParticleSummary& particle(const Label& label) const;
};

struct SimulationOptions {
    std::size_t max_population = 1'000'000;
    std::size_t record_every = 1;  // snapshot decimation, in steps (the final knot is always kept)
    std::size_t threads = 1;       // replica-level parallelism
};

/// Runs one realization. `env` must cover [0, T]; the step (t_k, t_k + dt] sees
/// the environment at knot t_k. Throws ExplosionError above the population cap
/// and ConfigError when gamma exceeds gamma_max or dt does not divide T.
BranchingTrajectory simulate(const ModelSpec& model, const MeasurePath& env,
                             const ControlPolicy& policy, std::size_t n0, double dt,
                             std::uint64_t seed, const SimulationOptions& options = {});

/// Monte-Carlo estimate of the mean measure m(t) per initial particle.
struct MeanMeasureEstimate {
    MeasurePath path;                  // atoms weighted 1 / (n0 * replicas)
    std::vector<double> mass_se;       // standard error of <m(t), 1> per knot
    /// Per knot: start of each replica batch in the knot's atom list, then the end.
    std::vector<std::vector<std::size_t>> batch_offsets;
    std::vector<std::size_t> batch_replicas;
    std::size_t replicas = 0;

    /// Batch-means estimate of the typical w1 error of path(knot): the mean
    /// w1 distance from each replica batch to the pooled estimate, divided by
    /// sqrt(batches - 1).
    double w1_standard_error(std::size_t knot) const;
};

struct MeanMeasureOptions : SimulationOptions {
    std::size_t batches = 20;
};

MeanMeasureEstimate mean_measure(const ModelSpec& model, const MeasurePath& env,
                                 const ControlPolicy& policy, std::size_t n0, double dt,
                                 std::size_t replicas, std::uint64_t seed,
                                 const MeanMeasureOptions& options = {});

/// phi with its first two derivatives.
struct TestFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
};

struct ResidualPoint {
    double time = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;
};

/// For each phi: sample mean and SE over replicas of
///   sum_k phi(X_t^k) - sum_k phi(X_0^k) - int_0^t H phi(Z_r) dr
/// where H is the branching generator with Phi = Id and the integral is a
/// left-endpoint Riemann sum on the simulation grid.
std::vector<std::vector<ResidualPoint>> martingale_residual_test(
    const ModelSpec& model, const MeasurePath& env, const ControlPolicy& policy,
    const std::vector<TestFunction>& test_functions, std::size_t n0, double dt,
    std::size_t replicas, std::uint64_t seed, const std::vector<double>& checkpoints,
    const SimulationOptions& options = {});

/// int f ds over the particle's life plus g(X_T, mu_T) if it survived to T.
/// Throws LookupError for unknown labels.
double path_cost(const ModelSpec& model, const MeasurePath& env,
                 const BranchingTrajectory& trajectory, const Label& label);

/// Population-size statistics over replicas.
struct PopulationStats {
    double mean_final = 0.0, se_final = 0.0;    // N_T
    double mean_sup = 0.0, se_sup = 0.0;        // sup_t N_t
    double mean_sup_sq = 0.0, se_sup_sq = 0.0;  // sup_t N_t^2
};

PopulationStats population_stats(const ModelSpec& model, const MeasurePath& env,
                                 const ControlPolicy& policy, std::size_t n0, double dt,
                                 std::size_t replicas, std::uint64_t seed,
                                 const SimulationOptions& options = {});

/// Event log CSV: time,label,event,offspring_count,position.
void write_events_csv(const std::string& path, const BranchingTrajectory& trajectory);

namespace engine {

// Lower-level access used by the mean-measure, martingale and Nash harnesses.

struct Particle {
    Label label;
    double position = 0.0;
    double birth_time = 0.0;
    double running_cost = 0.0;
    bool deviating = false;
    StreamEngine rng;
    std::normal_distribution<double> normal;
};

/// How particles see the environment.
struct EnvironmentSource {
    /// Fixed path: per-step summaries (size steps + 1); empty when empirical.
    std::vector<EnvState> schedule;
    /// Empirical: nu^n = (1/scale) * sum over living particles. Costs use the
    /// leave-one-out measure that excludes the particle itself.
    double empirical_scale = 0.0;

    static EnvironmentSource fixed(const MeasurePath& env, double dt, std::size_t steps);
    static EnvironmentSource empirical(double scale) { return {{}, scale}; }
    bool is_empirical() const { return empirical_scale > 0.0; }
};

struct RunSpec {
    const ModelSpec* model = nullptr;
    const EnvironmentSource* env = nullptr;
    const ControlPolicy* policy = nullptr;
    /// Dynasty of initial particle `deviator` (descendants included) plays this instead.
    const ControlPolicy* deviation = nullptr;
    std::uint32_t deviator = 1;
    std::size_t n0 = 1;
    double dt = 0.0;
    std::size_t steps = 0;
    std::size_t max_population = 1'000'000;
};

class Observer {
public:
    virtual ~Observer() = default;
    /// Population at knot k (time t_k), before the step (t_k, t_{k+1}] is taken.
    /// Called for k = 0..steps; `env` is what the dynamics see during that step.
    virtual void at_knot(std::size_t, double, std::span<const Particle>, const EnvState&) {}
    virtual void on_death(double, const Particle&, std::size_t) {}
    virtual void on_birth(double, const Particle&) {}
    /// Particle leaves the record: died at `end_time`, or survived to T.
    virtual void on_retire(const Particle&, double, bool) {}
};

/// Steps a single realization. Deterministic in (spec, seed).
void run(const RunSpec& spec, std::uint64_t seed, Observer& observer);

/// Checks dt against T and returns the step count.
std::size_t step_count(double horizon, double dt);

} // namespace engine

} // namespace bmfg
