#include "bmfg/branching.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace bmfg {

// ---------------------------------------------------------------- Label

Label::Label(std::vector<std::uint32_t> digits) : digits_(std::move(digits)) {
    if (digits_.empty()) throw ConfigError("label must have at least one digit");
    for (auto d : digits_)
        if (d == 0) throw ConfigError("label digits must be positive");
}

Label Label::child(std::uint32_t i) const {
    auto d = digits_;
    d.push_back(i);
    return Label(std::move(d));
}

bool Label::is_strict_prefix_of(const Label& other) const {
    return digits_.size() < other.digits_.size() &&
           std::equal(digits_.begin(), digits_.end(), other.digits_.begin());
}

std::string Label::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < digits_.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(digits_[i]);
    }
    return s;
}

Label Label::parse(const std::string& dotted) {
    std::vector<std::uint32_t> digits;
    for (const auto& part : csv::split(dotted, '.')) {
        const double v = csv::parse_double(part, "label digit");
        if (v < 1 || v != std::floor(v) || v > 4294967295.0)
            throw ConfigError("label digit '" + part + "' is not a positive integer");
        digits.push_back(static_cast<std::uint32_t>(v));
    }
    return Label(std::move(digits));
}

EnvState summarize(const FiniteMeasure& m) { return {mass(m), normalized_mean(m)}; }

// ---------------------------------------------------------------- OffspringLaw

OffspringLaw OffspringLaw::constant(std::vector<double> probabilities, std::size_t max_offspring) {
    if (probabilities.empty()) throw ConfigError("offspring law needs at least p_0");
    probabilities.resize(max_offspring + 1, 0.0);
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ConfigError("offspring probabilities must be finite and non-negative");
        total += p;
    }
    if (!(total > 0.0)) throw ConfigError("offspring probabilities sum to zero");
    for (double& p : probabilities) p /= total;
    OffspringLaw law;
    law.max_offspring_ = max_offspring;
    law.constant_ = std::move(probabilities);
    law.fn_ = nullptr;
    return law;
}

OffspringLaw OffspringLaw::state_dependent(Fn fn, std::size_t max_offspring) {
    if (!fn) throw ConfigError("offspring function is empty");
    OffspringLaw law;
    law.max_offspring_ = max_offspring;
    law.constant_.clear();
    law.fn_ = std::move(fn);
    return law;
}

void OffspringLaw::probabilities(double t, double x, const EnvState& env, std::span<double> out) const {
    if (!fn_) {
        std::copy(constant_.begin(), constant_.end(), out.begin());
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    fn_(t, x, env, out);
    double total = 0.0;
    for (double p : out) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw NumericalError(fmt::format("offspring probability {} at x = {}", p, x));
        total += p;
    }
    if (!(total > 0.0)) throw NumericalError(fmt::format("offspring probabilities vanish at x = {}", x));
    for (double& p : out) p /= total;
}

double OffspringLaw::mean(double t, double x, const EnvState& env) const {
    std::vector<double> p(max_offspring_ + 1);
    probabilities(t, x, env, p);
    double m = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) m += static_cast<double>(l) * p[l];
    return m;
}

ModelSpec ModelSpec::controlled() {
    ModelSpec m;
    m.drift = [](double, double, const EnvState&, double a) { return a; };
    m.diffusion = [](double, double, const EnvState&, double) { return std::sqrt(2.0); };
    m.death_rate = [](double, double, const EnvState&, double) { return 0.0; };
    m.death_rate_bound = 0.0;
    m.offspring = OffspringLaw::constant({0.0, 1.0});
    m.running_cost = [](double, double, const EnvState&, double a) { return 0.5 * a * a; };
    m.terminal_cost = [](double, const EnvState&) { return 0.0; };
    return m;
}

const ParticleSummary& BranchingTrajectory::particle(const Label& label) const {
    for (const auto& p : particles)
        if (p.label == label) return p;
    throw LookupError("no particle with label " + label.to_string());
}

// ---------------------------------------------------------------- engine

namespace engine {

std::size_t step_count(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("dt and T must be positive");
    const double ratio = horizon / dt;
    const double n = std::round(ratio);
    if (n < 1 || std::abs(n * dt - horizon) > 1e-12 * std::max(1.0, horizon))
        throw ConfigError(fmt::format("dt = {} does not divide T = {}", dt, horizon));
    return static_cast<std::size_t>(n);
}

EnvironmentSource EnvironmentSource::fixed(const MeasurePath& env, double dt, std::size_t steps) {
    if (env.size() == 0 || env.measures.size() != env.times.size())
        throw ConfigError("environment path is empty or malformed");
    const double horizon = dt * static_cast<double>(steps);
    if (env.times.front() > 1e-12 || env.times.back() < horizon - 1e-9)
        throw ConfigError("environment path does not cover [0, T]");
    EnvironmentSource src;
    src.schedule.reserve(steps + 1);
    // Summaries are cached per distinct knot; consecutive steps usually share one.
    std::size_t cached = env.size();
    EnvState state;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = std::min(dt * (static_cast<double>(k) + 0.5), horizon);
        const std::size_t idx = k == steps ? env.size() - 1 : env.index_at(t);
        if (idx != cached) {
            state = summarize(env.measures[idx]);
            cached = idx;
        }
        src.schedule.push_back(state);
    }
    return src;
}

namespace {

class InitialSampler {
public:
    explicit InitialSampler(const FiniteMeasure& law) {
        if (law.is_density()) {
            const auto& d = law.density_cells();
            half_width_ = 0.5 * d.cells.step;
            for (std::size_t i = 0; i < d.values.size(); ++i) {
                if (d.values[i] <= 0.0) continue;
                positions_.push_back(d.cells.at(i));
                cdf_.push_back(d.values[i]);
            }
        } else {
            for (const auto& a : law.atom_list()) {
                if (a.weight <= 0.0) continue;
                positions_.push_back(a.position);
                cdf_.push_back(a.weight);
            }
        }
        if (positions_.empty()) throw ConfigError("initial law has zero mass");
        std::partial_sum(cdf_.begin(), cdf_.end(), cdf_.begin());
        for (double& c : cdf_) c /= cdf_.back();
    }

    double draw(StreamEngine& rng) const {
        if (positions_.size() == 1 && half_width_ == 0.0) return positions_.front();
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
        double x = positions_[i];
        if (half_width_ > 0.0) x += (2.0 * rng.uniform() - 1.0) * half_width_;
        return x;
    }

private:
    std::vector<double> positions_;
    std::vector<double> cdf_;
    double half_width_ = 0.0;
};

Particle make_particle(Label label, double position, double birth, bool deviating, std::uint64_t seed) {
    Particle p;
    p.rng = StreamEngine(derive_seed(seed, label.digits()));
    p.label = std::move(label);
    p.position = position;
    p.birth_time = birth;
    p.deviating = deviating;
    return p;
}

} // namespace

void run(const RunSpec& spec, std::uint64_t seed, Observer& observer) {
    const ModelSpec& model = *spec.model;
    const EnvironmentSource& env = *spec.env;
    const double dt = spec.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double gamma_max = model.death_rate_bound;
    const double p_event = -std::expm1(-gamma_max * dt);
    if (!env.is_empirical() && env.schedule.size() != spec.steps + 1)
        throw ConfigError("environment schedule does not match the step count");

    InitialSampler sampler(model.initial_law);
    std::vector<Particle> alive;
    std::vector<Particle> next;
    alive.reserve(spec.n0);
    for (std::uint32_t i = 1; i <= spec.n0; ++i) {
        const bool dev = spec.deviation && i == spec.deviator;
        Particle p = make_particle(Label::root(i), 0.0, 0.0, dev, seed);
        p.position = sampler.draw(p.rng);
        observer.on_birth(0.0, p);
        alive.push_back(std::move(p));
    }

    std::vector<double> probs(model.offspring.max_offspring() + 1);
    for (std::size_t k = 0;; ++k) {
        const double t = dt * static_cast<double>(k);
        EnvState dyn_env;
        double sum_x = 0.0;
        if (env.is_empirical()) {
            for (const auto& p : alive) sum_x += p.position;
            const double n = static_cast<double>(alive.size());
            dyn_env.mass = n / env.empirical_scale;
            dyn_env.mean = alive.empty() ? 0.0 : sum_x / n;
        } else {
            dyn_env = env.schedule[k];
        }
        observer.at_knot(k, t, alive, dyn_env);
        if (k == spec.steps) break;

        next.clear();
        const double t_next = dt * static_cast<double>(k + 1);
        for (auto& p : alive) {
            const double x = p.position;
            const ControlPolicy& pol = p.deviating ? *spec.deviation : *spec.policy;
            const double a = pol(t, x);
            EnvState cost_env = dyn_env;
            if (env.is_empirical()) {
                const double others = static_cast<double>(alive.size()) - 1.0;
                cost_env.mass = others / env.empirical_scale;
                cost_env.mean = others > 0.0 ? (sum_x - x) / others : 0.0;
            }
            p.running_cost += model.running_cost(t, x, cost_env, a) * dt;

            const double b = model.drift(t, x, dyn_env, a);
            const double sigma = model.diffusion(t, x, dyn_env, a);
            const double x_new = x + b * dt + sigma * sqrt_dt * p.normal(p.rng);
            if (!std::isfinite(x_new))
                throw NumericalError(fmt::format("particle {} left the reals at t = {}", p.label.to_string(), t));

            bool died = false;
            if (gamma_max > 0.0) {
                const double gamma = model.death_rate(t, x, dyn_env, a);
                if (gamma > gamma_max * (1.0 + 1e-12) || gamma < 0.0)
                    throw ConfigError(fmt::format("death rate {} at (t={}, x={}) outside [0, gamma_max = {}]",
                                                  gamma, t, x, gamma_max));
                if (p.rng.uniform() < p_event) died = p.rng.uniform() * gamma_max < gamma;
            }
            p.position = x_new;
            if (!died) {
                next.push_back(std::move(p));
                continue;
            }

            model.offspring.probabilities(t_next, x_new, dyn_env, probs);
            const double u = p.rng.uniform();
            std::size_t children = 0;
            double acc = probs[0];
            while (children + 1 < probs.size() && u >= acc) acc += probs[++children];
            observer.on_death(t_next, p, children);
            for (std::uint32_t i = 1; i <= children; ++i) {
                Particle c = make_particle(p.label.child(i), x_new, t_next, p.deviating, seed);
                observer.on_birth(t_next, c);
                next.push_back(std::move(c));
            }
            observer.on_retire(p, t_next, false);
        }
        alive.swap(next);
        if (alive.size() > spec.max_population)
            throw ExplosionError(fmt::format("population {} exceeds the cap {} at t = {}", alive.size(),
                                             spec.max_population, t_next),
                                 t_next);
    }
    const double horizon = dt * static_cast<double>(spec.steps);
    for (const auto& p : alive) observer.on_retire(p, horizon, true);
}

} // namespace engine

// ---------------------------------------------------------------- public operations

namespace {

void check_model(const ModelSpec& m) {
    if (!m.drift || !m.diffusion || !m.death_rate || !m.running_cost || !m.terminal_cost)
        throw ConfigError("model has an unset coefficient");
    if (!(m.death_rate_bound >= 0.0) || !std::isfinite(m.death_rate_bound))
        throw ConfigError("gamma_max must be finite and non-negative");
    if (std::abs(mass(m.initial_law) - 1.0) > 1e-9) throw ConfigError("initial law must have mass 1");
}

bool recorded(std::size_t k, std::size_t steps, std::size_t every) {
    return k == steps || (every > 0 && k % every == 0);
}

class TrajectoryRecorder : public engine::Observer {
public:
    TrajectoryRecorder(BranchingTrajectory& out, std::size_t steps, std::size_t every)
        : out_(out), steps_(steps), every_(every) {}

    void at_knot(std::size_t k, double t, std::span<const engine::Particle> alive, const EnvState&) override {
        if (!recorded(k, steps_, every_)) return;
        PopulationState s{t, {}};
        s.particles.reserve(alive.size());
        for (const auto& p : alive) s.particles.push_back({p.label, p.position, p.birth_time});
        out_.snapshots.push_back(std::move(s));
    }
    void on_death(double t, const engine::Particle& p, std::size_t children) override {
        out_.events.push_back({t, p.label, EventKind::death, children, p.position});
    }
    void on_birth(double t, const engine::Particle& p) override {
        out_.events.push_back({t, p.label, EventKind::birth, 0, p.position});
    }
    void on_retire(const engine::Particle& p, double end, bool survived) override {
        out_.particles.push_back({p.label, p.birth_time, end, survived, p.position, p.running_cost});
    }

private:
    BranchingTrajectory& out_;
    std::size_t steps_;
    std::size_t every_;
};

struct Moments {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
};

} // namespace

BranchingTrajectory simulate(const ModelSpec& model, const MeasurePath& env,
                             const ControlPolicy& policy, std::size_t n0, double dt,
                             std::uint64_t seed, const SimulationOptions& options) {
    check_model(model);
    if (n0 == 0) throw ConfigError("n0 must be positive");
    const std::size_t steps = engine::step_count(model.horizon, dt);
    const auto source = engine::EnvironmentSource::fixed(env, dt, steps);
    engine::RunSpec spec{&model, &source, &policy, nullptr, 1, n0, dt, steps, options.max_population};

    BranchingTrajectory traj;
    traj.rng_seed = seed;
    traj.dt = dt;
    traj.horizon = model.horizon;
    TrajectoryRecorder rec(traj, steps, options.record_every);
    engine::run(spec, seed, rec);
    return traj;
}

double MeanMeasureEstimate::w1_standard_error(std::size_t knot) const {
    const auto& offsets = batch_offsets.at(knot);
    const std::size_t batches = batch_replicas.size();
    if (batches < 2) return 0.0;
    const auto& pooled = path.measures.at(knot);
    const auto atoms = pooled.atom_list();
    const double per_replica = atoms.empty() ? 0.0 : atoms.front().weight * static_cast<double>(replicas);
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        std::vector<Atom> part(atoms.begin() + static_cast<std::ptrdiff_t>(offsets[b]),
                               atoms.begin() + static_cast<std::ptrdiff_t>(offsets[b + 1]));
        const double w = per_replica / static_cast<double>(batch_replicas[b]);
        for (auto& a : part) a.weight = w;
        total += w1(FiniteMeasure::atoms(std::move(part), pooled.base_point()), pooled);
    }
    return total / static_cast<double>(batches) / std::sqrt(static_cast<double>(batches - 1));
}

MeanMeasureEstimate mean_measure(const ModelSpec& model, const MeasurePath& env,
                                 const ControlPolicy& policy, std::size_t n0, double dt,
                                 std::size_t replicas, std::uint64_t seed,
                                 const MeanMeasureOptions& options) {
    check_model(model);
    if (replicas == 0 || n0 == 0) throw ConfigError("replicas and n0 must be positive");
    const std::size_t steps = engine::step_count(model.horizon, dt);
    const auto source = engine::EnvironmentSource::fixed(env, dt, steps);
    engine::RunSpec spec{&model, &source, &policy, nullptr, 1, n0, dt, steps, options.max_population};

    std::vector<std::size_t> knots;
    for (std::size_t k = 0; k <= steps; ++k)
        if (recorded(k, steps, options.record_every)) knots.push_back(k);
    std::vector<std::size_t> slot(steps + 1, knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) slot[knots[i]] = i;

    struct Collector : engine::Observer {
        const std::vector<std::size_t>* slot = nullptr;
        std::vector<std::vector<double>> positions;  // per recorded knot
        std::vector<std::vector<std::size_t>> counts;  // per recorded knot, per replica
        void at_knot(std::size_t k, double, std::span<const engine::Particle> alive, const EnvState&) override {
            const std::size_t s = (*slot)[k];
            if (s >= positions.size()) return;
            for (const auto& p : alive) positions[s].push_back(p.position);
            counts[s].push_back(alive.size());
        }
    };

    const std::size_t workers = effective_workers(replicas, options.threads);
    std::vector<Collector> collectors(workers);
    for (auto& c : collectors) {
        c.slot = &slot;
        c.positions.resize(knots.size());
        c.counts.resize(knots.size());
    }
    parallel_chunks(replicas, workers, [&](std::size_t begin, std::size_t end, std::size_t w) {
        for (std::size_t r = begin; r < end; ++r)
            engine::run(spec, derive_seed(seed, {static_cast<std::uint32_t>(r)}), collectors[w]);
    });

    MeanMeasureEstimate est;
    est.replicas = replicas;
    const std::size_t batches = std::max<std::size_t>(1, std::min(options.batches, replicas));
    for (std::size_t b = 0; b < batches; ++b)
        est.batch_replicas.push_back(replicas * (b + 1) / batches - replicas * b / batches);

    const double weight = 1.0 / (static_cast<double>(n0) * static_cast<double>(replicas));
    for (std::size_t s = 0; s < knots.size(); ++s) {
        std::vector<Atom> atoms;
        std::vector<std::size_t> counts;
        counts.reserve(replicas);
        for (const auto& c : collectors) {
            for (double x : c.positions[s]) atoms.push_back({x, weight});
            counts.insert(counts.end(), c.counts[s].begin(), c.counts[s].end());
        }
        Moments m;
        for (auto n : counts) m.add(static_cast<double>(n) / static_cast<double>(n0));
        est.mass_se.push_back(m.se());

        std::vector<std::size_t> offsets{0};
        std::size_t r = 0, acc = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            for (std::size_t i = 0; i < est.batch_replicas[b]; ++i) acc += counts[r++];
            offsets.push_back(acc);
        }
        est.batch_offsets.push_back(std::move(offsets));
        est.path.times.push_back(dt * static_cast<double>(knots[s]));
        est.path.measures.push_back(FiniteMeasure::atoms(std::move(atoms)));
    }
    return est;
}

std::vector<std::vector<ResidualPoint>> martingale_residual_test(
    const ModelSpec& model, const MeasurePath& env, const ControlPolicy& policy,
    const std::vector<TestFunction>& test_functions, std::size_t n0, double dt,
    std::size_t replicas, std::uint64_t seed, const std::vector<double>& checkpoints,
    const SimulationOptions& options) {
    check_model(model);
    if (replicas == 0 || n0 == 0) throw ConfigError("replicas and n0 must be positive");
    const std::size_t steps = engine::step_count(model.horizon, dt);
    const auto source = engine::EnvironmentSource::fixed(env, dt, steps);
    engine::RunSpec spec{&model, &source, &policy, nullptr, 1, n0, dt, steps, options.max_population};

    std::vector<std::size_t> check_knots;
    for (double t : checkpoints) {
        const double k = std::round(t / dt);
        if (k < 0 || k > static_cast<double>(steps) || std::abs(k * dt - t) > 1e-9)
            throw ConfigError(fmt::format("checkpoint {} is not a simulation knot", t));
        check_knots.push_back(static_cast<std::size_t>(k));
    }
    const std::size_t nf = test_functions.size();
    const std::size_t nc = check_knots.size();

    // residuals[(r * nf + f) * nc + c]
    std::vector<double> residuals(replicas * nf * nc, 0.0);

    struct Residuals : engine::Observer {
        const ModelSpec* model;
        const ControlPolicy* policy;
        const std::vector<TestFunction>* fns;
        const std::vector<std::size_t>* check_knots;
        double dt;
        double* out = nullptr;  // nf * nc block for the current replica
        std::vector<double> phi0, integral;
        std::vector<double> probs;

        void at_knot(std::size_t k, double t, std::span<const engine::Particle> alive, const EnvState& env) override {
            const std::size_t nf = fns->size();
            std::vector<double> phi(nf, 0.0), gen(nf, 0.0);
            for (const auto& p : alive) {
                const double x = p.position;
                const double a = (*policy)(t, x);
                const double b = model->drift(t, x, env, a);
                const double s = model->diffusion(t, x, env, a);
                const double g = model->death_rate(t, x, env, a);
                double growth = 0.0;
                if (g != 0.0) {
                    model->offspring.probabilities(t, x, env, probs);
                    double mean = 0.0;
                    for (std::size_t l = 0; l < probs.size(); ++l) mean += static_cast<double>(l) * probs[l];
                    growth = g * (mean - 1.0);
                }
                for (std::size_t f = 0; f < nf; ++f) {
                    const auto& fn = (*fns)[f];
                    const double v = fn.value(x);
                    phi[f] += v;
                    gen[f] += 0.5 * s * s * fn.d2(x) + b * fn.d1(x) + growth * v;
                }
            }
            if (k == 0) phi0 = phi;
            for (std::size_t c = 0; c < check_knots->size(); ++c)
                if ((*check_knots)[c] == k)
                    for (std::size_t f = 0; f < nf; ++f)
                        out[f * check_knots->size() + c] = phi[f] - phi0[f] - integral[f];
            for (std::size_t f = 0; f < nf; ++f) integral[f] += gen[f] * dt;
        }
    };

    const std::size_t workers = effective_workers(replicas, options.threads);
    parallel_chunks(replicas, workers, [&](std::size_t begin, std::size_t end, std::size_t) {
        Residuals obs;
        obs.model = &model;
        obs.policy = &policy;
        obs.fns = &test_functions;
        obs.check_knots = &check_knots;
        obs.dt = dt;
        obs.probs.resize(model.offspring.max_offspring() + 1);
        for (std::size_t r = begin; r < end; ++r) {
            obs.out = residuals.data() + r * nf * nc;
            obs.integral.assign(nf, 0.0);
            engine::run(spec, derive_seed(seed, {static_cast<std::uint32_t>(r)}), obs);
        }
    });

    std::vector<std::vector<ResidualPoint>> report(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t c = 0; c < nc; ++c) {
            Moments m;
            for (std::size_t r = 0; r < replicas; ++r) m.add(residuals[(r * nf + f) * nc + c]);
            report[f].push_back({dt * static_cast<double>(check_knots[c]), m.mean(), m.se()});
        }
    }
    return report;
}

double path_cost(const ModelSpec& model, const MeasurePath& env,
                 const BranchingTrajectory& trajectory, const Label& label) {
    const auto& p = trajectory.particle(label);
    double cost = p.running_cost;
    if (p.survived) {
        if (env.size() == 0) throw ConfigError("environment path is empty");
        cost += model.terminal_cost(p.final_position, summarize(env.measures.back()));
    }
    return cost;
}

PopulationStats population_stats(const ModelSpec& model, const MeasurePath& env,
                                 const ControlPolicy& policy, std::size_t n0, double dt,
                                 std::size_t replicas, std::uint64_t seed,
                                 const SimulationOptions& options) {
    check_model(model);
    if (replicas == 0 || n0 == 0) throw ConfigError("replicas and n0 must be positive");
    const std::size_t steps = engine::step_count(model.horizon, dt);
    const auto source = engine::EnvironmentSource::fixed(env, dt, steps);
    engine::RunSpec spec{&model, &source, &policy, nullptr, 1, n0, dt, steps, options.max_population};

    struct Counter : engine::Observer {
        std::size_t steps = 0, sup = 0, final = 0;
        void at_knot(std::size_t k, double, std::span<const engine::Particle> alive, const EnvState&) override {
            sup = std::max(sup, alive.size());
            if (k == steps) final = alive.size();
        }
    };
    std::vector<std::array<double, 2>> per_replica(replicas);
    std::vector<double> finals(replicas);
    parallel_chunks(replicas, options.threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t r = begin; r < end; ++r) {
            Counter c;
            c.steps = steps;
            engine::run(spec, derive_seed(seed, {static_cast<std::uint32_t>(r)}), c);
            per_replica[r] = {static_cast<double>(c.sup), static_cast<double>(c.final)};
        }
    });
    Moments fin, sup, sup_sq;
    for (const auto& v : per_replica) {
        sup.add(v[0]);
        sup_sq.add(v[0] * v[0]);
        fin.add(v[1]);
    }
    return {fin.mean(), fin.se(), sup.mean(), sup.se(), sup_sq.mean(), sup_sq.se()};
}

void write_events_csv(const std::string& path, const BranchingTrajectory& trajectory) {
    csv::Writer w(path);
    w.header({"time", "label", "event", "offspring_count", "position"});
    for (const auto& e : trajectory.events)
        w.cells({csv::number(e.time), e.label.to_string(), e.kind == EventKind::birth ? "birth" : "death",
                 std::to_string(e.offspring_count), csv::number(e.position)});
}

} // namespace bmfg
