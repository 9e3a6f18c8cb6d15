#include "bmfg/nash.hpp"

#include "bmfg/csv.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/parallel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace bmfg {

std::vector<Deviation> standard_deviations(const ControlPolicy& eq) {
    return {
        {"zero", [](double, double) { return 0.0; }},
        {"half", [eq](double t, double x) { return 0.5 * eq(t, x); }},
        {"double", [eq](double t, double x) { return 2.0 * eq(t, x); }},
        {"plus_one", [](double, double) { return 1.0; }},
        {"minus_one", [](double, double) { return -1.0; }},
    };
}

void NashExperiment::validate() const {
    if (!equilibrium) throw ConfigError("equilibrium policy is unset");
    if (deviations.empty()) throw ConfigError("deviation list is empty");
    if (n_values.empty() || !std::is_sorted(n_values.begin(), n_values.end()) || n_values.front() == 0)
        throw ConfigError("n_values must be positive and ascending");
    if (replicas < 2) throw ConfigError("need at least two replicas");
}

namespace {

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
        return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1)) /
                         static_cast<double>(n));
    }
};

std::vector<std::size_t> knots_of(const std::vector<double>& times, double dt, std::size_t steps) {
    std::vector<std::size_t> out;
    for (double t : times) {
        const double k = std::round(t / dt);
        if (k < 0 || k > static_cast<double>(steps) || std::abs(k * dt - t) > 1e-9)
            throw ConfigError(fmt::format("checkpoint {} is not a simulation knot", t));
        out.push_back(static_cast<std::size_t>(k));
    }
    return out;
}

std::vector<Atom> empirical_atoms(std::span<const engine::Particle> alive, double n, std::size_t skip) {
    std::vector<Atom> atoms;
    atoms.reserve(alive.size());
    for (std::size_t j = 0; j < alive.size(); ++j)
        if (j != skip) atoms.push_back({alive[j].position, 1.0 / n});
    return atoms;
}

// Cost of initial agent 1 plus the pathwise leave-one-out check.
class TaggedAgent : public engine::Observer {
public:
    TaggedAgent(const ModelSpec& model, std::size_t steps, double n, const std::vector<std::size_t>* checks,
                bool full_check)
        : model_(model), steps_(steps), n_(n), checks_(checks), full_(full_check) {}

    void at_knot(std::size_t k, double, std::span<const engine::Particle> alive, const EnvState&) override {
        const bool tagged_alive = !alive.empty() && alive.front().label == tag_;
        if (k == steps_ && tagged_alive) {
            double sum = 0.0;
            for (const auto& p : alive) sum += p.position;
            const double x = alive.front().position;
            const double others = static_cast<double>(alive.size()) - 1.0;
            const EnvState env{others / n_, others > 0.0 ? (sum - x) / others : 0.0};
            cost += model_.terminal_cost(x, env);
        }
        if (!checks_ || std::find(checks_->begin(), checks_->end(), k) == checks_->end()) return;
        const auto full = FiniteMeasure::atoms(empirical_atoms(alive, n_, alive.size()));
        const std::size_t upto = full_ ? alive.size() : (tagged_alive ? 1 : 0);
        for (std::size_t j = 0; j < upto; ++j) {
            const double bound = (1.0 + std::abs(alive[j].position)) / n_;
            const double d = w1(FiniteMeasure::atoms(empirical_atoms(alive, n_, j)), full);
            ++checks;
            worst_ratio = std::max(worst_ratio, d / bound);
            if (d > bound * (1.0 + 1e-9)) ++violations;
        }
    }

    void on_retire(const engine::Particle& p, double, bool) override {
        if (p.label == tag_) cost += p.running_cost;
    }

    double cost = 0.0;
    std::size_t checks = 0, violations = 0;
    double worst_ratio = 0.0;

private:
    const ModelSpec& model_;
    std::size_t steps_;
    double n_;
    const std::vector<std::size_t>* checks_;
    bool full_;
    Label tag_ = Label::root(1);
};

} // namespace

NashReport run_nash(const NashExperiment& exp) {
    exp.validate();
    const std::size_t steps = engine::step_count(exp.model.horizon, exp.dt);
    const auto check_knots = knots_of(exp.checkpoints, exp.dt, steps);
    const std::size_t nd = exp.deviations.size();

    NashReport report;
    for (std::size_t n : exp.n_values) {
        const auto source = engine::EnvironmentSource::empirical(static_cast<double>(n));
        // gains[r * nd + d]
        std::vector<double> gains(exp.replicas * nd);
        struct Checks {
            std::size_t count = 0, violations = 0;
            double worst = 0.0;
        };
        std::vector<Checks> checks(effective_workers(exp.replicas, exp.threads));

        parallel_chunks(exp.replicas, exp.threads, [&](std::size_t begin, std::size_t end, std::size_t worker) {
            for (std::size_t r = begin; r < end; ++r) {
                const std::uint64_t seed =
                    derive_seed(exp.seed, {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(r)});
                engine::RunSpec spec{&exp.model, &source, &exp.equilibrium, nullptr, 1, n, exp.dt, steps,
                                     exp.max_population};
                TaggedAgent base(exp.model, steps, static_cast<double>(n), &check_knots, r < exp.full_check_replicas);
                engine::run(spec, seed, base);
                checks[worker].count += base.checks;
                checks[worker].violations += base.violations;
                checks[worker].worst = std::max(checks[worker].worst, base.worst_ratio);
                for (std::size_t d = 0; d < nd; ++d) {
                    spec.deviation = &exp.deviations[d].policy;
                    TaggedAgent dev(exp.model, steps, static_cast<double>(n), nullptr, false);
                    const std::uint64_t dev_seed =
                        exp.common_random_numbers
                            ? seed
                            : derive_seed(exp.seed, {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(r),
                                                     static_cast<std::uint32_t>(d + 1)});
                    engine::run(spec, dev_seed, dev);
                    gains[r * nd + d] = base.cost - dev.cost;
                }
            }
        });

        for (const auto& c : checks) {
            report.leave_one_out_checks += c.count;
            report.leave_one_out_violations += c.violations;
            report.leave_one_out_worst_ratio = std::max(report.leave_one_out_worst_ratio, c.worst);
        }
        EpsilonEstimate eps{n, -std::numeric_limits<double>::infinity(), 0.0, {}};
        for (std::size_t d = 0; d < nd; ++d) {
            Moments m;
            for (std::size_t r = 0; r < exp.replicas; ++r) m.add(gains[r * nd + d]);
            GainEstimate g{n, exp.deviations[d].name, m.mean(), m.se(), m.se() > std::abs(m.mean())};
            if (g.gain > eps.epsilon) eps = {n, g.gain, g.se, g.deviation};
            report.gains.push_back(std::move(g));
        }
        report.epsilon.push_back(eps);
    }
    return report;
}

void write_nash_csv(const std::string& path, const NashReport& report) {
    csv::Writer w(path);
    w.header({"n", "deviation", "gain", "se", "epsilon_hat"});
    for (const auto& g : report.gains) {
        double eps = 0.0;
        for (const auto& e : report.epsilon)
            if (e.n == g.n) eps = e.epsilon;
        w.cells({std::to_string(g.n), g.deviation, csv::number(g.gain), csv::number(g.se), csv::number(eps)});
    }
}

namespace {

struct EmpiricalRecorder : engine::Observer {
    const std::vector<std::size_t>* knots = nullptr;
    double n = 1.0;
    std::vector<FiniteMeasure> measures;
    void at_knot(std::size_t k, double, std::span<const engine::Particle> alive, const EnvState&) override {
        for (auto c : *knots)
            if (c == k) measures.push_back(FiniteMeasure::atoms(empirical_atoms(alive, n, alive.size())));
    }
};

} // namespace

MeasurePath empirical_measure_path(std::size_t n, std::size_t replica, std::uint64_t seed,
                                   const ModelSpec& model, const ControlPolicy& policy, double dt,
                                   const std::vector<double>& checkpoints) {
    if (n == 0) throw ConfigError("n must be positive");
    const std::size_t steps = engine::step_count(model.horizon, dt);
    const auto knots = knots_of(checkpoints, dt, steps);
    const auto source = engine::EnvironmentSource::empirical(static_cast<double>(n));
    engine::RunSpec spec{&model, &source, &policy, nullptr, 1, n, dt, steps, 1'000'000};
    EmpiricalRecorder rec;
    rec.knots = &knots;
    rec.n = static_cast<double>(n);
    engine::run(spec, derive_seed(seed, {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(replica)}), rec);
    MeasurePath path;
    path.times = checkpoints;
    path.measures = std::move(rec.measures);
    return path;
}

std::vector<GapPoint> empirical_measure_gap(std::size_t n, std::size_t replicas, std::uint64_t seed,
                                            const ModelSpec& model, const ControlPolicy& policy,
                                            const MeasurePath& reference, double dt,
                                            const std::vector<double>& checkpoints, std::size_t threads) {
    if (replicas == 0) throw ConfigError("replicas must be positive");
    std::vector<double> gaps(replicas * checkpoints.size());
    parallel_chunks(replicas, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto path = empirical_measure_path(n, r, seed, model, policy, dt, checkpoints);
            for (std::size_t c = 0; c < checkpoints.size(); ++c)
                gaps[r * checkpoints.size() + c] = w1(path.measures[c], reference.at_or_knot(checkpoints[c]));
        }
    });
    std::vector<GapPoint> out;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        Moments m;
        for (std::size_t r = 0; r < replicas; ++r) m.add(gaps[r * checkpoints.size() + c]);
        out.push_back({checkpoints[c], m.mean(), m.se()});
    }
    return out;
}

} // namespace bmfg
