#include "bmfg/config.hpp"
#include "bmfg/errors.hpp"
#include "bmfg/lq.hpp"
#include "bmfg/models.hpp"

#include <doctest.h>

#include <algorithm>

using namespace bmfg;
using namespace bmfg::config;

namespace {

bool mentions(const std::vector<Diagnostic>& errors, std::size_t line, std::string_view word) {
    return std::any_of(errors.begin(), errors.end(), [&](const Diagnostic& d) {
        return d.line == line && d.message.find(word) != std::string::npos;
    });
}

} // namespace

TEST_CASE("minimal lq config uses the reference parameters") {
    const auto r = parse_config("command = lq\n");
    REQUIRE(r.ok());
    const auto p = lq_params(r.config);
    CHECK(p.T == 1.0);
    CHECK(p.gamma == 0.2);
    CHECK(p.delta == 0.5);
    CHECK(p.rho0 == 0.0);
    CHECK(p.v0 == 1.0);
    CHECK(p.x0 == 5.0);
    CHECK(p.lambda == 0.0);
    CHECK(r.config.command() == "lq");
}

TEST_CASE("range violations name the key and line") {
    const auto r = parse_config("command = lq\n\n[lq]\ndelta = -1\n");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 4);
    CHECK(r.errors[0].message.find("delta") != std::string::npos);
    CHECK(r.errors[0].to_string().rfind("line 4:", 0) == 0);
}

TEST_CASE("every problem is reported") {
    const auto r = parse_config(
        "command = nope\n"      // 1 unknown command
        "[lq]\n"
        "gama = 0.2\n"          // 3 unknown key
        "T = abc\n"             // 4 type mismatch
        "ode_steps = 2.5\n"     // 5 not an integer
        "[bogus]\n"             // 6 unknown section
        "[model]\n"
        "f = x +\n"             // 8 expression syntax
        "offspring = 0.5, -1\n" // 9 negative probability
        "just text\n"           // 10 no '='
        "[nash]\n"
        "common_random_numbers = maybe\n"  // 12 boolean
        "n_values = 50, 10\n");            // 13 not ascending
    CHECK(!r.ok());
    CHECK(mentions(r.errors, 1, "command"));
    CHECK(mentions(r.errors, 3, "gama"));
    CHECK(mentions(r.errors, 4, "T"));
    CHECK(mentions(r.errors, 5, "ode_steps"));
    CHECK(mentions(r.errors, 6, "bogus"));
    CHECK(mentions(r.errors, 8, "f"));
    CHECK(mentions(r.errors, 9, "offspring"));
    CHECK(mentions(r.errors, 10, ""));
    CHECK(mentions(r.errors, 12, "common_random_numbers"));
    CHECK(mentions(r.errors, 13, "n_values"));
    CHECK(std::is_sorted(r.errors.begin(), r.errors.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; }));
}

TEST_CASE("duplicate keys and comments") {
    const auto r = parse_config("# header\n[lq]\nlambda = 0.1  # trailing\nlambda = 0.2\n");
    CHECK(mentions(r.errors, 4, "lambda"));
    const auto ok = parse_config("[lq]   # comment after a section\nlambda = 0.25 # why not\n\n");
    REQUIRE(ok.ok());
    CHECK(ok.config.number("lq", "lambda") == 0.25);
    CHECK(ok.config.is_explicit("lq", "lambda"));
    CHECK(!ok.config.is_explicit("lq", "delta"));
}

TEST_CASE("expressions in the model section") {
    const auto r = parse_config("[model]\nmean_offspring = 1 + (0.35/0.2)*x^2\n");
    REQUIRE(r.ok());
    CHECK(r.config.expression("model", "mean_offspring")(0.0, 1.0) == doctest::Approx(2.75));
}

TEST_CASE("presets fill unset model keys only") {
    const auto cfg = preset_config("pure_death", "gamma = 0.5\n");
    CHECK(cfg.text("model", "gamma") == "0.5");
    CHECK(cfg.get("model", "gamma_max").from_preset);
    CHECK(cfg.list("model", "offspring") == std::vector<double>{1.0});
    CHECK_THROWS_AS(preset_config("no_such_preset"), ConfigError);
    for (const auto& [name, _] : presets()) CHECK_NOTHROW(preset_config(name));
}

TEST_CASE("set applies overrides with validation") {
    auto cfg = parse_config("").config;
    CHECK(cfg.set("lq", "lambda", "0.3").empty());
    CHECK(cfg.number("lq", "lambda") == 0.3);
    CHECK(cfg.is_explicit("lq", "lambda"));
    CHECK(!cfg.set("lq", "lambda", "-2").empty());
    CHECK(!cfg.set("lq", "nope", "1").empty());
    CHECK(cfg.set("", "seed", "42").empty());
    CHECK(cfg.integer("", "seed") == 42);
}

TEST_CASE("resolved lists every schema key") {
    const auto cfg = parse_config("").config;
    const auto all = cfg.resolved();
    CHECK(all.size() == schema().size());
    CHECK(std::find(all.begin(), all.end(), std::pair<std::string, std::string>{"lq.gamma", "0.2"}) != all.end());
}

TEST_CASE("model builders reject misuse") {
    CHECK_THROWS_AS(mfg_model(preset_config("mixed", "f = a\n")), ConfigError);
    CHECK_THROWS_AS(mfg_model(preset_config("mixed", "gamma = mean\n")), ConfigError);
    CHECK_THROWS_AS(mfg_model(preset_config("pure_death")), ConfigError);  // Dirac m0
    CHECK_THROWS_AS(mfg_model(preset_config("coupled_tanh", "f = log(x)\n")), ConfigError);
    CHECK_THROWS_AS(branching_model(preset_config("mixed", "gamma_max = 0\n")), ConfigError);
    CHECK_NOTHROW(branching_model(preset_config("coupled_tanh")));
    const auto m = mfg_model(preset_config("lq", "[grid]\nx_lo = -15\nx_hi = 25\n"));
    CHECK(m.g(5.0, {1.0, 5.0}) == 0.0);
    CHECK(m.mean_offspring(3.0) == 1.0);
}

TEST_CASE("setting the preset after parsing fills the model") {
    auto parsed = config::parse_config("[model]\npreset = pure_death\ngamma = 0.7\n");
    REQUIRE(parsed.ok());
    auto& cfg = parsed.config;
    CHECK(cfg.set("model", "preset", "coupled_tanh").empty());
    CHECK(cfg.get("model", "f").source == "tanh(mean - x)");
    CHECK(cfg.get("model", "gamma").source == "0.7");
    CHECK(cfg.list("model", "offspring") == std::vector<double>{0, 0, 1});
    CHECK_FALSE(cfg.set("model", "preset", "nope").empty());
}
