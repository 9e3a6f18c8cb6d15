// Command-line driver. Talks to the library only through bmfg.h.
#include "bmfg/bmfg.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
    long long seed = -1;
    long long threads = -1;
    std::vector<std::string> files;  // w1 only
};

int report(bmfg_status s) {
    std::fprintf(stderr, "error: %s\n", bmfg_last_error());
    switch (s) {
    case BMFG_ERR_CONFIG:
    case BMFG_ERR_LOOKUP:
    case BMFG_ERR_INVALID_ARGUMENT: return 2;
    case BMFG_ERR_NUMERICAL:
    case BMFG_ERR_EXPLOSION:
    case BMFG_ERR_EQUILIBRIUM_UNDEFINED:
    case BMFG_ERR_SINGULAR: return 3;
    default: return 1;
    }
}

// "section.key=value" or "key=value" for top-level keys.
bool split_override(const std::string& text, std::string& section, std::string& key, std::string& value) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) return false;
    std::string name = text.substr(0, eq);
    value = text.substr(eq + 1);
    const auto dot = name.find('.');
    if (dot == std::string::npos) {
        section.clear();
        key = name;
    } else {
        section = name.substr(0, dot);
        key = name.substr(dot + 1);
    }
    return !key.empty();
}

int execute(const std::string& command, const Options& o) {
    bmfg_config* cfg = nullptr;
    bmfg_status s = o.config.empty() ? bmfg_config_parse("", &cfg) : bmfg_config_read_file(o.config.c_str(), &cfg);
    if (s != BMFG_OK) return report(s);

    auto set = [&](const std::string& section, const std::string& key, const std::string& value) {
        if (s == BMFG_OK) s = bmfg_config_set(cfg, section.c_str(), key.c_str(), value.c_str());
    };
    set("", "command", command);
    if (o.seed >= 0) set("", "seed", std::to_string(o.seed));
    if (o.threads >= 0) set("", "threads", std::to_string(o.threads));
    if (command == "w1" && !o.files.empty()) {
        if (o.files.size() != 2) {
            bmfg_config_free(cfg);
            std::fprintf(stderr, "error: w1 takes exactly two measure files\n");
            return 2;
        }
        set("w1", "a", o.files[0]);
        set("w1", "b", o.files[1]);
    }
    for (const auto& text : o.overrides) {
        std::string section, key, value;
        if (!split_override(text, section, key, value)) {
            bmfg_config_free(cfg);
            std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", text.c_str());
            return 2;
        }
        set(section, key, value);
    }
    if (s != BMFG_OK) {
        bmfg_config_free(cfg);
        return report(s);
    }

    std::string out = o.out;
    if (out.empty()) {
        const char* env = std::getenv("BMFG_OUT_DIR");
        out = env && *env ? env : "bmfg_out";
    }
    int exit_code = 1;
    s = bmfg_run(cfg, out.c_str(), &exit_code);
    bmfg_config_free(cfg);
    if (s != BMFG_OK) return report(s);
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Branching mean-field games: solvers, simulators and equilibrium checks"};
    app.set_version_flag("--version", bmfg_version());
    app.require_subcommand(1);

    Options o;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"lq", "closed-form linear-quadratic equilibrium"},
        {"scan", "singularity scan of delta*theta over a lambda grid"},
        {"hjb", "backward HJB solve in a fixed environment"},
        {"fp", "forward Fokker-Planck solve for a feedback drift"},
        {"mfg", "damped fixed-point iteration for the equilibrium"},
        {"simulate", "Monte-Carlo branching diffusion"},
        {"nash", "epsilon-Nash check of the MFG control in the n-player game"},
        {"w1", "W1 distance between two finite measures"},
    };
    std::string chosen;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", o.config, "configuration file (key = value with [sections])");
        sub->add_option("-o,--out", o.out, "output directory (default $BMFG_OUT_DIR or ./bmfg_out)");
        sub->add_option("--seed", o.seed, "override the top-level seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", o.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
        sub->add_option("-s,--set", o.overrides, "override a key, e.g. --set lq.lambda=0.3");
        if (std::string(name) == "w1") sub->add_option("files", o.files, "two measure CSV files");
        sub->callback([&chosen, n = std::string(name)] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors share the configuration exit code
    }
    return execute(chosen, o);
}
