#pragma once

// Builds solver inputs from an experiment configuration.

#include "bmfg/branching.hpp"
#include "bmfg/config.hpp"
#include "bmfg/lq.hpp"
#include "bmfg/mfg.hpp"

#include <string_view>

namespace bmfg {

LQParams lq_params(const config::ExperimentConfig& cfg);
SpaceTimeGrid grid_from(const config::ExperimentConfig& cfg);
MFGModel mfg_model(const config::ExperimentConfig& cfg);
MFGConfig mfg_config(const config::ExperimentConfig& cfg);
ModelSpec branching_model(const config::ExperimentConfig& cfg);
ControlPolicy configured_policy(const config::ExperimentConfig& cfg);
/// The [env] atom, constant on [0, T].
MeasurePath fixed_env(const config::ExperimentConfig& cfg);

/// Parses `[model] preset = name` followed by `extra` lines; throws ConfigError
/// with every diagnostic on failure.
config::ExperimentConfig preset_config(std::string_view name, std::string_view extra = {});

} // namespace bmfg
