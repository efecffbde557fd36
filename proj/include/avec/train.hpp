#pragma once

#include <string>

#include "avec/checkpoint.hpp"
#include "avec/config.hpp"
#include "avec/diagnostics.hpp"
#include "avec/ppo.hpp"
#include "avec/sac.hpp"

namespace avec {

/// Runs the configured algorithm, writing metrics, episodes, checkpoints,
/// per-checkpoint diagnostics and visitation data into out_dir (which must
/// exist). Throws ConfigError / TrainingFault on failure; partial logs stay
/// on disk.
void train(const RunConfig& cfg, const std::string& out_dir);

PpoParams ppo_params_from(const RunConfig& cfg);
SacParams sac_params_from(const RunConfig& cfg);

PpoState build_ppo_state(const RunConfig& cfg, const Env& env, Rng& init_rng);
SacNets build_sac_state(const RunConfig& cfg, const Env& env, Rng& init_rng);

std::vector<NamedTensor> snapshot_ppo(const PpoState& state, const ObsFilter& filter);
void restore_ppo(PpoState& state, ObsFilter& filter,
                 const std::vector<NamedTensor>& params);
std::vector<NamedTensor> snapshot_sac(const SacNets& nets, const ObsFilter& filter);
void restore_sac(SacNets& nets, ObsFilter& filter,
                 const std::vector<NamedTensor>& params);

/// Read-only diagnostic protocol at a frozen parameter point. Estimation
/// error against a fresh empirical-target batch, approximation error against
/// Monte-Carlo returns of the current policy, and gradient cosine similarity.
DiagnosticsReport ppo_diagnostics(const RunConfig& cfg, const Env& env,
                                  const PpoState& state, const ObsFilter& filter,
                                  long step, std::size_t budget);
DiagnosticsReport sac_diagnostics(const RunConfig& cfg, const Env& env,
                                  const SacNets& nets, const ObsFilter& filter,
                                  const ReplayBuffer& replay, long step,
                                  std::size_t budget);

/// Re-runs the diagnostic protocol against a saved checkpoint; fresh
/// environment interaction only, parameters untouched.
DiagnosticsReport diagnose_checkpoint(const RunConfig& cfg,
                                      const std::string& checkpoint_path,
                                      std::size_t budget_override = 0);

}  // namespace avec
