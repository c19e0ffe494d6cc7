#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shadowcomp/metrics.hpp"
#include "shadowcomp/run_config.hpp"
#include "shadowcomp/synthdata.hpp"

namespace shadowcomp::harness {

/// Synthetic tuples at the run config's resolution.
std::vector<synth::ShadowTuple> make_tuples(synth::Domain domain, std::size_t count,
                                            std::uint64_t first_seed, int resolution);

struct OverfitOptions {
  double loss_ratio = 0.2;    // final total must fall below ratio * initial
  double s_ber_limit = 10.0;  // training-set S-BER target
  int check_every = 50;       // steps between early-stop checks; 0 disables
};

struct OverfitResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::int64_t steps = 0;
  metrics::MetricsReport report;  // on the training tuples
  bool loss_ok = false;
  bool s_ber_ok = false;
  bool passed() const { return loss_ok && s_ber_ok; }
};

/// Trains on `tuples` for at most config.steps and scores the result on the
/// same tuples. Stops early once both targets hold at a check.
OverfitResult run_overfit(const std::vector<synth::ShadowTuple>& tuples, const RunConfig& config,
                          const OverfitOptions& opts = {}, std::ostream* log = nullptr);

struct CrossDomainOptions {
  std::size_t pretrain_count = 500;
  std::size_t finetune_count = 50;
  std::size_t test_count = 100;
  std::int64_t pretrain_steps = 1500;
  std::int64_t scratch_steps = 500;
  std::int64_t finetune_steps = 500;
  std::uint64_t pretrain_seed = 1'000'000;
  std::uint64_t finetune_seed = 2'000'000;
  std::uint64_t test_seed = 3'000'000;
};

struct CrossDomainResult {
  metrics::MetricsReport pretrain_only;  // trained on A
  metrics::MetricsReport target_only;    // trained on the small B set
  metrics::MetricsReport finetuned;      // A, then B
  std::string table;
};

/// Three training regimes, all evaluated on the same domain-B test tuples.
CrossDomainResult run_cross_domain(const RunConfig& config, const CrossDomainOptions& opts,
                                   std::ostream* log = nullptr);

struct AblationResult {
  metrics::MetricsReport refined;
  metrics::MetricsReport no_refine;
  std::string table;
};

/// Trains the full and the no-refine network with identical settings on
/// `tuples` and scores both on the same tuples.
AblationResult run_ablation(const std::vector<synth::ShadowTuple>& tuples, const RunConfig& config,
                            std::ostream* log = nullptr);

}  // namespace shadowcomp::harness
