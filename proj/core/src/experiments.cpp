#include "shadowcomp/experiments.hpp"

#include <memory>
#include <ostream>

#include "shadowcomp/errors.hpp"
#include "shadowcomp/inference.hpp"
#include "shadowcomp/trainer.hpp"

namespace shadowcomp::harness {

std::vector<synth::ShadowTuple> make_tuples(synth::Domain domain, std::size_t count,
                                            std::uint64_t first_seed, int resolution) {
  synth::GeneratorConfig gen;
  gen.domain = domain;
  gen.resolution = resolution;
  return synth::generate_tuples(gen, count, first_seed);
}

namespace {

std::shared_ptr<const TensorDataset> dataset(const std::vector<synth::ShadowTuple>& tuples,
                                             const RunConfig& config) {
  return std::make_shared<const TensorDataset>(tuples, config.network().shape_size);
}

RunConfig in_memory(RunConfig config, std::int64_t steps) {
  config.steps = static_cast<int>(steps);
  config.checkpoint_dir.clear();
  config.checkpoint_every = 0;
  config.eval_every = 0;
  return config;
}

void note(std::ostream* log, const std::string& text) {
  if (log != nullptr) *log << text << '\n' << std::flush;
}

}  // namespace

OverfitResult run_overfit(const std::vector<synth::ShadowTuple>& tuples, const RunConfig& config,
                          const OverfitOptions& opts, std::ostream* log) {
  const RunConfig cfg = in_memory(config, config.steps);
  Trainer trainer(cfg, net::ShadowNet(cfg.network()), dataset(tuples, cfg), log);
  OverfitResult r;
  auto score = [&] {
    r.report = evaluate(trainer.model(), tuples).report;
    r.final_loss = trainer.state().history.back().total;
    r.loss_ok = r.final_loss < opts.loss_ratio * r.initial_loss;
    r.s_ber_ok = r.report.aggregate.s_ber < opts.s_ber_limit;
  };
  trainer.run([&](const TrainState& s) {
    if (s.step == 1) r.initial_loss = s.history.front().total;
    if (opts.check_every <= 0 || s.step % opts.check_every != 0) return false;
    if (s.history.back().total >= opts.loss_ratio * r.initial_loss) return false;
    score();
    return r.passed();
  });
  r.steps = trainer.state().step;
  score();
  return r;
}

CrossDomainResult run_cross_domain(const RunConfig& config, const CrossDomainOptions& opts,
                                   std::ostream* log) {
  const int res = config.resolution;
  const auto source = make_tuples(synth::Domain::kA, opts.pretrain_count, opts.pretrain_seed, res);
  const auto target = make_tuples(synth::Domain::kB, opts.finetune_count, opts.finetune_seed, res);
  const auto test = make_tuples(synth::Domain::kB, opts.test_count, opts.test_seed, res);
  const auto source_data = dataset(source, config);
  const auto target_data = dataset(target, config);

  CrossDomainResult r;
  note(log, "pretrain on domain A");
  Trainer pre(in_memory(config, opts.pretrain_steps), net::ShadowNet(config.network()), source_data, log);
  pre.run();
  r.pretrain_only = evaluate(pre.model(), test, 8, {{"regime", "A only"}}).report;

  note(log, "train on domain B only");
  Trainer scratch(in_memory(config, opts.scratch_steps), net::ShadowNet(config.network()), target_data,
                  log);
  scratch.run();
  r.target_only = evaluate(scratch.model(), test, 8, {{"regime", "B only"}}).report;

  note(log, "finetune A -> B");
  net::ShadowNet tuned(config.network());
  {
    torch::NoGradGuard no_grad;
    const auto src = pre.model()->named_parameters();
    for (auto& p : tuned->named_parameters()) p.value().copy_(src[p.key()]);
  }
  Trainer fine(in_memory(config, opts.finetune_steps), tuned, target_data, log);
  fine.run();
  r.finetuned = evaluate(fine.model(), test, 8, {{"regime", "A -> B"}}).report;

  r.table = metrics::format_table(
      {{"A only", r.pretrain_only}, {"B only", r.target_only}, {"A -> B", r.finetuned}});
  return r;
}

AblationResult run_ablation(const std::vector<synth::ShadowTuple>& tuples, const RunConfig& config,
                            std::ostream* log) {
  AblationResult r;
  for (bool no_refine : {false, true}) {
    RunConfig cfg = in_memory(config, config.steps);
    cfg.no_refine = no_refine;
    note(log, no_refine ? "train without refinement" : "train with refinement");
    Trainer trainer(cfg, net::ShadowNet(cfg.network()), dataset(tuples, cfg), log);
    trainer.run();
    auto report = evaluate(trainer.model(), tuples, 8, {{"no_refine", no_refine}}).report;
    (no_refine ? r.no_refine : r.refined) = std::move(report);
  }
  r.table = metrics::format_table({{"full", r.refined}, {"w/o refinement", r.no_refine}});
  return r;
}

}  // namespace shadowcomp::harness
