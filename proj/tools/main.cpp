#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shadowcomp/dataset_io.hpp"
#include "shadowcomp/errors.hpp"
#include "shadowcomp/experiments.hpp"
#include "shadowcomp/inference.hpp"
#include "shadowcomp/run_config.hpp"
#include "shadowcomp/trainer.hpp"

namespace fs = std::filesystem;
using namespace shadowcomp;

namespace {

int gen_data(const std::string& domain, std::size_t count, std::uint64_t seed, int resolution,
             const fs::path& out) {
  const auto d = synth::domain_from_string(domain);
  if (d == synth::Domain::kCustom) throw Error(ErrorKind::kConfig, "domain must be A or B");
  const auto tuples = harness::make_tuples(d, count, seed, resolution);
  io::write_dataset(tuples, out, d);
  std::cout << "wrote " << tuples.size() << " tuples to " << out.string() << '\n';
  return 0;
}

Mask load_or_empty(const std::string& path, int h, int w) {
  if (path.empty()) return Mask(h, w);
  return io::load_mask_png(path);
}

int infer(const fs::path& ckpt, const std::string& comp, const std::vector<std::string>& fg,
          const std::string& bo, const std::string& bs, const fs::path& out) {
  auto model = harness::load_model(ckpt);
  const Image composite = io::load_image_png(comp);
  std::vector<Mask> objects;
  for (const auto& p : fg) objects.push_back(io::load_mask_png(p));
  const auto result = harness::infer(model, composite, objects,
                                     load_or_empty(bo, composite.height, composite.width),
                                     load_or_empty(bs, composite.height, composite.width));
  harness::write_inference(out, result);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int experiment(const std::string& which, const fs::path& config_path, const fs::path& out) {
  auto config = config_path.empty() ? harness::RunConfig::desk_scale()
                                    : harness::RunConfig::load(config_path);
  fs::create_directories(out);
  std::string table;
  nlohmann::json summary;
  if (which == "overfit" || which == "ablation") {
    const auto tuples = harness::make_tuples(synth::Domain::kA, 8, config.seed, config.resolution);
    if (which == "overfit") {
      const auto r = harness::run_overfit(tuples, config, {}, &std::cout);
      table = metrics::format_table({{"overfit", r.report}});
      summary = {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss},
                 {"steps", r.steps}, {"metrics", metrics::to_json(r.report)}};
    } else {
      const auto r = harness::run_ablation(tuples, config, &std::cout);
      table = r.table;
      summary = {{"full", metrics::to_json(r.refined)}, {"no_refine", metrics::to_json(r.no_refine)}};
    }
  } else if (which == "cross-domain") {
    const auto r = harness::run_cross_domain(config, {}, &std::cout);
    table = r.table;
    summary = {{"a_only", metrics::to_json(r.pretrain_only)},
               {"b_only", metrics::to_json(r.target_only)},
               {"a_to_b", metrics::to_json(r.finetuned)}};
  } else {
    throw Error(ErrorKind::kConfig, "unknown experiment " + which);
  }
  std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  std::ofstream(out / "summary.txt") << table;
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shadow generation for composite images"};
  app.require_subcommand(1);

  std::string domain, config_file, base, ckpt, data, out, comp, m_bo, m_bs, eval_dir, which;
  std::vector<std::string> m_fo;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  int resolution = 256;
  int grid_rows = 4;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--domain", domain, "A or B")->required();
  gen->add_option("--count", count)->required();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--resolution", resolution);
  gen->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "Train from scratch");
  train->add_option("--config", config_file)->required()->check(CLI::ExistingFile);

  auto* fine = app.add_subcommand("finetune", "Finetune a checkpoint");
  fine->add_option("--config", config_file)->required()->check(CLI::ExistingFile);
  fine->add_option("--base", base)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--data", data)->required();
  eval->add_option("--out", out)->required();

  auto* inf = app.add_subcommand("infer", "Generate shadows for a composite");
  inf->add_option("--ckpt", ckpt)->required();
  inf->add_option("--comp", comp)->required();
  inf->add_option("--m-fo", m_fo, "foreground mask; repeat for several objects")->required();
  inf->add_option("--m-bo", m_bo);
  inf->add_option("--m-bs", m_bs);
  inf->add_option("--out", out)->required();

  auto* rep = app.add_subcommand("report", "Metrics files and qualitative grids");
  rep->add_option("--eval", eval_dir)->required();
  rep->add_option("--out", out)->required();
  rep->add_option("--rows", grid_rows, "tuples per grid image");

  auto* exp = app.add_subcommand("experiment", "Run a packaged experiment");
  exp->add_option("name", which, "overfit, cross-domain or ablation")->required();
  exp->add_option("--config", config_file);
  exp->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return gen_data(domain, count, seed, resolution, out);
    if (*train) {
      const auto path = harness::train(harness::RunConfig::load(config_file), &std::cout);
      std::cout << "checkpoint " << path.string() << '\n';
      return 0;
    }
    if (*fine) {
      const auto path = harness::finetune(harness::RunConfig::load(config_file), base, &std::cout);
      std::cout << "checkpoint " << path.string() << '\n';
      return 0;
    }
    if (*eval) {
      const auto ev = harness::evaluate_checkpoint(ckpt, data, out);
      std::cout << metrics::format_table({{"model", ev.report}});
      return 0;
    }
    if (*inf) return infer(ckpt, comp, m_fo, m_bo, m_bs, out);
    if (*rep) {
      for (const auto& p : harness::write_report(eval_dir, out, grid_rows)) std::cout << p.string() << '\n';
      return 0;
    }
    if (*exp) return experiment(which, config_file, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
