// Command-line front end: dataset generation, training, evaluation,
// ablation sweeps and checkpoint inspection.
//
// Exit codes: 0 success, 1 usage error, 2 runtime abort.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "osgda/graph_edit.hpp"
#include "osgda/metrics.hpp"
#include "osgda/model.hpp"
#include "osgda/run_config.hpp"
#include "osgda/synthetic.hpp"
#include "osgda/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct SeedOutcome {
  std::uint64_t seed = 0;
  osgda::EvalReport report;
};

/// Trains one seed and writes metrics.jsonl, edits.log, checkpoint.bin,
/// report.json and embeddings.txt into out_dir.
SeedOutcome run_one_seed(const osgda::RunSpec& spec, const osgda::DomainPair& pair,
                         std::uint64_t seed, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  osgda::TrainConfig cfg = spec.train;
  cfg.seed = seed;

  std::ofstream metrics(out_dir / "metrics.jsonl");
  std::ofstream edits(out_dir / "edits.log");
  osgda::TrainResult result = osgda::run_training(pair, cfg, &metrics, &edits);

  const osgda::TrainConfig resolved = cfg.resolved();
  osgda::Checkpoint ckpt;
  ckpt.seed = seed;
  ckpt.variant = resolved.variant == osgda::Variant::Threshold ? 1 : 0;
  ckpt.tau = resolved.tau;
  ckpt.model = result.best_model;
  ckpt.feature_delta = result.best_delta;
  for (const auto& f : result.best_flips) ckpt.flips.emplace_back(f.u, f.v);
  osgda::save_checkpoint(ckpt, (out_dir / "checkpoint.bin").string());

  osgda::write_json_file(osgda::report_to_json(result.report),
                         (out_dir / "report.json").string());

  const bool threshold_mode = ckpt.variant == 1;
  const osgda::Inference inf =
      osgda::infer(result.best_model, result.best_target_adj,
                   osgda::add_delta(pair.target.features, result.best_delta), threshold_mode);
  const std::vector<int> pred = osgda::predict_from_logits(inf.logits, threshold_mode,
                                                           resolved.tau, pair.known_count);
  osgda::export_embeddings((out_dir / "embeddings.txt").string(), inf.embeddings,
                           pair.target_eval_labels, pred);
  return {seed, result.report};
}

std::vector<SeedOutcome> run_seeds(const osgda::RunSpec& spec, const osgda::DomainPair& pair,
                                   const std::vector<std::uint64_t>& seeds, const fs::path& out,
                                   int workers) {
  std::vector<SeedOutcome> outcomes(seeds.size());
  if (workers <= 1 || seeds.size() <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      outcomes[i] = run_one_seed(spec, pair, seeds[i], out / ("seed_" + std::to_string(seeds[i])));
    return outcomes;
  }
  std::size_t next = 0;
  while (next < seeds.size()) {
    const std::size_t batch = std::min<std::size_t>(workers, seeds.size() - next);
    std::vector<std::future<SeedOutcome>> futures;
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t i = next + k;
      futures.push_back(std::async(std::launch::async, [&, i] {
        return run_one_seed(spec, pair, seeds[i], out / ("seed_" + std::to_string(seeds[i])));
      }));
    }
    for (std::size_t k = 0; k < batch; ++k) outcomes[next + k] = futures[k].get();
    next += batch;
  }
  return outcomes;
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  for (double x : xs) r.std += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(r.std / static_cast<double>(xs.size()));
  return r;
}

void write_seed_summary(const std::vector<SeedOutcome>& outcomes, const fs::path& path) {
  std::ofstream out(path);
  out << "seed,acc,acc_tk,acc_tu,h_score\n";
  std::vector<double> accs, hs;
  for (const auto& o : outcomes) {
    out << o.seed << ',' << o.report.acc << ',' << o.report.acc_tk << ',' << o.report.acc_tu
        << ',' << o.report.h << '\n';
    accs.push_back(o.report.acc);
    hs.push_back(o.report.h);
  }
  const MeanStd a = mean_std(accs), h = mean_std(hs);
  out << "mean," << a.mean << ",,," << h.mean << '\n';
  out << "std," << a.std << ",,," << h.std << '\n';
  std::cout << "acc  " << a.mean << " +/- " << a.std << "\n";
  std::cout << "h    " << h.mean << " +/- " << h.std << "\n";
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed) {
  const json j = osgda::load_json_file(spec_path);
  osgda::GeneratorSpec spec = j.get<osgda::GeneratorSpec>();
  spec.validate();
  const osgda::SyntheticDomains domains = osgda::generate_synthetic_raw(spec, seed);
  osgda::save_domain_dir(domains.source, out_dir + "/source");
  osgda::save_domain_dir(domains.target, out_dir + "/target");

  ordered_json manifest;
  manifest["command"] = "generate";
  manifest["spec"] = spec;
  manifest["seed"] = seed;
  manifest["input_hash_src"] = osgda::dataset_hash(out_dir + "/source");
  manifest["input_hash_tgt"] = osgda::dataset_hash(out_dir + "/target");
  osgda::write_json_file(manifest, out_dir + "/manifest.json");
  std::cout << "wrote " << out_dir << "/{source,target}\n";
  return 0;
}

int cmd_train(const osgda::RunSpec& spec, const std::string& out_dir, std::uint64_t base_seed,
              int seed_count, int workers) {
  const osgda::DomainPair pair = osgda::load_domain_pair(spec);
  const auto seeds = seed_list(base_seed, seed_count);
  fs::create_directories(out_dir);
  osgda::write_json_file(osgda::make_manifest("train", spec, seeds, out_dir),
                         out_dir + "/manifest.json");
  const auto outcomes = run_seeds(spec, pair, seeds, out_dir, workers);
  write_seed_summary(outcomes, fs::path(out_dir) / "summary.csv");
  return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const osgda::RunSpec& spec,
                 const std::string& out_path) {
  const osgda::Checkpoint ckpt = osgda::load_checkpoint(ckpt_path);
  osgda::RunSpec eval_spec = spec;
  if (eval_spec.known_count != ckpt.model.dims.known_count && eval_spec.known_classes.empty())
    eval_spec.known_count = ckpt.model.dims.known_count;
  const osgda::DomainPair pair = osgda::load_domain_pair(eval_spec);
  if (pair.known_count != ckpt.model.dims.known_count)
    throw std::runtime_error("checkpoint known_count=" +
                             std::to_string(ckpt.model.dims.known_count) +
                             " vs dataset known_count=" + std::to_string(pair.known_count));
  if (pair.target.feature_dim() != ckpt.model.dims.feature_dim)
    throw std::runtime_error("checkpoint feature_dim=" +
                             std::to_string(ckpt.model.dims.feature_dim) + " vs dataset " +
                             std::to_string(pair.target.feature_dim()));

  osgda::CsrAdjacency adj = pair.target.adjacency;
  if (!ckpt.flips.empty()) {
    std::vector<osgda::EdgeFlip> flips;
    for (auto [u, v] : ckpt.flips) flips.push_back({u, v, !adj.has_edge(u, v), 0.0});
    // Flips replay one at a time: a pair may legitimately recur.
    for (const auto& f : flips) adj = osgda::commit_flips(adj, {f}, 1);
  }
  osgda::DenseMatrix features = pair.target.features;
  if (ckpt.feature_delta.size() > 0) features = osgda::add_delta(features, ckpt.feature_delta);

  const bool threshold_mode = ckpt.variant == 1;
  const osgda::Inference inf = osgda::infer(ckpt.model, adj, features, threshold_mode);
  const std::vector<int> pred =
      osgda::predict_from_logits(inf.logits, threshold_mode, ckpt.tau, pair.known_count);
  const osgda::EvalReport report =
      osgda::evaluate_predictions(pred, pair.target_eval_labels, pair.known_count);
  const ordered_json j = osgda::report_to_json(report);
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) osgda::write_json_file(j, out_path);
  return 0;
}

int cmd_ablate(const osgda::RunSpec& base_spec, const json& config_json, const std::string& axis,
               const std::string& out_dir, std::uint64_t base_seed, int seed_count, int workers) {
  if (!config_json.contains("ablate") || !config_json.at("ablate").contains(axis))
    throw std::runtime_error("config lists no ablate values for axis '" + axis + "'");
  const json values = config_json.at("ablate").at(axis);

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "summary.csv");
  csv << axis << ",mean_h,std_h,mean_acc,std_acc\n";

  for (const auto& value : values) {
    osgda::RunSpec spec = base_spec;
    std::string label;
    if (axis == "rho") {
      spec.train.rho = value.get<double>();
      label = std::to_string(spec.train.rho);
    } else if (axis == "budget") {
      spec.train.budget_ratio = value.get<double>();
      spec.train.budget_abs = -1;
      label = std::to_string(spec.train.budget_ratio);
    } else if (axis == "known_count") {
      spec.known_count = value.get<int>();
      spec.known_classes.clear();
      label = std::to_string(spec.known_count);
    } else if (axis == "variant") {
      spec.train.variant = osgda::variant_from_string(value.get<std::string>());
      label = value.get<std::string>();
    } else {
      throw std::runtime_error("unknown ablation axis: " + axis);
    }
    const osgda::DomainPair pair = osgda::load_domain_pair(spec);
    const auto seeds = seed_list(base_seed, seed_count);
    const fs::path arm_dir = fs::path(out_dir) / (axis + "_" + label);
    fs::create_directories(arm_dir);
    osgda::write_json_file(osgda::make_manifest("ablate:" + axis + "=" + label, spec, seeds,
                                                arm_dir.string()),
                           (arm_dir / "manifest.json").string());
    const auto outcomes = run_seeds(spec, pair, seeds, arm_dir, workers);
    std::vector<double> hs, accs;
    for (const auto& o : outcomes) {
      hs.push_back(o.report.h);
      accs.push_back(o.report.acc);
    }
    const MeanStd h = mean_std(hs), a = mean_std(accs);
    csv << label << ',' << h.mean << ',' << h.std << ',' << a.mean << ',' << a.std << '\n';
    std::cout << axis << "=" << label << "  h " << h.mean << " +/- " << h.std << "  acc "
              << a.mean << " +/- " << a.std << "\n";
  }
  std::cout << "wrote " << out_dir << "/summary.csv\n";
  return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
  const osgda::Checkpoint ckpt = osgda::load_checkpoint(ckpt_path);
  std::cout << "seed: " << ckpt.seed << "\n";
  std::cout << "variant: " << (ckpt.variant == 1 ? "threshold" : "full") << "\n";
  std::cout << "tau: " << ckpt.tau << "\n";
  std::cout << "feature_dim: " << ckpt.model.dims.feature_dim << "\n";
  std::cout << "hidden:";
  for (int d : ckpt.model.dims.hidden) std::cout << ' ' << d;
  std::cout << "\nknown_count: " << ckpt.model.dims.known_count << "\n";
  std::cout << "disc_hidden: " << ckpt.model.dims.disc_hidden << "\n";
  for (std::size_t l = 0; l < ckpt.model.extractor.layers.size(); ++l) {
    const auto& m = ckpt.model.extractor.layers[l].mask;
    std::size_t zeros = 0;
    for (double v : m.data)
      if (v == 0.0) ++zeros;
    std::cout << "layer " << l << " mask zeros: " << zeros << "/" << m.size() << " ("
              << (m.size() ? static_cast<double>(zeros) / m.size() : 0.0) << ")\n";
  }
  std::cout << "committed flips: " << ckpt.flips.size() << "\n";
  std::cout << "feature_delta: "
            << (ckpt.feature_delta.size() > 0 ? osgda::shape_str(ckpt.feature_delta) : "none")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-set graph domain adaptation via model and graph reprogramming"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", dataset_src, dataset_tgt, checkpoint_path,
              report_path, variant_flag, axis;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int seed_count = 1, workers = 1;
  double rho_flag = -1.0, budget_ratio_flag = -1.0, lambda_flag = -1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "base seed")->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--seeds", seed_count, "number of consecutive seeds");
    cmd->add_option("--workers", workers, "parallel arms");
    cmd->add_option("--dataset-src", dataset_src, "source dataset directory");
    cmd->add_option("--dataset-tgt", dataset_tgt, "target dataset directory");
    cmd->add_option("--variant", variant_flag, "full|threshold|no_mr|no_gr|no_adapt");
    cmd->add_option("--rho", rho_flag, "mask sparsity override");
    cmd->add_option("--budget-ratio", budget_ratio_flag, "edge budget ratio override");
    cmd->add_option("--lambda", lambda_flag, "cls second-term weight override");
  };

  CLI::App* generate = app.add_subcommand("generate", "synthesize a shifted domain pair");
  add_common(generate);

  CLI::App* train = app.add_subcommand("train", "train and write run artifacts");
  add_common(train);

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint.bin path")->required();
  evaluate->add_option("--report", report_path, "write report JSON here");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one axis over seeds");
  add_common(ablate);
  ablate->add_option("--axis", axis, "rho|budget|known_count|variant")->required();

  CLI::App* inspect = app.add_subcommand("inspect", "print checkpoint facts");
  inspect->add_option("--checkpoint", checkpoint_path, "checkpoint.bin path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    osgda::RunSpec spec;
    json config_json;
    if (!config_path.empty()) {
      config_json = osgda::load_json_file(config_path);
      spec = osgda::run_spec_from_json(config_json);
    }
    if (!dataset_src.empty()) spec.dataset_src = dataset_src;
    if (!dataset_tgt.empty()) spec.dataset_tgt = dataset_tgt;
    if (!variant_flag.empty()) spec.train.variant = osgda::variant_from_string(variant_flag);
    if (rho_flag >= 0.0) spec.train.rho = rho_flag;
    if (budget_ratio_flag >= 0.0) {
      spec.train.budget_ratio = budget_ratio_flag;
      spec.train.budget_abs = -1;
    }
    if (lambda_flag >= 0.0) spec.train.lambda = lambda_flag;
    const std::uint64_t base_seed = seed_set ? seed : spec.train.seed;

    if (*generate) {
      if (config_path.empty()) throw CLI::ValidationError("--config", "generator spec required");
      return cmd_generate(config_path, out_dir, base_seed);
    }
    if (*train) return cmd_train(spec, out_dir, base_seed, seed_count, workers);
    if (*evaluate) return cmd_evaluate(checkpoint_path, spec, report_path);
    if (*ablate)
      return cmd_ablate(spec, config_json, axis, out_dir, base_seed, seed_count, workers);
    if (*inspect) return cmd_inspect(checkpoint_path);
    return 1;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
