#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "osgda/graph_data.hpp"
#include "osgda/rng.hpp"
#include "osgda/trainer.hpp"

namespace osgda {

/// Everything a training run needs: dataset locations, the open-set class
/// selection, and the hyperparameters.
struct RunSpec {
  std::string dataset_src;
  std::string dataset_tgt;
  int known_count = 3;
  std::vector<int> known_classes;  // explicit known set; default = lowest known_count ids
  bool row_normalize = false;
  TrainConfig train;

  std::set<int> known_set() const {
    std::set<int> s(known_classes.begin(), known_classes.end());
    if (s.empty())
      for (int c = 0; c < known_count; ++c) s.insert(c);
    return s;
  }
};

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  return nlohmann::ordered_json{
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"lambda", c.lambda},
      {"rho", c.rho},
      {"budget_ratio", c.budget_ratio},
      {"budget_abs", c.budget_abs},
      {"epochs", c.epochs},
      {"em_iters", c.em_iters},
      {"seed", c.seed},
      {"grl_scale", c.grl_scale},
      {"grl_warmup", c.grl_warmup},
      {"warmup_epochs", c.warmup_epochs},
      {"variant", variant_to_string(c.variant)},
      {"tau", c.tau},
      {"hidden_dims", c.hidden_dims},
      {"disc_hidden", c.disc_hidden},
      {"activation", c.activation == Activation::Relu ? "relu" : "leaky_relu"},
      {"leaky_slope", c.leaky_slope},
      {"candidate_multiplier", c.candidate_multiplier},
      {"flip_cap_divisor", c.flip_cap_divisor},
      {"ent_posterior_mode", c.ent_posterior_mode == EntPosteriorMode::Classifier ? "classifier"
                             : c.ent_posterior_mode == EntPosteriorMode::DiscBinary
                                 ? "disc_binary"
                                 : "disc_three_way"},
      {"adv_enabled", c.adv_enabled},
      {"ent_enabled", c.ent_enabled},
      {"freeze_delta", c.freeze_delta}};
}

inline void train_config_from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("learning_rate", c.learning_rate);
  get("weight_decay", c.weight_decay);
  get("lambda", c.lambda);
  get("rho", c.rho);
  get("budget_ratio", c.budget_ratio);
  get("budget_abs", c.budget_abs);
  get("epochs", c.epochs);
  get("em_iters", c.em_iters);
  get("seed", c.seed);
  get("grl_scale", c.grl_scale);
  get("grl_warmup", c.grl_warmup);
  get("warmup_epochs", c.warmup_epochs);
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  get("tau", c.tau);
  get("hidden_dims", c.hidden_dims);
  get("disc_hidden", c.disc_hidden);
  if (j.contains("activation")) {
    const auto a = j.at("activation").get<std::string>();
    if (a == "relu")
      c.activation = Activation::Relu;
    else if (a == "leaky_relu")
      c.activation = Activation::LeakyRelu;
    else
      throw std::invalid_argument("unknown activation: " + a);
  }
  get("leaky_slope", c.leaky_slope);
  get("candidate_multiplier", c.candidate_multiplier);
  get("flip_cap_divisor", c.flip_cap_divisor);
  if (j.contains("ent_posterior_mode")) {
    const auto m = j.at("ent_posterior_mode").get<std::string>();
    if (m == "classifier")
      c.ent_posterior_mode = EntPosteriorMode::Classifier;
    else if (m == "disc_binary")
      c.ent_posterior_mode = EntPosteriorMode::DiscBinary;
    else if (m == "disc_three_way")
      c.ent_posterior_mode = EntPosteriorMode::DiscThreeWay;
    else
      throw std::invalid_argument("unknown ent_posterior_mode: " + m);
  }
  get("adv_enabled", c.adv_enabled);
  get("ent_enabled", c.ent_enabled);
  get("freeze_delta", c.freeze_delta);
}

inline nlohmann::ordered_json run_spec_to_json(const RunSpec& s) {
  nlohmann::ordered_json j{{"dataset_src", s.dataset_src},
                           {"dataset_tgt", s.dataset_tgt},
                           {"known_count", s.known_count},
                           {"row_normalize", s.row_normalize}};
  if (!s.known_classes.empty()) j["known_classes"] = s.known_classes;
  j["train"] = train_config_to_json(s.train);
  return j;
}

inline RunSpec run_spec_from_json(const nlohmann::json& j) {
  RunSpec s;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("dataset_src", s.dataset_src);
  get("dataset_tgt", s.dataset_tgt);
  get("known_count", s.known_count);
  get("known_classes", s.known_classes);
  get("row_normalize", s.row_normalize);
  if (j.contains("train")) train_config_from_json(j.at("train"), s.train);
  return s;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string s = buf.str();
  return fnv1a64(s.data(), s.size());
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

/// Combined content hash over the dataset files of one domain directory.
inline std::string dataset_hash(const std::string& dir) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char* name : {"edges.txt", "features.txt", "labels.txt"}) {
    const std::string p = dir + "/" + name;
    if (std::filesystem::exists(p)) h ^= hash_file(p) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return hash_hex(h);
}

/// One manifest per run directory; reruns with an identical manifest
/// reproduce identical metric streams.
inline nlohmann::ordered_json make_manifest(const std::string& command, const RunSpec& spec,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::string& out_dir) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = run_spec_to_json(spec);
  j["seeds"] = seeds;
  j["dataset_src"] = spec.dataset_src;
  j["dataset_tgt"] = spec.dataset_tgt;
  j["out_dir"] = out_dir;
  if (!spec.dataset_src.empty()) j["input_hash_src"] = dataset_hash(spec.dataset_src);
  if (!spec.dataset_tgt.empty()) j["input_hash_tgt"] = dataset_hash(spec.dataset_tgt);
  return j;
}

inline void write_json_file(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Dataset directory io
// ---------------------------------------------------------------------------

inline void save_domain_dir(const LabeledGraph& g, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_edge_list(g.adjacency, dir + "/edges.txt");
  save_features(g.features, dir + "/features.txt");
  if (!g.labels.empty()) save_labels(g.labels, dir + "/labels.txt");
}

inline DomainPair load_domain_pair(const RunSpec& spec) {
  const LabeledGraph src = load_domain_dir(spec.dataset_src, spec.row_normalize);
  const LabeledGraph tgt = load_domain_dir(spec.dataset_tgt, spec.row_normalize);
  if (src.labels.empty()) throw std::runtime_error("source dataset has no labels.txt");
  if (tgt.labels.empty())
    throw std::runtime_error("target dataset has no labels.txt (needed for evaluation)");
  return make_domain_pair(src, tgt, spec.known_set());
}

}  // namespace osgda
