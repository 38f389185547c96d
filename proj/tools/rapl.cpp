#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rapl/experiment.hpp"
#include "rapl/grammar.hpp"

using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "run a single seed instead of the config's list");
  cmd->add_option("--out", c.out, "output path, overrides the config");
}

rapl::ExperimentConfig load(const Common& c) {
  auto config = rapl::load_config(c.config_path);
  if (c.seed) config.seeds = {*c.seed};
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw rapl::Error(rapl::ErrorCode::kIo, "cannot write " + path);
  file << text;
}

std::string read_text(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw rapl::Error(rapl::ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

json summary_json(const rapl::Aggregate& a) {
  return {{"n", a.final_return.n},
          {"failed", a.failed},
          {"final_return_mean", a.final_return.mean},
          {"final_return_se", a.final_return.standard_error},
          {"final_return_median", a.median_final_return},
          {"eval_return_mean", a.eval_return.mean},
          {"success_rate_mean", a.success_rate.mean},
          {"alignment_mean", a.alignment.mean},
          {"alignment_se", a.alignment.standard_error}};
}

void report_records(const rapl::ExperimentConfig& config,
                    const std::vector<rapl::RunRecord>& records) {
  for (const auto& r : records) {
    json line = {{"seed", r.seed},
                 {"ok", r.ok},
                 {"final_return", r.final_return},
                 {"eval_return", r.eval.mean_return},
                 {"success_rate", r.eval.success_rate},
                 {"alignment", r.eval.alignment}};
    if (!r.ok) line["error"] = r.error;
    std::cout << line.dump() << "\n";
  }
  json total = {{"config_hash", rapl::config_hash(config)},
                {"summary", summary_json(rapl::aggregate(records))}};
  std::cout << total.dump() << "\n";
}

int record_demo(const Common& c) {
  const auto config = load(c);
  rapl::validate(config);
  auto env = rapl::make_environment(config.env, config.gamma);
  const auto demo = rapl::make_demo(config, *env, config.seeds.front());
  write_text(c.out, rapl::to_jsonl(demo));
  return 0;
}

int discover(const Common& c, const std::string& demo_path, const std::string& grammar_path) {
  auto config = load(c);
  if (!demo_path.empty()) config.demo_path = demo_path;
  rapl::validate(config);
  auto env = rapl::make_environment(config.env, config.gamma);
  const auto seed = config.seeds.front();
  const auto demo = rapl::make_demo(config, *env, seed);
  if (!grammar_path.empty()) {
    const auto actions = demo.actions();
    write_text(grammar_path, rapl::dump(rapl::induce(actions, demo.n_actions)));
  }
  write_text(c.out, rapl::to_json(rapl::make_library(config, demo, seed)));
  return 0;
}

int train(const Common& c) {
  auto config = load(c);
  if (!c.out.empty()) config.out = c.out;
  const auto records = rapl::run_experiment(config);
  report_records(config, records);
  for (const auto& r : records) {
    if (!r.ok) return 1;
  }
  return 0;
}

int eval(const Common& c, const std::string& policy_path) {
  const auto config = load(c);
  rapl::validate(config);
  auto env = rapl::make_environment(config.env, config.gamma);
  auto [space, greedy] = rapl::greedy_from_policy_json(read_text(policy_path));
  if (space.primitive_count() != env->action_count()) {
    throw rapl::Error(rapl::ErrorCode::kEnvMismatch, "policy and env disagree on |A|");
  }
  const auto seed = config.seeds.front();
  const auto demo = rapl::make_demo(config, *env, seed);
  const auto actions = demo.actions();
  const auto e = rapl::evaluate(*env, space, greedy, actions, demo.seed, config.eval_episodes,
                                config.gamma);
  json doc = {{"episodes", e.episodes},
              {"mean_return", e.mean_return},
              {"success_rate", e.success_rate},
              {"alignment", e.alignment}};
  write_text(c.out, doc.dump(2) + "\n");
  return 0;
}

int ablate(const Common& c, const std::vector<std::string>& kinds) {
  auto config = load(c);
  if (!c.out.empty()) config.out = c.out;
  std::ostringstream csv;
  csv.precision(17);
  csv << "kind,n,failed,final_median,final_mean,final_se,success_mean,alignment_mean\n";
  for (const auto& name : kinds) {
    auto variant = config;
    variant.discovery = rapl::parse_discovery_kind(name);
    const auto records = rapl::run_experiment(variant);
    const auto a = rapl::aggregate(records);
    csv << name << ',' << a.final_return.n << ',' << a.failed << ',' << a.median_final_return
        << ',' << a.final_return.mean << ',' << a.final_return.standard_error << ','
        << a.success_rate.mean << ',' << a.alignment.mean << '\n';
  }
  std::cout << csv.str();
  if (!config.out.empty()) write_text((std::filesystem::path(config.out) / "ablation.csv").string(),
                                      csv.str());
  return 0;
}

std::vector<rapl::SweepAxis> load_grid(const std::string& path) {
  std::vector<rapl::SweepAxis> grid;
  if (path.empty()) return grid;
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw rapl::Error(rapl::ErrorCode::kParse, std::string("grid: ") + e.what());
  }
  if (!doc.is_object()) throw rapl::Error(rapl::ErrorCode::kParse, "grid must be an object");
  for (const auto& [pointer, values] : doc.items()) {
    if (!values.is_array()) {
      throw rapl::Error(rapl::ErrorCode::kParse, "grid values for " + pointer + " not a list");
    }
    rapl::SweepAxis axis{pointer, {}};
    for (const auto& v : values) axis.values.push_back(v.dump());
    grid.push_back(std::move(axis));
  }
  return grid;
}

int sweep(const Common& c, const std::string& grid_path) {
  auto config = load(c);
  if (!c.out.empty()) config.out = c.out;
  const auto points = rapl::sweep(config, load_grid(grid_path));
  const auto csv = rapl::sweep_csv(points);
  std::cout << csv;
  if (!config.out.empty()) write_text((std::filesystem::path(config.out) / "sweep.csv").string(),
                                      csv);
  return 0;
}

void print_error(std::string_view code, std::string_view message) {
  json line = {{"error", code}, {"message", message}};
  std::cerr << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Routine-augmented policy learning"};
  app.require_subcommand(1);

  Common common;
  std::string demo_path, grammar_path, policy_path, grid_path;
  std::vector<std::string> kinds{"full", "RR", "PbE", "RF", "ID", "RP"};

  auto* record_cmd = app.add_subcommand("record-demo", "record a scripted-expert demonstration");
  add_common(record_cmd, common);
  auto* discover_cmd = app.add_subcommand("discover", "build a routine library from a demo");
  add_common(discover_cmd, common);
  discover_cmd->add_option("--demo", demo_path, "demonstration (JSONL)");
  discover_cmd->add_option("--grammar", grammar_path, "also write the induced grammar");
  auto* train_cmd = app.add_subcommand("train", "run demo, discovery, training and evaluation");
  add_common(train_cmd, common);
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved policy greedily");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--policy", policy_path, "policy dump (JSON)")->required();
  auto* ablate_cmd = app.add_subcommand("ablate", "compare discovery variants");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--kinds", kinds, "discovery kinds to run");
  auto* sweep_cmd = app.add_subcommand("sweep", "one-factor-at-a-time parameter sweep");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--grid", grid_path, "grid JSON {\"/json/pointer\": [values]}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*record_cmd) return record_demo(common);
    if (*discover_cmd) return discover(common, demo_path, grammar_path);
    if (*train_cmd) return train(common);
    if (*eval_cmd) return eval(common, policy_path);
    if (*ablate_cmd) return ablate(common, kinds);
    if (*sweep_cmd) return sweep(common, grid_path);
  } catch (const rapl::Error& e) {
    print_error(rapl::to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 1;
}
