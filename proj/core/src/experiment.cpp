#include "rapl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rapl/numeric.hpp"

namespace rapl {

using json = nlohmann::ordered_json;

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::pair<std::string_view, Enum> (&table)[N],
                std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown " + std::string(what) + ": " + std::string(text));
}

constexpr std::pair<std::string_view, DiscoveryKind> kDiscoveryNames[] = {
    {"full", DiscoveryKind::kFull}, {"none", DiscoveryKind::kNone},
    {"RR", DiscoveryKind::kRR},     {"PbE", DiscoveryKind::kPbE},
    {"RF", DiscoveryKind::kRF},     {"RP", DiscoveryKind::kRP},
    {"ID", DiscoveryKind::kID},
};

constexpr std::pair<std::string_view, LearnerKind> kLearnerNames[] = {
    {"sqil", LearnerKind::kSqil},
    {"a2c", LearnerKind::kA2c},
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file << text;
}

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

void reject_unknown(const json& object, std::initializer_list<std::string_view> keys,
                    std::string_view where) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorCode::kParse,
                  "unknown key '" + key + "' in " + std::string(where) + " config");
    }
  }
}

json config_json(const ExperimentConfig& c, bool with_runtime) {
  json doc;
  doc["name"] = c.name;
  doc["env"] = c.env;
  doc["gamma"] = c.gamma;
  doc["seeds"] = c.seeds;
  doc["demo"] = {{"path", c.demo_path}, {"epsilon", c.demo_epsilon}};
  doc["discovery"] = {{"kind", std::string(to_string(c.discovery))},
                      {"k", c.params.k},
                      {"alpha", c.params.alpha},
                      {"lambda_length", c.params.lambda_length},
                      {"id_epsilon", c.id_epsilon},
                      {"enumeration_cap", c.enumeration_cap}};
  doc["learner"] = std::string(to_string(c.learner));
  doc["sqil"] = {{"lambda_sample", c.sqil.lambda_sample},
                 {"learning_rate", c.sqil.learning_rate},
                 {"temperature", c.sqil.temperature},
                 {"episodes", c.sqil.episodes},
                 {"batch_size", c.sqil.batch_size},
                 {"updates_per_step", c.sqil.updates_per_step}};
  doc["a2c"] = {{"mode", std::string(to_string(c.a2c.mode))},
                {"representation", std::string(to_string(c.a2c.representation))},
                {"horizon", c.a2c.horizon},
                {"lambda_value", c.a2c.lambda_value},
                {"lambda_prim", c.a2c.lambda_prim},
                {"lambda_entropy", c.a2c.lambda_entropy},
                {"learning_rate", c.a2c.learning_rate},
                {"step_budget", c.a2c.step_budget}};
  doc["eval"] = {{"episodes", c.eval_episodes}, {"final_window", c.final_window}};
  if (with_runtime) {
    doc["out"] = c.out;
    doc["threads"] = c.threads;
  }
  return doc;
}

ExperimentConfig config_from(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");
  reject_unknown(doc,
                 {"name", "env", "gamma", "seeds", "demo", "discovery", "learner", "sqil", "a2c",
                  "eval", "out", "threads"},
                 "top-level");
  ExperimentConfig c;
  c.name = doc.value("name", c.name);
  c.env = doc.value("env", c.env);
  c.gamma = doc.value("gamma", c.gamma);
  if (doc.contains("seeds")) c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  if (doc.contains("demo")) {
    const auto& d = doc.at("demo");
    reject_unknown(d, {"path", "epsilon"}, "demo");
    c.demo_path = d.value("path", c.demo_path);
    c.demo_epsilon = d.value("epsilon", c.demo_epsilon);
  }
  if (doc.contains("discovery")) {
    const auto& d = doc.at("discovery");
    reject_unknown(d, {"kind", "k", "alpha", "lambda_length", "id_epsilon", "enumeration_cap"},
                   "discovery");
    c.discovery = parse_discovery_kind(d.value("kind", std::string(to_string(c.discovery))));
    c.params.k = d.value("k", c.params.k);
    c.params.alpha = d.value("alpha", c.params.alpha);
    c.params.lambda_length = d.value("lambda_length", c.params.lambda_length);
    c.id_epsilon = d.value("id_epsilon", c.id_epsilon);
    c.enumeration_cap = d.value("enumeration_cap", c.enumeration_cap);
  }
  if (doc.contains("learner")) c.learner = parse_learner_kind(doc.at("learner").get<std::string>());
  if (doc.contains("sqil")) {
    const auto& s = doc.at("sqil");
    reject_unknown(s,
                   {"lambda_sample", "learning_rate", "temperature", "episodes", "batch_size",
                    "updates_per_step"},
                   "sqil");
    c.sqil.lambda_sample = s.value("lambda_sample", c.sqil.lambda_sample);
    c.sqil.learning_rate = s.value("learning_rate", c.sqil.learning_rate);
    c.sqil.temperature = s.value("temperature", c.sqil.temperature);
    c.sqil.episodes = s.value("episodes", c.sqil.episodes);
    c.sqil.batch_size = s.value("batch_size", c.sqil.batch_size);
    c.sqil.updates_per_step = s.value("updates_per_step", c.sqil.updates_per_step);
  }
  if (doc.contains("a2c")) {
    const auto& a = doc.at("a2c");
    reject_unknown(a,
                   {"mode", "representation", "horizon", "lambda_value", "lambda_prim",
                    "lambda_entropy", "learning_rate", "step_budget"},
                   "a2c");
    c.a2c.mode = parse_a2c_mode(a.value("mode", std::string(to_string(c.a2c.mode))));
    c.a2c.representation = parse_representation(
        a.value("representation", std::string(to_string(c.a2c.representation))));
    c.a2c.horizon = a.value("horizon", c.a2c.horizon);
    c.a2c.lambda_value = a.value("lambda_value", c.a2c.lambda_value);
    c.a2c.lambda_prim = a.value("lambda_prim", c.a2c.lambda_prim);
    c.a2c.lambda_entropy = a.value("lambda_entropy", c.a2c.lambda_entropy);
    c.a2c.learning_rate = a.value("learning_rate", c.a2c.learning_rate);
    c.a2c.step_budget = a.value("step_budget", c.a2c.step_budget);
  }
  if (doc.contains("eval")) {
    const auto& e = doc.at("eval");
    reject_unknown(e, {"episodes", "final_window"}, "eval");
    c.eval_episodes = e.value("episodes", c.eval_episodes);
    c.final_window = e.value("final_window", c.final_window);
  }
  c.out = doc.value("out", c.out);
  c.threads = doc.value("threads", c.threads);
  c.sqil.gamma = c.gamma;
  c.a2c.gamma = c.gamma;
  return c;
}

json evaluation_json(const Evaluation& e) {
  return {{"episodes", e.episodes},
          {"mean_return", e.mean_return},
          {"success_rate", e.success_rate},
          {"alignment", e.alignment}};
}

}  // namespace

std::string_view to_string(DiscoveryKind kind) {
  for (const auto& [name, value] : kDiscoveryNames) {
    if (value == kind) return name;
  }
  return "full";
}

DiscoveryKind parse_discovery_kind(std::string_view text) {
  return parse_enum(text, kDiscoveryNames, "discovery kind");
}

std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::kSqil ? "sqil" : "a2c";
}

LearnerKind parse_learner_kind(std::string_view text) {
  return parse_enum(text, kLearnerNames, "learner");
}

// Config ----------------------------------------------------------------------------

ExperimentConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  try {
    return config_from(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_file(path));
}

std::string to_json(const ExperimentConfig& config) {
  return config_json(config, true).dump(2) + "\n";
}

std::string canonical_json(const ExperimentConfig& config) {
  return config_json(config, false).dump();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical_json(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

void validate(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "seed list is empty");
  make_environment(config.env, config.gamma);
  if (!config.demo_path.empty() && !std::filesystem::exists(config.demo_path)) {
    throw Error(ErrorCode::kIo, "demo file not found: " + config.demo_path);
  }
  if (config.demo_epsilon < 0.0 || config.demo_epsilon > 1.0 || config.id_epsilon < 0.0 ||
      config.id_epsilon > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in [0, 1]");
  }
}

// Evaluation ------------------------------------------------------------------------

Evaluation evaluate(Environment& env, const ExtendedActionSpace& space, const GreedyFn& greedy,
                    std::span<const ActionId> demo_actions, std::uint64_t demo_seed,
                    std::size_t episodes, double gamma) {
  Evaluation out;
  out.episodes = episodes;
  double total = 0.0;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    StateId s = env.reset(demo_seed);
    double ret = 0.0;
    while (!env.finished()) {
      const auto outcome = step_extended(env, space.at(greedy(s)), space, gamma);
      for (const auto& tr : outcome.inner) {
        ret += tr.r;
        if (e == 0) out.first_episode.push_back(tr.a);
      }
      s = outcome.s_end;
    }
    total += ret;
    if (env.reached_terminal()) ++successes;
  }
  if (episodes > 0) {
    out.mean_return = total / static_cast<double>(episodes);
    out.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  }
  if (!demo_actions.empty()) out.alignment = alignment_score(demo_actions, out.first_episode);
  return out;
}

std::pair<ExtendedActionSpace, GreedyFn> greedy_from_policy_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    std::vector<Routine> routines;
    for (const auto& r : doc.at("routines")) routines.push_back({r.get<ActionSequence>()});
    ExtendedActionSpace space(doc.at("n_actions").get<std::size_t>(), std::move(routines));
    std::map<StateId, std::size_t> table;
    if (doc.contains("greedy")) {
      for (const auto& [key, value] : doc.at("greedy").items()) {
        table[std::stoull(key)] = value.get<std::size_t>();
      }
    } else if (doc.contains("logits")) {
      for (const auto& [key, value] : doc.at("logits").items()) {
        const auto z = value.get<std::vector<double>>();
        table[std::stoull(key)] = argmax(z);
      }
    } else {
      throw Error(ErrorCode::kParse, "policy has neither greedy nor logits tables");
    }
    for (const auto& [s, a] : table) {
      if (a >= space.size()) throw Error(ErrorCode::kParse, "policy action outside the space");
    }
    GreedyFn greedy = [table = std::move(table)](StateId s) {
      const auto it = table.find(s);
      return it == table.end() ? std::size_t{0} : it->second;
    };
    return {std::move(space), std::move(greedy)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("policy: ") + e.what());
  }
}

// Records ---------------------------------------------------------------------------

std::string to_json(const RunRecord& record) {
  json doc;
  doc["config_hash"] = record.config_hash;
  doc["seed"] = record.seed;
  doc["ok"] = record.ok;
  if (!record.ok) doc["error"] = record.error;
  doc["routines"] = json::array();
  for (const auto& r : record.routines) doc["routines"].push_back(r.actions);
  doc["final_return"] = record.final_return;
  doc["eval"] = evaluation_json(record.eval);
  auto& curve = doc["curve"] = json::array();
  for (const auto& row : record.curve) {
    curve.push_back(json::array({row.episode, row.steps, row.ret, row.alignment}));
  }
  return doc.dump(2) + "\n";
}

// Pipeline --------------------------------------------------------------------------

Demonstration make_demo(const ExperimentConfig& config, Environment& env, std::uint64_t seed) {
  if (!config.demo_path.empty()) {
    auto demo = load_demo(config.demo_path);
    if (demo.env_id != env.spec().env_id) {
      throw Error(ErrorCode::kEnvMismatch,
                  "demo recorded on " + demo.env_id + ", config uses " + env.spec().env_id);
    }
    return demo;
  }
  const double epsilon =
      config.discovery == DiscoveryKind::kID ? config.id_epsilon : config.demo_epsilon;
  Policy policy = scripted_expert(env);
  if (epsilon > 0.0) policy = epsilon_degraded(policy, epsilon, env.action_count(), seed);
  return record_demo(env, policy, seed);
}

RoutineLibrary make_library(const ExperimentConfig& config, const Demonstration& demo,
                            std::uint64_t seed) {
  const auto actions = demo.actions();
  const std::string source = config.demo_path.empty() ? "demo.jsonl" : config.demo_path;
  if (config.discovery == DiscoveryKind::kNone) {
    RoutineLibrary empty;
    empty.params = config.params;
    empty.seed = seed;
    empty.source_demo = source;
    return empty;
  }
  RoutineLibrary full = discover(actions, config.params);
  full.seed = seed;
  full.source_demo = source;
  if (config.discovery == DiscoveryKind::kFull || config.discovery == DiscoveryKind::kID) {
    return full;
  }
  AblationRequest request;
  request.kind = config.discovery == DiscoveryKind::kRR    ? AblationKind::kRandomRoutines
                 : config.discovery == DiscoveryKind::kPbE ? AblationKind::kProposalByEnumeration
                 : config.discovery == DiscoveryKind::kRF  ? AblationKind::kRandomFetch
                                                           : AblationKind::kRepeat;
  request.shape = shape_of(full);
  request.alphabet_size = demo.n_actions;
  request.params = config.params;
  request.enumeration_cap = config.enumeration_cap;
  std::mt19937_64 rng(seed);
  RoutineLibrary ablated = ablation_generate(request, actions, rng);
  ablated.seed = seed;
  ablated.source_demo = source;
  return ablated;
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  SeedRun run;
  run.record.config_hash = config_hash(config);
  run.record.seed = seed;
  try {
    auto env = make_environment(config.env, config.gamma);
    run.demo = make_demo(config, *env, seed);
    run.library = make_library(config, run.demo, seed);
    run.record.routines = run.library.routines;
    const auto demo_actions = run.demo.actions();

    GreedyFn greedy;
    std::unique_ptr<ExtendedActionSpace> space;
    if (config.learner == LearnerKind::kSqil) {
      auto sqil = config.sqil;
      sqil.seed = seed;
      auto result = train_sqil(*env, run.demo, run.library, sqil);
      run.record.curve = std::move(result.curve);
      run.policy_json = greedy_policy_json(result.q, result.space);
      space = std::make_unique<ExtendedActionSpace>(result.space);
      greedy = [q = std::move(result.q)](StateId s) { return q.greedy(s); };
    } else {
      auto a2c = config.a2c;
      a2c.seed = seed;
      auto result = train_a2c(*env, run.library, a2c, demo_actions);
      run.record.curve = std::move(result.curve);
      run.policy_json = policy_json(result.model, result.space);
      space = std::make_unique<ExtendedActionSpace>(result.space);
      greedy = [model = std::move(result.model)](StateId s) {
        const auto z = model.logits(s);
        return argmax(z);
      };
    }

    const auto& curve = run.record.curve;
    const std::size_t window = std::min(config.final_window, curve.size());
    if (window > 0) {
      double sum = 0.0;
      for (std::size_t i = curve.size() - window; i < curve.size(); ++i) sum += curve[i].ret;
      run.record.final_return = sum / static_cast<double>(window);
    }
    run.record.eval = evaluate(*env, *space, greedy, demo_actions, run.demo.seed,
                               config.eval_episodes, config.gamma);
  } catch (const std::exception& e) {
    run.record.ok = false;
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
      run.record.error = std::string(to_string(err->code())) + ": " + e.what();
    } else {
      run.record.error = e.what();
    }
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  validate(config);
  const std::size_t n = config.seeds.size();
  std::size_t workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, n);

  std::vector<SeedRun> runs(n);
  for (std::size_t first = 0; first < n; first += workers) {
    std::vector<std::future<SeedRun>> batch;
    for (std::size_t i = first; i < std::min(n, first + workers); ++i) {
      batch.push_back(std::async(std::launch::async, run_seed, std::cref(config), config.seeds[i]));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) runs[first + i] = batch[i].get();
  }

  std::vector<RunRecord> records;
  records.reserve(n);
  for (auto& run : runs) records.push_back(run.record);

  if (!config.out.empty()) {
    namespace fs = std::filesystem;
    const fs::path root = fs::path(config.out) / config_hash(config);
    fs::create_directories(root);
    write_file(root / "manifest.json", to_json(config));
    for (const auto& run : runs) {
      const fs::path dir = root / ("seed_" + std::to_string(run.record.seed));
      fs::create_directories(dir);
      write_file(dir / "record.json", to_json(run.record));
      json timing = {{"wall_seconds", run.wall_seconds}};
      write_file(dir / "timing.json", timing.dump(2) + "\n");
      if (!run.record.ok) continue;
      save_demo(run.demo, (dir / "demo.jsonl").string());
      save_library(run.library, (dir / "library.json").string());
      save_curve_csv(run.record.curve, (dir / "curve.csv").string());
      write_file(dir / "policy.json", run.policy_json);
    }
  }
  return records;
}

Aggregate aggregate(std::span<const RunRecord> records) {
  Aggregate out;
  std::vector<double> final_return, eval_return, success, alignment;
  for (const auto& r : records) {
    if (!r.ok) {
      ++out.failed;
      continue;
    }
    final_return.push_back(r.final_return);
    eval_return.push_back(r.eval.mean_return);
    success.push_back(r.eval.success_rate);
    alignment.push_back(r.eval.alignment);
  }
  out.final_return = mean_stderr(final_return);
  out.eval_return = mean_stderr(eval_return);
  out.success_rate = mean_stderr(success);
  out.alignment = mean_stderr(alignment);
  if (!final_return.empty()) out.median_final_return = median(final_return);
  return out;
}

// Sweeps ----------------------------------------------------------------------------

ExperimentConfig with_override(const ExperimentConfig& base, const std::string& pointer,
                               const std::string& value) {
  auto doc = config_json(base, true);
  try {
    const json::json_pointer ptr(pointer);
    if (!doc.contains(ptr)) {
      throw Error(ErrorCode::kInvalidArgument, "sweep parameter not in config: " + pointer);
    }
    doc[ptr] = json::parse(value);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "sweep override " + pointer + ": " + e.what());
  }
  try {
    return config_from(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "sweep override " + pointer + ": " + e.what());
  }
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& grid) {
  std::vector<SweepPoint> points;
  if (grid.empty()) {
    SweepPoint p{"", "", base, run_experiment(base), {}};
    p.summary = aggregate(p.records);
    points.push_back(std::move(p));
    return points;
  }
  for (const auto& axis : grid) {
    for (const auto& value : axis.values) {
      with_override(base, axis.pointer, value);  // validate every point before running any
    }
  }
  for (const auto& axis : grid) {
    for (const auto& value : axis.values) {
      SweepPoint p;
      p.pointer = axis.pointer;
      p.value = value;
      p.config = with_override(base, axis.pointer, value);
      p.records = run_experiment(p.config);
      p.summary = aggregate(p.records);
      points.push_back(std::move(p));
    }
  }
  return points;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (const char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::ostringstream out;
  out.precision(17);
  out << "parameter,value,n,failed,final_mean,final_se,eval_mean,eval_se,success_mean,"
         "alignment_mean,alignment_se\n";
  for (const auto& p : points) {
    const auto& s = p.summary;
    out << (p.pointer.empty() ? "base" : p.pointer) << ',' << csv_field(p.value) << ','
        << s.final_return.n << ',' << s.failed << ',' << s.final_return.mean << ','
        << s.final_return.standard_error << ',' << s.eval_return.mean << ','
        << s.eval_return.standard_error << ',' << s.success_rate.mean << ','
        << s.alignment.mean << ',' << s.alignment.standard_error << '\n';
  }
  return out.str();
}

}  // namespace rapl
