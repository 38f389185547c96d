#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rapl/world.hpp"

namespace rapl {

using ordered_json = nlohmann::ordered_json;

std::string to_jsonl(const Demonstration& demo) {
  std::string out;
  ordered_json header;
  header["env"] = demo.env_id;
  header["seed"] = demo.seed;
  header["n_actions"] = demo.n_actions;
  out += header.dump() + "\n";
  for (const auto& tr : demo.transitions) {
    ordered_json line;
    line["t"] = tr.t;
    line["s"] = tr.s;
    line["a"] = tr.a;
    line["r"] = tr.r;
    line["sn"] = tr.s_next;
    line["done"] = tr.done;
    out += line.dump() + "\n";
  }
  return out;
}

Demonstration demo_from_jsonl(std::string_view text) {
  Demonstration demo;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  try {
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      const auto doc = ordered_json::parse(line);
      if (number == 1) {
        demo.env_id = doc.at("env").get<std::string>();
        demo.seed = doc.at("seed").get<std::uint64_t>();
        demo.n_actions = doc.at("n_actions").get<std::size_t>();
        continue;
      }
      Transition tr;
      tr.t = doc.at("t").get<std::int64_t>();
      tr.s = doc.at("s").get<StateId>();
      tr.a = doc.at("a").get<ActionId>();
      tr.r = doc.at("r").get<double>();
      tr.s_next = doc.at("sn").get<StateId>();
      tr.done = doc.at("done").get<bool>();
      demo.transitions.push_back(tr);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                "demonstration line " + std::to_string(number) + ": " + e.what());
  }
  if (number == 0) throw Error(ErrorCode::kParse, "demonstration file is empty");
  return demo;
}

void save_demo(const Demonstration& demo, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_jsonl(demo);
}

Demonstration load_demo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return demo_from_jsonl(buffer.str());
}

}  // namespace rapl
