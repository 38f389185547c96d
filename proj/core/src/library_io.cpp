#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rapl/discovery.hpp"

namespace rapl {

using ordered_json = nlohmann::ordered_json;

std::string to_json(const RoutineLibrary& library) {
  ordered_json doc;
  doc["routines"] = ordered_json::array();
  for (const auto& r : library.routines) doc["routines"].push_back(r.actions);
  doc["params"] = {{"k", library.params.k},
                   {"alpha", library.params.alpha},
                   {"lambda_length", library.params.lambda_length}};
  doc["seed"] = library.seed;
  doc["source_demo"] = library.source_demo;
  return doc.dump(2) + "\n";
}

RoutineLibrary library_from_json(std::string_view text) {
  try {
    const auto doc = ordered_json::parse(text);
    RoutineLibrary library;
    for (const auto& r : doc.at("routines")) {
      library.routines.push_back(Routine{r.get<ActionSequence>()});
    }
    const auto& params = doc.at("params");
    library.params.k = params.at("k").get<std::size_t>();
    library.params.alpha = params.at("alpha").get<std::size_t>();
    library.params.lambda_length = params.at("lambda_length").get<double>();
    library.seed = doc.at("seed").get<std::uint64_t>();
    library.source_demo = doc.at("source_demo").get<std::string>();
    return library;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("routine library: ") + e.what());
  }
}

void save_library(const RoutineLibrary& library, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json(library);
}

RoutineLibrary load_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return library_from_json(buffer.str());
}

}  // namespace rapl
