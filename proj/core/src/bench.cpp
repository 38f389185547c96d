#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rapl/discovery.hpp"
#include "rapl/metrics.hpp"

namespace rapl {

double alignment_score(std::span<const ActionId> demo, std::span<const ActionId> agent) {
  if (demo.empty()) throw Error(ErrorCode::kEmptySequence, "alignment needs a non-empty demo");
  ActionSequence fitted(demo.size(), kAlignmentPad);
  std::copy_n(agent.begin(), std::min(agent.size(), demo.size()), fitted.begin());
  const double d = static_cast<double>(levenshtein(demo, fitted));
  return 1.0 - d / static_cast<double>(demo.size());
}

std::optional<double> relative_performance(double score_rapl, double score_base) {
  if (score_base == 0.0) return std::nullopt;
  return (score_rapl - score_base) / std::abs(score_base) * 100.0;
}

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (const double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) return out;
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  out.standard_error = sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyDataset, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string curve_csv(std::span<const CurveRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "episode,steps,return,alignment\n";
  for (const auto& row : rows) {
    out << row.episode << ',' << row.steps << ',' << row.ret << ',' << row.alignment << '\n';
  }
  return out.str();
}

void save_curve_csv(std::span<const CurveRow> rows, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path);
  file << curve_csv(rows);
}

}  // namespace rapl
