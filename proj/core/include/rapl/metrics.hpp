#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapl/types.hpp"

namespace rapl {

/// Padding symbol for alignment; never a valid action id.
inline constexpr ActionId kAlignmentPad = -1;

/// 1 - D(demo, agent') / |demo| where agent' is the agent trajectory cut or
/// padded with kAlignmentPad to the demo length and D is Levenshtein.
/// Throws Error(kEmptySequence) for an empty demo.
double alignment_score(std::span<const ActionId> demo, std::span<const ActionId> agent);

/// (rapl - base) / |base| * 100; nullopt when base == 0.
std::optional<double> relative_performance(double score_rapl, double score_base);

struct MeanStderr {
  double mean = 0.0;
  double standard_error = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
  std::size_t n = 0;
};
MeanStderr mean_stderr(std::span<const double> values);
double median(std::vector<double> values);

/// One row per training episode.
struct CurveRow {
  std::size_t episode = 0;
  std::size_t steps = 0;  // cumulative primitive steps at the end of the episode
  double ret = 0.0;
  double alignment = 0.0;

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

/// CSV with header `episode,steps,return,alignment`.
std::string curve_csv(std::span<const CurveRow> rows);
void save_curve_csv(std::span<const CurveRow> rows, const std::string& path);

}  // namespace rapl
