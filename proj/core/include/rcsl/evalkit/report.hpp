#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rcsl::evalkit {

// Result of one conditioning sweep: for every requested return, the mean and
// spread actually realized over repeated rollouts, plus the deviation
// summary m. stds are population standard deviations (divide by the count,
// not count - 1), so a single rollout per target is well defined.
struct AlignmentReport {
  std::string env_id;
  std::uint64_t seed = 0;
  int rollouts_per_target = 0;
  std::vector<double> targets;  // strictly increasing, raw return units
  std::vector<double> means;    // realized mean return per target
  std::vector<double> stds;
  double m = 0.0;  // root mean squared deviation of means from targets

  // Shape agreement, target ordering, and that m equals rmse(*this) bit for
  // bit. Build reports through alignment_sweep or set m = rmse(r) by hand.
  void validate() const;
};

// Root of the mean of squared (realized mean - target) deviations.
double rmse(const AlignmentReport& report);

enum class ReportFormat { table, rows };

// rows is the machine format: the fixed header line "target,mean,std,count"
// then one record per target, doubles printed with full round-trip
// precision, byte-stable for equal reports. table is a human summary.
std::string render_report(const AlignmentReport& report, ReportFormat format);
void emit_report(const AlignmentReport& report, const std::string& path, ReportFormat format);

// Inverse of the rows format. env id and seed are not part of the rows and
// stay default; rollouts_per_target comes from the count column (which must
// be the same on every record) and m is recomputed from the parsed columns.
AlignmentReport parse_report_rows(const std::string& text);

}  // namespace rcsl::evalkit
