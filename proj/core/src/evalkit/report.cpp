#include "rcsl/evalkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "rcsl/error.hpp"
#include "rcsl/numkit/wire.hpp"

namespace rcsl::evalkit {

namespace {

constexpr const char* kRowsHeader = "target,mean,std,count";

std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void AlignmentReport::validate() const {
  const std::size_t n = targets.size();
  if (n == 0) throw ValidationError("report: no targets");
  if (means.size() != n || stds.size() != n) {
    throw ValidationError("report: column lengths disagree");
  }
  if (rollouts_per_target < 1) {
    throw ValidationError("report: rollout count must be at least 1");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(targets[j]) || !std::isfinite(means[j]) || !std::isfinite(stds[j])) {
      throw ValidationError("report: non-finite entry at target index " + std::to_string(j));
    }
    if (stds[j] < 0.0) throw ValidationError("report: negative standard deviation");
    if (j > 0 && !(targets[j] > targets[j - 1])) {
      throw ValidationError("report: targets must increase strictly");
    }
  }
  const double recomputed = rmse(*this);
  if (std::memcmp(&recomputed, &m, sizeof(double)) != 0) {
    throw ValidationError("report: stored m does not match its recomputation");
  }
}

double rmse(const AlignmentReport& report) {
  const std::size_t n = report.targets.size();
  if (n == 0) throw ValidationError("rmse: no targets");
  if (report.means.size() != n) throw ValidationError("rmse: column lengths disagree");
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = report.means[j] - report.targets[j];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

std::string render_report(const AlignmentReport& report, ReportFormat format) {
  report.validate();
  std::string out;
  if (format == ReportFormat::rows) {
    out += kRowsHeader;
    out += '\n';
    for (std::size_t j = 0; j < report.targets.size(); ++j) {
      out += fmt_full(report.targets[j]);
      out += ',';
      out += fmt_full(report.means[j]);
      out += ',';
      out += fmt_full(report.stds[j]);
      out += ',';
      out += std::to_string(report.rollouts_per_target);
      out += '\n';
    }
    return out;
  }

  char line[160];
  std::snprintf(line, sizeof line, "conditioning sweep on %s  (seed %llu, %d rollouts per target)\n",
                report.env_id.c_str(), static_cast<unsigned long long>(report.seed),
                report.rollouts_per_target);
  out += line;
  out += "      target          mean           std\n";
  for (std::size_t j = 0; j < report.targets.size(); ++j) {
    std::snprintf(line, sizeof line, "%12.4f  %12.4f  %12.4f\n", report.targets[j],
                  report.means[j], report.stds[j]);
    out += line;
  }
  std::snprintf(line, sizeof line, "rmse of realized means against targets: %.6g\n", report.m);
  out += line;
  return out;
}

void emit_report(const AlignmentReport& report, const std::string& path, ReportFormat format) {
  numkit::wire::spit(path, render_report(report, format), "alignment report");
}

namespace {

// One CSV field ending at `stop`; advances pos past the delimiter.
std::string take_field(const std::string& line, std::size_t& pos, char stop) {
  const std::size_t end = stop == '\0' ? line.size() : line.find(stop, pos);
  if (stop != '\0' && end == std::string::npos) {
    throw ValidationError("report rows: record with too few fields: " + line);
  }
  std::string f = line.substr(pos, end - pos);
  pos = stop == '\0' ? line.size() : end + 1;
  return f;
}

double parse_double(const std::string& f) {
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (f.empty() || end != f.c_str() + f.size()) {
    throw ValidationError("report rows: not a number: '" + f + "'");
  }
  return v;
}

}  // namespace

AlignmentReport parse_report_rows(const std::string& text) {
  AlignmentReport r;
  std::size_t pos = 0;
  bool saw_header = false;
  long count = -1;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line =
        nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kRowsHeader) {
        throw ValidationError(std::string("report rows: expected header '") + kRowsHeader +
                              "', got '" + line + "'");
      }
      saw_header = true;
      continue;
    }
    std::size_t p = 0;
    const double target = parse_double(take_field(line, p, ','));
    const double mean = parse_double(take_field(line, p, ','));
    const double sd = parse_double(take_field(line, p, ','));
    const std::string count_field = take_field(line, p, '\0');
    char* end = nullptr;
    const long c = std::strtol(count_field.c_str(), &end, 10);
    if (count_field.empty() || end != count_field.c_str() + count_field.size() || c < 1) {
      throw ValidationError("report rows: bad count: '" + count_field + "'");
    }
    if (count != -1 && c != count) {
      throw ValidationError("report rows: records disagree on the rollout count");
    }
    count = c;
    r.targets.push_back(target);
    r.means.push_back(mean);
    r.stds.push_back(sd);
  }
  if (!saw_header) throw ValidationError("report rows: no header line");
  if (r.targets.empty()) throw ValidationError("report rows: no records");
  r.rollouts_per_target = static_cast<int>(count);
  r.m = rmse(r);
  r.validate();
  return r;
}

}  // namespace rcsl::evalkit
