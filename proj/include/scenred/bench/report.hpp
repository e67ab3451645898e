#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/bench/evaluate.hpp"

namespace scenred::bench {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string join_indices(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(idx[i]);
  }
  return s;
}

// Artifacts start with one comment line carrying the producing config.
inline void write_config_line(std::ostream& os, const std::string& config_json) {
  if (!config_json.empty()) os << "# config=" << config_json << "\n";
}

inline const char* kReportHeader =
    "instanceId,method,seed,k,errorPct,reducedObjective,fullF,vStar,pivots,nodes,wallSeconds,percentile,indices,"
    "status";

inline void write_report_row(std::ostream& os, const EvalReport& r, std::optional<double> percentile = std::nullopt) {
  os << r.instance_id << ',' << r.method << ',' << r.seed << ',' << r.k << ',' << (r.ok() ? num(r.error_pct) : "")
     << ',' << (r.ok() ? num(r.reduced_objective) : "") << ',' << (r.ok() ? num(r.full_f) : "") << ','
     << num(r.v_star) << ',' << r.work.simplex_pivots << ',' << r.work.bnb_nodes << ',' << num(r.wall_seconds) << ','
     << (percentile ? num(*percentile) : "") << ',' << join_indices(r.indices) << ','
     << (r.ok() ? "ok" : "\"" + r.error + "\"") << "\n";
}

inline void write_report_csv(std::ostream& os, const std::vector<EvalReport>& rows, const std::string& config_json = {}) {
  write_config_line(os, config_json);
  os << kReportHeader << "\n";
  for (const auto& r : rows) write_report_row(os, r);
}

struct MethodSummary {
  std::string method;
  std::size_t count = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean and sample standard deviation of errorPct per method over successful
// rows, in order of first appearance.
inline std::vector<MethodSummary> summarize(const std::vector<EvalReport>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::size_t> pos;
  std::vector<std::vector<double>> vals;
  for (const auto& r : rows) {
    auto [it, fresh] = pos.try_emplace(r.method, out.size());
    if (fresh) {
      out.push_back({r.method});
      vals.emplace_back();
    }
    if (r.ok())
      vals[it->second].push_back(r.error_pct);
    else
      ++out[it->second].failures;
  }
  for (std::size_t m = 0; m < out.size(); ++m) {
    const auto& v = vals[m];
    out[m].count = v.size();
    if (v.empty()) continue;
    double s = 0.0;
    for (double x : v) s += x;
    out[m].mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
      double q = 0.0;
      for (double x : v) q += (x - out[m].mean) * (x - out[m].mean);
      out[m].stddev = std::sqrt(q / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

// Two-column CDF sample file: instanceId, sample index (0 = model order),
// time value.
inline void write_cdf_csv(std::ostream& os, const std::vector<std::size_t>& instance_ids,
                          const std::vector<double>& model_times, const std::vector<std::vector<double>>& samples,
                          const std::string& config_json = {}) {
  write_config_line(os, config_json);
  os << "instanceId,sample,time\n";
  for (std::size_t i = 0; i < instance_ids.size(); ++i) {
    os << instance_ids[i] << ",0," << num(model_times[i]) << "\n";
    for (std::size_t s = 0; s < samples[i].size(); ++s)
      os << instance_ids[i] << ',' << s + 1 << ',' << num(samples[i][s]) << "\n";
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace scenred::bench
