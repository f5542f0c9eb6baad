#include "mbrd/io.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "mbrd/errors.hpp"

namespace mbrd::io {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string at_line(const std::string& origin, std::size_t line) {
  return origin + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> parse_string_array(const ordered_json& value,
                                            const std::string& context,
                                            const char* field) {
  if (!value.is_array() || value.empty()) {
    throw DataError(context + "\"" + field + "\" must be a non-empty string array");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const ordered_json& item : value) {
    if (!item.is_string()) {
      throw DataError(context + "\"" + field + "\" must contain strings only");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

}  // namespace

std::vector<CandidateSet> read_candidate_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_candidate_sets(in, path);
}

std::vector<CandidateSet> parse_candidate_sets(std::istream& in,
                                               const std::string& origin) {
  std::vector<CandidateSet> sets;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string context = at_line(origin, line_no);
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
      throw DataError(context + "malformed JSON: " + e.what());
    }
    if (!record.is_object()) throw DataError(context + "expected a JSON object");
    if (!record.contains("id") || !record["id"].is_string()) {
      throw DataError(context + "missing \"id\" string");
    }
    CandidateSet set;
    set.id = record["id"].get<std::string>();
    if (!ids.insert(set.id).second) {
      throw DataError(context + "duplicate segment id \"" + set.id + "\"");
    }
    if (record.contains("source")) {
      if (!record["source"].is_string()) {
        throw DataError(context + "\"source\" must be a string");
      }
      set.source = record["source"].get<std::string>();
    }
    if (!record.contains("hypotheses")) {
      throw DataError(context + "missing \"hypotheses\" array");
    }
    set.hypotheses = parse_string_array(record["hypotheses"], context, "hypotheses");
    if (record.contains("references")) {
      set.references = parse_string_array(record["references"], context, "references");
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void write_selection_reports(std::ostream& out,
                             std::span<const SelectionReport> reports,
                             const WriteOptions& options) {
  for (const SelectionReport& report : reports) {
    ordered_json record;
    record["id"] = report.id;
    record["selected"] = report.selected;
    record["selected_index"] = report.selected_index;
    if (options.utilities) record["utilities"] = report.utilities;
    ordered_json stats;
    stats["metric_calls"] = report.stats.metric_calls;
    stats["aggregation_ops"] = report.stats.aggregation_ops;
    if (options.timing) stats["wall_nanos"] = report.stats.wall_nanos;
    record["stats"] = std::move(stats);
    out << record.dump() << '\n';
  }
}

void write_sweep_reports(std::ostream& out, std::span<const AccuracyReport> reports,
                         bool timing) {
  for (const AccuracyReport& report : reports) {
    for (const SweepPoint& point : report.points) {
      ordered_json record;
      record["method"] = report.method;
      record["metric"] = report.metric;
      record["k"] = report.k;
      record["s"] = point.effective_refs;
      record["accuracy"] = point.accuracy;
      record["mean_metric_calls"] = point.mean_metric_calls;
      record["segments"] = report.segments;
      if (timing) record["mean_wall_nanos"] = point.mean_wall_nanos;
      out << record.dump() << '\n';
    }
  }
}

std::string format_sweep_table(std::span<const AccuracyReport> reports, bool timing) {
  std::string table;
  char header[160];
  std::snprintf(header, sizeof header, "%-14s %-10s %4s %6s %10s %16s", "method",
                "metric", "k", "s", "accuracy", "mean_calls");
  table += header;
  if (timing) table += "    mean_wall_ms";
  table += '\n';
  for (const AccuracyReport& report : reports) {
    for (const SweepPoint& point : report.points) {
      char row[200];
      std::snprintf(row, sizeof row, "%-14s %-10s %4zu %6zu %10s %16s",
                    report.method.c_str(), report.metric.c_str(), report.k,
                    point.effective_refs, fixed(point.accuracy, 3).c_str(),
                    fixed(point.mean_metric_calls, 1).c_str());
      table += row;
      if (timing) {
        table += "    " + fixed(point.mean_wall_nanos / 1e6, 3);
      }
      table += '\n';
    }
  }
  return table;
}

void write_bench_records(std::ostream& out, std::span<const BenchRun> runs) {
  for (const BenchRun& run : runs) {
    ordered_json record;
    record["strategy"] = run.strategy;
    record["metric_calls"] = run.metric_calls;
    record["aggregation_ops"] = run.aggregation_ops;
    record["median_nanos"] = run.median_nanos;
    record["estimation_nanos"] = run.estimation_nanos;
    record["extraction_nanos"] = run.extraction_nanos;
    out << record.dump() << '\n';
  }
}

std::string format_bench_table(std::span<const BenchRun> runs) {
  std::string table;
  char header[160];
  std::snprintf(header, sizeof header, "%-18s %14s %10s %14s %14s", "strategy",
                "metric_calls", "agg_ops", "median_ms", "extract_ms");
  table += header;
  table += '\n';
  for (const BenchRun& run : runs) {
    char row[200];
    std::snprintf(row, sizeof row, "%-18s %14llu %10llu %14s %14s",
                  run.strategy.c_str(),
                  static_cast<unsigned long long>(run.metric_calls),
                  static_cast<unsigned long long>(run.aggregation_ops),
                  fixed(static_cast<double>(run.median_nanos) / 1e6, 3).c_str(),
                  fixed(static_cast<double>(run.extraction_nanos) / 1e6, 3).c_str());
    table += row;
    table += '\n';
  }
  return table;
}

}  // namespace mbrd::io
