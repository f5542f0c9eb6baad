#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mbrd/engine.hpp"
#include "mbrd/eval.hpp"

namespace mbrd::io {

// Reads candidate sets from JSONL. Each line is an object with a unique
// "id" string, a non-empty "hypotheses" string array, and optional "source"
// and "references" fields. Blank lines are skipped; errors name the origin
// and 1-based line.
std::vector<CandidateSet> read_candidate_sets(const std::string& path);
std::vector<CandidateSet> parse_candidate_sets(std::istream& in,
                                               const std::string& origin);

struct WriteOptions {
  bool utilities = false;  // include the per-hypothesis utility array
  bool timing = true;      // include wall_nanos in stats
};

// One JSON object per report:
// {"id", "selected", "selected_index", ["utilities"], "stats"}.
void write_selection_reports(std::ostream& out,
                             std::span<const SelectionReport> reports,
                             const WriteOptions& options = {});

// One JSON object per (method, k, point). Timing fields are off by default
// so seeded runs serialize identically.
void write_sweep_reports(std::ostream& out, std::span<const AccuracyReport> reports,
                         bool timing = false);
std::string format_sweep_table(std::span<const AccuracyReport> reports,
                               bool timing = false);

void write_bench_records(std::ostream& out, std::span<const BenchRun> runs);
std::string format_bench_table(std::span<const BenchRun> runs);

}  // namespace mbrd::io
