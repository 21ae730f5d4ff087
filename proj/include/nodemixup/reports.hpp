#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nodemixup/diagnostics.hpp"
#include "nodemixup/trainer.hpp"

namespace nodemixup {

/// Version tag carried by every JSON report.
inline constexpr const char* kReportSchema = "nodemixup.report.v1";

/// Shortest decimal that round-trips.
std::string format_real(double v);

// Per-epoch training metrics. Deterministic for a fixed config and seed.
std::string epoch_metrics_tsv(const std::vector<EpochMetrics>& epochs);
// Wall clock per epoch (not deterministic).
std::string epoch_timing_tsv(const std::vector<EpochMetrics>& epochs);
std::string run_summary_json(const RunResult& run);

std::string rc_tsv(const RCReport& rc);
std::string rc_summary_json(const RCReport& rc, const std::array<std::vector<NodeId>, 5>& buckets);
std::string cka_tsv(const CKAReport& rep);
std::string cka_summary_json(const CKAReport& rep);
std::string avgsp_tsv(const DegreeSPReport& rep);
std::string avgsp_nodes_tsv(const DegreeSPReport& rep);
std::string avgsp_summary_json(const DegreeSPReport& rep);
std::string pearson_tsv(const PearsonReport& rep);
std::string pearson_summary_json(const PearsonReport& rep);

/// One row per grid point, sorted by mean validation accuracy (descending,
/// ties in enumeration order).
std::string sweep_tsv(const GridSearchResult& res);

void write_file(const std::filesystem::path& file, const std::string& text);

}  // namespace nodemixup
