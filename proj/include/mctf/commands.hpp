#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "mctf/consistency.hpp"
#include "mctf/flops.hpp"
#include "mctf/vit.hpp"

namespace mctf {

/// Resolved invocation: model config, weight/input sources, output paths.
/// Loaded from a JSON document with flag overrides applied on top (flags win).
struct RunConfig {
    std::string preset = "deit-s";
    ViTConfig config = deit_small();
    std::string criteria_set = "sis";     // s | si | sis
    std::string weights_path;             // empty -> seeded random
    std::string input_path;               // empty -> seeded random image
    std::uint32_t seed = 0;
    std::optional<std::pair<int, int>> sweep;  // inclusive r range for flops
    int viz_layer = 0;                    // 0 -> all blocks
    std::string out_path;
    std::string layer_csv_path;           // optional per-layer CSV for flops
    bool include_timing = false;
    bool include_overhead = false;
};

/// Parses the config document (any subset of keys may be present).
RunConfig run_config_from_json(const nlohmann::ordered_json& doc);

nlohmann::ordered_json config_echo(const RunConfig& run);

/// Forward pass; writes the JSON report to run.out_path. Returns exit code.
int cmd_forward(const RunConfig& run);

/// MAC sweep over r; writes <out>.json and <out>.csv. MCTF_THREADS caps the
/// number of worker threads.
int cmd_flops(const RunConfig& run);

/// Random matching instances, greedy vs exhaustive oracle. Exit 0 iff all
/// objectives agree.
int cmd_oracle_check(std::uint32_t seed, int instances);

/// Fused-token map of the patch grid as SVG.
int cmd_viz(const RunConfig& run);

/// Full fusion trace (per-block plans) as JSON.
int cmd_trace(const RunConfig& run);

/// Library core of cmd_oracle_check. corrupt_comparator deliberately breaks
/// the greedy objective of one instance so the harness can prove it detects
/// disagreement.
struct OracleCheckResult {
    int total = 0;
    int failures = 0;
    std::string failure_log;
};
OracleCheckResult run_oracle_check(std::uint32_t seed, int instances,
                                   bool corrupt_comparator = false);

nlohmann::ordered_json consistency_result_json(const ConsistencyBatchResult& result);

}  // namespace mctf
