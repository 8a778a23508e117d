#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fairshare/dataset.hpp"
#include "fairshare/recommender.hpp"

namespace fairshare {

struct SeedBundle {
    std::uint64_t split = 0;
    std::uint64_t model = 0;
    std::uint64_t cluster = 0;
    std::uint64_t mc = 0;
};

/// Everything a run needs, loadable from a flat key = value config file.
/// The whole struct is serialized into the run manifest, so two runs
/// with equal configs are byte-comparable end to end.
struct RunConfig {
    std::filesystem::path datasetPath;
    DatasetDescriptor descriptor;
    double testFraction = 0.2;
    SeedBundle seeds;
    RecommenderConfig recommender; ///< .seed is overwritten with seeds.model at run time
    int k = 5;
    double radius = 0.0; ///< positive value overrides the percentile rule
    double radiusPercentile = 0.10;
    int bucketCount = 20;
    double budget = 0.0; ///< payout budget; 0 = unset
    int exactCap = 10;   ///< max user count accepted by value-exact
    std::filesystem::path outDir = ".";

    /// Flat TOML-style text: `key = value` lines, `#` comments. `seed`
    /// sets every member of the bundle; splitSeed/modelSeed/clusterSeed/
    /// mcSeed override individually. Throws IoError or ParseError.
    static RunConfig fromFile(const std::filesystem::path& path);

    void validate() const;
    std::string toJson() const;
};

struct OperationCounts {
    std::uint64_t trainPredictCalls = 0;
    std::uint64_t coalitionEvaluations = 0;
    std::uint64_t permutationTraversals = 0;
};

/// Reproducibility record emitted next to every run's artifacts. Fully
/// deterministic for a fixed config; wall-clock timings go to a
/// separate sidecar file (named in `timingsFile`) so that identical
/// runs yield byte-identical manifests.
struct RunManifest {
    std::string command;
    std::string configJson;
    std::map<std::string, std::string> artifactChecksums; ///< file name -> SHA-256 hex
    OperationCounts counts;
    std::map<std::string, std::string> notes; ///< resolved hyperparameters etc.
    std::string timingsFile;

    std::string toJson() const;
};

struct RunResult {
    std::vector<std::filesystem::path> artifacts; ///< data files, then manifest
    RunManifest manifest;
};

/// User-level exact Shapley over coalition clicks. Caps the user count
/// at cfg.exactCap (SizeCapError suggests value-asve beyond it).
/// Emits exact_values.csv.
RunResult runValueExact(const RunConfig& cfg);

/// Algorithm 1 pipeline: project, cluster, cluster-level exact Shapley,
/// smear to users, normalize to total clicks. Emits asve_values.csv and
/// cluster_shapley.json. NegativeClusterError aborts the run.
RunResult runValueAsve(const RunConfig& cfg);

/// Algorithm 2 pipeline: project, radius neighbourhoods, predictive
/// potential, scale to total clicks. Emits nsve_values.csv.
RunResult runValueNsve(const RunConfig& cfg);

/// Proportional payout over a previously emitted values file. Picks the
/// value column by header: normalizedValue, then phi3, then value.
/// Emits payout.csv. Throws ZeroTotalError when the values sum to 0.
RunResult runPayout(const std::filesystem::path& valuesFile, double budget,
                    const std::filesystem::path& outDir);

/// Bucket/class/comparison studies over previously emitted ASVE and
/// NSVE value files. Emits report_buckets.csv, report_classes.csv and
/// report_comparison.json.
RunResult runReport(const RunConfig& cfg, const std::filesystem::path& asveValues,
                    const std::filesystem::path& nsveValues);

/// SHA-256 of a file's bytes, lowercase hex. Throws IoError.
std::string sha256Hex(const std::filesystem::path& path);

/// Fixed artifact formatting: six decimal places, no locale.
std::string formatReal(double value);

} // namespace fairshare
