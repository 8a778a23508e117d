#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fairshare/errors.hpp"
#include "fairshare/pipeline.hpp"

namespace {

using namespace fairshare;

/// CLI-side staging area: every flag is optional so config-file values
/// survive unless explicitly overridden on the command line.
struct CliOptions {
    std::string configFile;
    std::optional<std::string> dataset;
    std::optional<std::string> outDir;
    std::optional<double> testFraction;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> splitSeed;
    std::optional<std::uint64_t> modelSeed;
    std::optional<std::uint64_t> clusterSeed;
    std::optional<std::uint64_t> mcSeed;
    std::optional<int> latentDim;
    std::optional<int> epochs;
    std::optional<double> learningRate;
    std::optional<double> regularization;
    std::optional<double> clickThreshold;
    std::optional<int> k;
    std::optional<double> radius;
    std::optional<double> radiusPercentile;
    std::optional<int> bucketCount;
    std::optional<int> exactCap;
};

void addRunFlags(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("-c,--config", o.configFile, "Run config file (key = value lines)");
    cmd->add_option("-d,--dataset", o.dataset, "Ratings CSV path");
    cmd->add_option("-o,--out", o.outDir, "Output directory");
    cmd->add_option("--test-fraction", o.testFraction, "Per-user test fraction in (0,1)");
    cmd->add_option("--seed", o.seed, "Sets all seeds unless individually overridden");
    cmd->add_option("--split-seed", o.splitSeed, "Train/test split seed");
    cmd->add_option("--model-seed", o.modelSeed, "Recommender seed");
    cmd->add_option("--cluster-seed", o.clusterSeed, "k-means seed");
    cmd->add_option("--mc-seed", o.mcSeed, "Monte Carlo seed");
    cmd->add_option("--latent-dim", o.latentDim, "Matrix factorization rank");
    cmd->add_option("--epochs", o.epochs, "SGD epochs");
    cmd->add_option("--learning-rate", o.learningRate, "SGD learning rate");
    cmd->add_option("--regularization", o.regularization, "L2 regularization");
    cmd->add_option("--click-threshold", o.clickThreshold, "Click iff |error| < threshold");
    cmd->add_option("-k,--clusters", o.k, "Cluster count for ASVE");
    cmd->add_option("--radius", o.radius, "NSVE neighbourhood radius (overrides percentile)");
    cmd->add_option("--radius-percentile", o.radiusPercentile,
                    "Pairwise-distance percentile used when no radius is given");
    cmd->add_option("--buckets", o.bucketCount, "Popularity bucket count");
    cmd->add_option("--exact-cap", o.exactCap, "Max users accepted by value-exact");
}

RunConfig makeConfig(const CliOptions& o) {
    RunConfig cfg = o.configFile.empty() ? RunConfig{} : RunConfig::fromFile(o.configFile);
    if (o.seed) cfg.seeds = {*o.seed, *o.seed, *o.seed, *o.seed};
    if (o.splitSeed) cfg.seeds.split = *o.splitSeed;
    if (o.modelSeed) cfg.seeds.model = *o.modelSeed;
    if (o.clusterSeed) cfg.seeds.cluster = *o.clusterSeed;
    if (o.mcSeed) cfg.seeds.mc = *o.mcSeed;
    if (o.dataset) cfg.datasetPath = *o.dataset;
    if (o.outDir) cfg.outDir = *o.outDir;
    if (o.testFraction) cfg.testFraction = *o.testFraction;
    if (o.latentDim) cfg.recommender.latentDim = *o.latentDim;
    if (o.epochs) cfg.recommender.epochs = *o.epochs;
    if (o.learningRate) cfg.recommender.learningRate = *o.learningRate;
    if (o.regularization) cfg.recommender.regularization = *o.regularization;
    if (o.clickThreshold) cfg.recommender.clickThreshold = *o.clickThreshold;
    if (o.k) cfg.k = *o.k;
    if (o.radius) cfg.radius = *o.radius;
    if (o.radiusPercentile) cfg.radiusPercentile = *o.radiusPercentile;
    if (o.bucketCount) cfg.bucketCount = *o.bucketCount;
    if (o.exactCap) cfg.exactCap = *o.exactCap;
    return cfg;
}

void printArtifacts(const RunResult& result) {
    for (const auto& file : result.artifacts) std::cout << file.string() << '\n';
}

int exitCodeFor(const std::exception& e) {
    if (dynamic_cast<const SizeCapError*>(&e)) return 4;
    if (dynamic_cast<const NegativeClusterError*>(&e)) return 5;
    if (dynamic_cast<const ZeroTotalError*>(&e)) return 6;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const DuplicateError*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairshare: proportional data valuation for recommender clicks"};
    app.require_subcommand(1);

    CliOptions exactOpts;
    CLI::App* exact = app.add_subcommand(
        "value-exact", "Exact per-user Shapley values over coalition clicks (small datasets)");
    addRunFlags(exact, exactOpts);

    CliOptions asveOpts;
    CLI::App* asve = app.add_subcommand(
        "value-asve", "Cluster-level Shapley smeared to users (Approximate Shapley Value Estimation)");
    addRunFlags(asve, asveOpts);

    CliOptions nsveOpts;
    CLI::App* nsve = app.add_subcommand(
        "value-nsve", "Neighbourhood predictive potential scaled to clicks");
    addRunFlags(nsve, nsveOpts);

    std::string payoutValues;
    double payoutBudget = 0.0;
    std::string payoutOut = ".";
    CLI::App* payout = app.add_subcommand("payout", "Distribute a budget proportionally to values");
    payout->add_option("-v,--values", payoutValues, "Values CSV from a value-* run")->required();
    payout->add_option("-b,--budget", payoutBudget, "Budget to distribute (currency units)")
        ->required();
    payout->add_option("-o,--out", payoutOut, "Output directory");

    CliOptions reportOpts;
    std::string reportAsve;
    std::string reportNsve;
    CLI::App* report = app.add_subcommand(
        "report", "Bucket/class/comparison studies over previously computed values");
    addRunFlags(report, reportOpts);
    report->add_option("--asve", reportAsve, "asve_values.csv path")->required();
    report->add_option("--nsve", reportNsve, "nsve_values.csv path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (exact->parsed()) {
            printArtifacts(runValueExact(makeConfig(exactOpts)));
        } else if (asve->parsed()) {
            printArtifacts(runValueAsve(makeConfig(asveOpts)));
        } else if (nsve->parsed()) {
            printArtifacts(runValueNsve(makeConfig(nsveOpts)));
        } else if (payout->parsed()) {
            printArtifacts(runPayout(payoutValues, payoutBudget, payoutOut));
        } else if (report->parsed()) {
            printArtifacts(runReport(makeConfig(reportOpts), reportAsve, reportNsve));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exitCodeFor(e);
    }
    return 0;
}
