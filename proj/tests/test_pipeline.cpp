#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "fairshare/errors.hpp"
#include "fairshare/pipeline.hpp"
#include "fairshare/synth.hpp"
#include "fixtures.hpp"

using namespace fairshare;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Parses an artifact CSV into header + rows of cells.
std::vector<std::vector<std::string>> readCsv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

fs::path engineeredDatasetFile(const fs::path& dir) {
    const fs::path path = dir / "engineered.csv";
    fixtures::engineeredToyDataset().saveCanonical(path);
    return path;
}

RunConfig engineeredRunConfig(const fs::path& outDir) {
    RunConfig cfg;
    cfg.datasetPath = engineeredDatasetFile(outDir);
    cfg.descriptor.timestampColumn = -1;
    cfg.testFraction = fixtures::engineeredTestFraction();
    cfg.seeds.split = fixtures::engineeredSplitSeed();
    cfg.seeds.model = 0;
    const RecommenderConfig rc = fixtures::engineeredRecommenderConfig();
    cfg.recommender = rc;
    cfg.outDir = outDir;
    return cfg;
}

} // namespace

TEST_CASE("config files parse keys, comments, quotes, and the seed cascade") {
    const auto path = fixtures::writeTempFile("run.conf",
                                              "# full line comment\n"
                                              "dataset = \"/data/r.csv\" # trailing comment\n"
                                              "testFraction = 0.25\n"
                                              "seed = 99\n"
                                              "clusterSeed = 7\n"
                                              "k = 4\n"
                                              "radius = 1.5\n"
                                              "bucketCount = 10\n"
                                              "epochs = 12\n"
                                              "latentDim = 8\n"
                                              "learningRate = 0.02\n"
                                              "clickThreshold = 0.4\n"
                                              "budget = 250.5\n"
                                              "outDir = /tmp/out\n");
    const RunConfig cfg = RunConfig::fromFile(path);
    CHECK(cfg.datasetPath == fs::path("/data/r.csv"));
    CHECK(cfg.testFraction == doctest::Approx(0.25));
    // `seed` seeds every stream; clusterSeed then overrides one of them.
    CHECK(cfg.seeds.split == 99);
    CHECK(cfg.seeds.model == 99);
    CHECK(cfg.seeds.mc == 99);
    CHECK(cfg.seeds.cluster == 7);
    CHECK(cfg.k == 4);
    CHECK(cfg.radius == doctest::Approx(1.5));
    CHECK(cfg.bucketCount == 10);
    CHECK(cfg.recommender.epochs == 12);
    CHECK(cfg.recommender.latentDim == 8);
    CHECK(cfg.recommender.learningRate == doctest::Approx(0.02));
    CHECK(cfg.recommender.clickThreshold == doctest::Approx(0.4));
    CHECK(cfg.budget == doctest::Approx(250.5));
    CHECK(cfg.outDir == fs::path("/tmp/out"));
}

TEST_CASE("specific seeds may precede the blanket seed lexically but still override") {
    const auto path = fixtures::writeTempFile("seeds.conf",
                                              "dataset = d.csv\n"
                                              "splitSeed = 3\n"
                                              "seed = 50\n");
    const RunConfig cfg = RunConfig::fromFile(path);
    // Specific keys always win over the blanket seed, in any order.
    CHECK(cfg.seeds.split == 3);
    CHECK(cfg.seeds.model == 50);
}

TEST_CASE("unknown and duplicate config keys are rejected") {
    const auto unknown = fixtures::writeTempFile("unknown.conf", "dataset = a\nnoSuchKey = 1\n");
    CHECK_THROWS_AS(RunConfig::fromFile(unknown), ParseError);

    const auto dup = fixtures::writeTempFile("dup.conf", "dataset = a\nk = 2\nk = 3\n");
    CHECK_THROWS_AS(RunConfig::fromFile(dup), ParseError);

    CHECK_THROWS_AS(RunConfig::fromFile("/nonexistent/x.conf"), IoError);
}

TEST_CASE("config validation enforces parameter ranges") {
    RunConfig cfg;
    cfg.datasetPath = "d.csv";
    CHECK_NOTHROW(cfg.validate());

    RunConfig bad = cfg;
    bad.datasetPath.clear();
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = cfg;
    bad.testFraction = 0.0;
    CHECK_THROWS_AS(bad.validate(), RangeError);
    bad.testFraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), RangeError);

    bad = cfg;
    bad.k = 0;
    CHECK_THROWS_AS(bad.validate(), RangeError);

    bad = cfg;
    bad.radius = -0.5;
    CHECK_THROWS_AS(bad.validate(), RangeError);

    bad = cfg;
    bad.radiusPercentile = 1.5;
    CHECK_THROWS_AS(bad.validate(), RangeError);

    bad = cfg;
    bad.bucketCount = 0;
    CHECK_THROWS_AS(bad.validate(), RangeError);

    bad = cfg;
    bad.exactCap = 0;
    CHECK_THROWS_AS(bad.validate(), RangeError);
}

TEST_CASE("value-exact recovers the worked game from the engineered dataset") {
    const auto dir = fixtures::freshTempDir("exact");
    const RunConfig cfg = engineeredRunConfig(dir);
    const RunResult result = runValueExact(cfg);

    const auto rows = readCsv(dir / "exact_values.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"userId", "value"});
    CHECK(rows[1][0] == "1");
    CHECK(rows[1][1] == formatReal(12.5));
    CHECK(rows[2][0] == "2");
    CHECK(rows[2][1] == formatReal(15.5));

    CHECK(result.manifest.command == "value-exact");
    CHECK(result.manifest.counts.trainPredictCalls == 3); // 2^2 - 1
    CHECK(result.manifest.counts.permutationTraversals == 2);
    CHECK(result.manifest.artifactChecksums.count("exact_values.csv") == 1);

    // The manifest itself landed on disk next to the values.
    CHECK(fs::exists(dir / "manifest_value_exact.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest_value_exact.json"));
    CHECK(manifest["command"] == "value-exact");
    CHECK(manifest["version"] == "0.1.0");
}

TEST_CASE("value-exact rejects datasets above the exact cap") {
    const auto dir = fixtures::freshTempDir("exactcap");
    SynthConfig synth;
    synth.userCount = 12;
    synth.itemCount = 10;
    synth.seed = 3;
    const RatingsDataset ds = generateSynthetic(synth);
    const fs::path dataPath = dir / "synth.csv";
    ds.saveCanonical(dataPath);

    RunConfig cfg;
    cfg.datasetPath = dataPath;
    cfg.descriptor.timestampColumn = -1;
    cfg.outDir = dir;
    cfg.exactCap = 10;
    try {
        runValueExact(cfg);
        FAIL("expected SizeCapError");
    } catch (const SizeCapError& e) {
        CHECK(std::string(e.what()).find("value-asve") != std::string::npos);
    }
}

TEST_CASE("repeated runs are byte-identical, artifacts and manifest alike") {
    const auto dir = fixtures::freshTempDir("detbase");
    const RunConfig cfg = engineeredRunConfig(dir);

    (void)runValueExact(cfg);
    const std::string firstValues = slurp(dir / "exact_values.csv");
    const std::string firstManifest = slurp(dir / "manifest_value_exact.json");

    (void)runValueExact(cfg);
    CHECK(slurp(dir / "exact_values.csv") == firstValues);
    CHECK(slurp(dir / "manifest_value_exact.json") == firstManifest);
}

TEST_CASE("the NSVE pipeline emits a values file that pays out the full click count") {
    const auto dir = fixtures::freshTempDir("nsve");
    SynthConfig synth;
    synth.userCount = 20;
    synth.itemCount = 15;
    synth.seed = 11;
    generateSynthetic(synth).saveCanonical(dir / "synth.csv");

    RunConfig cfg;
    cfg.datasetPath = dir / "synth.csv";
    cfg.descriptor.timestampColumn = -1;
    cfg.outDir = dir;
    cfg.recommender.epochs = 5;
    cfg.recommender.latentDim = 4;
    const RunResult result = runValueNsve(cfg);

    const auto rows = readCsv(dir / "nsve_values.csv");
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>{"userId", "rec", "phi3"});

    double paid = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) paid += std::stod(rows[r][2]);
    const double clicks = std::stod(result.manifest.notes.at("totalClicks"));
    if (result.manifest.notes.at("starved") == "false") {
        CHECK(paid == doctest::Approx(clicks).epsilon(1e-9));
    }
    CHECK(result.manifest.notes.count("radius") == 1);
    CHECK(fs::exists(dir / "manifest_value_nsve.json"));
}

TEST_CASE("payout splits the budget proportionally to the stored values") {
    const auto dir = fixtures::freshTempDir("payout");
    {
        std::ofstream out(dir / "values.csv");
        out << "userId,value,method\n1,1.000000,exact\n2,1.000000,exact\n3,2.000000,exact\n";
    }
    const RunResult result = runPayout(dir / "values.csv", 100.0, dir);
    const auto rows = readCsv(dir / "payout.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"userId", "payout"});
    CHECK(rows[1][1] == formatReal(25.0));
    CHECK(rows[2][1] == formatReal(25.0));
    CHECK(rows[3][1] == formatReal(50.0));
    CHECK(result.manifest.command == "payout");

    double paid = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) paid += std::stod(rows[r][1]);
    CHECK(paid == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("payout of the worked example mirrors its Shapley split") {
    const auto dir = fixtures::freshTempDir("payout-toy");
    const RunConfig cfg = engineeredRunConfig(dir);
    (void)runValueExact(cfg);
    (void)runPayout(dir / "exact_values.csv", 28.0, dir);
    const auto rows = readCsv(dir / "payout.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][1] == formatReal(12.5));
    CHECK(rows[2][1] == formatReal(15.5));
}

TEST_CASE("payout rejects a non-positive budget and an all-zero values file") {
    const auto dir = fixtures::freshTempDir("payout-bad");
    {
        std::ofstream out(dir / "values.csv");
        out << "userId,value,method\n1,0.000000,exact\n2,0.000000,exact\n";
    }
    CHECK_THROWS_AS(runPayout(dir / "values.csv", 0.0, dir), RangeError);
    CHECK_THROWS_AS(runPayout(dir / "values.csv", -5.0, dir), RangeError);
    CHECK_THROWS_AS(runPayout(dir / "values.csv", 10.0, dir), ZeroTotalError);
    CHECK_THROWS_AS(runPayout(dir / "missing.csv", 10.0, dir), IoError);
}

TEST_CASE("payout prefers the normalizedValue column, then phi3, then value") {
    const auto dir = fixtures::freshTempDir("payout-cols");
    {
        std::ofstream out(dir / "asve.csv");
        out << "userId,raw,normalizedValue,method\n1,9.0,3.000000,asve\n2,1.0,1.000000,asve\n";
    }
    (void)runPayout(dir / "asve.csv", 40.0, dir);
    auto rows = readCsv(dir / "payout.csv");
    CHECK(rows[1][1] == formatReal(30.0)); // 3/(3+1) of 40

    {
        std::ofstream out(dir / "nsve.csv");
        out << "userId,rec,phi3\n1,5,8.000000\n2,1,2.000000\n";
    }
    (void)runPayout(dir / "nsve.csv", 10.0, dir);
    rows = readCsv(dir / "payout.csv");
    CHECK(rows[1][1] == formatReal(8.0));
}

TEST_CASE("the full ASVE -> NSVE -> report chain emits coherent artifacts") {
    const auto dir = fixtures::freshTempDir("report");
    SynthConfig synth;
    synth.userCount = 24;
    synth.itemCount = 18;
    synth.seed = 21;
    generateSynthetic(synth).saveCanonical(dir / "synth.csv");

    RunConfig cfg;
    cfg.datasetPath = dir / "synth.csv";
    cfg.descriptor.timestampColumn = -1;
    cfg.outDir = dir;
    cfg.k = 3;
    cfg.bucketCount = 6;
    cfg.recommender.epochs = 5;
    cfg.recommender.latentDim = 4;

    // ASVE may legitimately refuse on a negative cluster value; this
    // fixture was checked once to pass. NSVE cannot refuse.
    const RunResult asve = runValueAsve(cfg);
    CHECK(fs::exists(dir / "asve_values.csv"));
    CHECK(fs::exists(dir / "cluster_shapley.json"));
    // One training per nonempty cluster coalition; the grand-coalition
    // click count is served from the game cache.
    CHECK(asve.manifest.counts.trainPredictCalls == (1u << 3) - 1);

    const RunResult nsve = runValueNsve(cfg);
    CHECK(fs::exists(dir / "nsve_values.csv"));

    const RunResult report = runReport(cfg, dir / "asve_values.csv", dir / "nsve_values.csv");
    CHECK(fs::exists(dir / "report_buckets.csv"));
    CHECK(fs::exists(dir / "report_classes.csv"));
    CHECK(fs::exists(dir / "report_comparison.json"));
    (void)report;

    // report_buckets.csv: one row per bucket plus header.
    const auto buckets = readCsv(dir / "report_buckets.csv");
    CHECK(buckets.size() == 1 + 6);
    CHECK(buckets[0] == std::vector<std::string>{"bucket", "voteCount", "clickCount"});

    // report_classes.csv: per method x bucket x class rows.
    const auto classes = readCsv(dir / "report_classes.csv");
    CHECK(classes.size() == 1 + 2 * 6 * 3);
    CHECK(classes[0] ==
          std::vector<std::string>{"method", "bucket", "class", "voteCount", "meanRating"});

    const auto comparison = nlohmann::json::parse(slurp(dir / "report_comparison.json"));
    CHECK(comparison.contains("correlationDistance"));
    CHECK(comparison.contains("rankCorrelation"));
    CHECK(comparison.contains("referenceCorrelationDistance"));
    CHECK(comparison["referenceCorrelationDistance"].get<double>() == doctest::Approx(0.29));

    // ASVE values pay out the total click budget.
    const auto asveRows = readCsv(dir / "asve_values.csv");
    double paid = 0.0;
    for (std::size_t r = 1; r < asveRows.size(); ++r) paid += std::stod(asveRows[r][2]);
    const double clicks = std::stod(asve.manifest.notes.at("totalClicks"));
    CHECK(paid == doctest::Approx(clicks).epsilon(1e-6));
}

TEST_CASE("runReport rejects missing value files") {
    const auto dir = fixtures::freshTempDir("report-bad");
    SynthConfig synth;
    synth.userCount = 12;
    synth.itemCount = 10;
    synth.seed = 2;
    generateSynthetic(synth).saveCanonical(dir / "synth.csv");
    RunConfig cfg;
    cfg.datasetPath = dir / "synth.csv";
    cfg.descriptor.timestampColumn = -1;
    cfg.outDir = dir;
    CHECK_THROWS_AS(runReport(cfg, dir / "nope.csv", dir / "also-nope.csv"), IoError);
}

TEST_CASE("timings are recorded outside the checksummed manifest") {
    const auto dir = fixtures::freshTempDir("timings");
    const RunConfig cfg = engineeredRunConfig(dir);
    const RunResult result = runValueExact(cfg);

    CHECK(result.manifest.timingsFile == "timings_value_exact.json");
    CHECK(fs::exists(dir / "timings_value_exact.json"));
    // The timings sidecar is never part of the checksum table.
    CHECK(result.manifest.artifactChecksums.count("timings_value_exact.json") == 0);
    const auto timings = nlohmann::json::parse(slurp(dir / "timings_value_exact.json"));
    CHECK(timings.contains("totalSeconds"));

    // Checksums in the manifest match the bytes on disk.
    for (const auto& [name, digest] : result.manifest.artifactChecksums) {
        CHECK(sha256Hex(dir / name) == digest);
    }
}

TEST_CASE("sha256Hex matches the known digest of 'abc'") {
    const auto path = fixtures::writeTempFile("abc.txt", "abc");
    CHECK(sha256Hex(path) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK_THROWS_AS(sha256Hex("/nonexistent/no.bin"), IoError);
}

TEST_CASE("formatReal pins artifact number formatting") {
    CHECK(formatReal(12.5) == "12.500000");
    CHECK(formatReal(0.0) == "0.000000");
    CHECK(formatReal(-3.25) == "-3.250000");
    CHECK(formatReal(1.0 / 3.0) == "0.333333");
}

TEST_CASE("synthetic generation is deterministic and honours the descriptor") {
    SynthConfig synth;
    synth.userCount = 15;
    synth.itemCount = 12;
    synth.seed = 77;
    const RatingsDataset a = generateSynthetic(synth);
    const RatingsDataset b = generateSynthetic(synth);
    CHECK(a == b);
    CHECK(a.userCount() == 15);
    CHECK(a.itemCount() <= 12);
    for (const auto& r : a.records()) {
        CHECK(r.rating >= 0.5);
        CHECK(r.rating <= 5.0);
        // Ratings sit on the half-point grid.
        CHECK(std::abs(r.rating * 2.0 - std::round(r.rating * 2.0)) <= 1e-12);
    }

    SynthConfig other = synth;
    other.seed = 78;
    CHECK_FALSE(generateSynthetic(other) == a);

    SynthConfig bad = synth;
    bad.mainstreamShare = 0.9;
    bad.averageShare = 0.5; // shares exceed 1
    CHECK_THROWS_AS(generateSynthetic(bad), RangeError);
}

TEST_CASE("each synthetic user meets the minimum vote count") {
    SynthConfig synth;
    synth.userCount = 30;
    synth.itemCount = 25;
    synth.seed = 5;
    synth.minVotesPerUser = 3;
    const RatingsDataset ds = generateSynthetic(synth);
    std::map<UserId, int> votes;
    for (const auto& r : ds.records()) ++votes[r.user];
    REQUIRE(votes.size() == 30);
    for (const auto& [user, count] : votes) CHECK(count >= 3);
}
