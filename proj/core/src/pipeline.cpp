#include "fairshare/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <utility>

#include <openssl/evp.h>

#include "json.hpp"

#include "fairshare/analysis.hpp"
#include "fairshare/asve.hpp"
#include "fairshare/errors.hpp"
#include "fairshare/game.hpp"
#include "fairshare/nsve.hpp"

namespace fairshare {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kToolVersion = "0.1.0";

std::string preciseReal(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string trimCopy(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void writeText(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

/// Stage timings collected during a run; serialized into the sidecar
/// file, never into the manifest.
class StageTimes {
public:
    void add(const std::string& name, Clock::time_point begin, Clock::time_point end) {
        stages_.emplace_back(name, std::chrono::duration<double>(end - begin).count());
    }

    std::string toJson(const std::string& command) const {
        json j;
        j["command"] = command;
        double total = 0.0;
        json stages = json::object();
        for (const auto& [name, seconds] : stages_) {
            stages[name] = seconds;
            total += seconds;
        }
        j["stagesSeconds"] = stages;
        j["totalSeconds"] = total;
        return j.dump(2) + "\n";
    }

private:
    std::vector<std::pair<std::string, double>> stages_;
};

/// Computes checksums, writes the manifest and (last) the timing
/// sidecar. The sidecar is excluded from the checksum table on purpose:
/// wall clocks differ between identical runs, manifests must not.
RunResult finishRun(const std::filesystem::path& outDir, const std::string& command,
                    std::string configJson, std::map<std::string, std::string> notes,
                    OperationCounts counts, std::vector<std::filesystem::path> dataFiles,
                    const StageTimes& times) {
    std::string suffix = command;
    std::replace(suffix.begin(), suffix.end(), '-', '_');

    RunResult result;
    result.manifest.command = command;
    result.manifest.configJson = std::move(configJson);
    result.manifest.notes = std::move(notes);
    result.manifest.counts = counts;
    result.manifest.timingsFile = "timings_" + suffix + ".json";
    for (const auto& file : dataFiles) {
        result.manifest.artifactChecksums[file.filename().string()] = sha256Hex(file);
    }

    const auto manifestPath = outDir / ("manifest_" + suffix + ".json");
    writeText(manifestPath, result.manifest.toJson());
    writeText(outDir / result.manifest.timingsFile, times.toJson(command));

    result.artifacts = std::move(dataFiles);
    result.artifacts.push_back(manifestPath);
    return result;
}

// --- config file parsing ---------------------------------------------

std::uint64_t parseU64Value(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected unsigned integer, got '" + value + "'");
    }
}

long long parseIntValue(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long parsed = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parseRealValue(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected real number, got '" + value + "'");
    }
}

// --- small CSV reader for value files ---------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

CsvTable readCsvFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = splitCsvLine(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != table.header.size()) {
                throw ParseError(path.string() + ": row with " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw ParseError(path.string() + ": empty file");
    return table;
}

UserId parseUserId(const std::filesystem::path& path, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long parsed = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad user id '" + value + "'");
    }
}

double parseReal(const std::filesystem::path& path, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad numeric field '" + value + "'");
    }
}

/// Reads a {userId, values...} table and returns rows sorted by user id.
template <typename Row>
std::vector<Row> sortedByUser(std::vector<Row> rows) {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.first < b.first; });
    return rows;
}

UserValueVector readAsveValues(const std::filesystem::path& path) {
    const CsvTable table = readCsvFile(path);
    const int userCol = table.column("userId");
    const int rawCol = table.column("rawValue");
    const int normCol = table.column("normalizedValue");
    if (userCol < 0 || normCol < 0) {
        throw ParseError(path.string() + ": expected columns userId and normalizedValue");
    }
    using Row = std::pair<UserId, std::pair<double, double>>;
    std::vector<Row> rows;
    for (const auto& fields : table.rows) {
        const UserId u = parseUserId(path, fields[static_cast<std::size_t>(userCol)]);
        const double norm = parseReal(path, fields[static_cast<std::size_t>(normCol)]);
        const double raw =
            rawCol >= 0 ? parseReal(path, fields[static_cast<std::size_t>(rawCol)]) : norm;
        rows.push_back({u, {raw, norm}});
    }
    UserValueVector values;
    for (const auto& [u, pair] : sortedByUser(std::move(rows))) {
        values.users.push_back(u);
        values.raw.push_back(pair.first);
        values.normalized.push_back(pair.second);
    }
    return values;
}

PredictivePotential readNsveValues(const std::filesystem::path& path) {
    const CsvTable table = readCsvFile(path);
    const int userCol = table.column("userId");
    const int recCol = table.column("rec");
    const int phiCol = table.column("phi3");
    if (userCol < 0 || recCol < 0 || phiCol < 0) {
        throw ParseError(path.string() + ": expected columns userId, rec and phi3");
    }
    using Row = std::pair<UserId, std::pair<long long, double>>;
    std::vector<Row> rows;
    for (const auto& fields : table.rows) {
        const UserId u = parseUserId(path, fields[static_cast<std::size_t>(userCol)]);
        const double rec = parseReal(path, fields[static_cast<std::size_t>(recCol)]);
        const double phi = parseReal(path, fields[static_cast<std::size_t>(phiCol)]);
        rows.push_back({u, {static_cast<long long>(std::llround(rec)), phi}});
    }
    PredictivePotential pp;
    for (const auto& [u, pair] : sortedByUser(std::move(rows))) {
        pp.users.push_back(u);
        pp.rec.push_back(pair.first);
        pp.phi3.push_back(pair.second);
    }
    return pp;
}

RatingsDataset loadAndSplit(const RunConfig& cfg) {
    if (cfg.datasetPath.empty()) throw ParseError("no dataset path configured");
    const RatingsDataset ds = loadRatings(cfg.datasetPath, cfg.descriptor);
    return splitTrainTest(ds, cfg.testFraction, cfg.seeds.split);
}

ClickReport fullDatasetClicks(const RatingsDataset& split, const RecommenderConfig& rc) {
    const auto train = split.trainRecords();
    const auto test = split.testRecords();
    return trainPredict(train, test, rc);
}

void checkEfficiency(double total, double grand, double relTolerance, const char* what) {
    const double scale = std::max(1.0, std::abs(grand));
    if (std::abs(total - grand) > relTolerance * scale) {
        throw Error(std::string(what) + ": efficiency violated, sum " + preciseReal(total) +
                    " vs total " + preciseReal(grand));
    }
}

} // namespace

std::string formatReal(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string sha256Hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for checksum: " + path.string());

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 init failed");
    }
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(got)) != 1) {
            throw Error("SHA-256 update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw Error("SHA-256 final failed");

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

void RunConfig::validate() const {
    if (datasetPath.empty()) throw Error("dataset path must be set");
    if (!(testFraction > 0.0) || !(testFraction < 1.0)) {
        throw RangeError("testFraction must lie in (0, 1)");
    }
    if (k < 1 || k > 10) throw RangeError("k must lie in [1, 10]");
    if (exactCap < 1 || exactCap > 10) throw RangeError("exactCap must lie in [1, 10]");
    if (bucketCount < 1) throw RangeError("bucketCount must be positive");
    if (radius < 0.0) throw RangeError("radius must be nonnegative");
    if (!(radiusPercentile > 0.0) || radiusPercentile > 1.0) {
        throw RangeError("radiusPercentile must lie in (0, 1]");
    }
    if (budget < 0.0) throw RangeError("budget must be nonnegative");
    recommender.validate();
}

std::string RunConfig::toJson() const {
    json j;
    j["datasetPath"] = datasetPath.string();
    j["descriptor"] = {
        {"minRating", descriptor.minRating},
        {"maxRating", descriptor.maxRating},
        {"delimiter", std::string(1, descriptor.delimiter)},
        {"header", descriptor.header == DatasetDescriptor::Header::Auto      ? "auto"
                   : descriptor.header == DatasetDescriptor::Header::Present ? "present"
                                                                             : "absent"},
        {"userColumn", descriptor.userColumn},
        {"itemColumn", descriptor.itemColumn},
        {"ratingColumn", descriptor.ratingColumn},
        {"timestampColumn", descriptor.timestampColumn},
    };
    j["testFraction"] = testFraction;
    j["seeds"] = {{"split", seeds.split}, {"model", seeds.model}, {"cluster", seeds.cluster},
                  {"mc", seeds.mc}};
    j["recommender"] = {
        {"latentDim", recommender.latentDim},
        {"epochs", recommender.epochs},
        {"learningRate", recommender.learningRate},
        {"regularization", recommender.regularization},
        {"clickThreshold", recommender.clickThreshold},
    };
    j["k"] = k;
    j["radius"] = radius;
    j["radiusPercentile"] = radiusPercentile;
    j["bucketCount"] = bucketCount;
    j["budget"] = budget;
    j["exactCap"] = exactCap;
    j["outDir"] = outDir.string();
    return j.dump(2);
}

RunConfig RunConfig::fromFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path.string());

    std::map<std::string, std::string> kv;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Strip comments, honouring double quotes.
        bool quoted = false;
        std::string body;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            body.push_back(c);
        }
        body = trimCopy(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineNo) +
                             ": expected `key = value`");
        }
        std::string key = trimCopy(body.substr(0, eq));
        std::string value = trimCopy(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (key.empty()) {
            throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": empty key");
        }
        if (!kv.emplace(key, value).second) {
            throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": duplicate key '" +
                             key + "'");
        }
    }

    RunConfig cfg;
    auto take = [&kv](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string value = it->second;
        kv.erase(it);
        return value;
    };

    if (auto v = take("seed")) {
        const std::uint64_t s = parseU64Value("seed", *v);
        cfg.seeds = {s, s, s, s};
    }
    if (auto v = take("splitSeed")) cfg.seeds.split = parseU64Value("splitSeed", *v);
    if (auto v = take("modelSeed")) cfg.seeds.model = parseU64Value("modelSeed", *v);
    if (auto v = take("clusterSeed")) cfg.seeds.cluster = parseU64Value("clusterSeed", *v);
    if (auto v = take("mcSeed")) cfg.seeds.mc = parseU64Value("mcSeed", *v);

    if (auto v = take("dataset")) cfg.datasetPath = *v;
    if (auto v = take("outDir")) cfg.outDir = *v;
    if (auto v = take("testFraction")) cfg.testFraction = parseRealValue("testFraction", *v);
    if (auto v = take("latentDim")) cfg.recommender.latentDim = static_cast<int>(parseIntValue("latentDim", *v));
    if (auto v = take("epochs")) cfg.recommender.epochs = static_cast<int>(parseIntValue("epochs", *v));
    if (auto v = take("learningRate")) cfg.recommender.learningRate = parseRealValue("learningRate", *v);
    if (auto v = take("regularization")) cfg.recommender.regularization = parseRealValue("regularization", *v);
    if (auto v = take("clickThreshold")) cfg.recommender.clickThreshold = parseRealValue("clickThreshold", *v);
    if (auto v = take("k")) cfg.k = static_cast<int>(parseIntValue("k", *v));
    if (auto v = take("radius")) cfg.radius = parseRealValue("radius", *v);
    if (auto v = take("radiusPercentile")) cfg.radiusPercentile = parseRealValue("radiusPercentile", *v);
    if (auto v = take("bucketCount")) cfg.bucketCount = static_cast<int>(parseIntValue("bucketCount", *v));
    if (auto v = take("budget")) cfg.budget = parseRealValue("budget", *v);
    if (auto v = take("exactCap")) cfg.exactCap = static_cast<int>(parseIntValue("exactCap", *v));
    if (auto v = take("minRating")) cfg.descriptor.minRating = parseRealValue("minRating", *v);
    if (auto v = take("maxRating")) cfg.descriptor.maxRating = parseRealValue("maxRating", *v);
    if (auto v = take("userColumn")) cfg.descriptor.userColumn = static_cast<int>(parseIntValue("userColumn", *v));
    if (auto v = take("itemColumn")) cfg.descriptor.itemColumn = static_cast<int>(parseIntValue("itemColumn", *v));
    if (auto v = take("ratingColumn")) cfg.descriptor.ratingColumn = static_cast<int>(parseIntValue("ratingColumn", *v));
    if (auto v = take("timestampColumn")) cfg.descriptor.timestampColumn = static_cast<int>(parseIntValue("timestampColumn", *v));
    if (auto v = take("delimiter")) {
        if (*v == "tab" || *v == "\\t") {
            cfg.descriptor.delimiter = '\t';
        } else if (v->size() == 1) {
            cfg.descriptor.delimiter = (*v)[0];
        } else {
            throw ParseError("config key 'delimiter': expected a single character or 'tab'");
        }
    }
    if (auto v = take("header")) {
        if (*v == "auto") {
            cfg.descriptor.header = DatasetDescriptor::Header::Auto;
        } else if (*v == "present") {
            cfg.descriptor.header = DatasetDescriptor::Header::Present;
        } else if (*v == "absent") {
            cfg.descriptor.header = DatasetDescriptor::Header::Absent;
        } else {
            throw ParseError("config key 'header': expected auto, present or absent");
        }
    }

    if (!kv.empty()) {
        throw ParseError(path.string() + ": unknown config key '" + kv.begin()->first + "'");
    }
    return cfg;
}

std::string RunManifest::toJson() const {
    json j;
    j["command"] = command;
    j["config"] = configJson.empty() ? json::object() : json::parse(configJson);
    j["artifacts"] = artifactChecksums;
    j["counts"] = {
        {"trainPredictCalls", counts.trainPredictCalls},
        {"coalitionEvaluations", counts.coalitionEvaluations},
        {"permutationTraversals", counts.permutationTraversals},
    };
    j["notes"] = notes;
    j["timingsFile"] = timingsFile;
    j["version"] = kToolVersion;
    return j.dump(2) + "\n";
}

RunResult runValueExact(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.outDir);
    StageTimes times;
    const std::uint64_t callsBefore = trainPredictCallCount();

    auto t0 = Clock::now();
    auto split = std::make_shared<RatingsDataset>(loadAndSplit(cfg));
    times.add("1-load", t0, Clock::now());

    const int n = static_cast<int>(split->userCount());
    if (n > cfg.exactCap) {
        throw SizeCapError("dataset has " + std::to_string(n) + " users, above the exact cap of " +
                           std::to_string(cfg.exactCap) +
                           "; use value-asve for datasets of this size");
    }

    RecommenderConfig rc = cfg.recommender;
    rc.seed = cfg.seeds.model;

    t0 = Clock::now();
    std::vector<PlayerId> players(static_cast<std::size_t>(n));
    std::iota(players.begin(), players.end(), 0);
    CoalitionGame game(std::move(players), [split, rc](const std::vector<PlayerId>& coalition) {
        std::set<UserId> users;
        for (PlayerId p : coalition) users.insert(split->users()[static_cast<std::size_t>(p)]);
        return static_cast<double>(coalitionValue(*split, users, rc));
    });

    ShapleyOptions opts;
    opts.permutationCap = std::max(opts.permutationCap, cfg.exactCap);
    const double grand = game.value(game.fullMask());
    const ShapleyResult perm = shapleyExactPermutation(game, opts);
    const ShapleyResult subset = shapleyExactSubset(game, opts);
    for (int i = 0; i < n; ++i) {
        if (std::abs(perm.values[static_cast<std::size_t>(i)] -
                     subset.values[static_cast<std::size_t>(i)]) > 1e-9) {
            throw Error("exact evaluators disagree; aborting");
        }
    }
    checkEfficiency(perm.total(), grand, 1e-9, "value-exact");
    times.add("2-shapley", t0, Clock::now());

    t0 = Clock::now();
    std::string csv = "userId,value\n";
    for (int i = 0; i < n; ++i) {
        csv += std::to_string(split->users()[static_cast<std::size_t>(i)]);
        csv += ',';
        csv += formatReal(perm.values[static_cast<std::size_t>(i)]);
        csv += '\n';
    }
    const auto valuesPath = cfg.outDir / "exact_values.csv";
    writeText(valuesPath, csv);
    times.add("3-emit", t0, Clock::now());

    OperationCounts counts;
    counts.trainPredictCalls = trainPredictCallCount() - callsBefore;
    counts.coalitionEvaluations = game.evaluationCount();
    counts.permutationTraversals = perm.permutationCount;

    std::map<std::string, std::string> notes;
    notes["totalClicks"] = preciseReal(grand);
    notes["users"] = std::to_string(n);
    return finishRun(cfg.outDir, "value-exact", cfg.toJson(), std::move(notes), counts,
                     {valuesPath}, times);
}

RunResult runValueAsve(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.outDir);
    StageTimes times;
    const std::uint64_t callsBefore = trainPredictCallCount();

    auto t0 = Clock::now();
    const RatingsDataset split = loadAndSplit(cfg);
    times.add("1-load", t0, Clock::now());

    t0 = Clock::now();
    const UserFeatureMatrix ufm = projectUsers(split);
    const ClusterModel cm = clusterUsers(ufm, cfg.k, cfg.seeds.cluster);
    times.add("2-project-cluster", t0, Clock::now());

    RecommenderConfig rc = cfg.recommender;
    rc.seed = cfg.seeds.model;

    t0 = Clock::now();
    const CoalitionGame game = clusterGame(split, cm, rc);
    const auto totalClicks = static_cast<long long>(std::llround(game.value(game.fullMask())));
    const ClusterShapley cs = clusterShapley(game, totalClicks);
    const UserValueVector values = userValues(cm, cs, ufm);
    times.add("3-shapley", t0, Clock::now());

    double sum = 0.0;
    for (double v : values.normalized) sum += v;
    if (sum != 0.0 || totalClicks == 0) {
        checkEfficiency(sum, static_cast<double>(totalClicks), 1e-6, "value-asve");
    }

    t0 = Clock::now();
    std::string csv = "userId,rawValue,normalizedValue,clusterLabel\n";
    for (std::size_t i = 0; i < values.users.size(); ++i) {
        csv += std::to_string(values.users[i]);
        csv += ',';
        csv += formatReal(values.raw[i]);
        csv += ',';
        csv += formatReal(values.normalized[i]);
        csv += ',';
        csv += std::to_string(cm.labels[i]);
        csv += '\n';
    }
    const auto valuesPath = cfg.outDir / "asve_values.csv";
    writeText(valuesPath, csv);

    json shapleyJson;
    shapleyJson["K"] = totalClicks;
    shapleyJson["nonNegative"] = cs.nonNegative;
    json phi = json::object();
    for (std::size_t c = 0; c < cs.phi.size(); ++c) phi[std::to_string(c)] = cs.phi[c];
    shapleyJson["phi"] = phi;
    json coalitionValues = json::object();
    const CoalitionMask full = game.fullMask();
    for (CoalitionMask mask = 1; mask <= full; ++mask) {
        std::string key;
        for (int c = 0; c < cm.k; ++c) {
            if (mask & (CoalitionMask{1} << c)) {
                if (!key.empty()) key += ',';
                key += std::to_string(c);
            }
        }
        coalitionValues[key] = game.value(mask);
    }
    shapleyJson["coalitionValues"] = coalitionValues;
    shapleyJson["permutationCount"] = cs.permutationCount;
    shapleyJson["residual"] = cs.residual;
    const auto shapleyPath = cfg.outDir / "cluster_shapley.json";
    writeText(shapleyPath, shapleyJson.dump(2) + "\n");
    times.add("4-emit", t0, Clock::now());

    OperationCounts counts;
    counts.trainPredictCalls = trainPredictCallCount() - callsBefore;
    counts.coalitionEvaluations = game.evaluationCount();
    counts.permutationTraversals = cs.permutationCount;

    std::map<std::string, std::string> notes;
    notes["k"] = std::to_string(cfg.k);
    notes["totalClicks"] = std::to_string(totalClicks);
    notes["kmeansInertia"] = preciseReal(cm.inertia);
    notes["kmeansIterations"] = std::to_string(cm.iterations);
    notes["axis1Degenerate"] = ufm.basis.axis1Degenerate ? "true" : "false";
    notes["axis2Degenerate"] = ufm.basis.axis2Degenerate ? "true" : "false";
    return finishRun(cfg.outDir, "value-asve", cfg.toJson(), std::move(notes), counts,
                     {valuesPath, shapleyPath}, times);
}

RunResult runValueNsve(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.outDir);
    StageTimes times;
    const std::uint64_t callsBefore = trainPredictCallCount();

    auto t0 = Clock::now();
    const RatingsDataset split = loadAndSplit(cfg);
    times.add("1-load", t0, Clock::now());

    t0 = Clock::now();
    const UserFeatureMatrix ufm = projectUsers(split);
    const double radius = cfg.radius > 0.0 ? cfg.radius : defaultRadius(ufm, cfg.radiusPercentile);
    const NeighbourhoodIndex ni = buildNeighbourhoods(ufm, radius);
    PredictivePotential pp = predictivePotential(split, ni);
    times.add("2-neighbourhoods", t0, Clock::now());

    RecommenderConfig rc = cfg.recommender;
    rc.seed = cfg.seeds.model;

    t0 = Clock::now();
    const ClickReport clicks = fullDatasetClicks(split, rc);
    pp = scaleToClicks(std::move(pp), clicks.totalClicks);
    times.add("3-train-scale", t0, Clock::now());

    if (!pp.starved) {
        double sum = 0.0;
        for (double v : pp.phi3) sum += v;
        checkEfficiency(sum, static_cast<double>(clicks.totalClicks), 1e-9, "value-nsve");
    }

    t0 = Clock::now();
    std::string csv = "userId,rec,phi3\n";
    for (std::size_t i = 0; i < pp.users.size(); ++i) {
        csv += std::to_string(pp.users[i]);
        csv += ',';
        csv += std::to_string(pp.rec[i]);
        csv += ',';
        csv += formatReal(pp.phi3[i]);
        csv += '\n';
    }
    const auto valuesPath = cfg.outDir / "nsve_values.csv";
    writeText(valuesPath, csv);
    times.add("4-emit", t0, Clock::now());

    OperationCounts counts;
    counts.trainPredictCalls = trainPredictCallCount() - callsBefore;

    std::map<std::string, std::string> notes;
    notes["radius"] = preciseReal(radius);
    notes["radiusSource"] = cfg.radius > 0.0 ? "config" : "percentile";
    notes["radiusPercentile"] = preciseReal(cfg.radiusPercentile);
    notes["totalClicks"] = std::to_string(clicks.totalClicks);
    notes["starved"] = pp.starved ? "true" : "false";
    return finishRun(cfg.outDir, "value-nsve", cfg.toJson(), std::move(notes), counts,
                     {valuesPath}, times);
}

RunResult runPayout(const std::filesystem::path& valuesFile, double budget,
                    const std::filesystem::path& outDir) {
    if (!(budget > 0.0)) throw RangeError("budget must be positive");
    std::filesystem::create_directories(outDir);
    StageTimes times;

    auto t0 = Clock::now();
    const CsvTable table = readCsvFile(valuesFile);
    const int userCol = table.column("userId");
    if (userCol < 0) throw ParseError(valuesFile.string() + ": no userId column");
    int valueCol = -1;
    std::string valueColumnName;
    for (const char* candidate : {"normalizedValue", "phi3", "value"}) {
        valueCol = table.column(candidate);
        if (valueCol >= 0) {
            valueColumnName = candidate;
            break;
        }
    }
    if (valueCol < 0) {
        throw ParseError(valuesFile.string() +
                         ": no value column (expected normalizedValue, phi3 or value)");
    }

    std::vector<std::pair<UserId, double>> rows;
    long double sum = 0.0L;
    for (const auto& fields : table.rows) {
        const UserId u = parseUserId(valuesFile, fields[static_cast<std::size_t>(userCol)]);
        const double v = parseReal(valuesFile, fields[static_cast<std::size_t>(valueCol)]);
        rows.push_back({u, v});
        sum += v;
    }
    if (!(sum > 0.0L)) {
        throw ZeroTotalError("values in " + valuesFile.string() +
                             " sum to zero; cannot distribute a budget");
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    times.add("1-load", t0, Clock::now());

    t0 = Clock::now();
    std::string csv = "userId,payout\n";
    for (const auto& [u, v] : rows) {
        csv += std::to_string(u);
        csv += ',';
        csv += formatReal(budget * v / static_cast<double>(sum));
        csv += '\n';
    }
    const auto payoutPath = outDir / "payout.csv";
    writeText(payoutPath, csv);
    times.add("2-emit", t0, Clock::now());

    json configJson;
    configJson["valuesFile"] = valuesFile.string();
    configJson["budget"] = budget;
    configJson["valueColumn"] = valueColumnName;

    std::map<std::string, std::string> notes;
    notes["valueColumn"] = valueColumnName;
    notes["valueTotal"] = preciseReal(static_cast<double>(sum));
    return finishRun(outDir, "payout", configJson.dump(2), std::move(notes), OperationCounts{},
                     {payoutPath}, times);
}

RunResult runReport(const RunConfig& cfg, const std::filesystem::path& asveValues,
                    const std::filesystem::path& nsveValues) {
    cfg.validate();
    if (!std::filesystem::exists(asveValues)) {
        throw IoError("ASVE values file not found: " + asveValues.string());
    }
    if (!std::filesystem::exists(nsveValues)) {
        throw IoError("NSVE values file not found: " + nsveValues.string());
    }
    std::filesystem::create_directories(cfg.outDir);
    StageTimes times;
    const std::uint64_t callsBefore = trainPredictCallCount();

    auto t0 = Clock::now();
    const RatingsDataset full = loadRatings(cfg.datasetPath, cfg.descriptor);
    const RatingsDataset split = splitTrainTest(full, cfg.testFraction, cfg.seeds.split);
    const PopularityTable pt = popularity(full, cfg.bucketCount);
    const UserValueVector asve = readAsveValues(asveValues);
    const PredictivePotential nsve = readNsveValues(nsveValues);
    times.add("1-load", t0, Clock::now());

    t0 = Clock::now();
    const UserClassPartition asvePart = classify(asve);
    const UserClassPartition nsvePart = classify(nsve);
    const BucketReport asveVotes = bucketVoteDistribution(full, pt, asvePart);
    const BucketReport nsveVotes = bucketVoteDistribution(full, pt, nsvePart);

    RecommenderConfig rc = cfg.recommender;
    rc.seed = cfg.seeds.model;
    const ClickReport clicks = fullDatasetClicks(split, rc);
    const BucketReport clickRows = bucketClickDistribution(clicks, pt);
    const DistributionComparison comparison = compareDistributions(asve, nsve);
    times.add("2-analyse", t0, Clock::now());

    t0 = Clock::now();
    std::string bucketsCsv = "bucket,voteCount,clickCount\n";
    for (std::size_t b = 0; b < pt.orderedBuckets.size(); ++b) {
        long long votes = 0;
        for (ItemId item : pt.orderedBuckets[b]) votes += pt.perItemVoteCount.at(item);
        bucketsCsv += std::to_string(b);
        bucketsCsv += ',';
        bucketsCsv += std::to_string(votes);
        bucketsCsv += ',';
        bucketsCsv += std::to_string(clickRows.rows[b].clickCount);
        bucketsCsv += '\n';
    }
    const auto bucketsPath = cfg.outDir / "report_buckets.csv";
    writeText(bucketsPath, bucketsCsv);

    std::string classesCsv = "method,bucket,class,voteCount,meanRating\n";
    auto appendClassRows = [&classesCsv](const char* method, const BucketReport& report) {
        for (const auto& row : report.rows) {
            classesCsv += method;
            classesCsv += ',';
            classesCsv += std::to_string(row.bucket);
            classesCsv += ',';
            classesCsv += userClassName(*row.userClass);
            classesCsv += ',';
            classesCsv += std::to_string(row.voteCount);
            classesCsv += ',';
            classesCsv += row.meanRating ? formatReal(*row.meanRating) : "NA";
            classesCsv += '\n';
        }
    };
    appendClassRows("asve", asveVotes);
    appendClassRows("nsve", nsveVotes);
    const auto classesPath = cfg.outDir / "report_classes.csv";
    writeText(classesPath, classesCsv);

    json comparisonJson;
    comparisonJson["correlationDistance"] = comparison.correlationDistance;
    comparisonJson["rankCorrelation"] = comparison.rankCorrelation;
    comparisonJson["referenceCorrelationDistance"] = 0.29;
    comparisonJson["users"] = comparison.users;
    comparisonJson["mappedNsve"] = comparison.mappedNsve;
    const auto comparisonPath = cfg.outDir / "report_comparison.json";
    writeText(comparisonPath, comparisonJson.dump(2) + "\n");
    times.add("3-emit", t0, Clock::now());

    OperationCounts counts;
    counts.trainPredictCalls = trainPredictCallCount() - callsBefore;

    std::map<std::string, std::string> notes;
    notes["bucketCount"] = std::to_string(cfg.bucketCount);
    notes["correlationDistance"] = preciseReal(comparison.correlationDistance);
    notes["rankCorrelation"] = preciseReal(comparison.rankCorrelation);
    notes["totalClicks"] = std::to_string(clicks.totalClicks);
    return finishRun(cfg.outDir, "report", cfg.toJson(), std::move(notes), counts,
                     {bucketsPath, classesPath, comparisonPath}, times);
}

} // namespace fairshare
