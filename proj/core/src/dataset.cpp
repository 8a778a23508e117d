#include "fairshare/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fairshare {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> splitLine(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delimiter)) fields.push_back(trim(field));
    if (!line.empty() && line.back() == delimiter) fields.emplace_back();
    return fields;
}

bool parseInt(const std::string& s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

bool parseDouble(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

} // namespace

RatingsDataset::RatingsDataset(std::vector<RatingRecord> records, DatasetDescriptor descriptor)
    : records_(std::move(records)), descriptor_(descriptor) {
    std::sort(records_.begin(), records_.end(), [](const RatingRecord& a, const RatingRecord& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    for (const auto& r : records_) {
        if (r.rating < descriptor_.minRating || r.rating > descriptor_.maxRating) {
            throw RangeError("rating " + std::to_string(r.rating) + " outside declared range for user " +
                             std::to_string(r.user));
        }
    }
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].user == records_[i - 1].user && records_[i].item == records_[i - 1].item) {
            throw DuplicateError("duplicate (user,item) pair (" + std::to_string(records_[i].user) +
                                 "," + std::to_string(records_[i].item) + ")");
        }
    }
    for (const auto& r : records_) {
        if (userIndex_.emplace(r.user, 0).second) users_.push_back(r.user);
        if (itemIndex_.emplace(r.item, 0).second) items_.push_back(r.item);
    }
    std::sort(users_.begin(), users_.end());
    std::sort(items_.begin(), items_.end());
    for (std::size_t i = 0; i < users_.size(); ++i) userIndex_[users_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < items_.size(); ++i) itemIndex_[items_[i]] = static_cast<int>(i);
}

int RatingsDataset::userIndexOf(UserId user) const {
    auto it = userIndex_.find(user);
    if (it == userIndex_.end()) throw Error("unknown user id " + std::to_string(user));
    return it->second;
}

int RatingsDataset::itemIndexOf(ItemId item) const {
    auto it = itemIndex_.find(item);
    if (it == itemIndex_.end()) throw Error("unknown item id " + std::to_string(item));
    return it->second;
}

std::vector<RatingRecord> RatingsDataset::trainRecords() const {
    std::vector<RatingRecord> out;
    out.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (isTrain(i)) out.push_back(records_[i]);
    }
    return out;
}

std::vector<RatingRecord> RatingsDataset::testRecords() const {
    std::vector<RatingRecord> out;
    if (!hasSplit_) return out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!trainMask_[i]) out.push_back(records_[i]);
    }
    return out;
}

void RatingsDataset::saveCanonical(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const bool withTimestamp =
        std::any_of(records_.begin(), records_.end(), [](const RatingRecord& r) { return r.timestamp.has_value(); });
    out << (withTimestamp ? "userId,movieId,rating,timestamp\n" : "userId,movieId,rating\n");
    char buf[64];
    for (const auto& r : records_) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.rating);
        out << r.user << ',' << r.item << ',' << buf;
        if (withTimestamp) {
            out << ',';
            if (r.timestamp) out << *r.timestamp;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

RatingsDataset loadRatings(const std::filesystem::path& path, const DatasetDescriptor& descriptor) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ratings file " + path.string());

    const int requiredColumns =
        std::max({descriptor.userColumn, descriptor.itemColumn, descriptor.ratingColumn}) + 1;
    std::vector<RatingRecord> records;
    std::string line;
    std::size_t row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = splitLine(line, descriptor.delimiter);
        if (first) {
            first = false;
            if (descriptor.header == DatasetDescriptor::Header::Present) continue;
            if (descriptor.header == DatasetDescriptor::Header::Auto) {
                // Header row detected by a non-numeric rating column.
                double probe;
                if (static_cast<int>(fields.size()) <= descriptor.ratingColumn ||
                    !parseDouble(fields[static_cast<std::size_t>(descriptor.ratingColumn)], probe)) {
                    continue;
                }
            }
        }
        if (static_cast<int>(fields.size()) < requiredColumns) {
            throw ParseError("row " + std::to_string(row) + ": expected at least " +
                             std::to_string(requiredColumns) + " columns, got " + std::to_string(fields.size()));
        }
        RatingRecord rec;
        if (!parseInt(fields[static_cast<std::size_t>(descriptor.userColumn)], rec.user)) {
            throw ParseError("row " + std::to_string(row) + ": malformed user id '" +
                             fields[static_cast<std::size_t>(descriptor.userColumn)] + "'");
        }
        if (!parseInt(fields[static_cast<std::size_t>(descriptor.itemColumn)], rec.item)) {
            throw ParseError("row " + std::to_string(row) + ": malformed item id '" +
                             fields[static_cast<std::size_t>(descriptor.itemColumn)] + "'");
        }
        if (!parseDouble(fields[static_cast<std::size_t>(descriptor.ratingColumn)], rec.rating)) {
            throw ParseError("row " + std::to_string(row) + ": malformed rating '" +
                             fields[static_cast<std::size_t>(descriptor.ratingColumn)] + "'");
        }
        if (rec.rating < descriptor.minRating || rec.rating > descriptor.maxRating) {
            throw RangeError("row " + std::to_string(row) + ": rating " +
                             fields[static_cast<std::size_t>(descriptor.ratingColumn)] + " outside range [" +
                             std::to_string(descriptor.minRating) + ", " + std::to_string(descriptor.maxRating) + "]");
        }
        if (descriptor.timestampColumn >= 0 &&
            static_cast<int>(fields.size()) > descriptor.timestampColumn) {
            const auto& f = fields[static_cast<std::size_t>(descriptor.timestampColumn)];
            if (!f.empty()) {
                std::int64_t ts;
                if (!parseInt(f, ts)) {
                    throw ParseError("row " + std::to_string(row) + ": malformed timestamp '" + f + "'");
                }
                rec.timestamp = ts;
            }
        }
        records.push_back(rec);
    }
    return RatingsDataset(std::move(records), descriptor);
}

RatingsDataset splitTrainTest(const RatingsDataset& ds, double testFraction, std::uint64_t seed) {
    if (!(testFraction > 0.0 && testFraction < 1.0)) {
        throw Error("testFraction must be in (0,1)");
    }
    RatingsDataset out = ds;
    out.trainMask_.assign(ds.records().size(), true);
    out.testOnlyExcluded_.clear();
    out.hasSplit_ = true;
    out.splitSeed_ = seed;
    out.testFraction_ = testFraction;

    // Records are sorted by (user, item): each user's records occupy one
    // contiguous range.
    std::size_t begin = 0;
    const auto& records = ds.records();
    while (begin < records.size()) {
        std::size_t end = begin;
        while (end < records.size() && records[end].user == records[begin].user) ++end;
        const std::size_t n = end - begin;
        if (n < 2) {
            out.testOnlyExcluded_.insert(records[begin].user);
            begin = end;
            continue;
        }
        auto want = static_cast<std::size_t>(std::llround(testFraction * static_cast<double>(n)));
        want = std::clamp<std::size_t>(want, 1, n - 1);
        // Per-user stream so the mask is independent of other users.
        Rng rng(Rng::deriveStream(seed, static_cast<std::uint64_t>(records[begin].user)));
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = begin + i;
        for (std::size_t i = 0; i < want; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.nextBelow(n - i));
            std::swap(idx[i], idx[j]);
            out.trainMask_[idx[i]] = false;
        }
        begin = end;
    }
    return out;
}

PopularityTable popularity(const RatingsDataset& ds, int bucketCount) {
    if (bucketCount < 1 || static_cast<std::size_t>(bucketCount) > ds.itemCount()) {
        throw BucketError("bucketCount " + std::to_string(bucketCount) + " not in [1, " +
                          std::to_string(ds.itemCount()) + "]");
    }
    PopularityTable table;
    for (const auto& r : ds.records()) table.perItemVoteCount[r.item] += 1;

    std::vector<ItemId> ordered = ds.items();
    std::sort(ordered.begin(), ordered.end(), [&](ItemId a, ItemId b) {
        long long ca = table.perItemVoteCount[a];
        long long cb = table.perItemVoteCount[b];
        return ca != cb ? ca > cb : a < b;
    });

    const std::size_t n = ordered.size();
    const std::size_t buckets = static_cast<std::size_t>(bucketCount);
    const std::size_t base = n / buckets;
    const std::size_t extra = n % buckets; // first `extra` buckets get one more item
    std::size_t pos = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
        std::size_t size = base + (b < extra ? 1 : 0);
        std::vector<ItemId> bucket(ordered.begin() + static_cast<std::ptrdiff_t>(pos),
                                   ordered.begin() + static_cast<std::ptrdiff_t>(pos + size));
        for (ItemId item : bucket) table.bucketIndex_[item] = static_cast<int>(b);
        table.orderedBuckets.push_back(std::move(bucket));
        pos += size;
    }
    return table;
}

int PopularityTable::bucketOf(ItemId item) const {
    auto it = bucketIndex_.find(item);
    if (it == bucketIndex_.end()) throw Error("item " + std::to_string(item) + " not in popularity table");
    return it->second;
}

} // namespace fairshare
