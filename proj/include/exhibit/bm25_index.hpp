// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/domain.hpp"
#include "exhibit/search_hit.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace exhibit {

/// Lowercases (Latin, Greek and Cyrillic case mappings), splits on every
/// code point that is not a letter or digit and drops empty terms. Invalid
/// UTF-8 bytes act as separators. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    /// Throws Error(invalid_argument) unless k1 > 0 and 0 <= b <= 1.
    void validate() const;
    bool operator==(const Bm25Params&) const = default;
};

enum class LexicalKind : std::uint8_t {
    record_title = 0,
    collection_title = 1,
    collection_description = 2,
};

std::string_view to_string(LexicalKind kind);

struct LexicalDoc {
    MuragId id;
    LexicalKind kind = LexicalKind::record_title;
    std::string text;
};

/// Okapi BM25 over an immutable document set:
///   score(d, q) = sum over distinct query terms t of
///       idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
///   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
/// N, df and avgdl are computed over all documents regardless of any kind
/// filter applied at query time.
class Bm25Index {
public:
    static constexpr std::uint32_t format_version = 1;

    Bm25Index() = default;

    /// Errors: duplicate_id, invalid_argument (params).
    static Bm25Index build(const std::vector<LexicalDoc>& docs, Bm25Params params = {});

    /// Documents with at least one query term, in ranked order, at most k.
    /// Errors: invalid_argument (k == 0).
    std::vector<SearchHit> search(std::string_view query, std::size_t k,
                                  const std::optional<std::set<LexicalKind>>& kinds = std::nullopt) const;

    std::size_t size() const noexcept { return docs_.size(); }
    double average_length() const noexcept { return avgdl_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t document_frequency(std::string_view term) const;
    std::size_t document_length(const MuragId& id) const;

    std::string serialize() const;
    static Bm25Index deserialize(std::string_view bytes);
    void persist(const std::filesystem::path& path) const;
    static Bm25Index load(const std::filesystem::path& path);

private:
    struct Doc {
        MuragId id;
        LexicalKind kind;
        std::string text;
        std::uint32_t length;
    };
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    void finalize();

    Bm25Params params_;
    std::vector<Doc> docs_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    double avgdl_ = 0.0;
};

} // namespace exhibit
