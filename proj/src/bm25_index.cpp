// SPDX-License-Identifier: Apache-2.0
#include "exhibit/bm25_index.hpp"

#include "binary_io.hpp"
#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace exhibit {

namespace {

constexpr std::string_view magic{"EXBM25\0\0", 8};
constexpr char32_t invalid_cp = 0xFFFFFFFF;

// Decodes one code point starting at text[i]; advances i. Malformed
// sequences yield invalid_cp and consume a single byte.
char32_t next_code_point(std::string_view text, std::size_t& i)
{
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++i;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++i;
        return invalid_cp;
    }
    if (i + len > text.size()) {
        ++i;
        return invalid_cp;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto cont = static_cast<unsigned char>(text[i + k]);
        if ((cont & 0xC0) != 0x80) {
            ++i;
            return invalid_cp;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return invalid_cp;
    }
    i += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_word_char(char32_t cp)
{
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp == 0xAA || cp == 0xB5 || cp == 0xBA)
        return true;
    if (in(cp, 0xC0, 0xFF))
        return cp != 0xD7 && cp != 0xF7;
    if (in(cp, 0x100, 0x36F)) // Latin extended, IPA, modifiers, combining marks
        return true;
    if (in(cp, 0x370, 0x3FF))
        return cp != 0x375 && cp != 0x37E && cp != 0x384 && cp != 0x385 && cp != 0x387;
    if (in(cp, 0x400, 0x52F))
        return !in(cp, 0x482, 0x489);
    if (in(cp, 0x530, 0x1FFF))
        return true;
    if (in(cp, 0x2000, 0x2BFF) || in(cp, 0x2E00, 0x2E7F) || in(cp, 0x3000, 0x303F))
        return false;
    if (in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) ||
        in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65) || cp >= 0xFFF0)
        return false;
    return cp != invalid_cp;
}

char32_t to_lower(char32_t cp)
{
    if (cp >= 'A' && cp <= 'Z')
        return cp + 0x20;
    if (cp < 0x80)
        return cp;
    if (in(cp, 0xC0, 0xDE) && cp != 0xD7)
        return cp + 0x20;
    if (in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177))
        return (cp % 2 == 0) ? cp + 1 : cp;
    if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E))
        return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x178)
        return 0xFF;
    if (in(cp, 0x391, 0x3A9) && cp != 0x3A2)
        return cp + 0x20;
    if (cp == 0x386)
        return 0x3AC;
    if (in(cp, 0x388, 0x38A))
        return cp + 0x25;
    if (cp == 0x38C)
        return 0x3CC;
    if (cp == 0x38E || cp == 0x38F)
        return cp + 0x3F;
    if (in(cp, 0x410, 0x42F))
        return cp + 0x20;
    if (in(cp, 0x400, 0x40F))
        return cp + 0x50;
    if (in(cp, 0x460, 0x481) || in(cp, 0x48A, 0x4BF) || in(cp, 0x4D0, 0x52F))
        return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x1E9E)
        return 0xDF;
    if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF))
        return (cp % 2 == 0) ? cp + 1 : cp;
    return cp;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> terms;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = next_code_point(text, i);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        terms.push_back(std::move(current));
    return terms;
}

void Bm25Params::validate() const
{
    if (!(k1 > 0.0))
        throw Error(ErrorKind::invalid_argument, "BM25 k1 must be positive");
    if (!(b >= 0.0 && b <= 1.0))
        throw Error(ErrorKind::invalid_argument, "BM25 b must lie in [0, 1]");
}

std::string_view to_string(LexicalKind kind)
{
    switch (kind) {
        case LexicalKind::record_title: return "record-title";
        case LexicalKind::collection_title: return "collection-title";
        case LexicalKind::collection_description: return "collection-description";
    }
    return "unknown";
}

Bm25Index Bm25Index::build(const std::vector<LexicalDoc>& docs, Bm25Params params)
{
    params.validate();
    Bm25Index index;
    index.params_ = params;
    index.docs_.reserve(docs.size());
    for (const auto& d : docs) {
        const auto doc = static_cast<std::uint32_t>(index.docs_.size());
        if (!index.by_id_.emplace(d.id.value(), doc).second)
            throw Error(ErrorKind::duplicate_id, "duplicate lexical document id " + d.id.value());
        auto terms = tokenize(d.text);
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : terms)
            ++tf[t];
        for (auto& [term, count] : tf)
            index.postings_[term].push_back({doc, count});
        index.docs_.push_back({d.id, d.kind, d.text, static_cast<std::uint32_t>(terms.size())});
    }
    index.finalize();
    return index;
}

void Bm25Index::finalize()
{
    double total = 0.0;
    for (const auto& d : docs_)
        total += d.length;
    avgdl_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
}

std::size_t Bm25Index::document_frequency(std::string_view term) const
{
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? 0 : it->second.size();
}

std::size_t Bm25Index::document_length(const MuragId& id) const
{
    auto it = by_id_.find(id.value());
    if (it == by_id_.end())
        throw Error(ErrorKind::not_found, "unknown lexical document " + id.value());
    return docs_[it->second].length;
}

std::vector<SearchHit> Bm25Index::search(std::string_view query, std::size_t k,
                                         const std::optional<std::set<LexicalKind>>& kinds) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    if (docs_.empty())
        return {};

    auto terms = tokenize(query);
    std::ranges::sort(terms);
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    const double n = static_cast<double>(docs_.size());
    std::map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end())
            continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            const auto& doc = docs_[p.doc];
            if (kinds && !kinds->contains(doc.kind))
                continue;
            const double tf = p.tf;
            const double norm = params_.k1 * (1.0 - params_.b + params_.b * doc.length / avgdl_);
            scores[p.doc] += idf * (tf * (params_.k1 + 1.0)) / (tf + norm);
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores)
        hits.push_back({docs_[doc].id, score});
    sort_hits(hits);
    if (hits.size() > k)
        hits.resize(k);
    return hits;
}

// Snapshot layout (little-endian):
//   header  : magic[8] "EXBM25\0\0", u32 version, f64 k1, f64 b, u64 doc count,
//             u64 term count, u8[32] sha256(payload)
//   payload : per doc: str id, u8 kind, str text, u32 length;
//             per term (sorted bytewise): str term, u32 n, n x (u32 doc, u32 tf)
std::string Bm25Index::serialize() const
{
    detail::ByteWriter payload;
    for (const auto& d : docs_) {
        payload.str(d.id.value());
        payload.u8(static_cast<std::uint8_t>(d.kind));
        payload.str(d.text);
        payload.u32(d.length);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, list] : postings_)
        terms.push_back(&term);
    std::ranges::sort(terms, [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        payload.str(*term);
        payload.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            payload.u32(p.doc);
            payload.u32(p.tf);
        }
    }

    detail::ByteWriter out;
    out.raw(magic);
    out.u32(format_version);
    out.f64(params_.k1);
    out.f64(params_.b);
    out.u64(docs_.size());
    out.u64(postings_.size());
    auto digest = sha256(payload.bytes());
    out.raw({reinterpret_cast<const char*>(digest.data()), digest.size()});
    out.raw(payload.bytes());
    return out.take();
}

Bm25Index Bm25Index::deserialize(std::string_view bytes)
{
    detail::ByteReader in(bytes);
    if (in.raw(magic.size()) != magic)
        throw Error(ErrorKind::corrupt_file, "not a BM25 snapshot");
    const auto version = in.u32();
    if (version != format_version)
        throw Error(ErrorKind::version_mismatch,
                    "BM25 snapshot version " + std::to_string(version) + ", expected " +
                        std::to_string(format_version));
    Bm25Index index;
    index.params_.k1 = in.f64();
    index.params_.b = in.f64();
    const auto n_docs = in.u64();
    const auto n_terms = in.u64();
    auto stored = in.raw(32);
    auto payload_bytes = bytes.substr(in.position());
    auto digest = sha256(payload_bytes);
    if (stored != std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()))
        throw Error(ErrorKind::corrupt_file, "BM25 snapshot checksum mismatch");
    index.params_.validate();

    detail::ByteReader p(payload_bytes);
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        MuragId id(p.str());
        const auto kind = p.u8();
        if (kind > static_cast<std::uint8_t>(LexicalKind::collection_description))
            throw Error(ErrorKind::corrupt_file, "unknown lexical kind in BM25 snapshot");
        auto text = p.str();
        const auto length = p.u32();
        if (!index.by_id_.emplace(id.value(), static_cast<std::uint32_t>(i)).second)
            throw Error(ErrorKind::corrupt_file, "duplicate id in BM25 snapshot");
        index.docs_.push_back({std::move(id), static_cast<LexicalKind>(kind), std::move(text), length});
    }
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        auto term = p.str();
        const auto count = p.u32();
        std::vector<Posting> list;
        list.reserve(count);
        for (std::uint32_t j = 0; j < count; ++j) {
            const auto doc = p.u32();
            const auto tf = p.u32();
            if (doc >= n_docs)
                throw Error(ErrorKind::corrupt_file, "BM25 posting out of range");
            list.push_back({doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    if (p.remaining() != 0)
        throw Error(ErrorKind::corrupt_file, "trailing bytes in BM25 snapshot");
    index.finalize();
    return index;
}

void Bm25Index::persist(const std::filesystem::path& path) const
{
    write_file(path, serialize());
}

Bm25Index Bm25Index::load(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorKind::not_found, "no BM25 snapshot at " + path.string());
    return deserialize(read_file(path));
}

} // namespace exhibit
