// SPDX-License-Identifier: Apache-2.0
#include "exhibit/embedding.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <numbers>

namespace exhibit {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t load_le64(const std::uint8_t* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

// uniform in (0, 1]
double unit_interval(std::uint64_t bits)
{
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

} // namespace

std::vector<EmbeddingVector> EmbeddingProvider::embed_text(std::span<const std::string> texts)
{
    if (texts.empty())
        throw Error(ErrorKind::invalid_argument, "embed_text needs at least one text");
    for (const auto& t : texts)
        if (t.empty())
            throw Error(ErrorKind::invalid_argument, "embed_text received an empty text");

    auto raw = raw_embed_text(texts);
    if (raw.size() != texts.size())
        throw Error(ErrorKind::malformed_response,
                    "expected " + std::to_string(texts.size()) + " vectors, got " + std::to_string(raw.size()));
    std::vector<EmbeddingVector> out;
    out.reserve(raw.size());
    for (auto& v : raw) {
        if (v.size() != dimension())
            throw Error(ErrorKind::malformed_response,
                        "embedding has dimension " + std::to_string(v.size()) + ", expected " +
                            std::to_string(dimension()));
        try {
            out.push_back(EmbeddingVector::normalized(std::move(v)));
        } catch (const Error& e) {
            throw Error(ErrorKind::malformed_response, e.what());
        }
    }
    return out;
}

EmbeddingVector EmbeddingProvider::embed_text(const std::string& text)
{
    return embed_text(std::span<const std::string>(&text, 1)).front();
}

EmbeddingVector EmbeddingProvider::embed_image(const ImageData& image)
{
    if (!is_supported_media_type(image.media_type()))
        throw Error(ErrorKind::unsupported_media_type, "unsupported media type " + image.media_type());
    if (image.empty())
        throw Error(ErrorKind::invalid_argument, "image payload is empty");
    if (image.size() > max_image_bytes())
        throw Error(ErrorKind::oversize_payload,
                    "image of " + std::to_string(image.size()) + " bytes exceeds limit of " +
                        std::to_string(max_image_bytes()));
    auto raw = raw_embed_image(image);
    if (raw.size() != dimension())
        throw Error(ErrorKind::malformed_response,
                    "embedding has dimension " + std::to_string(raw.size()) + ", expected " +
                        std::to_string(dimension()));
    try {
        return EmbeddingVector::normalized(std::move(raw));
    } catch (const Error& e) {
        throw Error(ErrorKind::malformed_response, e.what());
    }
}

StubEmbedder::StubEmbedder(std::size_t dimension, std::uint64_t seed, std::size_t max_image_bytes)
    : dimension_(dimension), seed_(seed), max_image_bytes_(max_image_bytes)
{
    if (dimension_ == 0)
        throw Error(ErrorKind::configuration, "embedding dimension must be positive");
}

std::vector<float> StubEmbedder::project(std::string_view bytes) const
{
    const auto digest = sha256(bytes);
    std::uint64_t key = seed_;
    for (int w = 0; w < 4; ++w)
        key = splitmix64(key ^ load_le64(digest.data() + 8 * w));

    std::vector<float> out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
        const double u1 = unit_interval(splitmix64(key + 2 * i));
        const double u2 = unit_interval(splitmix64(key + 2 * i + 1));
        out[i] = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
    }
    return out;
}

std::vector<std::vector<float>> StubEmbedder::raw_embed_text(std::span<const std::string> texts)
{
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts)
        out.push_back(project(t));
    return out;
}

std::vector<float> StubEmbedder::raw_embed_image(const ImageData& image)
{
    return project(image.bytes());
}

RemoteEmbedder::RemoteEmbedder(EmbeddingProviderConfig config) : config_(std::move(config))
{
    if (config_.dimension == 0)
        throw Error(ErrorKind::configuration, "embedding dimension must be positive");
    auto scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos)
        throw Error(ErrorKind::configuration, "embedding endpoint must be an http(s) URL: " + config_.endpoint);
    auto path = config_.endpoint.find('/', scheme + 3);
    scheme_host_port_ = config_.endpoint.substr(0, path);
    base_path_ = path == std::string::npos ? "" : config_.endpoint.substr(path);
    while (!base_path_.empty() && base_path_.back() == '/')
        base_path_.pop_back();
    in_flight_ = std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, config_.max_in_flight));
}

std::vector<std::vector<float>> RemoteEmbedder::post(const std::string& path, const std::string& body,
                                                     const std::string& content_type, std::size_t expected)
{
    in_flight_->acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{*in_flight_};

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        httplib::Client client(scheme_host_port_);
        const auto secs = config_.timeout.count() / 1000;
        const auto usecs = (config_.timeout.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        auto res = client.Post(base_path_ + path, body, content_type);
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status == 413)
            throw Error(ErrorKind::oversize_payload, "embedding service rejected payload size");
        if (res->status == 415)
            throw Error(ErrorKind::unsupported_media_type, "embedding service rejected media type");
        if (res->status != 200)
            throw Error(ErrorKind::malformed_response,
                        "embedding service answered HTTP " + std::to_string(res->status));

        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("vectors") ||
            !parsed["vectors"].is_array())
            throw Error(ErrorKind::malformed_response, "embedding response lacks a vectors array");
        std::vector<std::vector<float>> out;
        for (const auto& row : parsed["vectors"]) {
            if (!row.is_array())
                throw Error(ErrorKind::malformed_response, "embedding row is not an array");
            std::vector<float> v;
            v.reserve(row.size());
            for (const auto& x : row) {
                if (!x.is_number())
                    throw Error(ErrorKind::malformed_response, "embedding component is not a number");
                v.push_back(x.get<float>());
            }
            out.push_back(std::move(v));
        }
        if (out.size() != expected)
            throw Error(ErrorKind::malformed_response,
                        "expected " + std::to_string(expected) + " vectors, got " + std::to_string(out.size()));
        return out;
    }
    throw Error(ErrorKind::provider_unreachable,
                "embedding service unreachable after " + std::to_string(config_.retries + 1) +
                    " attempts: " + last_error);
}

std::vector<std::vector<float>> RemoteEmbedder::raw_embed_text(std::span<const std::string> texts)
{
    nlohmann::json body = {{"texts", nlohmann::json::array()}};
    for (const auto& t : texts)
        body["texts"].push_back(t);
    return post("/embed/text", body.dump(), "application/json", texts.size());
}

std::vector<float> RemoteEmbedder::raw_embed_image(const ImageData& image)
{
    return post("/embed/image", std::string(image.bytes()), image.media_type(), 1).front();
}

} // namespace exhibit
