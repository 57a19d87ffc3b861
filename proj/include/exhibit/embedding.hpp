// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/domain.hpp"
#include "exhibit/images.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace exhibit {

inline constexpr std::size_t default_embedding_dimension = 1152;
inline constexpr std::size_t default_max_image_bytes = 8u * 1024u * 1024u;

struct EmbeddingProviderConfig {
    std::string endpoint;
    std::size_t dimension = default_embedding_dimension;
    std::chrono::milliseconds timeout{10000};
    int retries = 2;
    std::size_t max_image_bytes = default_max_image_bytes;
    std::ptrdiff_t max_in_flight = 4;
};

/// Text and image embeddings in one aligned space. The public entry points
/// check preconditions, then validate and re-normalize whatever the backend
/// returns, so every vector handed out has length dimension() and unit norm.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::size_t max_image_bytes() const { return default_max_image_bytes; }

    /// Errors: invalid_argument (empty list or empty text),
    /// provider_unreachable, malformed_response.
    std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts);
    EmbeddingVector embed_text(const std::string& text);

    /// Errors: unsupported_media_type, oversize_payload, provider errors.
    EmbeddingVector embed_image(const ImageData& image);

protected:
    virtual std::vector<std::vector<float>> raw_embed_text(std::span<const std::string> texts) = 0;
    virtual std::vector<float> raw_embed_image(const ImageData& image) = 0;
};

/// Offline stand-in: SHA-256 of the input bytes keys a per-dimension 64-bit
/// hash stream, which is mapped to standard-normal deviates (Box-Muller) and
/// normalized. Pure; carries no semantic alignment between texts and images.
class StubEmbedder final : public EmbeddingProvider {
public:
    explicit StubEmbedder(std::size_t dimension = default_embedding_dimension, std::uint64_t seed = 0,
                          std::size_t max_image_bytes = default_max_image_bytes);

    std::size_t dimension() const override { return dimension_; }
    std::size_t max_image_bytes() const override { return max_image_bytes_; }

    std::vector<float> project(std::string_view bytes) const;

protected:
    std::vector<std::vector<float>> raw_embed_text(std::span<const std::string> texts) override;
    std::vector<float> raw_embed_image(const ImageData& image) override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::size_t max_image_bytes_;
};

/// HTTP client for an embedding service:
///   POST {endpoint}/embed/text   body {"texts":[...]}            -> {"vectors":[[...],...]}
///   POST {endpoint}/embed/image  body = raw bytes, Content-Type -> {"vectors":[[...]]}
/// Connection failures and 5xx responses are retried `retries` times.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(EmbeddingProviderConfig config);

    std::size_t dimension() const override { return config_.dimension; }
    std::size_t max_image_bytes() const override { return config_.max_image_bytes; }

protected:
    std::vector<std::vector<float>> raw_embed_text(std::span<const std::string> texts) override;
    std::vector<float> raw_embed_image(const ImageData& image) override;

private:
    std::vector<std::vector<float>> post(const std::string& path, const std::string& body,
                                         const std::string& content_type, std::size_t expected);

    EmbeddingProviderConfig config_;
    std::string scheme_host_port_;
    std::string base_path_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

} // namespace exhibit
