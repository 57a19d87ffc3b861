// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/embedding.hpp"
#include "exhibit/lvlm.hpp"
#include "exhibit/prompts.hpp"
#include "exhibit/search_hit.hpp"
#include "exhibit/store.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace exhibit {

enum class RewriteMode { text_to_image, text_to_text };
enum class RecordTextTarget { image, title };
enum class CollectionTextTarget { title, description, both };

struct BoundingBox {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t width = 0;
    std::int64_t height = 0;

    bool operator==(const BoundingBox&) const = default;
};

struct DetectedObject {
    std::string name;
    std::string description;
    BoundingBox bounding_box;

    bool operator==(const DetectedObject&) const = default;
};

void to_json(nlohmann::json& j, const DetectedObject& o);

/// Parses object-detection output: a JSON array, optionally inside a
/// ```json fence. Boxes need x, y >= 0, width, height > 0 and, when `bounds`
/// is known, must lie inside the image.
/// Errors: malformed_model_output.
std::vector<DetectedObject> parse_detection_output(std::string_view text, std::optional<ImageSize> bounds);

struct ToolEnvironment {
    std::shared_ptr<const Store> store;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<const LvlmGateway> gateway;
    PromptCatalog prompts;
    std::size_t default_k = 10;
    /// Overrides each index's configured ef_search.
    std::optional<std::size_t> ef_search;
};

/// Per-run inputs a tool may need beyond its arguments.
struct DispatchContext {
    std::string model;
    /// User uploads of the current session, keyed by upload id.
    const std::map<std::string, ImageData>* uploads = nullptr;
};

/// Result of one tool call. Failures are data: {error_kind, detail}.
struct ToolOutcome {
    bool ok = true;
    nlohmann::json payload;
    std::string error_kind;
    std::string detail;

    /// True for failures the model can fix by changing its arguments
    /// (invalid_arguments, unknown_tool, not_found, invalid_argument).
    bool parameter_error() const;
    /// Content of the tool turn sent back to the model.
    std::string message() const;
};

/// The agent's tools: database lookup, lexical search, similarity search with
/// query rewriting, and image analysis. Stateless over an immutable store.
class ToolSuite {
public:
    explicit ToolSuite(ToolEnvironment env);

    const std::vector<ToolSpec>& specs() const noexcept { return specs_; }
    const ToolSpec* find_spec(std::string_view name) const;

    /// Validates arguments against the ToolSpec, runs the tool and folds any
    /// Error into the outcome. script_exhausted is rethrown.
    ToolOutcome dispatch(const ToolCall& call, const DispatchContext& ctx) const;

    const Catalog& catalog() const { return env_.store->catalog; }
    const ToolEnvironment& environment() const noexcept { return env_; }

    std::vector<SearchHit> lexical_search_records(std::string_view query, std::size_t k) const;
    /// Title and description hits folded per collection by max score.
    std::vector<SearchHit> lexical_search_collections(std::string_view query, std::size_t k) const;

    /// One LVLM call with the mode's instruction and no tools. Falls back to
    /// `raw` on any provider failure or unusable output. Never throws except
    /// script_exhausted.
    std::string rewrite_query(const std::string& raw, RewriteMode mode, const std::string& model) const;

    /// Embeds `query` as given (no rewriting) and searches `field`.
    std::vector<SearchHit> search_field(VectorField field, const EmbeddingVector& query, std::size_t k) const;

    std::vector<SearchHit> records_by_text(const std::string& query, std::size_t k, RecordTextTarget target,
                                           const std::string& model, std::string* used_query = nullptr) const;
    std::vector<SearchHit> collections_by_text(const std::string& query, std::size_t k,
                                               CollectionTextTarget target, const std::string& model,
                                               std::string* used_query = nullptr) const;
    std::vector<SearchHit> records_by_image(const ImageData& image, std::size_t k) const;

    std::string vqa(const ImageData& image, const std::string& question, const nlohmann::json& metadata,
                    const std::string& model) const;
    std::string caption(const ImageData& image, const nlohmann::json& metadata, bool concise,
                        const std::string& model) const;
    std::string ocr(const ImageData& image, const nlohmann::json& metadata, const std::string& model) const;
    /// One reprompt on unparseable output, then malformed_model_output.
    std::vector<DetectedObject> detect_objects(const ImageData& image, const nlohmann::json& metadata,
                                               const std::string& model) const;

    /// derive_title plus details of the record, or {} when none.
    nlohmann::json image_metadata(const RecordDescriptor* record) const;

private:
    struct ResolvedImage {
        ImageData image;
        const RecordDescriptor* record = nullptr;
    };
    ResolvedImage resolve_image(const std::string& source, const DispatchContext& ctx) const;
    std::string analyze(prompts::PromptId prompt, const ImageData& image, const std::string& instruction,
                        const std::string& model) const;
    nlohmann::json run(const ToolCall& call, const DispatchContext& ctx) const;
    nlohmann::json hits_json(const std::vector<SearchHit>& hits, bool records) const;
    std::size_t k_of(const nlohmann::json& args) const;

    ToolEnvironment env_;
    std::vector<ToolSpec> specs_;
};

} // namespace exhibit
