// SPDX-License-Identifier: Apache-2.0
#include "exhibit/tools.hpp"

#include "exhibit/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace exhibit {

using nlohmann::json;

namespace {

constexpr std::string_view invalid_arguments_kind = "invalid_arguments";
constexpr std::string_view unknown_tool_kind = "unknown_tool";

ParamSpec k_param()
{
    return {"k", ParamType::integer, "Maximum number of results (default 10).", false, {}};
}

ParamSpec image_source_param()
{
    return {"image_source", ParamType::string,
            "murag_id of a FundusRecord whose image to use, or the id of an image the user uploaded.", true, {}};
}

std::vector<ToolSpec> make_specs()
{
    return {
        {"get_corpus_stats", "Returns the number of records and collections and the record count per collection.", {}},
        {"get_record",
         "Looks up a single FundusRecord by its murag_id.",
         {{"murag_id", ParamType::string, "murag_id of the record.", true, {}}}},
        {"get_collection",
         "Looks up a single FundusCollection by its collection_name or murag_id.",
         {{"name_or_id", ParamType::string, "collection_name or murag_id of the collection.", true, {}}}},
        {"list_collections", "Lists all FundusCollections, sorted by collection_name.", {}},
        {"lexical_search_records",
         "Keyword (BM25) search over record titles.",
         {{"query", ParamType::string, "Keywords to search for.", true, {}}, k_param()}},
        {"lexical_search_collections",
         "Keyword (BM25) search over collection titles and descriptions.",
         {{"query", ParamType::string, "Keywords to search for.", true, {}}, k_param()}},
        {"similarity_search_records_by_text",
         "Semantic search for FundusRecords. target=image compares the query with record images, "
         "target=title with record titles.",
         {{"query", ParamType::string, "Natural-language description of what to find.", true, {}},
          k_param(),
          {"target", ParamType::enumeration, "Which record embedding to search (default image).", false,
           {"image", "title"}}}},
        {"similarity_search_collections_by_text",
         "Semantic search for FundusCollections by title, description or both.",
         {{"query", ParamType::string, "Natural-language description of what to find.", true, {}},
          k_param(),
          {"target", ParamType::enumeration, "Which collection embedding to search (default both).", false,
           {"title", "description", "both"}}}},
        {"similarity_search_records_by_image",
         "Finds FundusRecords whose images look similar to the given image.",
         {image_source_param(), k_param()}},
        {"image_vqa",
         "Answers a question about an image.",
         {image_source_param(), {"question", ParamType::string, "The question to answer.", true, {}}}},
        {"image_caption",
         "Writes a caption describing an image.",
         {image_source_param(), {"concise", ParamType::boolean, "Produce a short caption.", false, {}}}},
        {"image_ocr", "Extracts text visible in an image.", {image_source_param()}},
        {"image_detect_objects", "Detects prominent objects in an image with bounding boxes.", {image_source_param()}},
    };
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::int64_t box_value(const json& box, const char* key)
{
    if (!box.contains(key) || !box[key].is_number())
        throw Error(ErrorKind::malformed_model_output, std::string("bounding_box.") + key + " is not a number");
    return static_cast<std::int64_t>(std::llround(box[key].get<double>()));
}

std::string metadata_block(const json& metadata)
{
    if (metadata.is_null() || metadata.empty())
        return "Image metadata: none";
    return "Image metadata:\n" + metadata.dump(2);
}

} // namespace

void to_json(json& j, const DetectedObject& o)
{
    j = {{"name", o.name},
         {"description", o.description},
         {"bounding_box",
          {{"x", o.bounding_box.x},
           {"y", o.bounding_box.y},
           {"width", o.bounding_box.width},
           {"height", o.bounding_box.height}}}};
}

std::vector<DetectedObject> parse_detection_output(std::string_view text, std::optional<ImageSize> bounds)
{
    std::string body = trim(text);
    if (auto fence = body.find("```"); fence != std::string::npos) {
        auto start = body.find('\n', fence);
        auto end = start == std::string::npos ? std::string::npos : body.find("```", start);
        if (end == std::string::npos)
            throw Error(ErrorKind::malformed_model_output, "unterminated code fence");
        body = body.substr(start + 1, end - start - 1);
    }
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded())
        throw Error(ErrorKind::malformed_model_output, "detection output is not valid JSON");
    if (!parsed.is_array())
        throw Error(ErrorKind::malformed_model_output, "detection output is not a JSON array");

    std::vector<DetectedObject> out;
    for (const auto& item : parsed) {
        if (!item.is_object() || !item.contains("name") || !item["name"].is_string())
            throw Error(ErrorKind::malformed_model_output, "detected object lacks a name");
        if (!item.contains("bounding_box") || !item["bounding_box"].is_object())
            throw Error(ErrorKind::malformed_model_output, "detected object lacks a bounding_box");
        DetectedObject o;
        o.name = item["name"].get<std::string>();
        if (item.contains("description") && item["description"].is_string())
            o.description = item["description"].get<std::string>();
        const auto& box = item["bounding_box"];
        o.bounding_box = {box_value(box, "x"), box_value(box, "y"), box_value(box, "width"),
                          box_value(box, "height")};
        const auto& b = o.bounding_box;
        if (b.x < 0 || b.y < 0 || b.width <= 0 || b.height <= 0)
            throw Error(ErrorKind::malformed_model_output, "bounding box of " + o.name + " is degenerate");
        if (bounds && (b.x + b.width > std::int64_t(bounds->width) || b.y + b.height > std::int64_t(bounds->height)))
            throw Error(ErrorKind::malformed_model_output, "bounding box of " + o.name + " exceeds the image");
        out.push_back(std::move(o));
    }
    return out;
}

bool ToolOutcome::parameter_error() const
{
    return !ok && (error_kind == invalid_arguments_kind || error_kind == unknown_tool_kind ||
                   error_kind == to_string(ErrorKind::not_found) ||
                   error_kind == to_string(ErrorKind::invalid_argument));
}

std::string ToolOutcome::message() const
{
    if (ok)
        return payload.dump();
    return json{{"error_kind", error_kind}, {"detail", detail}}.dump();
}

ToolSuite::ToolSuite(ToolEnvironment env) : env_(std::move(env)), specs_(make_specs())
{
    if (!env_.store || !env_.embedder || !env_.gateway)
        throw Error(ErrorKind::configuration, "tool suite needs a store, an embedder and a gateway");
}

const ToolSpec* ToolSuite::find_spec(std::string_view name) const
{
    auto it = std::ranges::find(specs_, name, &ToolSpec::name);
    return it == specs_.end() ? nullptr : &*it;
}

ToolOutcome ToolSuite::dispatch(const ToolCall& call, const DispatchContext& ctx) const
{
    ToolOutcome out;
    const auto* spec = find_spec(call.name);
    if (!spec) {
        out.ok = false;
        out.error_kind = unknown_tool_kind;
        out.detail = "no tool named '" + call.name + "'";
        return out;
    }
    if (auto problem = validate_arguments(*spec, call.arguments)) {
        out.ok = false;
        out.error_kind = invalid_arguments_kind;
        out.detail = *problem;
        return out;
    }
    try {
        out.payload = run(call, ctx);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::script_exhausted)
            throw;
        out.ok = false;
        out.error_kind = to_string(e.kind());
        out.detail = e.what();
    }
    return out;
}

std::size_t ToolSuite::k_of(const json& args) const
{
    if (!args.contains("k"))
        return env_.default_k;
    const auto k = args["k"].get<double>();
    if (k < 1)
        throw Error(ErrorKind::invalid_argument, "k must be a positive integer");
    return static_cast<std::size_t>(k);
}

json ToolSuite::hits_json(const std::vector<SearchHit>& hits, bool records) const
{
    json out = json::array();
    for (const auto& h : hits) {
        json entry = {{"murag_id", h.id}, {"score", h.score}};
        if (records) {
            if (const auto* r = catalog().find_record(h.id)) {
                entry["title"] = catalog().display_title(*r);
                entry["collection_name"] = r->collection_name;
            }
        } else if (const auto* c = catalog().find_collection(h.id.value())) {
            entry["collection_name"] = c->collection_name;
            entry["title"] = c->title;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

json ToolSuite::run(const ToolCall& call, const DispatchContext& ctx) const
{
    const auto& a = call.arguments;
    const auto& name = call.name;
    if (name == "get_corpus_stats")
        return catalog().stats();
    if (name == "get_record")
        return catalog().get_record(a["murag_id"].get<std::string>());
    if (name == "get_collection")
        return catalog().get_collection(a["name_or_id"].get<std::string>());
    if (name == "list_collections") {
        json out = json::array();
        for (const auto& c : catalog().list_collections())
            out.push_back({{"murag_id", c.murag_id},
                           {"collection_name", c.collection_name},
                           {"title", c.title},
                           {"description", c.description}});
        return out;
    }
    if (name == "lexical_search_records")
        return hits_json(lexical_search_records(a["query"].get<std::string>(), k_of(a)), true);
    if (name == "lexical_search_collections")
        return hits_json(lexical_search_collections(a["query"].get<std::string>(), k_of(a)), false);
    if (name == "similarity_search_records_by_text") {
        const auto target = a.value("target", std::string("image")) == "title" ? RecordTextTarget::title
                                                                               : RecordTextTarget::image;
        std::string used;
        auto hits = records_by_text(a["query"].get<std::string>(), k_of(a), target, ctx.model, &used);
        return {{"query_used", used}, {"hits", hits_json(hits, true)}};
    }
    if (name == "similarity_search_collections_by_text") {
        const auto t = a.value("target", std::string("both"));
        const auto target = t == "title"         ? CollectionTextTarget::title
                            : t == "description" ? CollectionTextTarget::description
                                                 : CollectionTextTarget::both;
        std::string used;
        auto hits = collections_by_text(a["query"].get<std::string>(), k_of(a), target, ctx.model, &used);
        return {{"query_used", used}, {"hits", hits_json(hits, false)}};
    }

    const auto k = name == "similarity_search_records_by_image" ? k_of(a) : 0;
    const auto resolved = resolve_image(a["image_source"].get<std::string>(), ctx);
    if (name == "similarity_search_records_by_image")
        return hits_json(records_by_image(resolved.image, k), true);
    const auto metadata = image_metadata(resolved.record);
    if (name == "image_vqa")
        return {{"answer", vqa(resolved.image, a["question"].get<std::string>(), metadata, ctx.model)}};
    if (name == "image_caption")
        return {{"caption", caption(resolved.image, metadata, a.value("concise", false), ctx.model)}};
    if (name == "image_ocr")
        return {{"text", ocr(resolved.image, metadata, ctx.model)}};
    if (name == "image_detect_objects")
        return {{"objects", detect_objects(resolved.image, metadata, ctx.model)}};
    throw Error(ErrorKind::invalid_argument, "no handler for tool " + name);
}

std::vector<SearchHit> ToolSuite::lexical_search_records(std::string_view query, std::size_t k) const
{
    return env_.store->indexes.lexical.search(query, k, std::set<LexicalKind>{LexicalKind::record_title});
}

std::vector<SearchHit> ToolSuite::lexical_search_collections(std::string_view query, std::size_t k) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    const auto& lexical = env_.store->indexes.lexical;
    if (lexical.size() == 0)
        return {};
    auto raw = lexical.search(query, lexical.size(),
                              std::set<LexicalKind>{LexicalKind::collection_title, LexicalKind::collection_description});
    std::unordered_map<std::string, double> best;
    for (const auto& h : raw) {
        const auto& doc = h.id.value();
        const auto colon = doc.rfind(':');
        const auto id = colon == std::string::npos ? doc : doc.substr(0, colon);
        auto [it, inserted] = best.emplace(id, h.score);
        if (!inserted)
            it->second = std::max(it->second, h.score);
    }
    std::vector<SearchHit> out;
    for (const auto& [id, score] : best)
        out.push_back({MuragId(id), score});
    sort_hits(out);
    if (out.size() > k)
        out.resize(k);
    return out;
}

std::string ToolSuite::rewrite_query(const std::string& raw, RewriteMode mode, const std::string& model) const
{
    const auto prompt = mode == RewriteMode::text_to_image ? prompts::PromptId::rewrite_text_to_image
                                                           : prompts::PromptId::rewrite_text_to_text;
    try {
        auto response = env_.gateway->generate(env_.prompts.get(prompt), {ChatTurn::user(raw)}, {}, model);
        if (response.is_tool_calls())
            return raw;
        auto rewritten = trim(response.text());
        return rewritten.empty() ? raw : rewritten;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::script_exhausted)
            throw;
        return raw;
    }
}

std::vector<SearchHit> ToolSuite::search_field(VectorField field, const EmbeddingVector& query, std::size_t k) const
{
    return env_.store->indexes.vector(field).search(query, k, env_.ef_search);
}

std::vector<SearchHit> ToolSuite::records_by_text(const std::string& query, std::size_t k, RecordTextTarget target,
                                                  const std::string& model, std::string* used_query) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    if (trim(query).empty())
        throw Error(ErrorKind::invalid_argument, "query must not be empty");
    const auto mode = target == RecordTextTarget::image ? RewriteMode::text_to_image : RewriteMode::text_to_text;
    const auto rewritten = rewrite_query(query, mode, model);
    if (used_query)
        *used_query = rewritten;
    const auto field = target == RecordTextTarget::image ? VectorField::record_image : VectorField::record_title;
    return search_field(field, env_.embedder->embed_text(rewritten), k);
}

std::vector<SearchHit> ToolSuite::collections_by_text(const std::string& query, std::size_t k,
                                                      CollectionTextTarget target, const std::string& model,
                                                      std::string* used_query) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    if (trim(query).empty())
        throw Error(ErrorKind::invalid_argument, "query must not be empty");
    const auto rewritten = rewrite_query(query, RewriteMode::text_to_text, model);
    if (used_query)
        *used_query = rewritten;
    const auto vec = env_.embedder->embed_text(rewritten);
    if (target == CollectionTextTarget::title)
        return search_field(VectorField::collection_title, vec, k);
    if (target == CollectionTextTarget::description)
        return search_field(VectorField::collection_description, vec, k);

    std::unordered_map<std::string, double> best;
    for (auto field : {VectorField::collection_title, VectorField::collection_description})
        for (const auto& h : search_field(field, vec, k)) {
            auto [it, inserted] = best.emplace(h.id.value(), h.score);
            if (!inserted)
                it->second = std::max(it->second, h.score);
        }
    std::vector<SearchHit> out;
    for (const auto& [id, score] : best)
        out.push_back({MuragId(id), score});
    sort_hits(out);
    if (out.size() > k)
        out.resize(k);
    return out;
}

std::vector<SearchHit> ToolSuite::records_by_image(const ImageData& image, std::size_t k) const
{
    if (k == 0)
        throw Error(ErrorKind::invalid_argument, "k must be positive");
    return search_field(VectorField::record_image, env_.embedder->embed_image(image), k);
}

json ToolSuite::image_metadata(const RecordDescriptor* record) const
{
    if (!record)
        return json::object();
    return {{"title", catalog().display_title(*record)}, {"details", record->details}};
}

ToolSuite::ResolvedImage ToolSuite::resolve_image(const std::string& source, const DispatchContext& ctx) const
{
    if (ctx.uploads) {
        if (auto it = ctx.uploads->find(source); it != ctx.uploads->end())
            return {it->second, nullptr};
    }
    if (const auto* r = catalog().find_record(source)) {
        auto img = catalog().load_image(r->image_name);
        if (!img)
            throw Error(ErrorKind::not_found, "image of record " + source + " is not available");
        return {std::move(*img), r};
    }
    throw Error(ErrorKind::not_found, "no record or uploaded image with id " + source);
}

std::string ToolSuite::analyze(prompts::PromptId prompt, const ImageData& image, const std::string& instruction,
                               const std::string& model) const
{
    auto response = env_.gateway->generate(env_.prompts.get(prompt),
                                           {ChatTurn::user({ChatPart::image(image), ChatPart::text(instruction)})},
                                           {}, model);
    if (response.is_tool_calls())
        throw Error(ErrorKind::malformed_model_output, "image analysis answered with tool calls");
    return response.text();
}

std::string ToolSuite::vqa(const ImageData& image, const std::string& question, const json& metadata,
                           const std::string& model) const
{
    return analyze(prompts::PromptId::vqa, image, metadata_block(metadata) + "\n\nQuestion: " + question, model);
}

std::string ToolSuite::caption(const ImageData& image, const json& metadata, bool concise,
                               const std::string& model) const
{
    const std::string ask = concise ? "Write a concise caption for this image." : "Write a caption for this image.";
    return analyze(prompts::PromptId::caption, image, metadata_block(metadata) + "\n\n" + ask, model);
}

std::string ToolSuite::ocr(const ImageData& image, const json& metadata, const std::string& model) const
{
    return analyze(prompts::PromptId::ocr, image, metadata_block(metadata) + "\n\nExtract all text in this image.",
                   model);
}

std::vector<DetectedObject> ToolSuite::detect_objects(const ImageData& image, const json& metadata,
                                                      const std::string& model) const
{
    const auto bounds = image_dimensions(image.bytes());
    const auto& system = env_.prompts.get(prompts::PromptId::detect_objects);
    std::vector<ChatTurn> history{ChatTurn::user(
        {ChatPart::image(image),
         ChatPart::text(metadata_block(metadata) + "\n\nDetect the prominent objects in this image.")})};

    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto response = env_.gateway->generate(system, history, {}, model);
        const std::string text = response.is_tool_calls() ? std::string{} : response.text();
        try {
            if (response.is_tool_calls())
                throw Error(ErrorKind::malformed_model_output, "answered with tool calls");
            return parse_detection_output(text, bounds);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::malformed_model_output)
                throw;
            problem = e.what();
        }
        history.push_back(ChatTurn::assistant(text));
        history.push_back(ChatTurn::user("That answer could not be used (" + problem +
                                         "). Reply with only the JSON array in the required output format."));
    }
    throw Error(ErrorKind::malformed_model_output, "object detection output unusable after retry: " + problem);
}

} // namespace exhibit
