// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace exhibit {

namespace prompts {

namespace embedded {
extern const std::string_view agent_system_md;
extern const std::string_view rewrite_text_to_image_md;
extern const std::string_view rewrite_text_to_text_md;
extern const std::string_view vqa_md;
extern const std::string_view caption_md;
extern const std::string_view ocr_md;
extern const std::string_view detect_objects_md;
} // namespace embedded

enum class PromptId { agent_system, rewrite_text_to_image, rewrite_text_to_text, vqa, caption, ocr, detect_objects };

inline constexpr PromptId all_prompts[] = {PromptId::agent_system,          PromptId::rewrite_text_to_image,
                                           PromptId::rewrite_text_to_text,  PromptId::vqa,
                                           PromptId::caption,               PromptId::ocr,
                                           PromptId::detect_objects};

/// File name under prompts/, e.g. "vqa.md".
std::string_view file_name(PromptId id);

/// Text compiled into the library.
std::string_view text(PromptId id);

/// SHA-256 (hex) of each canonical prompt file. A catalog whose files do not
/// hash to these values is rejected.
std::string_view frozen_sha256(PromptId id);

} // namespace prompts

/// Prompt texts by id. The default catalog serves the compiled-in copies;
/// from_directory() loads files from disk and checks them against the frozen
/// hashes (Error(configuration) on drift or missing files).
class PromptCatalog {
public:
    PromptCatalog();
    static PromptCatalog from_directory(const std::filesystem::path& dir);

    const std::string& get(prompts::PromptId id) const;

private:
    std::map<prompts::PromptId, std::string> texts_;
};

struct PromptConfig {
    std::string portal_name = "Collection Explorer";
    std::string basic_information =
        "The portal gives access to digitized objects from scientific and academic collections. "
        "Each collection is curated by its owning institution and holds records that describe "
        "individual objects, usually with a photograph and catalog metadata.";
};

/// Fills the agent template's {{portal_name}} and {{basic_information}}
/// placeholders. Pure.
std::string build_system_prompt(const PromptConfig& config = {}, const PromptCatalog& catalog = {});

} // namespace exhibit
