// SPDX-License-Identifier: Apache-2.0
#include "exhibit/prompts.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

namespace exhibit {

namespace prompts {

std::string_view file_name(PromptId id)
{
    switch (id) {
    case PromptId::agent_system: return "agent_system.md";
    case PromptId::rewrite_text_to_image: return "rewrite_text_to_image.md";
    case PromptId::rewrite_text_to_text: return "rewrite_text_to_text.md";
    case PromptId::vqa: return "vqa.md";
    case PromptId::caption: return "caption.md";
    case PromptId::ocr: return "ocr.md";
    case PromptId::detect_objects: return "detect_objects.md";
    }
    return {};
}

std::string_view text(PromptId id)
{
    switch (id) {
    case PromptId::agent_system: return embedded::agent_system_md;
    case PromptId::rewrite_text_to_image: return embedded::rewrite_text_to_image_md;
    case PromptId::rewrite_text_to_text: return embedded::rewrite_text_to_text_md;
    case PromptId::vqa: return embedded::vqa_md;
    case PromptId::caption: return embedded::caption_md;
    case PromptId::ocr: return embedded::ocr_md;
    case PromptId::detect_objects: return embedded::detect_objects_md;
    }
    return {};
}

std::string_view frozen_sha256(PromptId id)
{
    switch (id) {
    case PromptId::agent_system: return "66ccd63c2231f7bd9d2ff83874fb3e3e1f2735436aa36e83dbff21730dbad29d";
    case PromptId::rewrite_text_to_image: return "b32c4332d60cc8e78e05058343e8784858f59bc0a51972edb416336aded0310b";
    case PromptId::rewrite_text_to_text: return "64c64011a1005db7fca2d79cd57ccac69c74d0639417169185a00556d97f089d";
    case PromptId::vqa: return "b66789bbb94aa0441be609bad64fc83bb30d1759807d75c40e2dd4d77a06a546";
    case PromptId::caption: return "16704526731b3925bd61a1e8f5a88a18de49278569dcd127416b33ad971fe7e8";
    case PromptId::ocr: return "84a7c5f8875ca9850b59d4cefd3f74bc554398612db4405fbc322f3ad8be8fd6";
    case PromptId::detect_objects: return "bfd5921d5cbb6cae05f739f2fd2e81b5add51d8476afe53456d33c74ca5613c7";
    }
    return {};
}

} // namespace prompts

PromptCatalog::PromptCatalog()
{
    for (auto id : prompts::all_prompts)
        texts_[id] = std::string(prompts::text(id));
}

PromptCatalog PromptCatalog::from_directory(const std::filesystem::path& dir)
{
    PromptCatalog catalog;
    for (auto id : prompts::all_prompts) {
        const auto path = dir / prompts::file_name(id);
        std::string body;
        try {
            body = read_file(path);
        } catch (const Error&) {
            throw Error(ErrorKind::configuration, "missing prompt file " + path.string());
        }
        if (sha256_hex(body) != prompts::frozen_sha256(id))
            throw Error(ErrorKind::configuration, "prompt file " + path.string() + " does not match its frozen checksum");
        catalog.texts_[id] = std::move(body);
    }
    return catalog;
}

const std::string& PromptCatalog::get(prompts::PromptId id) const
{
    return texts_.at(id);
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to)
{
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

} // namespace

std::string build_system_prompt(const PromptConfig& config, const PromptCatalog& catalog)
{
    std::string out = catalog.get(prompts::PromptId::agent_system);
    replace_all(out, "{{basic_information}}", config.basic_information);
    replace_all(out, "{{portal_name}}", config.portal_name);
    return out;
}

} // namespace exhibit
