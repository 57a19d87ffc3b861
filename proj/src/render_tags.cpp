// SPDX-License-Identifier: Apache-2.0
#include "exhibit/render_tags.hpp"

#include <regex>

namespace exhibit {

std::string_view tag_name(RenderKind kind)
{
    return kind == RenderKind::record ? "FundusRecord" : "FundusCollection";
}

std::string RenderTag::serialize() const
{
    return "<" + std::string(tag_name(kind)) + " murag_id='" + murag_id.value() + "' />";
}

std::string ParsedMarkdown::render() const
{
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        out += segments[i];
        if (i < tags.size())
            out += tags[i].serialize();
    }
    return out;
}

ParsedMarkdown parse_render_tags(std::string_view markdown)
{
    static const std::regex tag_re(R"(<(FundusRecord|FundusCollection)\s+murag_id\s*=\s*'([^'<>\s]+)'\s*/>)");

    ParsedMarkdown out;
    auto begin = markdown.begin();
    std::match_results<std::string_view::const_iterator> m;
    auto cursor = begin;
    while (std::regex_search(cursor, markdown.end(), m, tag_re)) {
        out.segments.emplace_back(cursor, m[0].first);
        out.tags.push_back({m[1].str() == "FundusRecord" ? RenderKind::record : RenderKind::collection,
                            MuragId(m[2].str())});
        cursor = m[0].second;
    }
    out.segments.emplace_back(cursor, markdown.end());
    return out;
}

ParsedMarkdown filter_render_tags(const ParsedMarkdown& parsed, const std::function<bool(const RenderTag&)>& keep,
                                  std::vector<RenderTag>* dropped)
{
    ParsedMarkdown out;
    out.segments.push_back(parsed.segments.empty() ? std::string{} : parsed.segments.front());
    for (std::size_t i = 0; i < parsed.tags.size(); ++i) {
        const auto& next = parsed.segments.at(i + 1);
        if (keep(parsed.tags[i])) {
            out.tags.push_back(parsed.tags[i]);
            out.segments.push_back(next);
        } else {
            if (dropped)
                dropped->push_back(parsed.tags[i]);
            out.segments.back() += next;
        }
    }
    return out;
}

} // namespace exhibit
