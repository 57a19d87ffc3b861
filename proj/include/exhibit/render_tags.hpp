// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "exhibit/domain.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace exhibit {

enum class RenderKind { record, collection };

/// "FundusRecord" or "FundusCollection".
std::string_view tag_name(RenderKind kind);

struct RenderTag {
    RenderKind kind = RenderKind::record;
    MuragId murag_id;

    /// Canonical form: <FundusRecord murag_id='...' />
    std::string serialize() const;
    bool operator==(const RenderTag&) const = default;
};

/// Markdown split around render tags. segments.size() == tags.size() + 1;
/// segments[i] is the literal text before tags[i], the last segment follows
/// the last tag. Empty segments are kept so positions are unambiguous.
struct ParsedMarkdown {
    std::vector<std::string> segments;
    std::vector<RenderTag> tags;

    /// Segments interleaved with canonical tags.
    std::string render() const;
};

/// Grammar:
///   tag  := "<" kind ws+ "murag_id" ws* "=" ws* "'" id "'" ws* "/>"
///   kind := "FundusRecord" | "FundusCollection"
///   id   := one or more characters other than ', <, > and whitespace
/// Anything else, including double-quoted or unquoted ids, is literal text.
ParsedMarkdown parse_render_tags(std::string_view markdown);

/// Keeps tags for which `keep` returns true, drops the rest, and reports the
/// dropped ones through `dropped`.
ParsedMarkdown filter_render_tags(const ParsedMarkdown& parsed, const std::function<bool(const RenderTag&)>& keep,
                                  std::vector<RenderTag>* dropped = nullptr);

} // namespace exhibit
