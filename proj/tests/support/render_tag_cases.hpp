// SPDX-License-Identifier: Apache-2.0
// Table of render-tag parses shared by the unit suite and the acceptance run.
#pragma once

#include "exhibit/render_tags.hpp"

#include <string>
#include <vector>

namespace testing {

struct TagCase {
    std::string input;
    std::vector<std::pair<exhibit::RenderKind, std::string>> tags;
    std::vector<std::string> segments;
};

inline const std::vector<TagCase>& render_tag_cases()
{
    using exhibit::RenderKind;
    constexpr auto R = RenderKind::record;
    constexpr auto C = RenderKind::collection;
    static const std::vector<TagCase> cases = {
        // well-formed
        {"See <FundusRecord murag_id='a1' /> here", {{R, "a1"}}, {"See ", " here"}},
        {"<FundusRecord murag_id='a1' /> <FundusRecord murag_id='b2' />", {{R, "a1"}, {R, "b2"}}, {"", " ", ""}},
        {"<FundusCollection murag_id='c1' />", {{C, "c1"}}, {"", ""}},
        {"<FundusCollection murag_id='c1' /> and <FundusRecord murag_id='r1' />", {{C, "c1"}, {R, "r1"}},
         {"", " and ", ""}},
        {"<FundusRecord murag_id='a1'/>", {{R, "a1"}}, {"", ""}},
        {"<FundusRecord   murag_id = 'a1'   />", {{R, "a1"}}, {"", ""}},
        {"<FundusRecord murag_id ='a1' />", {{R, "a1"}}, {"", ""}},
        {"<FundusRecord\tmurag_id='a1'\t/>", {{R, "a1"}}, {"", ""}},
        {"<FundusRecord\nmurag_id='a1' />", {{R, "a1"}}, {"", ""}},
        {"A\n<FundusRecord murag_id='a' />\nB\n<FundusCollection murag_id='b' />", {{R, "a"}, {C, "b"}},
         {"A\n", "\nB\n", ""}},
        {"- <FundusRecord murag_id='x9' />\n- <FundusRecord murag_id='y8' />", {{R, "x9"}, {R, "y8"}},
         {"- ", "\n- ", ""}},
        {"**<FundusRecord murag_id='a1' />**", {{R, "a1"}}, {"**", "**"}},
        {"<b>bold</b> <FundusRecord murag_id='a1' />", {{R, "a1"}}, {"<b>bold</b> ", ""}},
        {"<FundusRecord murag_id='a' /><FundusRecord murag_id='b' />", {{R, "a"}, {R, "b"}}, {"", "", ""}},
        {"<FundusRecord murag_id='423b17b50208bf97a7a2ccba8d2c231b' />",
         {{R, "423b17b50208bf97a7a2ccba8d2c231b"}},
         {"", ""}},
        {"<FundusRecord murag_id='col-1_a:x' />", {{R, "col-1_a:x"}}, {"", ""}},
        {"<FundusRecord murag_id='äöü' />", {{R, "äöü"}}, {"", ""}},
        {"<FundusRecord murag_id='a1 <FundusRecord murag_id='b2' />", {{R, "b2"}},
         {"<FundusRecord murag_id='a1 ", ""}},
        {"Here: <FundusRecord murag_id='a' /> <FundusRecord murag_id='b' /> <FundusRecord murag_id='c' />",
         {{R, "a"}, {R, "b"}, {R, "c"}},
         {"Here: ", " ", " ", ""}},
        {"`<FundusRecord murag_id='...' />`", {{R, "..."}}, {"`", "`"}},
        {"<FundusRecord murag_id='a1' />.", {{R, "a1"}}, {"", "."}},
        {"<FundusRecord murag_id='a1' /> <FundusRecord murag_id='a1' />", {{R, "a1"}, {R, "a1"}}, {"", " ", ""}},
        {"<FundusRecord murag_id=a1 /> <FundusRecord murag_id='b2' />", {{R, "b2"}},
         {"<FundusRecord murag_id=a1 /> ", ""}},
        {"Intro.\n\n## Results\n\n<FundusCollection murag_id='c9' />", {{C, "c9"}},
         {"Intro.\n\n## Results\n\n", ""}},
        {"<FundusRecord murag_id='r' /> is a goose.", {{R, "r"}}, {"", " is a goose."}},
        {"<FundusCollection murag_id='c1' /><FundusRecord murag_id='r1' /> <FundusRecord murag_id='r2' />",
         {{C, "c1"}, {R, "r1"}, {R, "r2"}},
         {"", "", " ", ""}},
        {"<FundusRecord murag_id='1' /> <FundusRecord murag_id='2' /> <FundusRecord murag_id='3' /> "
         "<FundusRecord murag_id='4' /> <FundusRecord murag_id='5' />",
         {{R, "1"}, {R, "2"}, {R, "3"}, {R, "4"}, {R, "5"}},
         {"", " ", " ", " ", " ", ""}},
        {"Two collections:\n<FundusCollection murag_id='m' /> <FundusCollection murag_id='n' />\nDone.",
         {{C, "m"}, {C, "n"}},
         {"Two collections:\n", " ", "\nDone."}},
        // malformed: passes through literally
        {"<FundusRecord murag_id=a1 />", {}, {"<FundusRecord murag_id=a1 />"}},
        {"", {}, {""}},
        {"plain text", {}, {"plain text"}},
        {"<FundusRecord murag_id=\"a1\" />", {}, {"<FundusRecord murag_id=\"a1\" />"}},
        {"<FundusRecord murag_id='a1' >", {}, {"<FundusRecord murag_id='a1' >"}},
        {"<FundusRecord murag_id='a1'></FundusRecord>", {}, {"<FundusRecord murag_id='a1'></FundusRecord>"}},
        {"<fundusrecord murag_id='a1' />", {}, {"<fundusrecord murag_id='a1' />"}},
        {"<FundusItem murag_id='a1' />", {}, {"<FundusItem murag_id='a1' />"}},
        {"<FundusRecordmurag_id='a1' />", {}, {"<FundusRecordmurag_id='a1' />"}},
        {"<FundusRecord murag_id='' />", {}, {"<FundusRecord murag_id='' />"}},
        {"<FundusRecord murag_id='a 1' />", {}, {"<FundusRecord murag_id='a 1' />"}},
        {"<FundusRecord id='a1' />", {}, {"<FundusRecord id='a1' />"}},
        {"3 < 4 and 5 > 2", {}, {"3 < 4 and 5 > 2"}},
        {"<FundusRecord murag_id='a1' /", {}, {"<FundusRecord murag_id='a1' /"}},
        {"FundusRecord murag_id='a1' />", {}, {"FundusRecord murag_id='a1' />"}},
        {"<FundusRecord MURAG_ID='a1' />", {}, {"<FundusRecord MURAG_ID='a1' />"}},
        {"<FundusRecords murag_id='a1' />", {}, {"<FundusRecords murag_id='a1' />"}},
        {"<FundusCollection murag_id='c1' / >", {}, {"<FundusCollection murag_id='c1' / >"}},
        {"<FundusRecord murag_id='a'b' />", {}, {"<FundusRecord murag_id='a'b' />"}},
        {"&lt;FundusRecord murag_id='a1' /&gt;", {}, {"&lt;FundusRecord murag_id='a1' /&gt;"}},
        {"< FundusRecord murag_id='a1' />", {}, {"< FundusRecord murag_id='a1' />"}},
        {"<FundusRecord murag_id='a>1' />", {}, {"<FundusRecord murag_id='a>1' />"}},
    };
    return cases;
}

/// Empty string when the parse matches the case, else a description of the
/// first difference.
inline std::string check_tag_case(const TagCase& c)
{
    const auto parsed = exhibit::parse_render_tags(c.input);
    if (parsed.tags.size() != c.tags.size())
        return "expected " + std::to_string(c.tags.size()) + " tags, got " + std::to_string(parsed.tags.size());
    for (std::size_t i = 0; i < c.tags.size(); ++i)
        if (parsed.tags[i].kind != c.tags[i].first || parsed.tags[i].murag_id.value() != c.tags[i].second)
            return "tag " + std::to_string(i) + " is " + parsed.tags[i].serialize();
    if (parsed.segments != c.segments)
        return "segments differ";
    // parsing the canonical rendering must give the same structure back
    const auto again = exhibit::parse_render_tags(parsed.render());
    if (again.tags != parsed.tags || again.segments != parsed.segments)
        return "render/parse round trip differs";
    return {};
}

} // namespace testing
