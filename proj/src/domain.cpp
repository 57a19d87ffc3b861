// SPDX-License-Identifier: Apache-2.0
#include "exhibit/domain.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace exhibit {

MuragId::MuragId(std::string value) : value_(std::move(value))
{
    if (value_.empty())
        throw Error(ErrorKind::invalid_argument, "murag_id must be non-empty");
}

bool CollectionDescriptor::has_field(std::string_view name) const
{
    return std::ranges::any_of(fields, [&](const FieldSpec& f) { return f.name == name; });
}

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw)
{
    if (raw.empty())
        throw Error(ErrorKind::invalid_argument, "embedding vector is empty");
    double sum = 0.0;
    for (float x : raw) {
        if (!std::isfinite(x))
            throw Error(ErrorKind::invalid_argument, "embedding vector has non-finite components");
        sum += static_cast<double>(x) * static_cast<double>(x);
    }
    if (sum == 0.0)
        throw Error(ErrorKind::invalid_argument, "embedding vector has zero norm");
    const double inv = 1.0 / std::sqrt(sum);
    for (float& x : raw)
        x = static_cast<float>(static_cast<double>(x) * inv);
    return EmbeddingVector(std::move(raw));
}

double EmbeddingVector::norm() const
{
    double sum = 0.0;
    for (float x : components_)
        sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

bool is_url_safe(std::string_view name)
{
    if (name.empty())
        return false;
    return std::ranges::all_of(name, [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_' || c == '.' || c == '~';
    });
}

bool is_valid_email(std::string_view email)
{
    auto at = email.find('@');
    if (at == std::string_view::npos || at == 0 || email.find('@', at + 1) != std::string_view::npos)
        return false;
    auto domain = email.substr(at + 1);
    auto dot = domain.find('.');
    if (dot == std::string_view::npos || dot == 0 || domain.back() == '.')
        return false;
    return std::ranges::none_of(email, [](char c) { return c == ' ' || c == '\t' || c == '\n'; });
}

Violations validate_collection(const CollectionDescriptor& candidate,
                               std::span<const CollectionDescriptor> corpus)
{
    Violations out;
    if (candidate.collection_name.empty())
        out.push_back("empty collection_name");
    else if (!is_url_safe(candidate.collection_name))
        out.push_back("collection_name is not URL-safe: " + candidate.collection_name);

    for (const auto& other : corpus) {
        if (other.collection_name == candidate.collection_name) {
            out.push_back("duplicate collection_name " + candidate.collection_name);
            break;
        }
    }
    if (candidate.title.empty())
        out.push_back("empty title");
    if (candidate.description.empty())
        out.push_back("empty description");

    std::set<std::string> seen;
    for (const auto& f : candidate.fields) {
        if (f.name.empty())
            out.push_back("empty field name");
        else if (!seen.insert(f.name).second)
            out.push_back("duplicate field " + f.name);
    }
    for (const auto& tf : candidate.title_fields) {
        if (!seen.contains(tf))
            out.push_back("dangling title field " + tf);
    }
    for (const auto& c : candidate.contacts) {
        if (c.name.empty())
            out.push_back("contact with empty name");
        if (!is_valid_email(c.email))
            out.push_back("invalid contact email " + c.email);
    }
    return out;
}

Violations validate_record(const RecordDescriptor& candidate, const CollectionDescriptor* parent)
{
    Violations out;
    if (parent == nullptr || parent->collection_name != candidate.collection_name) {
        out.push_back("unknown collection " + candidate.collection_name);
    } else {
        for (const auto& [key, value] : candidate.details) {
            if (!parent->has_field(key))
                out.push_back("unknown detail field " + key);
        }
    }
    if (candidate.image_name.empty())
        out.push_back("empty image_name");
    return out;
}

std::string derive_title(const RecordDescriptor& record, const CollectionDescriptor& parent)
{
    std::string out;
    for (const auto& field : parent.title_fields) {
        auto it = record.details.find(field);
        if (it == record.details.end() || it->second.empty())
            continue;
        if (!out.empty())
            out += ", ";
        out += it->second;
    }
    return out.empty() ? record.title : out;
}

namespace {

MuragId hashed_id(std::initializer_list<std::string_view> parts)
{
    std::string material;
    for (auto p : parts) {
        material.append(p);
        material.push_back('\x1f');
    }
    auto digest = sha256(material);
    return MuragId(to_hex(std::span(digest).first(16)));
}

} // namespace

MuragId make_record_id(std::string_view collection_name, std::string_view catalogno,
                       std::string_view image_name)
{
    return hashed_id({"record", collection_name, catalogno, image_name});
}

MuragId make_collection_id(std::string_view collection_name)
{
    return hashed_id({"collection", collection_name});
}

void to_json(nlohmann::json& j, const MuragId& id) { j = id.value(); }
void from_json(const nlohmann::json& j, MuragId& id) { id = MuragId(j.get<std::string>()); }

void to_json(nlohmann::json& j, const ContactInfo& c)
{
    j = {{"name", c.name}, {"email", c.email}};
}

void from_json(const nlohmann::json& j, ContactInfo& c)
{
    c.name = j.at("name").get<std::string>();
    c.email = j.value("email", "");
}

void to_json(nlohmann::json& j, const FieldSpec& f)
{
    j = {{"name", f.name}, {"label", f.label}, {"label_de", f.label_de}};
}

void from_json(const nlohmann::json& j, FieldSpec& f)
{
    f.name = j.at("name").get<std::string>();
    f.label = j.value("label", f.name);
    f.label_de = j.value("label_de", f.label);
}

void to_json(nlohmann::json& j, const CollectionDescriptor& c)
{
    j = {{"murag_id", c.murag_id},
         {"collection_name", c.collection_name},
         {"title", c.title},
         {"title_de", c.title_de},
         {"description", c.description},
         {"description_de", c.description_de},
         {"contacts", c.contacts},
         {"title_fields", c.title_fields},
         {"fields", c.fields}};
}

void from_json(const nlohmann::json& j, CollectionDescriptor& c)
{
    if (j.contains("murag_id"))
        c.murag_id = j.at("murag_id").get<MuragId>();
    c.collection_name = j.at("collection_name").get<std::string>();
    c.title = j.value("title", "");
    c.title_de = j.value("title_de", "");
    c.description = j.value("description", "");
    c.description_de = j.value("description_de", "");
    c.contacts = j.value("contacts", std::vector<ContactInfo>{});
    c.title_fields = j.value("title_fields", std::vector<std::string>{});
    c.fields = j.value("fields", std::vector<FieldSpec>{});
}

void to_json(nlohmann::json& j, const RecordDescriptor& r)
{
    j = {{"murag_id", r.murag_id},
         {"fundus_id", r.fundus_id},
         {"title", r.title},
         {"catalogno", r.catalogno},
         {"collection_name", r.collection_name},
         {"image_name", r.image_name},
         {"details", r.details}};
}

void from_json(const nlohmann::json& j, RecordDescriptor& r)
{
    if (j.contains("murag_id"))
        r.murag_id = j.at("murag_id").get<MuragId>();
    r.fundus_id = j.at("fundus_id").get<std::int64_t>();
    r.title = j.value("title", "");
    r.catalogno = j.value("catalogno", "");
    r.collection_name = j.at("collection_name").get<std::string>();
    r.image_name = j.value("image_name", "");
    r.details = j.value("details", std::map<std::string, std::string>{});
}

} // namespace exhibit
