// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exhibit {

/// Corpus-wide unique identifier of a stored record or collection.
class MuragId {
public:
    MuragId() = default;
    /// Throws Error(invalid_argument) when `value` is empty.
    explicit MuragId(std::string value);

    const std::string& value() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const MuragId&) const = default;
    bool operator==(const MuragId&) const = default;

private:
    std::string value_;
};

struct ContactInfo {
    std::string name;
    std::string email;

    bool operator==(const ContactInfo&) const = default;
};

struct FieldSpec {
    std::string name;
    std::string label;
    std::string label_de;

    bool operator==(const FieldSpec&) const = default;
};

struct CollectionDescriptor {
    MuragId murag_id;
    std::string collection_name;
    std::string title;
    std::string title_de;
    std::string description;
    std::string description_de;
    std::vector<ContactInfo> contacts;
    std::vector<std::string> title_fields;
    std::vector<FieldSpec> fields;

    bool has_field(std::string_view name) const;
    bool operator==(const CollectionDescriptor&) const = default;
};

struct RecordDescriptor {
    MuragId murag_id;
    std::int64_t fundus_id = 0;
    std::string title;
    std::string catalogno;
    std::string collection_name;
    std::string image_name;
    std::map<std::string, std::string> details;

    bool operator==(const RecordDescriptor&) const = default;
};

/// Fixed-dimension vector in the shared text/image embedding space. Always
/// unit-normalized once constructed.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Scales `raw` to unit Euclidean norm. Throws Error(invalid_argument) for
    /// empty, zero or non-finite input.
    static EmbeddingVector normalized(std::vector<float> raw);

    std::span<const float> components() const noexcept { return components_; }
    std::size_t dimension() const noexcept { return components_.size(); }
    double norm() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<float> c) : components_(std::move(c)) {}
    std::vector<float> components_;
};

/// Schema violations are returned as data; an empty list means ok.
using Violations = std::vector<std::string>;

Violations validate_collection(const CollectionDescriptor& candidate,
                               std::span<const CollectionDescriptor> corpus);

/// `parent` is null when the record's collection_name resolves to nothing.
Violations validate_record(const RecordDescriptor& candidate, const CollectionDescriptor* parent);

/// Values of parent.title_fields present in record.details, in title_fields
/// order, joined by ", "; record.title when none is present.
std::string derive_title(const RecordDescriptor& record, const CollectionDescriptor& parent);

/// Deterministic content-hash identifiers (lowercase hex), stable across
/// ingest runs.
MuragId make_record_id(std::string_view collection_name, std::string_view catalogno,
                       std::string_view image_name);
MuragId make_collection_id(std::string_view collection_name);

bool is_url_safe(std::string_view name);
bool is_valid_email(std::string_view email);

void to_json(nlohmann::json& j, const MuragId& id);
void from_json(const nlohmann::json& j, MuragId& id);
void to_json(nlohmann::json& j, const ContactInfo& c);
void from_json(const nlohmann::json& j, ContactInfo& c);
void to_json(nlohmann::json& j, const FieldSpec& f);
void from_json(const nlohmann::json& j, FieldSpec& f);
void to_json(nlohmann::json& j, const CollectionDescriptor& c);
void from_json(const nlohmann::json& j, CollectionDescriptor& c);
void to_json(nlohmann::json& j, const RecordDescriptor& r);
void from_json(const nlohmann::json& j, RecordDescriptor& r);

} // namespace exhibit

template <>
struct std::hash<exhibit::MuragId> {
    std::size_t operator()(const exhibit::MuragId& id) const noexcept
    {
        return std::hash<std::string>{}(id.value());
    }
};
