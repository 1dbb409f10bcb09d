#pragma once

#include <string>

#include "json.hpp"
#include "lte/error.hpp"
#include "lte/forest.hpp"
#include "lte/label_tree.hpp"

namespace lte::serde {

/// Parses a JSON document; IO and parse failures become ValidationError.
nlohmann::json read_json_file(const std::string& path);

/// Writes compact JSON. nlohmann::json keeps keys sorted, so output is
/// deterministic for identical values.
void write_json_file(const std::string& path, const nlohmann::json& doc);

/// Required-field access; missing keys become ValidationError.
const nlohmann::json& field(const nlohmann::json& doc, const char* key);

/// field() plus type conversion; wrong types become ValidationError.
template <typename T>
T get_as(const nlohmann::json& doc, const char* key) {
    try {
        return field(doc, key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("JSON field has wrong type: ") + key);
    }
}

/// Checks the {"schema_version", "kind"} envelope of a model file.
void check_envelope(const nlohmann::json& doc, const char* kind);

/// Forest payload without the file envelope, so forests can nest inside
/// larger model bundles.
nlohmann::json forest_to_json(const RandomForest& forest);
RandomForest forest_from_json(const nlohmann::json& doc);

/// Label tree payload without the file envelope.
nlohmann::json label_tree_to_json(const LabelTree& tree);
LabelTree label_tree_from_json(const nlohmann::json& doc);

inline constexpr const char* kSchemaVersion = "1.0";

} // namespace lte::serde
