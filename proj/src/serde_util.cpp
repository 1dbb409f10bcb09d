#include "serde_util.hpp"

#include <fstream>

#include "lte/error.hpp"

namespace lte::serde {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    require(!doc.is_discarded(), "invalid JSON in file: " + path);
    return doc;
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path);
    out << doc.dump() << '\n';
    out.flush();
    require(out.good(), "failed to write file: " + path);
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
    auto it = doc.find(key);
    require(it != doc.end(), std::string("missing JSON field: ") + key);
    return *it;
}

void check_envelope(const nlohmann::json& doc, const char* kind) {
    require(doc.is_object(), "model file is not a JSON object");
    require(get_as<std::string>(doc, "schema_version") == kSchemaVersion,
            "unsupported schema_version, expected " + std::string(kSchemaVersion));
    require(get_as<std::string>(doc, "kind") == kind,
            std::string("wrong model kind, expected ") + kind);
}

} // namespace lte::serde
