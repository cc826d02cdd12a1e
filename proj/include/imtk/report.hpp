#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "imtk/linalg.hpp"

namespace imtk {

// Insertion-ordered JSON so report key order is fixed by construction order.
using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "imtk 1.0.0";

// "%.17g" with non-finite values made JSON-safe (+-inf -> +-1e300, nan -> null
// handled by the dumper).
std::string format_g17(double x);

// Deterministic serializer: 2-space indent, fixed key order, every float
// printed with 17 significant digits, trailing newline. Arrays of scalars stay
// on one line so matrices render one row per line.
std::string dump_json(const Json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

Json parse_json_file(const std::string& path);  // ParseError on unreadable/invalid input
void write_json_file(const std::string& path, const Json& j);

Json matrix_to_json(const Matrix& M);  // nested arrays, row-major
Json vector_to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& where);  // SchemaError on shape
Vector vector_from_json(const Json& j, const std::string& where);

// rows of doubles under a fixed header, all values "%.17g"
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Provenance record for a CLI run. Timestamps live here and only here; every
// other artifact is byte-reproducible for a fixed seed.
struct RunManifest {
    std::string command;
    std::vector<std::string> config_paths;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::string started_at, finished_at;
    std::vector<std::string> artifacts;
    Json to_json() const;
};

std::string iso8601_now();

}  // namespace imtk
