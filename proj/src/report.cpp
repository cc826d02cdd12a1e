#include "imtk/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace imtk {

std::string format_g17(double x) {
    if (std::isnan(x)) return "null";
    if (std::isinf(x)) x = (x > 0 ? 1e300 : -1e300);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void dump_rec(const Json& j, std::string& out, int depth) {
    const std::string pad(2 * static_cast<size_t>(depth), ' ');
    const std::string pad_in(2 * static_cast<size_t>(depth + 1), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                out += pad_in + nlohmann::json(it.key()).dump() + ": ";
                dump_rec(it.value(), out, depth + 1);
                if (i + 1 < j.size()) out += ",";
                out += "\n";
            }
            out += pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool flat = true;
            for (const auto& e : j)
                if (!is_scalar(e)) flat = false;
            if (flat) {
                out += "[";
                for (size_t i = 0; i < j.size(); ++i) {
                    dump_rec(j[i], out, depth);
                    if (i + 1 < j.size()) out += ", ";
                }
                out += "]";
            } else {
                out += "[\n";
                for (size_t i = 0; i < j.size(); ++i) {
                    out += pad_in;
                    dump_rec(j[i], out, depth + 1);
                    if (i + 1 < j.size()) out += ",";
                    out += "\n";
                }
                out += pad + "]";
            }
            return;
        }
        case Json::value_t::number_float:
            out += format_g17(j.get<double>());
            return;
        case Json::value_t::string:
            out += nlohmann::json(j.get<std::string>()).dump();
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const Json& j) {
    std::string out;
    dump_rec(j, out, 0);
    out += "\n";
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

Json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, dump_json(j));
}

Json matrix_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index jx = 0; jx < M.cols(); ++jx) row.push_back(M(i, jx));
        rows.push_back(row);
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw SchemaError(where + ": expected a non-empty array of rows");
    const size_t rows = j.size(), cols = j[0].size();
    Matrix M(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw SchemaError(where + "[" + std::to_string(r) + "]: ragged row");
        for (size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw SchemaError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                  "]: expected a number");
            M(r, c) = j[r][c].get<double>();
        }
    }
    return M;
}

Vector vector_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array");
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw SchemaError(where + "[" + std::to_string(i) + "]: expected a number");
        v(i) = j[i].get<double>();
    }
    return v;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        out += header[i];
        out += (i + 1 < header.size()) ? "," : "";
    }
    out += "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw DimensionError("write_csv: ragged row");
        for (size_t i = 0; i < row.size(); ++i) {
            out += format_g17(row[i]);
            out += (i + 1 < row.size()) ? "," : "";
        }
        out += "\n";
    }
    write_text_file(path, out);
}

Json RunManifest::to_json() const {
    Json j;
    j["command"] = command;
    j["config_paths"] = config_paths;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifacts"] = artifacts;
    return j;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace imtk
