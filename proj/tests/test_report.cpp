#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "imtk/report.hpp"

using namespace imtk;

TEST_CASE("format_g17: 17 significant digits, non-finite capped") {
    CHECK(format_g17(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_g17(1.0) == "1");
    CHECK(format_g17(1e300) == "1.0000000000000001e+300");
    CHECK(format_g17(std::numeric_limits<double>::infinity()) == "1.0000000000000001e+300");
    CHECK(format_g17(-std::numeric_limits<double>::infinity()) == "-1.0000000000000001e+300");
    CHECK(format_g17(std::nan("")) == "null");
}

TEST_CASE("dump_json: fixed layout, key order preserved") {
    Json j;
    j["zeta"] = 1.5;
    j["alpha"] = Json::array({1.0, 2.0, 3.0});
    j["nested"] = Json{{"b", true}, {"a", nullptr}};
    const std::string s = dump_json(j);
    CHECK(s ==
          "{\n"
          "  \"zeta\": 1.5,\n"
          "  \"alpha\": [1, 2, 3],\n"
          "  \"nested\": {\n"
          "    \"b\": true,\n"
          "    \"a\": null\n"
          "  }\n"
          "}\n");
    // serialization is a pure function of the value
    CHECK(dump_json(j) == s);
}

TEST_CASE("matrix round trip through json") {
    Matrix M(2, 3);
    M << 1, 2, 3, 4, 5, 1.0 / 7.0;
    Json j = matrix_to_json(M);
    Matrix back = matrix_from_json(j, "M");
    CHECK((back - M).norm() == 0.0);

    Json ragged = Json::parse("[[1,2],[3]]");
    CHECK_THROWS_AS(matrix_from_json(ragged, "M"), SchemaError);
}

TEST_CASE("json file io and parse errors") {
    const std::string path = "/tmp/imtk_test_report.json";
    Json j;
    j["value"] = 0.1;
    write_json_file(path, j);
    Json back = parse_json_file(path);
    CHECK(back["value"].get<double>() == 0.1);

    write_text_file(path, "{not json");
    CHECK_THROWS_AS(parse_json_file(path), ParseError);
    CHECK_THROWS_AS(parse_json_file("/tmp/imtk_missing_file.json"), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("csv layout") {
    const std::string path = "/tmp/imtk_test_report.csv";
    write_csv(path, {"t", "err"}, {{0.0, 1.0}, {0.5, 1.0 / 3.0}});
    CHECK(read_text_file(path) == "t,err\n0,1\n0.5,0.33333333333333331\n");
    std::remove(path.c_str());
}

TEST_CASE("run manifest fields") {
    RunManifest m;
    m.command = "verify-all";
    m.config_paths = {"fixtures/sys_lin2.json"};
    m.seed = 42;
    m.started_at = "2020-01-01T00:00:00Z";
    m.finished_at = "2020-01-01T00:00:01Z";
    m.artifacts = {"out/report.json"};
    Json j = m.to_json();
    CHECK(j["command"] == "verify-all");
    CHECK(j["seed"] == 42);
    CHECK(j["tool_version"] == std::string(kToolVersion));
}
