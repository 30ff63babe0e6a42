#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "srsanon/io.hpp"

using namespace srsanon;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = FIXTURES;

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "srsanon-io-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string read_file(const fs::path& p) { return io_detail::read_file(p); }

}  // namespace

TEST_CASE("interval cells parse as points or ranges") {
    CHECK(io_detail::parse_interval("30") == Interval::point(30));
    CHECK(io_detail::parse_interval("20-30") == Interval(20, 30));
    CHECK(io_detail::parse_interval("2.5-3.5") == Interval(2.5, 3.5));
    CHECK(io_detail::parse_interval("-5") == Interval::point(-5));
    CHECK(io_detail::format_interval(Interval(20, 30)) == "20-30");
    CHECK(io_detail::format_interval(Interval::point(42)) == "42");
    CHECK_THROWS_AS(io_detail::parse_interval("abc"), std::exception);
}

TEST_CASE("doubles render in shortest round-trip form") {
    CHECK(io_detail::format_double(30.0) == "30");
    CHECK(io_detail::format_double(0.5) == "0.5");
    const double v = 37.100000000000001;
    double back = 0.0;
    std::sscanf(io_detail::format_double(v).c_str(), "%lf", &back);
    CHECK(back == v);
}

TEST_CASE("taxonomy files round trip") {
    auto tree = load_taxonomy(kFixtures + "/example2/age.json");
    CHECK(tree.root() == "Any");
    CHECK(tree.size() == 9);
    CHECK(tree.ancestors("In-school") ==
          std::vector<std::string>{"Child", "Non-adult", "Any"});

    auto dir = temp_dir();
    store_taxonomy(dir / "age.json", tree);
    auto again = load_taxonomy(dir / "age.json");
    CHECK(again.size() == tree.size());
    for (const auto& n : tree.nodes()) {
        REQUIRE(again.contains(n));
        CHECK(again.ancestors(n) == tree.ancestors(n));
    }
}

TEST_CASE("taxonomy loader rejects malformed files") {
    auto dir = temp_dir();
    write_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_taxonomy(dir / "bad.json"), FormatError);
    write_file(dir / "rootless.json", "{}");
    CHECK_THROWS_AS(load_taxonomy(dir / "rootless.json"), FormatError);
    write_file(dir / "dup.json",
               R"({"root":{"name":"r","children":[{"name":"a"},{"name":"a"}]}})");
    CHECK_THROWS_AS(load_taxonomy(dir / "dup.json"), FormatError);
    CHECK_THROWS_AS(load_taxonomy(dir / "missing.json"), FormatError);
}

TEST_CASE("theta files") {
    auto dir = temp_dir();
    write_file(dir / "theta.json", R"({"default":0.4,"values":{"HIV":0.2}})");
    auto theta = load_theta(dir / "theta.json");
    CHECK(theta.at("HIV") == 0.2);
    CHECK(theta.at("Flu") == 0.4);
    write_file(dir / "nodefault.json", R"({"values":{"HIV":0.2}})");
    CHECK_THROWS_AS(load_theta(dir / "nodefault.json"), FormatError);
    write_file(dir / "badrange.json", R"({"default":1.4})");
    CHECK_THROWS_AS(load_theta(dir / "badrange.json"), SchemaError);
}

TEST_CASE("schema files resolve taxonomies next to the schema by default") {
    auto schema = load_schema(kFixtures + "/tablei/schema.json");
    CHECK(schema.categorical.size() == 1);
    CHECK(schema.numeric.size() == 1);
    CHECK(schema.sensitive == std::vector<std::string>{"Disease"});
    CHECK(schema.tree("Gender").contains("Female"));
    CHECK(schema.num_attr("Age").max == 120.0);
}

TEST_CASE("record loading splits multivalued cells and rejects bad rows") {
    auto schema = load_schema(kFixtures + "/tablei/schema.json");
    auto dir = temp_dir();
    write_file(dir / "in.csv",
               "CaseID,Gender,Age,Disease\n"
               "7,Male,35,Diabetes;Flu\n"
               "8,Male,,Fever\n"        // missing value
               "9,Male,abc,Fever\n"     // unparseable numeric
               "10,Male,200,Fever\n"    // out of bounds
               "11,Male,40\n"           // wrong cell count
               "\n"
               "12,Female,50,Fever\n");
    auto rep = load_records(dir / "in.csv", schema);
    REQUIRE(rep.records.size() == 2);
    CHECK(rep.records[0].case_id == "7");
    CHECK(rep.records[0].sens.at("Disease") == std::set<std::string>{"Diabetes", "Flu"});
    CHECK(rep.records[1].case_id == "12");
    CHECK(rep.rejected == 4);
    CHECK(rep.reasons.size() == 4);

    write_file(dir / "badheader.csv", "Case,Gender,Age,Disease\n");
    CHECK_THROWS_AS(load_records(dir / "badheader.csv", schema), FormatError);
    write_file(dir / "empty.csv", "CaseID,Gender,Age,Disease\n");
    CHECK(load_records(dir / "empty.csv", schema).records.empty());
    write_file(dir / "blank.csv", "");
    CHECK_THROWS_AS(load_records(dir / "blank.csv", schema), FormatError);
}

TEST_CASE("record store/load round trip") {
    auto schema = load_schema(kFixtures + "/tablei/schema.json");
    auto rep = load_records(kFixtures + "/tablei/D_2.csv", schema);
    auto dir = temp_dir();
    store_records(dir / "out.csv", rep.records, schema);
    auto again = load_records(dir / "out.csv", schema);
    CHECK(again.records == rep.records);
    // A second store is byte-identical.
    store_records(dir / "out2.csv", again.records, schema);
    CHECK(read_file(dir / "out.csv") == read_file(dir / "out2.csv"));
}

TEST_CASE("release store/load round trip is byte-identical") {
    auto schema = load_schema(kFixtures + "/tablei/schema.json");
    auto release = load_release(kFixtures + "/tablei/R_1.csv", schema, 1);
    REQUIRE(release.records.size() == 8);
    CHECK(release.records[0].cat.at("Gender") == "Male");
    CHECK(release.records[0].num.at("Age") == Interval(20, 30));
    CHECK(release.records[4].cat.at("Gender") == "Any");
    CHECK(release.records[0].group_id == 1);

    auto dir = temp_dir();
    store_release(dir / "R.csv", release, schema);
    CHECK(read_file(dir / "R.csv") == read_file(kFixtures + "/tablei/R_1.csv"));

    // Published values must be taxonomy nodes.
    write_file(dir / "bad.csv", "CaseID,Gender,Age,Disease,GroupID\n1,Alien,20-30,Flu,1\n");
    CHECK_THROWS_AS(load_release(dir / "bad.csv", schema, 1), FormatError);
}

TEST_CASE("history directories persist releases with their manifest") {
    auto schema = load_schema(kFixtures + "/tablei/schema.json");
    auto fixture = load_history(kFixtures + "/tablei");
    REQUIRE(fixture.entries.size() == 3);
    CHECK(fixture.entries[1].index == 2);
    CHECK(fixture.load_releases(schema).size() == 3);
    CHECK(fixture.load_raw(schema)[2].size() == 8);

    // Appending writes both tables and the updated manifest atomically.
    auto dir = temp_dir();
    History h;
    h.dir = dir / "history";
    auto release = load_release(kFixtures + "/tablei/R_1.csv", schema, 1);
    auto raw = load_records(kFixtures + "/tablei/D_1.csv", schema).records;
    PrivacyConfig cfg;
    cfg.k = 4;
    cfg.theta.default_theta = 0.5;
    append_history(h, release, raw, schema, cfg);
    auto back = load_history(h.dir);
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].k == 4);
    CHECK(back.load_releases(schema)[0].records.size() == 8);
    CHECK(back.load_raw(schema)[0] == raw);
    // Missing manifest means an empty history, not an error.
    CHECK(load_history(dir / "nowhere").entries.empty());
}

TEST_CASE("atomic writes leave no temp files behind") {
    auto dir = temp_dir();
    io_detail::atomic_write(dir / "x.txt", "hello");
    CHECK(read_file(dir / "x.txt") == "hello");
    CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
}
