#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "srsanon/grouping.hpp"

using namespace srsanon;

namespace {

QidSchema demo_schema() {
    QidSchema s;
    s.categorical.push_back({"Gender", "gender.json"});
    s.numeric.push_back({"Age", 0.0, 120.0});
    s.sensitive.push_back("Disease");
    s.trees["Gender"] = TaxonomyTree::build("Any", {{"Any", "Male"}, {"Any", "Female"}});
    return s;
}

SuperRecord super(const std::string& id, const std::string& gender, double age,
                  std::set<std::string> dis) {
    SuperRecord s;
    s.case_id = id;
    s.cat["Gender"] = gender;
    s.num["Age"] = Interval::point(age);
    s.sens["Disease"] = std::move(dis);
    return s;
}

PrivacyConfig config(int k, double theta) {
    PrivacyConfig cfg;
    cfg.k = k;
    cfg.theta.default_theta = theta;
    return cfg;
}

}  // namespace

TEST_CASE("group accumulates virtual tuple and sensitive counts") {
    auto schema = demo_schema();
    std::vector<SuperRecord> supers{super("1", "Male", 30, {"HIV", "Fever"}),
                                    super("2", "Female", 40, {"HIV"})};
    QidGroup g;
    g.add(0, supers[0], true, schema);
    CHECK(g.virtual_cat.at("Gender") == "Male");
    CHECK(g.virtual_num.at("Age") == Interval::point(30));
    g.add(1, supers[1], false, schema);
    CHECK(g.virtual_cat.at("Gender") == "Any");
    CHECK(g.virtual_num.at("Age") == Interval(30, 40));
    CHECK(g.new_count == 1);
    CHECK(g.sens_counts.at("HIV") == 2);
    CHECK(g.sens_counts.at("Fever") == 1);
}

TEST_CASE("bounds checks") {
    auto schema = demo_schema();
    std::vector<SuperRecord> supers{
        super("1", "Male", 30, {"HIV"}), super("2", "Male", 31, {"HIV"}),
        super("3", "Male", 32, {"Flu"}), super("4", "Male", 33, {"Fever"})};
    QidGroup g;
    for (int i = 0; i < 4; ++i) g.add(i, supers[i], i < 3, schema);

    // HIV appears in 2 of 4 members: frequency exactly 0.5 passes theta 0.5.
    CHECK(check_bounds(g, config(4, 0.5), BoundsMode::Ms).pass);
    auto tight = check_bounds(g, config(4, 0.4), BoundsMode::Ms);
    CHECK_FALSE(tight.pass);
    REQUIRE(tight.violations.size() == 1);

    auto small = check_bounds(g, config(5, 0.5), BoundsMode::Ms);
    CHECK_FALSE(small.pass);

    // 3 new cases of 4 members.
    CHECK(check_bounds(g, config(3, 0.5), BoundsMode::Nc).pass);
    CHECK_FALSE(check_bounds(g, config(4, 0.5), BoundsMode::Nc).pass);

    QidGroup empty;
    CHECK_THROWS_AS(check_bounds(empty, config(2, 0.5), BoundsMode::Ms), ArgumentError);
}

TEST_CASE("per-value thresholds are honored") {
    auto schema = demo_schema();
    std::vector<SuperRecord> supers{super("1", "Male", 30, {"HIV"}),
                                    super("2", "Male", 31, {"Flu"})};
    QidGroup g;
    g.add(0, supers[0], true, schema);
    g.add(1, supers[1], true, schema);
    auto cfg = config(2, 0.9);
    cfg.theta.per_value["HIV"] = 0.3;  // 1/2 > 0.3 fails
    CHECK_FALSE(check_bounds(g, cfg, BoundsMode::Ms).pass);
    cfg.theta.per_value["HIV"] = 0.5;
    CHECK(check_bounds(g, cfg, BoundsMode::Ms).pass);
}

TEST_CASE("delta_il equals the explicit before/after difference") {
    auto schema = demo_schema();
    std::vector<SuperRecord> supers{super("1", "Male", 30, {"HIV"}),
                                    super("2", "Male", 50, {"Flu"}),
                                    super("3", "Female", 44, {"Fever"})};
    QidGroup g;
    g.add(0, supers[0], true, schema);
    g.add(1, supers[1], true, schema);

    QidGroup after = g;
    after.add(2, supers[2], true, schema);
    const double explicit_delta = detail::group_il(after, supers, schema) -
                                  detail::group_il(g, supers, schema);
    CHECK(delta_il(g, supers[2], supers, schema) == doctest::Approx(explicit_delta).epsilon(1e-12));

    QidGroup empty;
    CHECK(delta_il(empty, supers[0], supers, schema) == 0.0);
}

TEST_CASE("privacy risk multiplies only stressed values") {
    std::vector<SuperRecord> supers{super("1", "Male", 30, {"HIV"}),
                                    super("2", "Male", 31, {"HIV"})};
    auto schema = demo_schema();
    QidGroup g;
    g.add(0, supers[0], true, schema);
    ThetaMap theta;
    theta.default_theta = 0.5;
    // Adding the second HIV record: freq 1.0, stress 2.0.
    CHECK(privacy_risk(g, supers[1], theta) == doctest::Approx(2.0));
    // A harmless record: every frequency 0.5 <= theta.
    CHECK(privacy_risk(g, super("3", "Male", 32, {"Flu"}), theta) == doctest::Approx(1.0));
}

TEST_CASE("grouping requires at least k new cases") {
    auto schema = demo_schema();
    std::vector<SuperRecord> supers{super("1", "Male", 30, {"HIV"}),
                                    super("2", "Male", 31, {"Flu"})};
    CHECK_THROWS_AS(
        ncc_grouping(supers, {"1", "2"}, {}, schema, config(3, 0.5)),
        InfeasibleReleaseError);
    CHECK_THROWS_AS(ncc_grouping(supers, {"1"}, {}, schema, config(2, 0.5)), ArgumentError);
}

TEST_CASE("grouping invariants on random instances") {
    auto schema = demo_schema();
    std::mt19937 gen(31);
    const char* genders[] = {"Male", "Female"};
    const char* dis[] = {"Flu", "HIV", "Fever", "Diabetes", "Rash", "Cough"};
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<SuperRecord> supers;
        std::set<std::string> nc, oc;
        const int n = 20 + static_cast<int>(gen() % 30);
        for (int i = 0; i < n; ++i) {
            auto s = super(std::to_string(i), genders[gen() % 2],
                           static_cast<double>(gen() % 100), {dis[gen() % 6]});
            if (gen() % 4 == 0) s.sens["Disease"].insert(dis[gen() % 6]);
            supers.push_back(s);
            (gen() % 5 == 0 ? oc : nc).insert(supers.back().case_id);
        }
        if (static_cast<int>(nc.size()) < 4) continue;
        auto cfg = config(4, 0.5);
        auto result = ncc_grouping(supers, nc, oc, schema, cfg);

        std::set<int> seen;
        for (const auto& g : result.groups) {
            CHECK(static_cast<int>(g.size()) >= cfg.k);
            CHECK(check_bounds(g, cfg, BoundsMode::Ms).pass);
            CHECK(check_bounds(g, cfg, BoundsMode::Nc).pass);
            for (int idx : g.members) CHECK(seen.insert(idx).second);
        }
        for (int idx : result.suppressed) CHECK(seen.insert(idx).second);
        CHECK(seen.size() == supers.size());

        // Deterministic: rerunning yields the same partition.
        auto again = ncc_grouping(supers, nc, oc, schema, cfg);
        REQUIRE(again.groups.size() == result.groups.size());
        for (std::size_t gi = 0; gi < again.groups.size(); ++gi)
            CHECK(again.groups[gi].members == result.groups[gi].members);
        CHECK(again.suppressed == result.suppressed);
    }
}

TEST_CASE("homogeneous sensitive values force suppression or dissolution") {
    auto schema = demo_schema();
    // All records carry HIV: no group of any size can push its frequency
    // under 0.5, so grouping cannot build a single valid group.
    std::vector<SuperRecord> supers;
    std::set<std::string> nc;
    for (int i = 0; i < 6; ++i) {
        supers.push_back(super(std::to_string(i), "Male", 30.0 + i, {"HIV"}));
        nc.insert(std::to_string(i));
    }
    auto result = ncc_grouping(supers, nc, {}, schema, config(2, 0.5));
    CHECK(result.groups.empty());
    CHECK(result.suppressed.size() == 6);
}
