#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "srsanon/attacks.hpp"
#include "srsanon/io.hpp"

using namespace srsanon;

namespace {

const std::string kFixtures = FIXTURES;

struct Series {
    QidSchema schema;
    ReleaseHistory releases;
    std::vector<std::vector<Record>> raw;

    Series() {
        const auto dir = kFixtures + "/tablei";
        schema = load_schema(dir + "/schema.json");
        auto history = load_history(dir);
        releases = history.load_releases(schema);
        raw = history.load_raw(schema);
    }
};

AttackTarget target(const std::string& gender, double age, int release,
                    KnowledgeKind kind = KnowledgeKind::InRelease) {
    AttackTarget t;
    t.cat["Gender"] = gender;
    t.num["Age"] = age;
    t.known_release = release;
    t.kind = kind;
    return t;
}

}  // namespace

TEST_CASE("candidate sets use generalization coverage") {
    Series s;
    // <Male, 44> against the second release: the Any/[30-45] group covers it,
    // the Female/[20-45] group does not.
    auto ci = candidate_set(target("Male", 44, 2), s.releases[1], s.schema, 0.05);
    CHECK(ci == std::set<std::string>{"1", "3", "8", "9"});
    // <Female, 40> matches the Female group and the Any group.
    auto cf = candidate_set(target("Female", 40, 2), s.releases[1], s.schema, 0.05);
    CHECK(cf == std::set<std::string>{"1", "10", "11", "13", "14", "3", "8", "9"});
    // Age outside every interval.
    CHECK(candidate_set(target("Male", 99, 2), s.releases[1], s.schema, 0.05).empty());
}

TEST_CASE("point-valued published ages match within the coverage tolerance") {
    Series s;
    Release noised;
    noised.index = 1;
    PublishedRecord p;
    p.case_id = "1";
    p.cat["Gender"] = "Male";
    p.num["Age"] = Interval::point(40.0);
    p.sens["Disease"] = {"Flu"};
    noised.records.push_back(p);
    // tau = 0.05 * 120 = 6.
    CHECK(candidate_set(target("Male", 44, 1), noised, s.schema, 0.05).size() == 1);
    CHECK(candidate_set(target("Male", 47, 1), noised, s.schema, 0.05).empty());
}

TEST_CASE("backward attack pins Bob") {
    Series s;
    auto result = backward_attack(target("Male", 37, 3), s.releases, s.schema, 0.05);
    CHECK(result.candidates == std::set<std::string>{"12"});
    CHECK(result.common_sensitive() == std::set<std::string>{"Diabetes", "Flu"});
}

TEST_CASE("forward attack exposes John's diagnosis") {
    Series s;
    auto result = forward_attack(target("Male", 44, 2), s.releases, s.schema, 0.05);
    CHECK(result.candidates == std::set<std::string>{"8", "9"});
    CHECK(result.common_sensitive() == std::set<std::string>{"Diabetes"});
}

TEST_CASE("latest attack exposes Jane's diagnosis") {
    Series s;
    auto result = latest_attack(target("Female", 30, 3, KnowledgeKind::FirstAppearsIn),
                                s.releases, s.schema, 0.05);
    CHECK(result.candidates == std::set<std::string>{"15", "16"});
    CHECK(result.common_sensitive() == std::set<std::string>{"Breast Cancer"});
    CHECK_THROWS_AS(latest_attack(target("Female", 30, 3), s.releases, s.schema, 0.05),
                    ArgumentError);
}

TEST_CASE("pruned candidate sets are subsets of the base set") {
    Series s;
    for (int rel = 1; rel <= 3; ++rel)
        for (const auto& rec : s.raw[static_cast<std::size_t>(rel - 1)]) {
            auto t = target(rec.cat.at("Gender"), rec.num.at("Age"), rel);
            auto base = candidate_set(t, s.releases[static_cast<std::size_t>(rel - 1)],
                                      s.schema, 0.05);
            for (const auto& c : backward_attack(t, s.releases, s.schema, 0.05).candidates)
                CHECK(base.count(c) == 1);
            for (const auto& c : forward_attack(t, s.releases, s.schema, 0.05).candidates)
                CHECK(base.count(c) == 1);
        }
}

TEST_CASE("attacks on the first release cannot prune backward") {
    Series s;
    auto t = target("Male", 30, 1);
    auto base = candidate_set(t, s.releases[0], s.schema, 0.05);
    CHECK(backward_attack(t, s.releases, s.schema, 0.05).candidates == base);
    CHECK(base.size() == 8);
}

TEST_CASE("release index bounds are enforced") {
    Series s;
    CHECK_THROWS_AS(backward_attack(target("Male", 30, 9), s.releases, s.schema, 0.05),
                    ArgumentError);
    CHECK_THROWS_AS(backward_attack(target("Male", 30, 0), s.releases, s.schema, 0.05),
                    ArgumentError);
}

TEST_CASE("background knowledge prunes gender-inconsistent candidates") {
    Series s;
    std::vector<BackgroundRule> rules;
    BackgroundRule rule;
    rule.value = "Breast Cancer";
    rule.attr = "Gender";
    rule.node = "Female";
    rules.push_back(rule);

    // A male target whose candidate set contains a Breast Cancer case: the
    // rule removes that candidate.
    AttackResult result;
    result.candidates = {"15", "12"};
    result.sensitive["15"] = {"Breast Cancer"};
    result.sensitive["12"] = {"Diabetes", "Flu"};
    auto pruned = background_prune(result, target("Male", 37, 3), rules, s.schema);
    CHECK(pruned.candidates == std::set<std::string>{"12"});

    // A female target keeps both candidates.
    result.candidates = {"15", "12"};
    auto kept = background_prune(result, target("Female", 30, 3), rules, s.schema);
    CHECK(kept.candidates == std::set<std::string>{"12", "15"});

    // Numeric band rules prune by the target's known age.
    BackgroundRule senior;
    senior.value = "Alzheimer's";
    senior.attr = "Age";
    senior.min = 65.0;
    AttackResult r2;
    r2.candidates = {"a"};
    r2.sensitive["a"] = {"Alzheimer's"};
    CHECK(background_prune(r2, target("Male", 30, 1), {senior}, s.schema).candidates.empty());
    r2.candidates = {"a"};
    CHECK(background_prune(r2, target("Male", 80, 1), {senior}, s.schema).candidates ==
          std::set<std::string>{"a"});
}

TEST_CASE("audit flags exactly the worked breach patterns") {
    Series s;
    PrivacyConfig cfg;
    cfg.k = 4;
    cfg.theta.default_theta = 0.5;
    auto report = audit_series(s.raw, s.releases, s.schema, cfg);
    CHECK(report.breached_cases ==
          std::set<std::pair<int, std::string>>{{2, "9"}, {3, "12"}, {3, "15"}, {3, "16"}});
    CHECK(report.total_record_breaches > 0);
    CHECK_FALSE(report.clean());
    CHECK(report.per_release.at(2).breached_cases == 1);
    CHECK(report.per_release.at(3).breached_cases == 3);
    // Jane's cases are caught by the latest attack with Breast Cancer inferred.
    bool jane = false;
    for (const auto& ev : report.events)
        if (ev.release == 3 && ev.case_id == "15" && ev.attack == "latest") {
            jane = true;
            CHECK(ev.candidates == std::vector<std::string>{"15", "16"});
            CHECK(ev.inferred == std::set<std::string>{"Breast Cancer"});
            CHECK(ev.attribute_breach);
            CHECK(ev.record_breach);
        }
    CHECK(jane);
}

TEST_CASE("audit rejects mismatched series lengths") {
    Series s;
    PrivacyConfig cfg;
    cfg.k = 4;
    cfg.theta.default_theta = 0.5;
    s.raw.pop_back();
    CHECK_THROWS_AS(audit_series(s.raw, s.releases, s.schema, cfg), ArgumentError);
}
