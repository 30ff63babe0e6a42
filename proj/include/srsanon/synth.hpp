#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/io.hpp"
#include "srsanon/rng.hpp"

namespace srsanon {

// Configuration for the synthetic SRS series generator. Defaults produce a
// demographics-style schema: Gender and AgeBand categorical, Weight numeric,
// Disease sensitive, with gender- and age-linked disease pools.
struct SynthConfig {
    int releases = 3;
    int records_per_release = 1000;
    double followup_ratio = 0.2;  // chance a report in release >1 revisits a known case
    std::uint64_t seed = 1;
    double theta_default = 0.4;

    std::map<std::string, double> gender_weights = {{"Male", 0.5}, {"Female", 0.5}};
    std::map<std::string, double> age_band_weights = {
        {"Child", 0.08},       {"Adolescent", 0.08},  {"Young Adult", 0.3},
        {"Middle-aged", 0.3},  {"Elderly", 0.16},     {"Very Elderly", 0.08}};
    double weight_min = 30.0, weight_max = 150.0;  // schema bounds
    double weight_low = 40.0, weight_high = 120.0; // sampled data range

    std::vector<std::string> common_diseases = {"Influenza", "Diabetes",  "Hypertension",
                                                "Asthma",    "Migraine",  "Gastritis",
                                                "Dermatitis", "Anemia",   "Arthritis",
                                                "Bronchitis"};
    std::vector<std::string> female_diseases = {"Breast Cancer", "Cervicitis", "Polycystic Ovary"};
    std::vector<std::string> male_diseases = {"Prostate Cancer", "Inguinal Hernia"};
    std::vector<std::string> elderly_diseases = {"COPD", "Alzheimer's"};
    double gender_disease_rate = 0.15;
    double elderly_disease_rate = 0.3;
    int min_diseases = 1, max_diseases = 2;
};

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io_detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad generator config " + path.string() + ": " + e.what());
    }
    SynthConfig c;
    c.releases = j.value("releases", c.releases);
    c.records_per_release = j.value("records_per_release", c.records_per_release);
    c.followup_ratio = j.value("followup_ratio", c.followup_ratio);
    c.seed = j.value("seed", c.seed);
    c.theta_default = j.value("theta_default", c.theta_default);
    if (j.contains("gender_weights"))
        c.gender_weights = j.at("gender_weights").get<std::map<std::string, double>>();
    if (j.contains("age_band_weights"))
        c.age_band_weights = j.at("age_band_weights").get<std::map<std::string, double>>();
    c.weight_min = j.value("weight_min", c.weight_min);
    c.weight_max = j.value("weight_max", c.weight_max);
    c.weight_low = j.value("weight_low", c.weight_low);
    c.weight_high = j.value("weight_high", c.weight_high);
    if (j.contains("common_diseases"))
        c.common_diseases = j.at("common_diseases").get<std::vector<std::string>>();
    if (j.contains("female_diseases"))
        c.female_diseases = j.at("female_diseases").get<std::vector<std::string>>();
    if (j.contains("male_diseases"))
        c.male_diseases = j.at("male_diseases").get<std::vector<std::string>>();
    if (j.contains("elderly_diseases"))
        c.elderly_diseases = j.at("elderly_diseases").get<std::vector<std::string>>();
    c.gender_disease_rate = j.value("gender_disease_rate", c.gender_disease_rate);
    c.elderly_disease_rate = j.value("elderly_disease_rate", c.elderly_disease_rate);
    c.min_diseases = j.value("min_diseases", c.min_diseases);
    c.max_diseases = j.value("max_diseases", c.max_diseases);
    if (c.releases < 1 || c.records_per_release < 1) throw ArgumentError("generator sizes must be >= 1");
    if (c.followup_ratio < 0.0 || c.followup_ratio > 1.0)
        throw ArgumentError("followup_ratio must be in [0,1]");
    if (c.min_diseases < 1 || c.max_diseases < c.min_diseases)
        throw ArgumentError("bad disease count range");
    return c;
}

inline TaxonomyTree synth_gender_tree() {
    return TaxonomyTree::build("Any", {{"Any", "Male"}, {"Any", "Female"}});
}

inline TaxonomyTree synth_age_tree() {
    return TaxonomyTree::build(
        "AnyAge", {{"AnyAge", "Non-adult"},
                   {"Non-adult", "Child"},
                   {"Non-adult", "Adolescent"},
                   {"AnyAge", "Adult"},
                   {"Adult", "Young Adult"},
                   {"Adult", "Middle-aged"},
                   {"AnyAge", "Senior"},
                   {"Senior", "Elderly"},
                   {"Senior", "Very Elderly"}});
}

inline QidSchema synth_schema(const SynthConfig& cfg) {
    QidSchema s;
    s.categorical.push_back({"Gender", "gender.json"});
    s.categorical.push_back({"AgeBand", "age.json"});
    s.numeric.push_back({"Weight", cfg.weight_min, cfg.weight_max});
    s.sensitive.push_back("Disease");
    s.trees["Gender"] = synth_gender_tree();
    s.trees["AgeBand"] = synth_age_tree();
    s.validate();
    return s;
}

inline std::vector<BackgroundRule> synth_background(const SynthConfig& cfg) {
    std::vector<BackgroundRule> rules;
    for (const auto& d : cfg.female_diseases) {
        BackgroundRule r;
        r.value = d;
        r.attr = "Gender";
        r.node = "Female";
        rules.push_back(r);
    }
    for (const auto& d : cfg.male_diseases) {
        BackgroundRule r;
        r.value = d;
        r.attr = "Gender";
        r.node = "Male";
        rules.push_back(r);
    }
    for (const auto& d : cfg.elderly_diseases) {
        BackgroundRule r;
        r.value = d;
        r.attr = "AgeBand";
        r.node = "Senior";
        rules.push_back(r);
    }
    return rules;
}

namespace synth_detail {

inline std::string weighted_pick(const std::map<std::string, double>& weights, double u) {
    double total = 0.0;
    for (const auto& [_, w] : weights) total += w;
    if (total <= 0.0) throw ArgumentError("weights must sum to a positive value");
    double acc = 0.0;
    for (const auto& [v, w] : weights) {
        acc += w / total;
        if (u < acc) return v;
    }
    return weights.rbegin()->first;
}

}  // namespace synth_detail

// Deterministic series generation: every sampled decision draws from a stream
// keyed by (seed, release, row), so output depends only on the config.
inline std::vector<std::vector<Record>> synth_generate(const SynthConfig& cfg) {
    std::vector<std::vector<Record>> series;
    std::vector<Record> people;  // registry of already-reported cases
    int next_case = 1;
    const auto age_tree = synth_age_tree();
    for (int rel = 1; rel <= cfg.releases; ++rel) {
        std::vector<Record> release;
        std::set<std::string> used;  // a case reports at most once per release
        const std::size_t prior = people.size();  // persons known before this release
        for (int row = 0; row < cfg.records_per_release; ++row) {
            KeyedStream stream(cfg.seed);
            stream.mix("synth");
            stream.mix(rel);
            stream.mix(row);
            if (rel > 1 && prior > 0 && stream.next_unit() < cfg.followup_ratio) {
                bool reused = false;
                for (int attempt = 0; attempt < 16 && !reused; ++attempt) {
                    const auto& person = people[static_cast<std::size_t>(stream.next_u64() % prior)];
                    if (!used.count(person.case_id)) {
                        used.insert(person.case_id);
                        release.push_back(person);
                        reused = true;
                    }
                }
                if (reused) continue;
            }
            Record r;
            r.case_id = std::to_string(next_case++);
            r.cat["Gender"] = synth_detail::weighted_pick(cfg.gender_weights, stream.next_unit());
            r.cat["AgeBand"] = synth_detail::weighted_pick(cfg.age_band_weights, stream.next_unit());
            r.num["Weight"] =
                cfg.weight_low + stream.next_unit() * (cfg.weight_high - cfg.weight_low);
            auto& sens = r.sens["Disease"];
            const int n_common =
                cfg.min_diseases +
                static_cast<int>(stream.next_u64() %
                                 static_cast<std::uint64_t>(cfg.max_diseases - cfg.min_diseases + 1));
            for (int i = 0; i < n_common; ++i)
                sens.insert(cfg.common_diseases[static_cast<std::size_t>(
                    stream.next_u64() % cfg.common_diseases.size())]);
            const auto& gender_pool =
                r.cat.at("Gender") == "Female" ? cfg.female_diseases : cfg.male_diseases;
            if (!gender_pool.empty() && stream.next_unit() < cfg.gender_disease_rate)
                sens.insert(gender_pool[static_cast<std::size_t>(stream.next_u64() %
                                                                 gender_pool.size())]);
            const bool senior = age_tree.is_ancestor_or_equal("Senior", r.cat.at("AgeBand"));
            if (senior && !cfg.elderly_diseases.empty() &&
                stream.next_unit() < cfg.elderly_disease_rate)
                sens.insert(cfg.elderly_diseases[static_cast<std::size_t>(
                    stream.next_u64() % cfg.elderly_diseases.size())]);
            used.insert(r.case_id);
            people.push_back(r);
            release.push_back(std::move(r));
        }
        series.push_back(std::move(release));
    }
    return series;
}

// Writes schema.json, taxonomy files, theta.json, background.json and the raw
// release tables D_<i>.csv into out_dir.
inline void synth_emit(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto schema = synth_schema(cfg);
    store_taxonomy(out_dir / "gender.json", schema.tree("Gender"));
    store_taxonomy(out_dir / "age.json", schema.tree("AgeBand"));

    nlohmann::json js;
    js["categorical"] = nlohmann::json::array();
    for (const auto& a : schema.categorical)
        js["categorical"].push_back({{"name", a.name}, {"taxonomy", a.taxonomy}});
    js["numeric"] = nlohmann::json::array();
    for (const auto& a : schema.numeric)
        js["numeric"].push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}});
    js["sensitive"] = schema.sensitive;
    io_detail::atomic_write(out_dir / "schema.json", js.dump(2) + "\n");

    nlohmann::json jt;
    jt["default"] = cfg.theta_default;
    io_detail::atomic_write(out_dir / "theta.json", jt.dump(2) + "\n");

    nlohmann::json jb;
    jb["rules"] = nlohmann::json::array();
    for (const auto& r : synth_background(cfg)) {
        nlohmann::json jr;
        jr["value"] = r.value;
        jr["attr"] = r.attr;
        if (r.node) jr["equals"] = *r.node;
        if (r.min) jr["min"] = *r.min;
        if (r.max) jr["max"] = *r.max;
        jb["rules"].push_back(jr);
    }
    io_detail::atomic_write(out_dir / "background.json", jb.dump(2) + "\n");

    const auto series = synth_generate(cfg);
    for (std::size_t i = 0; i < series.size(); ++i)
        store_records(out_dir / ("D_" + std::to_string(i + 1) + ".csv"), series[i], schema);
}

}  // namespace srsanon
