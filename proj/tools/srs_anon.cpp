#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "srsanon/attacks.hpp"
#include "srsanon/io.hpp"
#include "srsanon/metrics.hpp"
#include "srsanon/pipeline.hpp"
#include "srsanon/synth.hpp"

namespace {

using namespace srsanon;

QidSchema load_schema_opt(const std::string& schema_path, const std::string& taxonomy_dir) {
    std::optional<std::filesystem::path> dir;
    if (!taxonomy_dir.empty()) dir = taxonomy_dir;
    return load_schema(schema_path, dir);
}

// The released table preserves input row order minus suppressed rows; walk the
// originals and keep the ones that made it out.
std::vector<Record> align_originals(const std::vector<Record>& original, const Release& release) {
    std::vector<Record> out;
    std::size_t j = 0;
    for (const auto& r : original) {
        if (j < release.records.size() && release.records[j].case_id == r.case_id) {
            out.push_back(r);
            ++j;
        }
    }
    if (j != release.records.size())
        throw DataIntegrityError("anonymized table is not a row subsequence of the original");
    return out;
}

SignalQuery build_query(const QidSchema& schema, const std::string& drug,
                        const std::string& reaction, const std::string& filter_expr) {
    SignalQuery q;
    q.drug = drug;
    q.reaction = reaction;
    if (schema.sensitive.empty()) throw SchemaError("schema declares no sensitive attributes");
    q.drug_attr = schema.sensitive.front();
    q.reaction_attr = schema.sensitive.size() > 1 ? schema.sensitive[1] : schema.sensitive.front();
    if (!filter_expr.empty()) {
        const auto pos = filter_expr.find('>');
        if (pos == std::string::npos || pos == 0 || pos + 1 == filter_expr.size())
            throw ArgumentError("filter must have the form attr>value: " + filter_expr);
        SignalFilter f;
        f.attr = io_detail::trim(filter_expr.substr(0, pos));
        f.threshold = io_detail::parse_double(io_detail::trim(filter_expr.substr(pos + 1)));
        q.filter = f;
    }
    return q;
}

void print_rejections(const LoadReport& rep) {
    if (rep.rejected == 0) return;
    std::cerr << "excluded " << rep.rejected << " row(s) from input:\n";
    for (const auto& r : rep.reasons) std::cerr << "  " << r << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Periodic SRS release anonymizer and cross-release risk auditor"};
    app.require_subcommand(1);

    // --- anonymize -----------------------------------------------------------
    auto* anon = app.add_subcommand("anonymize", "Anonymize one release against the history");
    std::string a_variant, a_theta, a_schema, a_taxonomy, a_history, a_input, a_output;
    int a_k = 2, a_lifespan = 0;
    double a_epsilon = 1.0;
    std::optional<std::uint64_t> a_seed;
    anon->add_option("--variant", a_variant, "num, all, or baseline")->required();
    anon->add_option("--k", a_k, "minimum new-case group size")->required();
    anon->add_option("--epsilon", a_epsilon, "privacy budget (DP variants)");
    anon->add_option("--theta", a_theta, "theta thresholds file")->required();
    anon->add_option("--schema", a_schema, "schema file")->required();
    anon->add_option("--taxonomy", a_taxonomy, "taxonomy directory (default: schema dir)");
    anon->add_option("--history", a_history, "release history directory")->required();
    anon->add_option("--seed", a_seed, "RNG seed (required for num/all)");
    anon->add_option("--lifespan", a_lifespan, "releases back to scan (0 = all)");
    anon->add_option("input", a_input, "raw records CSV")->required();
    anon->add_option("-o,--output", a_output, "anonymized release CSV")->required();

    // --- audit ---------------------------------------------------------------
    auto* audit = app.add_subcommand("audit", "Replay cross-release attacks on a history");
    std::string u_theta, u_schema, u_taxonomy, u_background, u_history;
    int u_k = 2;
    audit->add_option("--k", u_k, "candidate-set size threshold")->required();
    audit->add_option("--theta", u_theta, "theta thresholds file")->required();
    audit->add_option("--schema", u_schema, "schema file")->required();
    audit->add_option("--taxonomy", u_taxonomy, "taxonomy directory (default: schema dir)");
    audit->add_option("--background", u_background, "background-knowledge rules file");
    double u_coverage = 0.05;
    audit->add_option("--coverage", u_coverage,
                      "match window for noised values, as a fraction of the attribute range");
    audit->add_option("history", u_history, "release history directory")->required();

    // --- metrics -------------------------------------------------------------
    auto* met = app.add_subcommand("metrics", "Information-loss and risk metrics");
    std::string m_original, m_anonymized, m_schema, m_taxonomy;
    met->add_option("--original", m_original, "raw records CSV")->required();
    met->add_option("--anonymized", m_anonymized, "anonymized release CSV")->required();
    met->add_option("--schema", m_schema, "schema file")->required();
    met->add_option("--taxonomy", m_taxonomy, "taxonomy directory (default: schema dir)");

    // --- signal --------------------------------------------------------------
    auto* sig = app.add_subcommand("signal", "PRR signal strength before and after anonymization");
    std::string s_drug, s_reaction, s_filter, s_original, s_anonymized, s_schema, s_taxonomy;
    sig->add_option("--drug", s_drug, "drug value")->required();
    sig->add_option("--reaction", s_reaction, "reaction value")->required();
    sig->add_option("--filter", s_filter, "numeric filter, e.g. \"Age>60\"");
    sig->add_option("--original", s_original, "raw records CSV")->required();
    sig->add_option("--anonymized", s_anonymized, "anonymized release CSV")->required();
    sig->add_option("--schema", s_schema, "schema file")->required();
    sig->add_option("--taxonomy", s_taxonomy, "taxonomy directory (default: schema dir)");

    // --- synth ---------------------------------------------------------------
    auto* syn = app.add_subcommand("synth", "Generate a synthetic raw release series");
    std::string y_config, y_out;
    syn->add_option("--config", y_config, "generator config file")->required();
    syn->add_option("-o,--output", y_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (anon->parsed()) {
        const Variant variant = variant_from_string(a_variant);
        if (variant != Variant::Baseline && !a_seed)
            throw ArgumentError("--seed is required for DP variants");
        const auto schema = load_schema_opt(a_schema, a_taxonomy);
        PrivacyConfig cfg;
        cfg.k = a_k;
        cfg.theta = load_theta(a_theta);
        cfg.epsilon = a_epsilon;
        cfg.lifespan_x = a_lifespan;
        cfg.variant = variant;
        cfg.seed = a_seed.value_or(0);
        auto history = load_history(a_history);
        const auto releases = history.load_releases(schema);
        auto report = load_records(a_input, schema);
        print_rejections(report);
        auto result = anonymize(report.records, releases, schema, cfg);
        store_release(a_output, result.release, schema);
        append_history(history, result.release,
                       align_originals(report.records, result.release), schema, cfg);
        std::cout << "release " << result.release.index << ": published "
                  << result.release.records.size() << " record(s), suppressed "
                  << result.suppressed.size() << "\n";
        return 0;
    }

    if (audit->parsed()) {
        const auto schema = load_schema_opt(u_schema, u_taxonomy);
        PrivacyConfig cfg;
        cfg.k = u_k;
        cfg.theta = load_theta(u_theta);
        cfg.coverage_fraction = u_coverage;
        auto history = load_history(u_history);
        const auto releases = history.load_releases(schema);
        const auto raw = history.load_raw(schema);
        std::vector<BackgroundRule> rules;
        const auto report =
            u_background.empty()
                ? audit_series(raw, releases, schema, cfg)
                : audit_series(raw, releases, schema, cfg, &(rules = load_background(u_background)));
        nlohmann::json j;
        j["record_breaches"] = report.total_record_breaches;
        j["attribute_breaches"] = report.total_attribute_breaches;
        j["breached_cases"] = nlohmann::json::array();
        for (const auto& [rel, c] : report.breached_cases)
            j["breached_cases"].push_back({{"release", rel}, {"case", c}});
        j["events"] = nlohmann::json::array();
        for (const auto& ev : report.events) {
            nlohmann::json je;
            je["release"] = ev.release;
            je["case"] = ev.case_id;
            je["attack"] = ev.attack;
            je["candidates"] = ev.candidates;
            je["record_breach"] = ev.record_breach;
            je["attribute_breach"] = ev.attribute_breach;
            je["inferred"] = ev.inferred;
            j["events"].push_back(je);
        }
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (met->parsed()) {
        const auto schema = load_schema_opt(m_schema, m_taxonomy);
        auto rep = load_records(m_original, schema);
        print_rejections(rep);
        const auto release = load_release(m_anonymized, schema, 1);
        const auto aligned = align_originals(rep.records, release);
        nlohmann::json j;
        j["nil"] = nil(aligned, release.records, schema);
        j["rr"] = rr(aligned, release.records, schema);
        j["ar_rev"] = ar_rev(aligned, release.records, schema);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (sig->parsed()) {
        const auto schema = load_schema_opt(s_schema, s_taxonomy);
        auto rep = load_records(s_original, schema);
        print_rejections(rep);
        const auto release = load_release(s_anonymized, schema, 1);
        const auto q = build_query(schema, s_drug, s_reaction, s_filter);
        const auto t0 = contingency(rep.records, q);
        const auto t1 = contingency(release.records, q);
        const auto p0 = prr(t0);
        const auto p1 = prr(t1);
        nlohmann::json j;
        j["original"] = {{"a", t0.a}, {"b", t0.b}, {"c", t0.c}, {"d", t0.d}};
        j["anonymized"] = {{"a", t1.a}, {"b", t1.b}, {"c", t1.c}, {"d", t1.d}};
        j["prr_original"] = p0 ? nlohmann::json(*p0) : nlohmann::json();
        j["prr_anonymized"] = p1 ? nlohmann::json(*p1) : nlohmann::json();
        if (p0 && p1) j["bias"] = std::fabs(*p0 - *p1);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    // synth
    const auto cfg = load_synth_config(y_config);
    synth_emit(cfg, y_out);
    std::cout << "wrote " << cfg.releases << " release(s) to " << y_out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const srsanon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
