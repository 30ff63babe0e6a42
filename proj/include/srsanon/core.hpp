#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srsanon/errors.hpp"
#include "srsanon/taxonomy.hpp"

namespace srsanon {

// Closed numeric interval. A point value is the degenerate case lo == hi.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (h < l) throw ArgumentError("interval upper bound below lower bound");
    }
    static Interval point(double v) { return Interval(v, v); }

    bool is_point() const { return lo == hi; }
    double mid() const { return (lo + hi) / 2.0; }
    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
    Interval hull(const Interval& o) const {
        return Interval(std::min(lo, o.lo), std::max(hi, o.hi));
    }
    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

struct CatAttr {
    std::string name;
    std::string taxonomy;  // taxonomy file name (resolved by the loader)
};

struct NumAttr {
    std::string name;
    double min = 0.0;
    double max = 0.0;
};

// Attribute typing shared by every stage: categorical QIDs bound to taxonomy
// trees, numeric QIDs with global bounds, multivalued sensitive attributes.
struct QidSchema {
    std::vector<CatAttr> categorical;
    std::vector<NumAttr> numeric;
    std::vector<std::string> sensitive;
    std::map<std::string, TaxonomyTree> trees;  // keyed by categorical attr name

    std::size_t qid_count() const { return categorical.size() + numeric.size(); }

    const TaxonomyTree& tree(const std::string& attr) const {
        auto it = trees.find(attr);
        if (it == trees.end()) throw LookupError("no taxonomy for attribute: " + attr);
        return it->second;
    }

    const NumAttr& num_attr(const std::string& name) const {
        for (const auto& a : numeric)
            if (a.name == name) return a;
        throw LookupError("unknown numeric attribute: " + name);
    }

    void validate() const {
        std::set<std::string> seen;
        auto check = [&](const std::string& n) {
            if (!seen.insert(n).second) throw SchemaError("duplicate attribute name: " + n);
        };
        for (const auto& a : categorical) {
            check(a.name);
            if (!trees.count(a.name))
                throw SchemaError("categorical attribute without taxonomy: " + a.name);
        }
        for (const auto& a : numeric) {
            check(a.name);
            if (!(a.min < a.max))
                throw SchemaError("numeric bounds must satisfy min < max: " + a.name);
        }
        for (const auto& s : sensitive) check(s);
    }
};

// One adverse-event report, as ingested.
struct Record {
    std::string case_id;
    std::map<std::string, std::string> cat;          // attr -> leaf value
    std::map<std::string, double> num;               // attr -> point value
    std::map<std::string, std::set<std::string>> sens;

    bool operator==(const Record& o) const {
        return case_id == o.case_id && cat == o.cat && num == o.num && sens == o.sens;
    }
};

// All reports sharing a CaseID merged into one logical record. Categorical
// conflicts resolve to the LCA, numeric conflicts to the covering interval,
// sensitive sets to the union.
struct SuperRecord {
    std::string case_id;
    std::map<std::string, std::string> cat;        // possibly an internal node
    std::map<std::string, Interval> num;
    std::map<std::string, std::set<std::string>> sens;
    std::vector<Record> constituents;

    double num_mid(const std::string& attr) const { return num.at(attr).mid(); }
};

// One row of a published (anonymized) table.
struct PublishedRecord {
    std::string case_id;
    std::map<std::string, std::string> cat;        // node names
    std::map<std::string, Interval> num;           // point or interval
    std::map<std::string, std::set<std::string>> sens;
    int group_id = -1;
};

// One anonymized table R_i.
struct Release {
    int index = 0;
    std::vector<PublishedRecord> records;

    // First published record of a case, if the case appears in this release.
    const PublishedRecord* find_case(const std::string& case_id) const {
        build_index();
        auto it = case_index_.find(case_id);
        return it == case_index_.end() ? nullptr : &records[it->second];
    }

    bool has_case(const std::string& case_id) const { return find_case(case_id) != nullptr; }

    // Union of sensitive sets over all records of a case in this release.
    std::map<std::string, std::set<std::string>> case_sensitive(const std::string& case_id) const {
        std::map<std::string, std::set<std::string>> out;
        for (const auto& r : records)
            if (r.case_id == case_id)
                for (const auto& [a, vals] : r.sens) out[a].insert(vals.begin(), vals.end());
        return out;
    }

private:
    // Releases are not mutated after construction, so the index is built once.
    void build_index() const {
        if (indexed_) return;
        case_index_.clear();
        for (std::size_t i = 0; i < records.size(); ++i)
            case_index_.emplace(records[i].case_id, i);  // keeps the first occurrence
        indexed_ = true;
    }
    mutable std::map<std::string, std::size_t> case_index_;
    mutable bool indexed_ = false;
};

using ReleaseHistory = std::vector<Release>;  // ordered by index

enum class Variant { Num, All, Baseline };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::Num: return "num";
        case Variant::All: return "all";
        case Variant::Baseline: return "baseline";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "num") return Variant::Num;
    if (s == "all") return Variant::All;
    if (s == "baseline") return Variant::Baseline;
    throw ArgumentError("unknown variant: " + s);
}

// Per-sensitive-value confidence thresholds with a required default.
struct ThetaMap {
    double default_theta = 1.0;
    std::map<std::string, double> per_value;

    double at(const std::string& value) const {
        auto it = per_value.find(value);
        return it == per_value.end() ? default_theta : it->second;
    }

    void validate() const {
        auto ok = [](double t) { return t > 0.0 && t <= 1.0; };
        if (!ok(default_theta)) throw SchemaError("default theta must lie in (0,1]");
        for (const auto& [v, t] : per_value)
            if (!ok(t)) throw SchemaError("theta for '" + v + "' must lie in (0,1]");
    }
};

constexpr int kUnboundedLifespan = 0;

struct PrivacyConfig {
    int k = 2;
    ThetaMap theta;
    double epsilon = 1.0;
    int lifespan_x = kUnboundedLifespan;  // 0 = scan all history
    Variant variant = Variant::Baseline;
    std::uint64_t seed = 0;
    double coverage_fraction = 0.05;  // tau for matching noised numeric values

    void validate() const {
        if (k < 2) throw SchemaError("k must be >= 2");
        if (!(epsilon > 0.0)) throw SchemaError("epsilon must be positive");
        if (lifespan_x < 0) throw SchemaError("lifespan must be positive or unbounded");
        theta.validate();
    }
};

inline void validate_record(const Record& r, const QidSchema& schema) {
    if (r.case_id.empty()) throw SchemaError("record without CaseID");
    for (const auto& a : schema.categorical) {
        auto it = r.cat.find(a.name);
        if (it == r.cat.end()) throw SchemaError("record missing attribute " + a.name);
        if (!schema.tree(a.name).contains(it->second))
            throw SchemaError("value '" + it->second + "' not in taxonomy of " + a.name);
    }
    for (const auto& a : schema.numeric) {
        auto it = r.num.find(a.name);
        if (it == r.num.end()) throw SchemaError("record missing attribute " + a.name);
        if (it->second < a.min || it->second > a.max)
            throw SchemaError("value of " + a.name + " outside global bounds");
    }
    for (const auto& s : schema.sensitive) {
        auto it = r.sens.find(s);
        if (it == r.sens.end() || it->second.empty())
            throw SchemaError("record missing sensitive attribute " + s);
    }
}

// Combine records sharing a CaseID into super records. Exact duplicate rows
// are dropped silently. Output order follows first appearance in the input.
inline std::vector<SuperRecord> merge_super_records(const std::vector<Record>& records,
                                                    const QidSchema& schema) {
    std::vector<SuperRecord> out;
    std::map<std::string, std::size_t> pos;
    for (const auto& r : records) {
        auto it = pos.find(r.case_id);
        if (it == pos.end()) {
            SuperRecord s;
            s.case_id = r.case_id;
            s.cat = r.cat;
            for (const auto& [a, v] : r.num) s.num[a] = Interval::point(v);
            s.sens = r.sens;
            s.constituents.push_back(r);
            pos[r.case_id] = out.size();
            out.push_back(std::move(s));
            continue;
        }
        SuperRecord& s = out[it->second];
        bool dup = false;
        for (const auto& c : s.constituents)
            if (c == r) { dup = true; break; }
        if (dup) continue;
        for (const auto& [a, v] : r.cat)
            s.cat[a] = schema.tree(a).lca(s.cat.at(a), v);
        for (const auto& [a, v] : r.num)
            s.num[a] = s.num.at(a).hull(Interval::point(v));
        for (const auto& [a, vals] : r.sens)
            s.sens[a].insert(vals.begin(), vals.end());
        s.constituents.push_back(r);
    }
    return out;
}

// Case IDs appearing in the most recent lifespan_x releases (all of them when
// unbounded). A super record whose case id is in this set is an old case.
inline std::set<std::string> old_case_ids(const ReleaseHistory& history, int lifespan_x) {
    std::set<std::string> out;
    std::size_t start = 0;
    if (lifespan_x != kUnboundedLifespan && history.size() > static_cast<std::size_t>(lifespan_x))
        start = history.size() - static_cast<std::size_t>(lifespan_x);
    for (std::size_t i = start; i < history.size(); ++i)
        for (const auto& r : history[i].records) out.insert(r.case_id);
    return out;
}

struct CaseClassification {
    std::set<std::string> nc;  // new cases
    std::set<std::string> oc;  // old cases
};

inline CaseClassification classify_cases(const std::vector<SuperRecord>& supers,
                                         const ReleaseHistory& history, int lifespan_x) {
    const auto old_ids = old_case_ids(history, lifespan_x);
    CaseClassification out;
    for (const auto& s : supers) {
        if (old_ids.count(s.case_id))
            out.oc.insert(s.case_id);
        else
            out.nc.insert(s.case_id);
    }
    return out;
}

}  // namespace srsanon
