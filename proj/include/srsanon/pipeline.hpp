#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/grouping.hpp"
#include "srsanon/mechanisms.hpp"
#include "srsanon/rng.hpp"

namespace srsanon {

namespace detail {

inline void rebuild_virtual(QidGroup& g, const std::vector<SuperRecord>& supers,
                            const QidSchema& schema) {
    bool first = true;
    for (int idx : g.members) {
        const SuperRecord& s = supers[idx];
        if (first) {
            g.virtual_cat = s.cat;
            g.virtual_num = s.num;
            first = false;
        } else {
            for (auto& [a, node] : g.virtual_cat) node = schema.tree(a).lca(node, s.cat.at(a));
            for (auto& [a, iv] : g.virtual_num) iv = iv.hull(s.num.at(a));
        }
    }
}

}  // namespace detail

// Generalize every old case's categorical values so they cover the case's
// earliest published clone (LCA with the clone's value). Mutates the super
// records in place; group virtual tuples are rebuilt by the caller.
inline void qidc_covering(std::vector<SuperRecord>& supers, const ReleaseHistory& history,
                          const QidSchema& schema) {
    for (auto& s : supers) {
        const PublishedRecord* clone = nullptr;
        for (const auto& rel : history)
            if ((clone = rel.find_case(s.case_id)) != nullptr) break;
        if (!clone) continue;  // new case
        for (auto& [attr, value] : s.cat) {
            auto it = clone->cat.find(attr);
            if (it == clone->cat.end() || !schema.tree(attr).contains(it->second))
                throw DataIntegrityError("unresolvable published clone value for case " +
                                         s.case_id + ", attribute " + attr);
            value = schema.tree(attr).lca(value, it->second);
        }
    }
}

namespace detail {

// Merge groups whose categorical tuples (as given by key_of) coincide.
// Order of first occurrence is preserved; virtual stats are rebuilt.
template <typename KeyFn>
std::vector<QidGroup> merge_groups_by(std::vector<QidGroup> groups,
                                      const std::vector<SuperRecord>& supers,
                                      const QidSchema& schema, KeyFn key_of) {
    std::vector<QidGroup> out;
    std::map<std::vector<std::string>, std::size_t> seen;
    for (auto& g : groups) {
        const auto key = key_of(g);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen[key] = out.size();
            out.push_back(std::move(g));
            continue;
        }
        QidGroup& target = out[it->second];
        for (int idx : g.members) target.members.push_back(idx);
        target.new_count += g.new_count;
        for (const auto& [v, c] : g.sens_counts) target.sens_counts[v] += c;
        detail::rebuild_virtual(target, supers, schema);
    }
    return out;
}

inline std::vector<std::string> virtual_cat_key(const QidGroup& g, const QidSchema& schema) {
    std::vector<std::string> key;
    key.reserve(schema.categorical.size());
    for (const auto& a : schema.categorical) key.push_back(g.virtual_cat.at(a.name));
    return key;
}

}  // namespace detail

// Rewrite each group's member categorical values to the group LCA, then merge
// groups with identical generalized tuples.
inline std::vector<QidGroup> qidc_gen_and_merge(std::vector<QidGroup> groups,
                                                std::vector<SuperRecord>& supers,
                                                const QidSchema& schema) {
    for (auto& g : groups) {
        detail::rebuild_virtual(g, supers, schema);
        for (int idx : g.members)
            for (const auto& a : schema.categorical)
                supers[idx].cat[a.name] = g.virtual_cat.at(a.name);
    }
    return detail::merge_groups_by(std::move(groups), supers, schema, [&](const QidGroup& g) {
        return detail::virtual_cat_key(g, schema);
    });
}

// Merge groups with identical virtually generalized tuples; member values are
// left untouched.
inline std::vector<QidGroup> virtual_gen_and_merge(std::vector<QidGroup> groups,
                                                   std::vector<SuperRecord>& supers,
                                                   const QidSchema& schema) {
    for (auto& g : groups) detail::rebuild_virtual(g, supers, schema);
    return detail::merge_groups_by(std::move(groups), supers, schema, [&](const QidGroup& g) {
        return detail::virtual_cat_key(g, schema);
    });
}

struct AnonymizeResult {
    Release release;
    std::vector<Record> suppressed;  // input records no group could admit
};

namespace detail {

struct CaseTreatment {
    int group_id = -1;
    std::map<std::string, std::string> cat;
    std::map<std::string, Interval> num;
};

// Expand groups back to the original input rows, each stamped with its
// group's published treatment but keeping its own sensitive values.
inline AnonymizeResult down_pose(const std::vector<Record>& input,
                                 const std::map<std::string, CaseTreatment>& treatment,
                                 int release_index) {
    AnonymizeResult out;
    out.release.index = release_index;
    for (const auto& r : input) {
        auto it = treatment.find(r.case_id);
        if (it == treatment.end()) {
            out.suppressed.push_back(r);
            continue;
        }
        PublishedRecord p;
        p.case_id = r.case_id;
        p.cat = it->second.cat;
        p.num = it->second.num;
        p.sens = r.sens;
        p.group_id = it->second.group_id;
        out.release.records.push_back(std::move(p));
    }
    return out;
}

}  // namespace detail

inline AnonymizeResult anonymize(const std::vector<Record>& input, const ReleaseHistory& history,
                                 const QidSchema& schema, const PrivacyConfig& cfg) {
    cfg.validate();
    for (const auto& r : input) validate_record(r, schema);
    const int release_index = static_cast<int>(history.size()) + 1;

    std::vector<SuperRecord> supers = merge_super_records(input, schema);
    const auto cls = classify_cases(supers, history, cfg.lifespan_x);
    GroupingResult grouping = ncc_grouping(supers, cls.nc, cls.oc, schema, cfg);

    if (cfg.variant != Variant::All) {
        qidc_covering(supers, history, schema);
        for (auto& g : grouping.groups) detail::rebuild_virtual(g, supers, schema);
    }

    std::vector<QidGroup> groups;
    switch (cfg.variant) {
        case Variant::Num:
            groups = qidc_gen_and_merge(std::move(grouping.groups), supers, schema);
            break;
        case Variant::All:
            groups = virtual_gen_and_merge(std::move(grouping.groups), supers, schema);
            break;
        case Variant::Baseline:
            groups = std::move(grouping.groups);
            for (auto& g : groups) detail::rebuild_virtual(g, supers, schema);
            break;
    }

    std::map<std::string, detail::CaseTreatment> treatment;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const QidGroup& g = groups[gi];

        std::map<std::string, std::map<std::string, double>> noised;
        if (cfg.variant != Variant::Baseline)
            noised = perturb_numeric_group(g, supers, schema, cfg.epsilon, cfg.seed,
                                           release_index, static_cast<int>(gi));

        std::map<std::string, std::string> chosen_cat;
        if (cfg.variant == Variant::All) {
            for (const auto& a : schema.categorical) {
                std::set<std::string> dom;
                for (int idx : g.members) dom.insert(supers[idx].cat.at(a.name));
                const auto psi = candidate_noise_set(dom, schema.tree(a.name));
                KeyedStream stream(cfg.seed);
                stream.mix(std::string("exponential"))
                    .mix(release_index)
                    .mix(static_cast<int>(gi))
                    .mix(a.name);
                chosen_cat[a.name] = exponential_choose(psi, cfg.epsilon, stream);
            }
        }

        for (int idx : g.members) {
            const SuperRecord& s = supers[idx];
            detail::CaseTreatment t;
            t.group_id = static_cast<int>(gi);
            switch (cfg.variant) {
                case Variant::Num:
                case Variant::Baseline:
                    t.cat = g.virtual_cat;
                    break;
                case Variant::All:
                    t.cat = chosen_cat;
                    break;
            }
            for (const auto& a : schema.numeric) {
                if (cfg.variant == Variant::Baseline)
                    t.num[a.name] = g.virtual_num.at(a.name);
                else
                    t.num[a.name] = Interval::point(noised.at(s.case_id).at(a.name));
            }
            treatment[s.case_id] = std::move(t);
        }
    }

    return detail::down_pose(input, treatment, release_index);
}

}  // namespace srsanon
