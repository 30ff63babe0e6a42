#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"

namespace srsanon {

enum class KnowledgeKind { InRelease, FirstAppearsIn };

// sensitive value -> implied QID constraint; a candidate carrying the value is
// pruned when the target's known QID cannot satisfy the constraint.
struct BackgroundRule {
    std::string value;                 // sensitive value, e.g. "Breast Cancer"
    std::string attr;                  // constrained QID attribute
    std::optional<std::string> node;   // categorical: required (ancestor) node
    std::optional<double> min;         // numeric band
    std::optional<double> max;
};

struct AttackTarget {
    std::map<std::string, std::string> cat;  // attacker's raw categorical knowledge
    std::map<std::string, double> num;       // attacker's raw numeric knowledge
    int known_release = 1;                   // 1-based index
    KnowledgeKind kind = KnowledgeKind::InRelease;
};

struct AttackResult {
    std::set<std::string> candidates;                       // surviving case ids
    std::map<std::string, std::set<std::string>> sensitive;  // case -> values (known release)

    // Sensitive values common to every surviving candidate.
    std::set<std::string> common_sensitive() const {
        std::set<std::string> common;
        bool first = true;
        for (const auto& [c, vals] : sensitive) {
            if (!candidates.count(c)) continue;
            if (first) {
                common = vals;
                first = false;
            } else {
                std::set<std::string> keep;
                for (const auto& v : vals)
                    if (common.count(v)) keep.insert(v);
                common.swap(keep);
            }
        }
        return common;
    }
};

namespace detail {

// Does a published record's QID cover the target's raw QID? Categorical:
// published node is an ancestor-or-equal of the raw leaf. Numeric: intervals
// cover by containment; noised point values match within tau = coverage
// fraction of the attribute's global range.
inline bool covers(const PublishedRecord& rec, const AttackTarget& target, const QidSchema& schema,
                   double coverage_fraction) {
    for (const auto& [attr, leaf] : target.cat) {
        auto it = rec.cat.find(attr);
        if (it == rec.cat.end()) return false;
        if (!schema.tree(attr).is_ancestor_or_equal(it->second, leaf)) return false;
    }
    for (const auto& [attr, value] : target.num) {
        auto it = rec.num.find(attr);
        if (it == rec.num.end()) return false;
        const Interval& v = it->second;
        if (v.is_point()) {
            const auto& bounds = schema.num_attr(attr);
            const double tau = coverage_fraction * (bounds.max - bounds.min);
            if (std::fabs(v.lo - value) > tau) return false;
        } else if (value < v.lo - 1e-9 || value > v.hi + 1e-9) {
            return false;
        }
    }
    return true;
}

inline const Release& release_at(const ReleaseHistory& releases, int index) {
    if (index < 1 || index > static_cast<int>(releases.size()))
        throw ArgumentError("release index out of range: " + std::to_string(index));
    return releases[static_cast<std::size_t>(index) - 1];
}

}  // namespace detail

// All cases in a release whose published QID covers the target's raw QID.
inline std::set<std::string> candidate_set(const AttackTarget& target, const Release& release,
                                           const QidSchema& schema, double coverage_fraction) {
    std::set<std::string> out;
    for (const auto& rec : release.records)
        if (!out.count(rec.case_id) && detail::covers(rec, target, schema, coverage_fraction))
            out.insert(rec.case_id);
    return out;
}

namespace detail {

inline AttackResult make_result(std::set<std::string> ci, const Release& release) {
    AttackResult out;
    out.candidates = std::move(ci);
    for (const auto& c : out.candidates) {
        std::set<std::string> vals;
        for (const auto& [attr, vs] : release.case_sensitive(c)) vals.insert(vs.begin(), vs.end());
        out.sensitive[c] = std::move(vals);
    }
    return out;
}

}  // namespace detail

// Prune candidates whose earlier published clones fail to cover the target.
inline AttackResult backward_attack(const AttackTarget& target, const ReleaseHistory& releases,
                                    const QidSchema& schema, double coverage_fraction) {
    const Release& known = detail::release_at(releases, target.known_release);
    auto ci = candidate_set(target, known, schema, coverage_fraction);
    std::set<std::string> keep;
    for (const auto& c : ci) {
        bool survives = true;
        for (int j = 1; j < target.known_release && survives; ++j) {
            const PublishedRecord* clone = detail::release_at(releases, j).find_case(c);
            if (clone && !detail::covers(*clone, target, schema, coverage_fraction))
                survives = false;
        }
        if (survives) keep.insert(c);
    }
    return detail::make_result(std::move(keep), known);
}

// Prune candidates whose later published clones fail to cover the target.
inline AttackResult forward_attack(const AttackTarget& target, const ReleaseHistory& releases,
                                   const QidSchema& schema, double coverage_fraction) {
    const Release& known = detail::release_at(releases, target.known_release);
    auto ci = candidate_set(target, known, schema, coverage_fraction);
    std::set<std::string> keep;
    for (const auto& c : ci) {
        bool survives = true;
        for (int j = target.known_release + 1; j <= static_cast<int>(releases.size()) && survives;
             ++j) {
            const PublishedRecord* clone = detail::release_at(releases, j).find_case(c);
            if (clone && !detail::covers(*clone, target, schema, coverage_fraction))
                survives = false;
        }
        if (survives) keep.insert(c);
    }
    return detail::make_result(std::move(keep), known);
}

// The attacker knows the target first appears in the known release: every
// candidate already published earlier is excluded.
inline AttackResult latest_attack(const AttackTarget& target, const ReleaseHistory& releases,
                                  const QidSchema& schema, double coverage_fraction) {
    if (target.kind != KnowledgeKind::FirstAppearsIn)
        throw ArgumentError("latest_attack requires first-appears-in knowledge");
    const Release& known = detail::release_at(releases, target.known_release);
    auto ci = candidate_set(target, known, schema, coverage_fraction);
    std::set<std::string> keep;
    for (const auto& c : ci) {
        bool survives = true;
        for (int j = 1; j < target.known_release && survives; ++j)
            if (detail::release_at(releases, j).has_case(c)) survives = false;
        if (survives) keep.insert(c);
    }
    return detail::make_result(std::move(keep), known);
}

// Remove candidates whose sensitive values imply a QID constraint the target's
// known QID contradicts.
inline AttackResult background_prune(AttackResult result, const AttackTarget& target,
                                     const std::vector<BackgroundRule>& rules,
                                     const QidSchema& schema) {
    std::set<std::string> keep;
    for (const auto& c : result.candidates) {
        bool survives = true;
        const auto& vals = result.sensitive.at(c);
        for (const auto& rule : rules) {
            if (!vals.count(rule.value)) continue;
            if (rule.node) {
                auto it = target.cat.find(rule.attr);
                if (it != target.cat.end() &&
                    !schema.tree(rule.attr).is_ancestor_or_equal(*rule.node, it->second)) {
                    survives = false;
                    break;
                }
            }
            if (rule.min || rule.max) {
                auto it = target.num.find(rule.attr);
                if (it != target.num.end() &&
                    ((rule.min && it->second < *rule.min) || (rule.max && it->second > *rule.max))) {
                    survives = false;
                    break;
                }
            }
        }
        if (survives) keep.insert(c);
    }
    result.candidates.swap(keep);
    return result;
}

struct BreachEvent {
    int release = 0;
    std::string case_id;
    std::string attack;  // "backward", "forward", "latest"
    std::vector<std::string> candidates;
    std::set<std::string> inferred;  // sensitive values exceeding theta (or all, when CI < k)
    bool record_breach = false;      // |CI| < k with the target inside
    bool attribute_breach = false;   // some sensitive frequency above theta
};

struct PerReleaseBreaches {
    int record_breaches = 0;
    int attribute_breaches = 0;
    int breached_cases = 0;
};

struct AuditReport {
    std::vector<BreachEvent> events;
    std::map<int, PerReleaseBreaches> per_release;
    std::set<std::pair<int, std::string>> breached_cases;  // (release, case)
    int total_record_breaches = 0;
    int total_attribute_breaches = 0;

    bool clean() const { return events.empty(); }
};

namespace audit_detail {

// Integer-encoded view of the whole series: cases get global ids, taxonomy
// nodes and sensitive values get per-attribute / global ids, so the per-target
// inner loops are array lookups rather than string-keyed map and set work.
struct FlatSeries {
    std::map<std::string, int> gid_of;      // case id -> global case id
    std::vector<std::string> case_name;     // gid -> case id
    std::vector<int> first_seen;            // gid -> first release index (1-based)

    std::vector<std::map<std::string, int>> node_id;  // [cat attr] node name -> id
    std::vector<int> tree_size;

    std::map<std::string, int> val_id;      // sensitive value -> id
    std::vector<std::string> val_name;
    std::vector<double> theta;              // [val id]

    struct Rel {
        std::vector<int> gids;                   // local idx -> gid
        std::vector<int> local_of_gid;           // gid -> local idx or -1
        std::vector<std::vector<int>> cat;       // [attr][local] node id
        std::vector<std::vector<Interval>> num;  // [attr][local]
        std::vector<std::vector<int>> sens;      // [local] -> value ids
    };
    std::vector<Rel> rels;

    FlatSeries(const ReleaseHistory& releases, const QidSchema& schema, const ThetaMap& thetas) {
        const int n_cat = static_cast<int>(schema.categorical.size());
        const int n_num = static_cast<int>(schema.numeric.size());
        node_id.resize(static_cast<std::size_t>(n_cat));
        tree_size.resize(static_cast<std::size_t>(n_cat));
        for (int a = 0; a < n_cat; ++a) {
            const auto& nodes = schema.tree(schema.categorical[a].name).nodes();
            tree_size[a] = static_cast<int>(nodes.size());
            for (int i = 0; i < tree_size[a]; ++i) node_id[a][nodes[i]] = i;
        }
        for (const auto& r : releases) {
            Rel rel;
            rel.cat.resize(static_cast<std::size_t>(n_cat));
            rel.num.resize(static_cast<std::size_t>(n_num));
            std::map<int, std::size_t> local;
            for (const auto& rec : r.records) {
                auto [git, inserted] = gid_of.emplace(rec.case_id, static_cast<int>(case_name.size()));
                if (inserted) {
                    case_name.push_back(rec.case_id);
                    first_seen.push_back(static_cast<int>(rels.size()) + 1);
                }
                const int gid = git->second;
                auto lit = local.find(gid);
                std::size_t li;
                if (lit == local.end()) {
                    li = rel.gids.size();
                    local[gid] = li;
                    rel.gids.push_back(gid);
                    for (int a = 0; a < n_cat; ++a)
                        rel.cat[a].push_back(node_id[a].at(rec.cat.at(schema.categorical[a].name)));
                    for (int a = 0; a < n_num; ++a)
                        rel.num[a].push_back(rec.num.at(schema.numeric[a].name));
                    rel.sens.emplace_back();
                } else {
                    li = lit->second;
                }
                for (const auto& [attr, vals] : rec.sens)
                    for (const auto& v : vals) {
                        auto [vit, vnew] = val_id.emplace(v, static_cast<int>(val_name.size()));
                        if (vnew) {
                            val_name.push_back(v);
                            theta.push_back(thetas.at(v));
                        }
                        auto& sv = rel.sens[li];
                        if (std::find(sv.begin(), sv.end(), vit->second) == sv.end())
                            sv.push_back(vit->second);
                    }
            }
            rels.push_back(std::move(rel));
        }
        for (auto& rel : rels) {
            rel.local_of_gid.assign(case_name.size(), -1);
            for (std::size_t li = 0; li < rel.gids.size(); ++li)
                rel.local_of_gid[static_cast<std::size_t>(rel.gids[li])] = static_cast<int>(li);
        }
    }
};

// One target's coverage test, rebuilt per target: per-attribute node masks
// (closure of the raw leaf) plus the raw numeric values and tau windows.
struct TargetCover {
    std::vector<std::vector<char>> node_ok;  // [cat attr][node id]
    std::vector<double> value;               // [num attr]
    std::vector<double> tau;

    bool covers(const FlatSeries::Rel& rel, int local) const {
        for (std::size_t a = 0; a < node_ok.size(); ++a)
            if (!node_ok[a][static_cast<std::size_t>(rel.cat[a][static_cast<std::size_t>(local)])])
                return false;
        for (std::size_t a = 0; a < value.size(); ++a) {
            const Interval& v = rel.num[a][static_cast<std::size_t>(local)];
            if (v.is_point()) {
                if (std::fabs(v.lo - value[a]) > tau[a]) return false;
            } else if (value[a] < v.lo - 1e-9 || value[a] > v.hi + 1e-9) {
                return false;
            }
        }
        return true;
    }
};

}  // namespace audit_detail

// Replay the cross-release attacks against every published record, using the
// record's own raw QID as the simulated attacker knowledge. raw[i] is the
// original dataset behind releases[i]. Read-only over the releases.
inline AuditReport audit_series(const std::vector<std::vector<Record>>& raw,
                                const ReleaseHistory& releases, const QidSchema& schema,
                                const PrivacyConfig& cfg,
                                const std::vector<BackgroundRule>* rules = nullptr) {
    if (raw.size() != releases.size())
        throw ArgumentError("audit_series: raw datasets and releases differ in count");
    const int n = static_cast<int>(releases.size());
    const int n_cat = static_cast<int>(schema.categorical.size());
    const int n_num = static_cast<int>(schema.numeric.size());

    const audit_detail::FlatSeries fs(releases, schema, cfg.theta);

    // Per sensitive value: does a background rule tied to it contradict the
    // current target's raw QID? Recomputed per target below.
    std::vector<char> bad_val(fs.val_name.size(), 0);

    std::vector<int> counts(fs.val_name.size(), 0);
    audit_detail::TargetCover tc;
    tc.node_ok.resize(static_cast<std::size_t>(n_cat));
    for (int a = 0; a < n_cat; ++a)
        tc.node_ok[a].assign(static_cast<std::size_t>(fs.tree_size[a]), 0);
    tc.value.resize(static_cast<std::size_t>(n_num));
    tc.tau.resize(static_cast<std::size_t>(n_num));

    AuditReport report;
    for (int i = 1; i <= n; ++i) {
        const auto& rel = fs.rels[static_cast<std::size_t>(i - 1)];
        // One pseudo-target per distinct case present in this release.
        std::set<std::string> done;
        for (const auto& rec : raw[static_cast<std::size_t>(i - 1)]) {
            if (!done.insert(rec.case_id).second) continue;
            auto git = fs.gid_of.find(rec.case_id);
            const int gid = git == fs.gid_of.end() ? -1 : git->second;
            const int own_local = gid < 0 ? -1 : rel.local_of_gid[static_cast<std::size_t>(gid)];
            if (own_local < 0) continue;  // suppressed rows cannot be targeted

            for (int a = 0; a < n_cat; ++a) {
                auto& ok = tc.node_ok[a];
                std::fill(ok.begin(), ok.end(), 0);
                for (const auto& node :
                     schema.tree(schema.categorical[a].name).closure(rec.cat.at(schema.categorical[a].name)))
                    ok[static_cast<std::size_t>(fs.node_id[a].at(node))] = 1;
            }
            for (int a = 0; a < n_num; ++a) {
                const auto& attr = schema.numeric[a];
                tc.value[a] = rec.num.at(attr.name);
                tc.tau[a] = cfg.coverage_fraction * (attr.max - attr.min);
            }
            if (rules) {
                std::fill(bad_val.begin(), bad_val.end(), 0);
                for (const auto& rule : *rules) {
                    auto vit = fs.val_id.find(rule.value);
                    if (vit == fs.val_id.end()) continue;
                    bool contradicted = false;
                    if (rule.node) {
                        auto it = rec.cat.find(rule.attr);
                        if (it != rec.cat.end() &&
                            !schema.tree(rule.attr).is_ancestor_or_equal(*rule.node, it->second))
                            contradicted = true;
                    }
                    if (rule.min || rule.max) {
                        auto it = rec.num.find(rule.attr);
                        if (it != rec.num.end() &&
                            ((rule.min && it->second < *rule.min) ||
                             (rule.max && it->second > *rule.max)))
                            contradicted = true;
                    }
                    if (contradicted) bad_val[static_cast<std::size_t>(vit->second)] = 1;
                }
            }

            std::vector<int> base;
            for (std::size_t li = 0; li < rel.gids.size(); ++li)
                if (tc.covers(rel, static_cast<int>(li))) base.push_back(static_cast<int>(li));

            auto run_attack = [&](const std::string& name, std::vector<int>& ci) {
                ci.clear();
                for (int li : base) {
                    const int c = rel.gids[static_cast<std::size_t>(li)];
                    bool survives = true;
                    if (name == "backward") {
                        for (int j = 1; j < i && survives; ++j) {
                            const auto& other = fs.rels[static_cast<std::size_t>(j - 1)];
                            const int lj = other.local_of_gid[static_cast<std::size_t>(c)];
                            if (lj >= 0 && !tc.covers(other, lj)) survives = false;
                        }
                    } else if (name == "forward") {
                        for (int j = i + 1; j <= n && survives; ++j) {
                            const auto& other = fs.rels[static_cast<std::size_t>(j - 1)];
                            const int lj = other.local_of_gid[static_cast<std::size_t>(c)];
                            if (lj >= 0 && !tc.covers(other, lj)) survives = false;
                        }
                    } else {  // latest
                        if (fs.first_seen[static_cast<std::size_t>(c)] < i) survives = false;
                    }
                    if (survives && rules) {
                        for (int v : rel.sens[static_cast<std::size_t>(li)])
                            if (bad_val[static_cast<std::size_t>(v)]) {
                                survives = false;
                                break;
                            }
                    }
                    if (survives) ci.push_back(li);
                }
            };

            std::vector<std::string> attacks{"backward"};
            if (i < n) attacks.push_back("forward");
            if (fs.first_seen[static_cast<std::size_t>(gid)] == i) attacks.push_back("latest");

            bool case_breached = false;
            std::vector<int> ci;
            for (const auto& name : attacks) {
                run_attack(name, ci);
                // Attacker's set must actually contain the target.
                if (std::find(ci.begin(), ci.end(), own_local) == ci.end()) continue;
                bool record_breach = static_cast<int>(ci.size()) < cfg.k;
                std::vector<int> touched;
                for (int li : ci)
                    for (int v : rel.sens[static_cast<std::size_t>(li)]) {
                        if (counts[static_cast<std::size_t>(v)] == 0) touched.push_back(v);
                        ++counts[static_cast<std::size_t>(v)];
                    }
                std::set<std::string> inferred;
                for (int v : touched) {
                    const double freq = static_cast<double>(counts[static_cast<std::size_t>(v)]) /
                                        static_cast<double>(ci.size());
                    if (freq > fs.theta[static_cast<std::size_t>(v)] + 1e-12)
                        inferred.insert(fs.val_name[static_cast<std::size_t>(v)]);
                }
                for (int v : touched) counts[static_cast<std::size_t>(v)] = 0;
                if (!record_breach && inferred.empty()) continue;
                BreachEvent ev;
                ev.release = i;
                ev.case_id = rec.case_id;
                ev.attack = name;
                for (int li : ci)
                    ev.candidates.push_back(fs.case_name[static_cast<std::size_t>(rel.gids[static_cast<std::size_t>(li)])]);
                std::sort(ev.candidates.begin(), ev.candidates.end());
                ev.record_breach = record_breach;
                ev.attribute_breach = !inferred.empty();
                ev.inferred = std::move(inferred);
                auto& per = report.per_release[i];
                if (ev.record_breach) {
                    ++per.record_breaches;
                    ++report.total_record_breaches;
                }
                if (ev.attribute_breach) {
                    ++per.attribute_breaches;
                    ++report.total_attribute_breaches;
                }
                case_breached = true;
                report.events.push_back(std::move(ev));
            }
            if (case_breached) {
                report.breached_cases.insert({i, rec.case_id});
                ++report.per_release[i].breached_cases;
            }
        }
    }
    return report;
}

}  // namespace srsanon
