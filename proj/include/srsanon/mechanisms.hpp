#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/grouping.hpp"
#include "srsanon/rng.hpp"
#include "srsanon/taxonomy.hpp"

namespace srsanon {

// Local sensitivity of a numeric attribute within a group: max - min over the
// members' values, interval-valued entries contributing their endpoints.
inline double local_sensitivity(const QidGroup& g, const std::vector<SuperRecord>& supers,
                                const std::string& attr) {
    if (g.members.empty()) throw ArgumentError("local_sensitivity: empty group");
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (int idx : g.members) {
        const Interval& v = supers[idx].num.at(attr);
        if (first) {
            lo = v.lo;
            hi = v.hi;
            first = false;
        } else {
            lo = std::min(lo, v.lo);
            hi = std::max(hi, v.hi);
        }
    }
    return hi - lo;
}

// Noised value of one member for one numeric attribute: the interval collapses
// to its midpoint, receives Laplace(local sensitivity / epsilon) noise from the
// member's keyed substream, and is clamped to the attribute's global bounds.
inline std::map<std::string, std::map<std::string, double>> perturb_numeric_group(
    const QidGroup& g, const std::vector<SuperRecord>& supers, const QidSchema& schema,
    double epsilon, std::uint64_t seed, int release_index, int group_id) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    std::map<std::string, std::map<std::string, double>> out;  // case -> attr -> value
    for (const auto& attr : schema.numeric) {
        const double scale = local_sensitivity(g, supers, attr.name) / epsilon;
        for (int idx : g.members) {
            const SuperRecord& s = supers[idx];
            KeyedStream stream(seed);
            stream.mix(std::string("laplace"))
                .mix(release_index)
                .mix(group_id)
                .mix(attr.name)
                .mix(s.case_id);
            double v = s.num_mid(attr.name) + stream.laplace(scale);
            v = std::clamp(v, attr.min, attr.max);
            out[s.case_id][attr.name] = v;
        }
    }
    return out;
}

// Candidate noise set psi(C, g): the group's values plus each value's
// ancestors within the minimal covering subtree, in sorted order.
struct CandidateNoiseSet {
    std::vector<std::string> values;  // sorted
    std::set<std::string> dom;
    TaxonomyTree cover;  // T^c

    bool contains(const std::string& v) const {
        return std::binary_search(values.begin(), values.end(), v);
    }
};

inline CandidateNoiseSet candidate_noise_set(const std::set<std::string>& dom,
                                             const TaxonomyTree& tree) {
    if (dom.empty()) throw ArgumentError("candidate_noise_set: empty domain");
    CandidateNoiseSet out;
    out.dom = dom;
    out.cover = tree.minimal_cover_subtree(dom);
    std::set<std::string> values(dom.begin(), dom.end());
    for (const auto& v : dom)
        for (const auto& a : out.cover.ancestors(v)) values.insert(a);
    out.values.assign(values.begin(), values.end());
    return out;
}

// q(v, psi): total distortion of v against every member of psi, measured on
// the covering subtree.
inline double quality(const std::string& v, const CandidateNoiseSet& psi) {
    if (!psi.contains(v)) throw ArgumentError("quality: candidate outside psi: " + v);
    double total = 0.0;
    for (const auto& u : psi.values) total += psi.cover.distortion(u, v);
    return total;
}

// Delta q: spread (max - min) of IL_c(u, v) over u in dom, v in psi, u != v.
// Pairs where both values belong to dom and one generalizes the other are not
// candidates for replacement and are excluded from the spread.
inline double quality_sensitivity(const CandidateNoiseSet& psi) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& u : psi.dom) {
        for (const auto& v : psi.values) {
            if (u == v) continue;
            if (psi.dom.count(v) &&
                (psi.cover.is_ancestor_or_equal(u, v) || psi.cover.is_ancestor_or_equal(v, u)))
                continue;
            const double d = psi.cover.distortion(u, v);
            if (first) {
                lo = hi = d;
                first = false;
            } else {
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
        }
    }
    return hi - lo;
}

// Unnormalized exponential-mechanism weights exp(-epsilon * q / (2 Delta q)),
// uniform when Delta q is zero; aligned with psi.values.
inline std::vector<double> exponential_weights(const CandidateNoiseSet& psi, double epsilon) {
    const double dq = quality_sensitivity(psi);
    std::vector<double> w;
    w.reserve(psi.values.size());
    for (const auto& v : psi.values) {
        if (dq == 0.0)
            w.push_back(1.0);
        else
            w.push_back(std::exp(-epsilon * quality(v, psi) / (2.0 * dq)));
    }
    return w;
}

// One draw per (group, attribute): the chosen node replaces the attribute for
// every member of the group.
inline std::string exponential_choose(const CandidateNoiseSet& psi, double epsilon,
                                      KeyedStream& stream) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    const auto w = exponential_weights(psi, epsilon);
    double total = 0.0;
    for (double x : w) total += x;
    const double target = stream.next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (target < acc) return psi.values[i];
    }
    return psi.values.back();
}

}  // namespace srsanon
