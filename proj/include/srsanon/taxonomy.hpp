#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srsanon/errors.hpp"

namespace srsanon {

// A rooted tree over a categorical attribute's domain. Leaves are the raw
// values; internal nodes are generalizations. Immutable after construction.
class TaxonomyTree {
public:
    TaxonomyTree() = default;

    // edges are (parent, child) pairs; the root is the node that never
    // appears as a child.
    static TaxonomyTree build(const std::string& root,
                              const std::vector<std::pair<std::string, std::string>>& edges) {
        TaxonomyTree t;
        t.add_node(root, -1);
        for (const auto& [parent, child] : edges) {
            auto it = t.index_.find(parent);
            if (it == t.index_.end())
                throw FormatError("taxonomy edge references unknown parent: " + parent);
            if (t.index_.count(child))
                throw FormatError("duplicate taxonomy node: " + child);
            t.add_node(child, it->second);
        }
        return t;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const std::string& root() const { return names_[0]; }

    std::size_t size() const { return names_.size(); }

    const std::vector<std::string>& nodes() const { return names_; }

    // Strict ancestors of v, nearest first (parent, grandparent, ..., root).
    std::vector<std::string> ancestors(const std::string& v) const {
        std::vector<std::string> out;
        for (int p = parent_[id(v)]; p >= 0; p = parent_[p]) out.push_back(names_[p]);
        return out;
    }

    int depth(const std::string& v) const {
        int d = 0;
        for (int p = parent_[id(v)]; p >= 0; p = parent_[p]) ++d;
        return d;
    }

    bool is_ancestor_or_equal(const std::string& anc, const std::string& node) const {
        int a = id(anc);
        for (int n = id(node); n >= 0; n = parent_[n])
            if (n == a) return true;
        return false;
    }

    std::string lca(const std::string& a, const std::string& b) const {
        int x = id(a), y = id(b);
        int dx = depth_of(x), dy = depth_of(y);
        while (dx > dy) { x = parent_[x]; --dx; }
        while (dy > dx) { y = parent_[y]; --dy; }
        while (x != y) { x = parent_[x]; y = parent_[y]; }
        return names_[x];
    }

    template <typename Container>
    std::string lca_of(const Container& values) const {
        if (values.empty()) throw ArgumentError("lca_of: empty value set");
        auto it = values.begin();
        std::string acc = *it;
        for (++it; it != values.end(); ++it) acc = lca(acc, *it);
        return acc;
    }

    // The minimal subtree covering all given values: the union of paths from
    // each value to their LCA, rooted at the LCA.
    TaxonomyTree minimal_cover_subtree(const std::set<std::string>& values) const {
        if (values.empty()) throw ArgumentError("minimal_cover_subtree: empty value set");
        const std::string top = lca_of(values);
        const int top_id = id(top);
        // Collect kept nodes (paths value -> top).
        std::set<int> kept{top_id};
        for (const auto& v : values)
            for (int n = id(v); n != top_id; n = parent_[n]) kept.insert(n);
        TaxonomyTree sub;
        sub.add_node(top, -1);
        // Insert remaining nodes in original (top-down) id order so parents
        // always precede children.
        for (int n : kept) {
            if (n == top_id) continue;
            sub.add_node(names_[n], sub.index_.at(names_[parent_[n]]));
        }
        return sub;
    }

    // phi(x): x together with all of its strict ancestors.
    std::vector<std::string> closure(const std::string& v) const {
        std::vector<std::string> out{v};
        auto anc = ancestors(v);
        out.insert(out.end(), anc.begin(), anc.end());
        return out;
    }

    // IL_c(u, v) = (|phi(u) u phi(v)| - |phi(u) n phi(v)|) / |phi(u) u phi(v)|.
    // Since both closures run to the root, the intersection is the closure of
    // lca(u, v).
    double distortion(const std::string& u, const std::string& v) const {
        const int nu = depth(u) + 1;
        const int nv = depth(v) + 1;
        const int ni = depth(lca(u, v)) + 1;
        const double uni = nu + nv - ni;
        return (uni - ni) / uni;
    }

private:
    void add_node(const std::string& name, int parent) {
        if (index_.count(name)) throw FormatError("duplicate taxonomy node: " + name);
        index_[name] = static_cast<int>(names_.size());
        names_.push_back(name);
        parent_.push_back(parent);
    }

    int id(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw LookupError("unknown taxonomy node: " + name);
        return it->second;
    }

    int depth_of(int n) const {
        int d = 0;
        for (int p = parent_[n]; p >= 0; p = parent_[p]) ++d;
        return d;
    }

    std::vector<std::string> names_;   // names_[0] is the root
    std::vector<int> parent_;          // -1 for the root
    std::map<std::string, int> index_;
};

}  // namespace srsanon
