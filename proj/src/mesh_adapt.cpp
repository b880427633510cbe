#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "afem/error.hpp"
#include "afem/mesh.hpp"

namespace afem {

// Refinement uses edge marking: a marked triangle marks its refinement edge,
// and any triangle with a marked edge must also mark its own refinement edge.
// Each triangle is then split into 2, 3 or 4 children. New vertices are
// midpoints of edges of the input mesh only.
//
// Coarsening removes a newest vertex m when every triangle around m has m as
// newest vertex, comes in complete sibling pairs, was requested for
// coarsening and carries no marked edge.
Mesh adapt(const Mesh& in, std::span<const int> refine_set, std::span<const int> coarsen_set,
           AdaptSummary* summary) {
    const int nt = in.num_triangles();
    const int nv = in.num_vertices();
    const int ne = in.num_edges();

    AdaptSummary s;
    s.triangles_before = nt;
    s.refine_requested = static_cast<int>(refine_set.size());
    s.coarsen_requested = static_cast<int>(coarsen_set.size());

    std::vector<char> refine_flag(nt, 0), coarsen_flag(nt, 0);
    for (int t : refine_set) {
        if (t < 0 || t >= nt) throw std::invalid_argument(fmt::format("refine id {} out of range", t));
        refine_flag[t] = 1;
    }
    for (int t : coarsen_set) {
        if (t < 0 || t >= nt) throw std::invalid_argument(fmt::format("coarsen id {} out of range", t));
        if (refine_flag[t]) {
            throw std::invalid_argument(fmt::format("triangle {} is in both refine and coarsen sets", t));
        }
        coarsen_flag[t] = 1;
    }

    // closure
    std::vector<char> marked(ne, 0);
    std::vector<int> work;
    auto mark = [&](int e) {
        if (marked[e]) return;
        marked[e] = 1;
        for (int t : in.edge(e).tri)
            if (t >= 0) work.push_back(t);
    };
    for (int t = 0; t < nt; ++t) {
        if (!refine_flag[t]) continue;
        if (in.level(t) >= in.max_level()) {
            ++s.refine_capped;
            continue;
        }
        mark(in.triangle_edges(t)[0]);
    }
    while (!work.empty()) {
        const int t = work.back();
        work.pop_back();
        const auto& te = in.triangle_edges(t);
        if ((marked[te[1]] || marked[te[2]]) && !marked[te[0]]) mark(te[0]);
    }
    auto has_marked_edge = [&](int t) {
        const auto& te = in.triangle_edges(t);
        return marked[te[0]] || marked[te[1]] || marked[te[2]];
    };

    // coarsening patches
    std::vector<char> removable(nv, 0), checked(nv, 0);
    for (int t = 0; t < nt; ++t) {
        if (!coarsen_flag[t]) continue;
        const int m = in.triangle(t)[0];
        if (checked[m]) continue;
        checked[m] = 1;
        const auto patch = in.vertex_triangles(m);
        bool ok = !patch.empty() && patch.size() % 2 == 0;
        for (int p : patch) {
            ok = ok && in.triangle(p)[0] == m && coarsen_flag[p] && !has_marked_edge(p) &&
                 in.has_active_sibling(p);
        }
        removable[m] = ok ? 1 : 0;
    }
    std::vector<char> coarsened(nt, 0);
    int coarsened_count = 0;
    for (int t = 0; t < nt; ++t) {
        if (removable[in.triangle(t)[0]]) {
            coarsened[t] = 1;
            ++coarsened_count;
        }
    }
    s.coarsen_rejected = s.coarsen_requested - coarsened_count;

    Mesh out;
    out.max_level_ = in.max_level_;
    out.tag_ = {in.tag_.lineage, in.tag_.generation + 1};
    out.parent_tag_ = in.tag_;

    // vertex numbering: survivors in order, then edge midpoints in edge order
    std::vector<int> new_id(nv, -1);
    for (int v = 0; v < nv; ++v) {
        if (removable[v]) {
            ++s.vertices_removed;
            continue;
        }
        new_id[v] = static_cast<int>(out.vertices_.size());
        out.vertices_.push_back(in.vertex(v));
        out.origins_.push_back({v, v});
    }
    std::vector<int> midpoint(ne, -1);
    for (int e = 0; e < ne; ++e) {
        if (!marked[e]) continue;
        const Edge& edge = in.edge(e);
        midpoint[e] = static_cast<int>(out.vertices_.size());
        out.vertices_.push_back(0.5 * (in.vertex(edge.a) + in.vertex(edge.b)));
        out.origins_.push_back({edge.a, edge.b});
    }

    // forest: copy, remap, drop children of coarsened parents
    std::vector<Mesh::Node> nodes = in.nodes_;
    std::vector<char> dead(nodes.size(), 0);
    std::vector<char> emitted_parent(nodes.size(), 0);
    std::vector<int> leaf_nodes;
    leaf_nodes.reserve(static_cast<std::size_t>(nt) * 2);

    auto remap = [&](const Mesh::Triangle& tri) {
        Mesh::Triangle r{};
        for (int i = 0; i < 3; ++i) {
            r[i] = new_id[tri[i]];
            if (r[i] < 0) throw std::logic_error("adapt: live triangle references a removed vertex");
        }
        return r;
    };
    auto new_node = [&](const Mesh::Triangle& verts_old_or_new, int parent, int level) {
        nodes.push_back({verts_old_or_new, parent, {-1, -1}, level});
        dead.push_back(0);
        emitted_parent.push_back(0);
        return static_cast<int>(nodes.size()) - 1;
    };

    // Forest node vertices are stored in output numbering from here on.
    for (std::size_t i = 0; i < in.nodes_.size(); ++i) {
        bool removed_vertex = false;
        for (int v : in.nodes_[i].verts) removed_vertex = removed_vertex || new_id[v] < 0;
        if (removed_vertex) {
            dead[i] = 1;
        } else {
            nodes[i].verts = remap(in.nodes_[i].verts);
        }
    }

    // Bisects node along its refinement edge; m is the midpoint id (output numbering).
    auto bisect = [&](int node, int m) {
        const Mesh::Triangle v = nodes[node].verts;
        const int level = nodes[node].level + 1;
        const int a = new_node({m, v[0], v[1]}, node, level);
        const int b = new_node({m, v[2], v[0]}, node, level);
        nodes[node].child = {a, b};
        ++s.bisections;
        return std::array<int, 2>{a, b};
    };

    for (int t = 0; t < nt; ++t) {
        const int node = in.node_of_[t];
        if (coarsened[t]) {
            const int parent = in.nodes_[node].parent;
            dead[node] = 1;
            if (!emitted_parent[parent]) {
                emitted_parent[parent] = 1;
                nodes[parent].child = {-1, -1};
                leaf_nodes.push_back(parent);
            }
            continue;
        }
        const auto& te = in.triangle_edges(t);
        if (!marked[te[0]]) {
            leaf_nodes.push_back(node);
            continue;
        }
        // children (m, v0, v1) and (m, v2, v0) have refinement edges e2 and e1
        const auto kids = bisect(node, midpoint[te[0]]);
        if (marked[te[2]]) {
            const auto g = bisect(kids[0], midpoint[te[2]]);
            leaf_nodes.push_back(g[0]);
            leaf_nodes.push_back(g[1]);
        } else {
            leaf_nodes.push_back(kids[0]);
        }
        if (marked[te[1]]) {
            const auto g = bisect(kids[1], midpoint[te[1]]);
            leaf_nodes.push_back(g[0]);
            leaf_nodes.push_back(g[1]);
        } else {
            leaf_nodes.push_back(kids[1]);
        }
    }

    // compact the forest
    std::vector<int> node_map(nodes.size(), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!dead[i]) {
            node_map[i] = static_cast<int>(out.nodes_.size());
            out.nodes_.push_back(nodes[i]);
        }
    }
    for (auto& n : out.nodes_) {
        if (n.parent >= 0) n.parent = node_map[n.parent];
        for (int& c : n.child)
            if (c >= 0) c = node_map[c];
    }
    out.triangles_.reserve(leaf_nodes.size());
    out.node_of_.reserve(leaf_nodes.size());
    for (int leaf : leaf_nodes) {
        const int id = node_map[leaf];
        if (id < 0) throw std::logic_error("adapt: active triangle lost from the forest");
        out.node_of_.push_back(id);
        out.triangles_.push_back(out.nodes_[id].verts);
        if (out.nodes_[id].level > out.max_level_) {
            throw std::logic_error(fmt::format("adapt: closure produced level {} above cap {}",
                                               out.nodes_[id].level, out.max_level_));
        }
    }

    // boundary labels
    std::vector<std::vector<std::pair<int, BoundaryLabel>>> removed_links(nv);
    for (int e = 0; e < ne; ++e) {
        const Edge& edge = in.edge(e);
        if (!edge.label) continue;
        const BoundaryLabel label = *edge.label;
        if (removable[edge.a] || removable[edge.b]) {
            const int m = removable[edge.a] ? edge.a : edge.b;
            const int other = m == edge.a ? edge.b : edge.a;
            removed_links[m].push_back({other, label});
            continue;
        }
        const int a = new_id[edge.a];
        const int b = new_id[edge.b];
        if (marked[e]) {
            const int m = midpoint[e];
            out.boundary_[{std::min(a, m), std::max(a, m)}] = label;
            out.boundary_[{std::min(m, b), std::max(m, b)}] = label;
        } else {
            out.boundary_[{std::min(a, b), std::max(a, b)}] = label;
        }
    }
    for (int m = 0; m < nv; ++m) {
        const auto& links = removed_links[m];
        if (links.empty()) continue;
        if (links.size() != 2 || links[0].second != links[1].second) {
            throw std::logic_error(fmt::format("adapt: boundary vertex {} has inconsistent labels", m));
        }
        const int a = new_id[links[0].first];
        const int b = new_id[links[1].first];
        out.boundary_[{std::min(a, b), std::max(a, b)}] = links[0].second;
    }

    out.finalize();
    s.triangles_after = out.num_triangles();
    if (s.refine_capped > 0 || s.coarsen_rejected > 0) {
        spdlog::debug("adapt: {} refine requests at max level, {} coarsen requests rejected",
                      s.refine_capped, s.coarsen_rejected);
    }
    if (summary) *summary = s;
    return out;
}

} // namespace afem
