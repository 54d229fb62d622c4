#pragma once

// Fundamental cycle basis from a spanning tree.  Given full node incidence,
// every edge outside a breadth-first spanning tree closes exactly one
// independent loop; a connected graph with E edges and N nodes yields
// E - N + 1 of them.

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "loopflow/errors.hpp"
#include "loopflow/network.hpp"

namespace loopflow::network {

// Derive a set of independent loops from pipe endpoints.  Loop ids are
// "C1", "C2", ... in discovery order of the non-tree edges (pipe definition
// order).  Throws when incidence is incomplete or the graph is disconnected.
inline std::vector<LoopDef> cycle_basis(const Network& net) {
    if (!has_full_incidence(net)) {
        throw ValidationError(
            "node data unavailable: every pipe needs from/to endpoints");
    }

    // Node set and adjacency (edge index, neighbour).
    std::map<std::string, std::vector<std::pair<std::size_t, std::string>>> adj;
    for (std::size_t e = 0; e < net.pipes.size(); ++e) {
        const Pipe& p = net.pipes[e];
        adj[p.from_node].emplace_back(e, p.to_node);
        adj[p.to_node].emplace_back(e, p.from_node);
    }

    // Breadth-first spanning tree.
    std::map<std::string, std::pair<std::size_t, std::string>> parent_edge;
    std::map<std::string, int> depth;
    std::vector<bool> in_tree(net.pipes.size(), false);
    std::queue<std::string> frontier;
    const std::string root = adj.begin()->first;
    depth[root] = 0;
    frontier.push(root);
    while (!frontier.empty()) {
        const std::string node = frontier.front();
        frontier.pop();
        for (const auto& [edge, other] : adj[node]) {
            if (depth.find(other) != depth.end()) continue;
            depth[other] = depth[node] + 1;
            parent_edge[other] = {edge, node};
            in_tree[edge] = true;
            frontier.push(other);
        }
    }

    if (depth.size() != adj.size()) {
        const auto comps = detail::components(net);
        std::ostringstream msg;
        msg << "cycle_basis: graph is disconnected; components:";
        for (const auto& comp : comps) {
            msg << " {";
            for (std::size_t i = 0; i < comp.size(); ++i) {
                msg << (i ? "," : "") << comp[i];
            }
            msg << "}";
        }
        throw ValidationError(msg.str());
    }

    // Orientation of an edge walked from `a` towards the other endpoint:
    // +1 when that direction matches from -> to.
    const auto walk_orientation = [&](std::size_t edge, const std::string& a) {
        return net.pipes[edge].from_node == a ? 1 : -1;
    };

    std::vector<LoopDef> loops;
    for (std::size_t e = 0; e < net.pipes.size(); ++e) {
        if (in_tree[e]) continue;
        const Pipe& chord = net.pipes[e];

        // Tree paths from both endpoints up to their lowest common ancestor.
        std::vector<std::pair<std::size_t, std::string>> up_from;  // (edge, start)
        std::vector<std::pair<std::size_t, std::string>> up_to;
        std::string a = chord.from_node;
        std::string b = chord.to_node;
        while (depth[a] > depth[b]) {
            const auto& [edge, parent] = parent_edge[a];
            up_from.emplace_back(edge, a);
            a = parent;
        }
        while (depth[b] > depth[a]) {
            const auto& [edge, parent] = parent_edge[b];
            up_to.emplace_back(edge, b);
            b = parent;
        }
        while (a != b) {
            const auto& [ea, pa] = parent_edge[a];
            up_from.emplace_back(ea, a);
            a = pa;
            const auto& [eb, pb] = parent_edge[b];
            up_to.emplace_back(eb, b);
            b = pb;
        }

        // Cycle walk: chord from -> to, then from `to` up to the LCA, then
        // down from the LCA back to `from` (the reverse of up_from).
        LoopDef loop;
        loop.id = "C" + std::to_string(loops.size() + 1);
        loop.members.emplace_back(chord.id, 1);
        for (const auto& [edge, start] : up_to) {
            loop.members.emplace_back(net.pipes[edge].id,
                                      walk_orientation(edge, start));
        }
        for (auto it = up_from.rbegin(); it != up_from.rend(); ++it) {
            const auto& [edge, start] = *it;
            // Walked downwards: opposite of the upward direction from `start`.
            loop.members.emplace_back(net.pipes[edge].id,
                                      -walk_orientation(edge, start));
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace loopflow::network
