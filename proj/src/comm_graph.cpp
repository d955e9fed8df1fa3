#include "mgsim/comm_graph.hpp"

#include "mgsim/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <deque>
#include <limits>

namespace mgsim {

namespace {

void build_csr(std::size_t n, const std::vector<CommGraph::Edge>& edges, bool by_first,
               std::vector<std::size_t>& ptr, std::vector<std::size_t>& idx) {
    ptr.assign(n + 1, 0);
    for (const auto& [i, j] : edges) ++ptr[(by_first ? i : j) + 1];
    for (std::size_t k = 0; k < n; ++k) ptr[k + 1] += ptr[k];
    idx.assign(edges.size(), 0);
    std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
    for (const auto& [i, j] : edges) {
        const std::size_t row = by_first ? i : j;
        idx[fill[row]++] = by_first ? j : i;
    }
    for (std::size_t k = 0; k < n; ++k)
        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(ptr[k]),
                  idx.begin() + static_cast<std::ptrdiff_t>(ptr[k + 1]));
}

} // namespace

CommGraph::CommGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    for (const auto& [i, j] : edges_) {
        if (i >= n_ || j >= n_)
            throw GraphError(fmt::format("edge ({}, {}) references a node outside 0..{}", i, j, n_ - 1));
        if (i == j) throw GraphError(fmt::format("self-loop at node {}", i));
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
        throw GraphError("duplicate edge in communication graph");
    // (i, j): i receives from j.
    build_csr(n_, edges_, true, in_ptr_, in_idx_);
    build_csr(n_, edges_, false, out_ptr_, out_idx_);
}

CommGraph CommGraph::from_links(std::size_t n, std::span<const Link> links) {
    std::vector<Edge> e;
    e.reserve(links.size());
    for (const auto& l : links) e.emplace_back(l.to, l.from);
    return CommGraph(n, std::move(e));
}

CommGraph CommGraph::directed_ring(std::size_t n) {
    std::vector<Link> l;
    if (n > 1)
        for (std::size_t i = 0; i < n; ++i) l.push_back({i, (i + 1) % n});
    return from_links(n, l);
}

CommGraph CommGraph::bidirectional_ring(std::size_t n) {
    std::vector<Link> l;
    if (n == 2) {
        l = {{0, 1}, {1, 0}};
    } else if (n > 2) {
        for (std::size_t i = 0; i < n; ++i) {
            l.push_back({i, (i + 1) % n});
            l.push_back({(i + 1) % n, i});
        }
    }
    return from_links(n, l);
}

CommGraph CommGraph::complete(std::size_t n) {
    std::vector<Link> l;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (i != k) l.push_back({i, k});
    return from_links(n, l);
}

std::vector<Link> CommGraph::links() const {
    std::vector<Link> out;
    out.reserve(edges_.size());
    for (const auto& [i, j] : edges_) out.push_back({j, i});
    return out;
}

std::vector<std::size_t> hop_distances(const CommGraph& g, std::size_t src) {
    constexpr auto inf = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(g.size(), inf);
    std::deque<std::size_t> queue{src};
    dist[src] = 0;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t w : g.out_neighbors(u)) {
            if (dist[w] == inf) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    return dist;
}

bool is_strongly_connected(const CommGraph& g) {
    if (g.size() == 0) return false;
    // Reachability from node 0 along both directions.
    auto all_reached = [&](bool forward) {
        std::vector<char> seen(g.size(), 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t w : forward ? g.out_neighbors(u) : g.in_neighbors(u)) {
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
            }
        }
        return count == g.size();
    };
    return all_reached(true) && all_reached(false);
}

std::size_t diameter(const CommGraph& g) {
    if (!is_strongly_connected(g)) throw GraphError("diameter requires a strongly connected graph");
    std::size_t d = 0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        const auto dist = hop_distances(g, s);
        d = std::max(d, *std::max_element(dist.begin(), dist.end()));
    }
    return d;
}

std::vector<Inbox> broadcast_round(const CommGraph& g, std::span<const RoundMessage> outgoing) {
    if (outgoing.size() != g.size()) throw GraphError("broadcast_round needs one message per node");
    std::vector<Inbox> inboxes(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto src = g.in_neighbors(i);
        inboxes[i].reserve(src.size());
        for (std::size_t j : src) inboxes[i].push_back(outgoing[j]);
    }
    return inboxes;
}

std::vector<Link> case_preset_links() {
    // Directed ring 0 -> 1 -> ... -> 9 -> 0 plus four chords.
    std::vector<Link> l;
    for (std::size_t i = 0; i < 10; ++i) l.push_back({i, (i + 1) % 10});
    l.push_back({0, 2});
    l.push_back({2, 5});
    l.push_back({5, 7});
    l.push_back({7, 0});
    return l;
}

} // namespace mgsim
