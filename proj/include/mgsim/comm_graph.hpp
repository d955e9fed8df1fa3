#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mgsim {

/// Information flow from one controller to another (0-based node ids).
struct Link {
    std::size_t from = 0;
    std::size_t to = 0;
};

/// Directed communication graph.
///
/// The edge set follows the receive convention: (i, j) in E means node i
/// receives from node j. Hence in_neighbors(i) = { j | (i, j) in E } and
/// out_neighbors(i) = { j | (j, i) in E }. Both lists are kept sorted so every
/// per-node reduction runs in a fixed order.
class CommGraph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    CommGraph() = default;
    CommGraph(std::size_t n, std::vector<Edge> edges);

    static CommGraph from_links(std::size_t n, std::span<const Link> links);
    static CommGraph directed_ring(std::size_t n);
    static CommGraph bidirectional_ring(std::size_t n);
    static CommGraph complete(std::size_t n);

    std::size_t size() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const std::size_t> in_neighbors(std::size_t i) const {
        return {in_idx_.data() + in_ptr_[i], in_ptr_[i + 1] - in_ptr_[i]};
    }
    std::span<const std::size_t> out_neighbors(std::size_t i) const {
        return {out_idx_.data() + out_ptr_[i], out_ptr_[i + 1] - out_ptr_[i]};
    }
    std::size_t out_degree(std::size_t i) const { return out_ptr_[i + 1] - out_ptr_[i]; }
    std::vector<Link> links() const;

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> in_ptr_, in_idx_;
    std::vector<std::size_t> out_ptr_, out_idx_;
};

/// Shortest directed hop counts from src along the information flow;
/// unreachable nodes get SIZE_MAX.
std::vector<std::size_t> hop_distances(const CommGraph& g, std::size_t src);

bool is_strongly_connected(const CommGraph& g);

/// Max over ordered pairs of the shortest directed path length.
/// Throws GraphError unless g is strongly connected.
std::size_t diameter(const CommGraph& g);

/// What a node sends each round: its mass scaled by 1/(out_degree + 1).
struct RoundMessage {
    std::size_t sender = 0;
    double y_hat = 0.0;
    double z_hat = 0.0;
};

using Inbox = std::vector<RoundMessage>;

/// Synchronous lossless delivery: inbox i holds the messages of every
/// j in in_neighbors(i), ordered by sender id.
std::vector<Inbox> broadcast_round(const CommGraph& g, std::span<const RoundMessage> outgoing);

/// The 10-node digraph used by the CASE presets (strongly connected, diameter 5).
std::vector<Link> case_preset_links();

} // namespace mgsim
