#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lzspa/errors.hpp"
#include "lzspa/types.hpp"

namespace lzspa {

/// Dirichlet smoothing parameter for the sequential probability
/// assignment. It is applied at query time only; the tree stores raw
/// counts, so a single trained model serves every gamma.
struct SpaParams {
    double gamma = 0.5;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw InvalidArgument("gamma must be a positive finite real");
    }
};

/// What one training call added to the tree.
struct TrainDelta {
    std::uint64_t symbols = 0;
    std::uint64_t nodes_created = 0; ///< equals the number of completed parse phrases
};

/// Snapshot of tree shape and size, for reporting.
struct TreeStats {
    std::uint64_t node_count = 0;
    std::uint64_t total_symbols = 0;
    std::uint64_t num_sequences = 0;
    std::uint32_t max_depth = 0;
    std::vector<std::uint64_t> depth_histogram; ///< index = depth, [0] = root
    std::uint64_t serialized_bytes = 0;         ///< exact size of the model file
};

/// One outgoing edge of a tree node. `count` is the number of times the
/// symbol has been observed while the traversal sat at this node; `child`
/// is the node the symbol leads to (kNoNode only for hand-crafted model
/// files whose counts and parent links disagree).
struct LzEdge {
    Symbol symbol = 0;
    std::uint32_t child = 0;
    std::uint64_t count = 0;
};

struct LzNode {
    std::uint32_t parent = 0;
    Symbol incoming = kNoSymbol;
    std::vector<LzEdge> edges; ///< sorted by symbol; most nodes hold few entries
};

/// LZ78 prefix tree with per-node symbol counts.
///
/// Training performs incremental parsing: at each input symbol the count
/// at the current node is incremented first; then the traversal descends
/// the matching edge if it exists, or creates the edge (completing a
/// phrase) and returns to the root. Each training sequence starts at the
/// root.
///
/// The smoothed next-symbol distribution at a node with counts N is
///
///     q(a) = (N(a) + gamma) / (sum_a' N(a') + gamma * A)
///
/// so every symbol keeps positive probability for gamma > 0.
///
/// Concurrency: training is single-writer. After freeze() the tree is
/// immutable and safe for any number of concurrent readers.
class LzTree {
public:
    static constexpr std::uint32_t kRoot = 0;
    static constexpr std::uint32_t kNoNode = 0xFFFFFFFFu;

    explicit LzTree(Alphabet alphabet) : alphabet_(alphabet) {
        nodes_.push_back(LzNode{kNoNode, kNoSymbol, {}});
    }

    const Alphabet& alphabet() const { return alphabet_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::uint64_t total_symbols() const { return total_symbols_; }
    std::uint64_t num_sequences() const { return num_sequences_; }
    const LzNode& node(std::uint32_t id) const {
        check_node(id);
        return nodes_[id];
    }

    bool frozen() const { return frozen_; }

    /// Marks the tree immutable. Generation and concurrent evaluation
    /// require a frozen tree.
    void freeze() { frozen_ = true; }

    /// Parses one sequence into the tree. Rejects out-of-alphabet symbols
    /// before touching any state, so a failed call leaves the tree
    /// unchanged. An empty sequence is a no-op and counts for nothing.
    TrainDelta train_on_sequence(std::span<const Symbol> seq) {
        if (frozen_) throw InvalidArgument("cannot train a frozen tree");
        for (Symbol s : seq)
            if (!alphabet_.contains(s))
                throw InvalidSymbol("symbol " + std::to_string(s) +
                                    " outside alphabet of size " +
                                    std::to_string(alphabet_.size()));
        TrainDelta delta;
        if (seq.empty()) return delta;

        std::uint32_t cur = kRoot;
        for (Symbol s : seq) {
            auto& edges = nodes_[cur].edges;
            auto it = find_edge(edges, s);
            if (it != edges.end() && it->symbol == s) {
                ++it->count;
                cur = it->child != kNoNode ? it->child : attach_child(cur, it, s, delta);
            } else {
                std::uint32_t child = static_cast<std::uint32_t>(nodes_.size());
                if (child == kNoNode) throw Error("tree node capacity exceeded");
                edges.insert(it, LzEdge{s, child, 1});
                nodes_.push_back(LzNode{cur, s, {}});
                ++delta.nodes_created;
                cur = kRoot;
            }
        }
        delta.symbols = seq.size();
        total_symbols_ += delta.symbols;
        num_sequences_ += 1;
        return delta;
    }

    /// Child node reached by `a` from `node`, or kNoNode.
    std::uint32_t child_of(std::uint32_t node, Symbol a) const {
        check_node(node);
        const auto& edges = nodes_[node].edges;
        auto it = find_edge(edges, a);
        return (it != edges.end() && it->symbol == a) ? it->child : kNoNode;
    }

    std::uint64_t count_at(std::uint32_t node, Symbol a) const {
        check_node(node);
        const auto& edges = nodes_[node].edges;
        auto it = find_edge(edges, a);
        return (it != edges.end() && it->symbol == a) ? it->count : 0;
    }

    /// Total number of symbols observed at this node.
    std::uint64_t total_count(std::uint32_t node) const {
        check_node(node);
        std::uint64_t total = 0;
        for (const auto& e : nodes_[node].edges) total += e.count;
        return total;
    }

    bool is_leaf(std::uint32_t node) const {
        check_node(node);
        for (const auto& e : nodes_[node].edges)
            if (e.child != kNoNode) return false;
        return true;
    }

    /// Smoothed next-symbol distribution at a node. Entries are positive
    /// and sum to 1 up to rounding.
    std::vector<double> spa_distribution(std::uint32_t node, const SpaParams& params) const {
        check_node(node);
        params.validate();
        const std::uint32_t a_size = alphabet_.size();
        const double denom =
            static_cast<double>(total_count(node)) + params.gamma * a_size;
        std::vector<double> q(a_size, params.gamma / denom);
        for (const auto& e : nodes_[node].edges)
            q[e.symbol] = (static_cast<double>(e.count) + params.gamma) / denom;
        return q;
    }

    /// Smoothed probability of a single symbol at a node.
    double spa_probability(std::uint32_t node, Symbol a, const SpaParams& params) const {
        check_node(node);
        params.validate();
        if (!alphabet_.contains(a))
            throw InvalidSymbol("symbol " + std::to_string(a) + " outside alphabet");
        const double denom =
            static_cast<double>(total_count(node)) + params.gamma * alphabet_.size();
        return (static_cast<double>(count_at(node, a)) + params.gamma) / denom;
    }

    /// Per-symbol negative log-likelihood (nats) of `seq` under the
    /// frozen-tree SPA. The traversal follows the training rule — descend
    /// on a match, return to the root on a miss — but never mutates
    /// counts, so evaluating twice gives the same answer.
    double log_loss(std::span<const Symbol> seq, const SpaParams& params) const {
        params.validate();
        if (seq.empty()) throw InvalidArgument("log_loss: empty sequence");
        double nats = 0.0;
        std::uint32_t cur = kRoot;
        for (Symbol s : seq) {
            if (!alphabet_.contains(s))
                throw InvalidSymbol("symbol " + std::to_string(s) + " outside alphabet");
            nats -= std::log(spa_probability(cur, s, params));
            std::uint32_t next = child_of(cur, s);
            cur = next != kNoNode ? next : kRoot;
        }
        return nats / static_cast<double>(seq.size());
    }

    /// Node shape/size summary. Node ids grow in creation order, so every
    /// parent id is smaller than its children and one forward pass
    /// suffices for depths.
    TreeStats stats() const {
        TreeStats st;
        st.node_count = nodes_.size();
        st.total_symbols = total_symbols_;
        st.num_sequences = num_sequences_;
        std::vector<std::uint32_t> depth(nodes_.size(), 0);
        for (std::uint32_t i = 1; i < nodes_.size(); ++i) {
            depth[i] = depth[nodes_[i].parent] + 1;
            st.max_depth = std::max(st.max_depth, depth[i]);
        }
        st.depth_histogram.assign(st.max_depth + 1, 0);
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) ++st.depth_histogram[depth[i]];
        st.serialized_bytes = 4 + 1 + 2 + 8; // magic, version, alphabet, node count
        for (const auto& n : nodes_)
            st.serialized_bytes += 8 + 1 + 2 + 9 * n.edges.size();
        return st;
    }

    /// Structural equality: same alphabet and identical node tables.
    /// Training-run bookkeeping (sequence counters) is not part of the
    /// serialized structure and is deliberately excluded.
    bool operator==(const LzTree& other) const {
        if (alphabet_.size() != other.alphabet_.size()) return false;
        if (nodes_.size() != other.nodes_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& a = nodes_[i];
            const auto& b = other.nodes_[i];
            if (a.parent != b.parent || a.incoming != b.incoming) return false;
            if (a.edges.size() != b.edges.size()) return false;
            for (std::size_t j = 0; j < a.edges.size(); ++j) {
                if (a.edges[j].symbol != b.edges[j].symbol ||
                    a.edges[j].child != b.edges[j].child ||
                    a.edges[j].count != b.edges[j].count)
                    return false;
            }
        }
        return true;
    }

private:
    friend LzTree deserialize_model(std::span<const std::uint8_t>);

    static std::vector<LzEdge>::const_iterator find_edge(const std::vector<LzEdge>& edges,
                                                         Symbol a) {
        return std::lower_bound(edges.begin(), edges.end(), a,
                                [](const LzEdge& e, Symbol s) { return e.symbol < s; });
    }

    static std::vector<LzEdge>::iterator find_edge(std::vector<LzEdge>& edges, Symbol a) {
        return std::lower_bound(edges.begin(), edges.end(), a,
                                [](const LzEdge& e, Symbol s) { return e.symbol < s; });
    }

    /// Repairs a counted edge with no child (possible only in foreign
    /// model files): creating the child completes the phrase, so the
    /// traversal restarts at the root exactly as for a fresh edge.
    std::uint32_t attach_child(std::uint32_t parent, std::vector<LzEdge>::iterator it,
                               Symbol s, TrainDelta& delta) {
        std::uint32_t child = static_cast<std::uint32_t>(nodes_.size());
        if (child == kNoNode) throw Error("tree node capacity exceeded");
        it->child = child;
        nodes_.push_back(LzNode{parent, s, {}});
        ++delta.nodes_created;
        return kRoot;
    }

    void check_node(std::uint32_t id) const {
        if (id >= nodes_.size())
            throw UnknownNode("node id " + std::to_string(id) + " out of range (" +
                              std::to_string(nodes_.size()) + " nodes)");
    }

    Alphabet alphabet_;
    std::vector<LzNode> nodes_;
    std::uint64_t total_symbols_ = 0;
    std::uint64_t num_sequences_ = 0;
    bool frozen_ = false;
};

} // namespace lzspa
