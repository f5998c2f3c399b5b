#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lzspa/errors.hpp"
#include "lzspa/lz_tree.hpp"
#include "lzspa/parallel.hpp"
#include "lzspa/rng.hpp"
#include "lzspa/sampling.hpp"
#include "lzspa/types.hpp"

namespace lzspa {

/// Knobs for sampling from a frozen tree. Defaults are the toolkit's
/// reference configuration for 256-token piano-roll models.
struct GenParams {
    double gamma = 5e-5;
    std::uint32_t top_k = 8;
    double temperature = 0.8;
    std::uint32_t min_context = 64;
    std::uint32_t seq_len = kNominalSequenceLength;
    std::uint64_t master_seed = 1;

    void validate(const Alphabet& alphabet) const {
        SpaParams{gamma}.validate();
        if (top_k < 1 || top_k > alphabet.size())
            throw InvalidArgument("top_k must be in [1, alphabet size]");
        if (!(temperature >= 0.0) || !std::isfinite(temperature))
            throw InvalidArgument("temperature must be nonnegative and finite");
        if (seq_len < 1) throw InvalidArgument("seq_len must be positive");
        if (min_context >= seq_len)
            throw InvalidArgument("min_context must be smaller than seq_len");
    }
};

/// Re-walk depth cap for context re-seeding.
inline constexpr std::uint32_t kMaxReseedDepth = 256;

namespace gen_detail {

/// Deepest node reachable by walking some suffix of the generated output
/// from the root, considering only landing nodes that have children
/// (a childless node has no observed continuations, so prediction there
/// would collapse to the uniform prior). Longest suffixes are tried
/// first, which also guarantees the min-context floor whenever a long
/// enough suffix exists in the tree. Suffix length is capped at
/// kMaxReseedDepth. The root itself is the final fallback.
inline std::uint32_t reseed_node(const LzTree& tree, std::span<const Symbol> output) {
    const std::size_t cap = std::min<std::size_t>(output.size(), kMaxReseedDepth);
    for (std::size_t len = cap;; --len) {
        std::uint32_t node = LzTree::kRoot;
        bool walkable = true;
        for (std::size_t i = output.size() - len; i < output.size(); ++i) {
            const std::uint32_t next = tree.child_of(node, output[i]);
            if (next == LzTree::kNoNode) {
                walkable = false;
                break;
            }
            node = next;
        }
        if (walkable && !tree.is_leaf(node)) return node;
        if (len == 0) return LzTree::kRoot;
    }
}

} // namespace gen_detail

/// Draws one raw token sequence from a frozen tree. The first token is a
/// uniform draw over the root's existing children; afterwards each step
/// filters the node's SPA with top-k and temperature, samples the next
/// token, and advances the traversal. Whenever the traversal cannot
/// continue — the sampled symbol has no edge, or it lands on a node
/// without children — the context is re-seeded from the longest suffix
/// of the output that the tree knows (see reseed_node).
///
/// The RNG stream is derived from (master_seed, index), so each sample is
/// reproducible in isolation and batches parallelize without changing
/// results.
inline TokenSequence sample_sequence(const LzTree& tree, const GenParams& params,
                                     std::uint64_t index) {
    params.validate(tree.alphabet());
    if (!tree.frozen())
        throw InvalidArgument("sample_sequence: freeze the tree before generating");

    std::vector<Symbol> root_children;
    for (const LzEdge& e : tree.node(LzTree::kRoot).edges)
        if (e.child != LzTree::kNoNode) root_children.push_back(e.symbol);
    if (root_children.empty())
        throw CannotSeed("model root has no children; train before generating");

    Rng rng(stream_seed(params.master_seed, index));
    TokenSequence out;
    out.reserve(params.seq_len);
    const Symbol seed = root_children[rng.next_index(root_children.size())];
    out.push_back(seed);
    std::uint32_t node = tree.child_of(LzTree::kRoot, seed);

    const SpaParams spa{params.gamma};
    while (out.size() < params.seq_len) {
        if (node == LzTree::kNoNode || tree.is_leaf(node))
            node = gen_detail::reseed_node(tree, out);
        const std::vector<double> dist = tree.spa_distribution(node, spa);
        const std::vector<double> filtered =
            apply_top_k_temperature(dist, params.top_k, params.temperature);
        const Symbol next = static_cast<Symbol>(rng.next_categorical(filtered));
        out.push_back(next);
        node = tree.child_of(node, next);
    }
    return out;
}

/// Rewrites every continuation token whose (rewritten) predecessor is a
/// rest into a rest, so no `1` follows a `0`. The scan is left to right,
/// which makes the rule cascade through continuation runs; the result is
/// a fixed point of the rule, hence idempotent.
inline TokenSequence postprocess(TokenSequence seq) {
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i] == 1 && seq[i - 1] == 0) seq[i] = 0;
    return seq;
}

/// n post-processed samples with per-index RNG streams. Sample i of a
/// batch equals sample_sequence(tree, params, i) run in isolation; the
/// parallel schedule cannot change the output.
inline std::vector<TokenSequence> batch_generate(const LzTree& tree, const GenParams& params,
                                                 std::size_t n) {
    params.validate(tree.alphabet());
    std::vector<TokenSequence> out(n);
    parallel_for(n, [&](std::size_t i) {
        out[i] = postprocess(sample_sequence(tree, params, i));
    });
    return out;
}

} // namespace lzspa
