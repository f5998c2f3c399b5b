#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lzspa/byte_io.hpp"
#include "lzspa/errors.hpp"
#include "lzspa/lz_tree.hpp"

namespace lzspa {

// Model file layout ("LZSP" version 1):
//   magic "LZSP" | version u8 | alphabet size u16le | node count u64le
//   then per node, in id order:
//     parent id u64le (root: all ones) | incoming symbol u8 (root: 0xFF)
//     entry count u16le | entries (symbol u8, count u64le) sorted by symbol
//
// Children are not stored; they are rebuilt from the parent links, which
// is why serialize/deserialize round-trips are structure-exact.

inline constexpr char kModelMagic[4] = {'L', 'Z', 'S', 'P'};
inline constexpr std::uint8_t kModelVersion = 0x01;
inline constexpr std::uint64_t kRootParentMarker = ~0ULL;
inline constexpr std::uint8_t kRootSymbolMarker = 0xFF;

inline std::vector<std::uint8_t> serialize_model(const LzTree& tree) {
    std::vector<std::uint8_t> out;
    TreeStats st = tree.stats();
    out.reserve(st.serialized_bytes);
    out.insert(out.end(), kModelMagic, kModelMagic + 4);
    put_u8(out, kModelVersion);
    put_u16le(out, static_cast<std::uint16_t>(tree.alphabet().size() & 0xFFFF));
    put_u64le(out, tree.node_count());
    for (std::uint32_t id = 0; id < tree.node_count(); ++id) {
        const LzNode& n = tree.node(id);
        if (id == LzTree::kRoot) {
            put_u64le(out, kRootParentMarker);
            put_u8(out, kRootSymbolMarker);
        } else {
            put_u64le(out, n.parent);
            put_u8(out, static_cast<std::uint8_t>(n.incoming & 0xFF));
        }
        put_u16le(out, static_cast<std::uint16_t>(n.edges.size()));
        for (const LzEdge& e : n.edges) {
            put_u8(out, static_cast<std::uint8_t>(e.symbol & 0xFF));
            put_u64le(out, e.count);
        }
    }
    return out;
}

/// Rebuilds a tree from its serialized form. The result arrives frozen.
/// Count entries whose child node is absent (legal only in hand-written
/// files) are kept as childless edges; traversal treats them as misses.
inline LzTree deserialize_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    {
        auto magic = r.bytes(4);
        if (!std::equal(magic.begin(), magic.end(),
                        reinterpret_cast<const std::uint8_t*>(kModelMagic)))
            throw BadMagic("model file does not start with LZSP");
    }
    const std::uint8_t version = r.u8();
    if (version != kModelVersion)
        throw UnsupportedVersion("model version " + std::to_string(version) +
                                 " not supported (expected 1)");
    const std::uint32_t a_size = r.u16le();
    if (a_size < 2 || a_size > 256)
        throw FormatError("model alphabet size " + std::to_string(a_size) +
                          " out of range");
    const std::uint64_t node_count = r.u64le();
    if (node_count == 0) throw FormatError("model must contain a root node");
    if (node_count >= LzTree::kNoNode)
        throw FormatError("model node count " + std::to_string(node_count) +
                          " exceeds capacity");

    LzTree tree{Alphabet(a_size)};
    tree.nodes_.clear();
    tree.nodes_.reserve(static_cast<std::size_t>(node_count));
    std::uint64_t total_symbols = 0;
    for (std::uint64_t id = 0; id < node_count; ++id) {
        const std::uint64_t parent = r.u64le();
        const std::uint8_t incoming = r.u8();
        LzNode node;
        if (id == 0) {
            if (parent != kRootParentMarker || incoming != kRootSymbolMarker)
                throw FormatError("node 0 is not marked as the root");
            node.parent = LzTree::kNoNode;
            node.incoming = kNoSymbol;
        } else {
            if (parent >= id)
                throw FormatError("node " + std::to_string(id) +
                                  " has parent " + std::to_string(parent) +
                                  " that is not an earlier node");
            node.parent = static_cast<std::uint32_t>(parent);
            if (incoming >= a_size)
                throw FormatError("node " + std::to_string(id) +
                                  " enters through out-of-alphabet symbol " +
                                  std::to_string(incoming));
            node.incoming = incoming;
        }
        const std::uint16_t entries = r.u16le();
        node.edges.reserve(entries);
        int last_symbol = -1;
        for (std::uint16_t k = 0; k < entries; ++k) {
            const std::uint8_t sym = r.u8();
            const std::uint64_t count = r.u64le();
            if (sym >= a_size)
                throw FormatError("count entry for out-of-alphabet symbol " +
                                  std::to_string(sym));
            if (static_cast<int>(sym) <= last_symbol)
                throw FormatError("count entries not strictly sorted by symbol");
            last_symbol = sym;
            node.edges.push_back(LzEdge{sym, LzTree::kNoNode, count});
            total_symbols += count;
        }
        tree.nodes_.push_back(std::move(node));
    }

    // Second pass: rebuild child pointers from the parent links.
    for (std::uint32_t id = 1; id < tree.nodes_.size(); ++id) {
        LzNode& parent = tree.nodes_[tree.nodes_[id].parent];
        auto it = std::lower_bound(parent.edges.begin(), parent.edges.end(),
                                   tree.nodes_[id].incoming,
                                   [](const LzEdge& e, Symbol s) { return e.symbol < s; });
        if (it != parent.edges.end() && it->symbol == tree.nodes_[id].incoming) {
            if (it->child != LzTree::kNoNode)
                throw FormatError("two nodes claim the same parent edge");
            it->child = id;
        } else {
            parent.edges.insert(it, LzEdge{tree.nodes_[id].incoming, id, 0});
        }
    }

    tree.total_symbols_ = total_symbols;
    tree.num_sequences_ = 0; // not recorded in the format
    tree.frozen_ = true;
    return tree;
}

inline void save_model(const LzTree& tree, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(tree));
}

inline LzTree load_model(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return deserialize_model(bytes);
}

} // namespace lzspa
