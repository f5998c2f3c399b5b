#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lzspa/byte_io.hpp"
#include "lzspa/errors.hpp"
#include "lzspa/types.hpp"

namespace lzspa {

/// A batch of equal-length token sequences — the on-disk training and
/// generation unit.
struct TokenCorpus {
    std::uint32_t alphabet_size = 90;
    std::uint32_t seq_len = kNominalSequenceLength;
    std::vector<TokenSequence> sequences;

    void validate() const {
        Alphabet a{alphabet_size};
        for (const auto& seq : sequences) {
            if (seq.size() != seq_len)
                throw FormatError("corpus sequence length " + std::to_string(seq.size()) +
                                  " != declared " + std::to_string(seq_len));
            for (Symbol s : seq)
                if (!a.contains(s))
                    throw FormatError("corpus token " + std::to_string(s) +
                                      " outside alphabet of size " +
                                      std::to_string(alphabet_size));
        }
    }
};

// Corpus file layout ("LZTK" version 1):
//   magic "LZTK" | version u8 | alphabet size u16le | sequence length u32le
//   sequence count u64le | tokens as unsigned bytes, row-major

inline constexpr char kCorpusMagic[4] = {'L', 'Z', 'T', 'K'};
inline constexpr std::uint8_t kCorpusVersion = 0x01;

inline std::vector<std::uint8_t> write_corpus(const TokenCorpus& corpus) {
    corpus.validate();
    std::vector<std::uint8_t> out;
    out.reserve(19 + corpus.sequences.size() * corpus.seq_len);
    out.insert(out.end(), kCorpusMagic, kCorpusMagic + 4);
    put_u8(out, kCorpusVersion);
    put_u16le(out, static_cast<std::uint16_t>(corpus.alphabet_size & 0xFFFF));
    put_u32le(out, corpus.seq_len);
    put_u64le(out, corpus.sequences.size());
    for (const auto& seq : corpus.sequences)
        for (Symbol s : seq) put_u8(out, static_cast<std::uint8_t>(s & 0xFF));
    return out;
}

inline TokenCorpus read_corpus(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    {
        auto magic = r.bytes(4);
        if (!std::equal(magic.begin(), magic.end(),
                        reinterpret_cast<const std::uint8_t*>(kCorpusMagic)))
            throw BadMagic("corpus file does not start with LZTK");
    }
    const std::uint8_t version = r.u8();
    if (version != kCorpusVersion)
        throw UnsupportedVersion("corpus version " + std::to_string(version) +
                                 " not supported (expected 1)");
    TokenCorpus corpus;
    corpus.alphabet_size = r.u16le();
    if (corpus.alphabet_size < 2 || corpus.alphabet_size > 256)
        throw FormatError("corpus alphabet size " + std::to_string(corpus.alphabet_size) +
                          " out of range");
    corpus.seq_len = r.u32le();
    const std::uint64_t count = r.u64le();
    if (corpus.seq_len == 0 && count > 0)
        throw FormatError("corpus declares zero-length sequences");
    if (r.remaining() < count * static_cast<std::uint64_t>(corpus.seq_len))
        throw Truncated("corpus payload shorter than declared " + std::to_string(count) +
                        " sequences of length " + std::to_string(corpus.seq_len));
    corpus.sequences.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        auto row = r.bytes(corpus.seq_len);
        TokenSequence seq(corpus.seq_len);
        for (std::uint32_t t = 0; t < corpus.seq_len; ++t) {
            seq[t] = row[t];
            if (seq[t] >= corpus.alphabet_size)
                throw FormatError("corpus token " + std::to_string(seq[t]) +
                                  " outside alphabet of size " +
                                  std::to_string(corpus.alphabet_size));
        }
        corpus.sequences.push_back(std::move(seq));
    }
    if (!r.at_end())
        throw FormatError("corpus has " + std::to_string(r.remaining()) +
                          " trailing byte(s)");
    return corpus;
}

inline void save_corpus(const TokenCorpus& corpus, const std::filesystem::path& path) {
    write_file_atomic(path, write_corpus(corpus));
}

inline TokenCorpus load_corpus(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return read_corpus(bytes);
}

/// Plain-text dump: one space-separated sequence per line.
inline std::string corpus_to_text(const TokenCorpus& corpus) {
    std::ostringstream out;
    for (const auto& seq : corpus.sequences) {
        for (std::size_t t = 0; t < seq.size(); ++t) {
            if (t) out << ' ';
            out << seq[t];
        }
        out << '\n';
    }
    return out.str();
}

} // namespace lzspa
