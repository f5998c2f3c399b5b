#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lzspa/errors.hpp"

namespace lzspa {

/// A token. Valid symbols are 0..alphabet-1; 0xFFFF is reserved as "none".
using Symbol = std::uint16_t;

inline constexpr Symbol kNoSymbol = 0xFFFF;

/// One tokenized clip. The piano-roll convention is: 0 = rest,
/// 1 = continuation of the sounding note, 2.. = pitch onsets.
using TokenSequence = std::vector<Symbol>;

/// Nominal clip length used by the piano-roll codec and the generator.
inline constexpr std::uint32_t kNominalSequenceLength = 256;

/// The symbol alphabet. Every on-disk format stores symbols as single
/// bytes, so sizes above 256 are rejected up front.
class Alphabet {
public:
    explicit Alphabet(std::uint32_t size) : size_(size) {
        if (size < 2)
            throw InvalidArgument("alphabet size must be at least 2, got " +
                                  std::to_string(size));
        if (size > 256)
            throw InvalidArgument("alphabet size must be at most 256, got " +
                                  std::to_string(size));
    }

    std::uint32_t size() const { return size_; }

    bool contains(Symbol a) const { return a < size_; }

private:
    std::uint32_t size_;
};

/// 90-symbol piano-roll alphabet: rest + continuation + 88 piano keys.
inline Alphabet piano_roll_alphabet() { return Alphabet(90); }

} // namespace lzspa
