#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "lzspa/errors.hpp"
#include "lzspa/smf.hpp"
#include "lzspa/types.hpp"

namespace lzspa {

/// Grid and pitch-anchor settings for the MIDI <-> token conversion.
/// Token 2 maps to MIDI pitch `pitch_offset`; with the default 21 (A0)
/// the 88 piano keys fill tokens 2..89 and, with rest and continuation,
/// make up the 90-symbol alphabet.
struct PianoRollConfig {
    std::uint32_t steps_per_quarter = 4; ///< 16th-note grid
    std::uint8_t pitch_offset = 21;
    double tempo_bpm = 120.0;
    std::uint16_t ticks_per_quarter = 480;

    void validate() const {
        if (steps_per_quarter < 1)
            throw InvalidArgument("steps_per_quarter must be at least 1");
        if (pitch_offset + 87 > 127)
            throw InvalidArgument("pitch_offset leaves the 88-key range outside MIDI pitches");
        if (!(tempo_bpm > 0.0) || !std::isfinite(tempo_bpm))
            throw InvalidArgument("tempo_bpm must be positive");
        if (ticks_per_quarter < 1)
            throw InvalidArgument("ticks_per_quarter must be at least 1");
    }
};

/// A note with tick-level timing, extracted from an SMF event stream.
struct NoteSpan {
    std::uint64_t onset_tick = 0;
    std::uint64_t off_tick = 0;
    std::uint8_t pitch = 0;

    bool operator==(const NoteSpan&) const = default;
};

/// Flattens all tracks into matched (onset, off, pitch) spans. Note-on
/// with velocity zero releases like a note-off; unmatched note-ons are
/// held to the end of their track.
inline std::vector<NoteSpan> extract_notes(const SmfDocument& doc) {
    std::vector<NoteSpan> notes;
    for (const Track& track : doc.tracks) {
        std::uint64_t tick = 0;
        std::map<std::uint8_t, std::deque<std::size_t>> open; // pitch -> note indices
        for (const TrackEvent& ev : track) {
            tick += ev.delta;
            const std::uint8_t kind = ev.status & 0xF0;
            if (kind == 0x90 && ev.data.size() == 2 && ev.data[1] > 0) {
                open[ev.data[0]].push_back(notes.size());
                notes.push_back(NoteSpan{tick, tick, ev.data[0]});
            } else if ((kind == 0x80 || (kind == 0x90 && ev.data.size() == 2 &&
                                         ev.data[1] == 0)) &&
                       !ev.data.empty()) {
                auto it = open.find(ev.data[0]);
                if (it != open.end() && !it->second.empty()) {
                    notes[it->second.front()].off_tick = tick;
                    it->second.pop_front();
                }
            }
        }
        for (auto& [pitch, pending] : open)
            for (std::size_t idx : pending) notes[idx].off_tick = tick;
    }
    std::sort(notes.begin(), notes.end(), [](const NoteSpan& a, const NoteSpan& b) {
        return a.onset_tick != b.onset_tick ? a.onset_tick < b.onset_tick : a.pitch < b.pitch;
    });
    return notes;
}

/// Converts an SMF document to the fixed 256-step monophonic token grid.
/// Each step emits 0 (silence), an onset token, or 1 (sustain). When
/// several notes sound, the highest pitch wins; out-of-range pitches are
/// clamped to the nearest playable key; input longer than the grid is
/// truncated and shorter input is padded with rests.
inline TokenSequence encode_tokens(const SmfDocument& doc, const PianoRollConfig& cfg = {}) {
    cfg.validate();
    if (doc.tracks.empty()) throw InvalidArgument("encode_tokens: document has no tracks");
    if (doc.division & 0x8000)
        throw FormatError("SMPTE time division is not supported by the tokenizer");
    if (doc.division == 0) throw FormatError("time division of zero ticks per quarter");

    struct StepNote {
        std::uint64_t onset_step;
        std::uint64_t off_step; // exclusive
        std::uint8_t pitch;
    };
    const std::uint64_t spq = cfg.steps_per_quarter;
    const std::uint64_t div = doc.division;
    std::vector<StepNote> notes;
    for (const NoteSpan& n : extract_notes(doc)) {
        StepNote sn;
        sn.onset_step = n.onset_tick * spq / div;
        sn.off_step = std::max<std::uint64_t>((n.off_tick * spq + div - 1) / div,
                                              sn.onset_step + 1);
        sn.pitch = n.pitch;
        notes.push_back(sn);
    }

    TokenSequence tokens(kNominalSequenceLength, 0);
    const StepNote* prev_choice = nullptr;
    for (std::uint64_t step = 0; step < kNominalSequenceLength; ++step) {
        const StepNote* choice = nullptr;
        for (const StepNote& sn : notes) {
            if (sn.onset_step > step) break; // sorted by onset
            if (step >= sn.off_step) continue;
            if (!choice || sn.pitch > choice->pitch ||
                (sn.pitch == choice->pitch && sn.onset_step > choice->onset_step))
                choice = &sn;
        }
        if (!choice) {
            tokens[step] = 0;
        } else if (choice == prev_choice) {
            tokens[step] = 1;
        } else {
            const int lo = cfg.pitch_offset, hi = cfg.pitch_offset + 87;
            const int clamped = std::clamp<int>(choice->pitch, lo, hi);
            tokens[step] = static_cast<Symbol>(clamped - lo + 2);
        }
        prev_choice = choice;
    }
    return tokens;
}

/// Converts tokens back to a single-track (format 0) MIDI file at fixed
/// velocity. A continuation token extends the note opened by the last
/// onset; continuations with nothing to extend decode as rests.
inline SmfDocument decode_tokens(const TokenSequence& tokens, const PianoRollConfig& cfg = {}) {
    cfg.validate();
    for (Symbol s : tokens)
        if (s >= 90)
            throw InvalidSymbol("token " + std::to_string(s) + " outside the 90-token alphabet");

    SmfDocument doc;
    doc.format = 0;
    doc.division = cfg.ticks_per_quarter;
    Track track;

    const std::uint32_t tempo_us =
        static_cast<std::uint32_t>(std::llround(60'000'000.0 / cfg.tempo_bpm));
    track.push_back(TrackEvent{
        0, 0xFF, 0x51,
        {static_cast<std::uint8_t>((tempo_us >> 16) & 0xFF),
         static_cast<std::uint8_t>((tempo_us >> 8) & 0xFF),
         static_cast<std::uint8_t>(tempo_us & 0xFF)}});
    track.push_back(TrackEvent{0, 0xC0, 0, {0}}); // program 0 (acoustic grand)

    auto step_tick = [&](std::uint64_t step) {
        return step * cfg.ticks_per_quarter / cfg.steps_per_quarter;
    };

    std::uint64_t cursor_tick = 0;
    auto emit = [&](std::uint64_t tick, std::uint8_t status, std::uint8_t meta,
                    std::vector<std::uint8_t> data) {
        track.push_back(TrackEvent{static_cast<std::uint32_t>(tick - cursor_tick), status,
                                   meta, std::move(data)});
        cursor_tick = tick;
    };

    constexpr std::uint8_t kVelocity = 100;
    constexpr std::uint8_t kRelease = 64;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (tokens[i] < 2) {
            ++i;
            continue;
        }
        const std::uint8_t pitch =
            static_cast<std::uint8_t>(cfg.pitch_offset + (tokens[i] - 2));
        std::size_t end = i + 1;
        while (end < tokens.size() && tokens[end] == 1) ++end;
        emit(step_tick(i), 0x90, 0, {pitch, kVelocity});
        emit(step_tick(end), 0x80, 0, {pitch, kRelease});
        i = end;
    }
    emit(step_tick(tokens.size()), 0xFF, 0x2F, {});
    doc.tracks.push_back(std::move(track));
    return doc;
}

} // namespace lzspa
