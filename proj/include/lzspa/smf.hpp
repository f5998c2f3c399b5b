#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lzspa/byte_io.hpp"
#include "lzspa/errors.hpp"

namespace lzspa {

// Standard MIDI File reader/writer for the subset this toolkit needs:
// header + track chunks, channel messages, meta events and sysex, with
// variable-length deltas and running status handled on input. Output is
// always written with explicit status bytes and minimal-length deltas,
// so parse(write(doc)) reproduces the event list exactly.

struct TrackEvent {
    std::uint32_t delta = 0;
    std::uint8_t status = 0;    ///< full status byte; 0xFF marks a meta event
    std::uint8_t meta_type = 0; ///< only meaningful when status == 0xFF
    std::vector<std::uint8_t> data;

    bool operator==(const TrackEvent&) const = default;
};

using Track = std::vector<TrackEvent>;

struct SmfDocument {
    std::uint16_t format = 0;
    std::uint16_t division = 480; ///< ticks per quarter note (SMPTE unsupported downstream)
    std::vector<Track> tracks;

    bool operator==(const SmfDocument&) const = default;
};

namespace smf_detail {

inline std::uint32_t read_vlq(ByteReader& r) {
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
        const std::uint8_t b = r.u8();
        value = (value << 7) | (b & 0x7F);
        if (!(b & 0x80)) return value;
    }
    throw FormatError("variable-length quantity longer than 4 bytes");
}

inline void write_vlq(std::vector<std::uint8_t>& out, std::uint32_t value) {
    if (value > 0x0FFFFFFF)
        throw FormatError("delta time " + std::to_string(value) +
                          " exceeds the 28-bit variable-length range");
    std::uint8_t chunks[4];
    int n = 0;
    do {
        chunks[n++] = static_cast<std::uint8_t>(value & 0x7F);
        value >>= 7;
    } while (value != 0);
    for (int i = n - 1; i > 0; --i) out.push_back(chunks[i] | 0x80);
    out.push_back(chunks[0]);
}

inline int channel_data_length(std::uint8_t status) {
    switch (status & 0xF0) {
        case 0xC0:
        case 0xD0: return 1;
        default: return 2;
    }
}

inline Track parse_track(std::span<const std::uint8_t> chunk) {
    ByteReader r(chunk);
    Track track;
    int running_status = -1;
    while (!r.at_end()) {
        TrackEvent ev;
        ev.delta = read_vlq(r);
        std::uint8_t head = r.u8();
        if (head == 0xFF) {
            running_status = -1;
            ev.status = 0xFF;
            ev.meta_type = r.u8();
            const std::uint32_t len = read_vlq(r);
            auto payload = r.bytes(len);
            ev.data.assign(payload.begin(), payload.end());
        } else if (head == 0xF0 || head == 0xF7) {
            running_status = -1;
            ev.status = head;
            const std::uint32_t len = read_vlq(r);
            auto payload = r.bytes(len);
            ev.data.assign(payload.begin(), payload.end());
        } else {
            std::uint8_t status;
            std::uint8_t first_data;
            if (head & 0x80) {
                status = head;
                if (status >= 0xF0)
                    throw FormatError("unexpected system message status " +
                                      std::to_string(status));
                running_status = status;
                first_data = r.u8();
            } else {
                if (running_status < 0)
                    throw FormatError("data byte with no running status");
                status = static_cast<std::uint8_t>(running_status);
                first_data = head;
            }
            if (first_data & 0x80)
                throw FormatError("channel message data byte has high bit set");
            ev.status = status;
            ev.data.push_back(first_data);
            if (channel_data_length(status) == 2) {
                const std::uint8_t second = r.u8();
                if (second & 0x80)
                    throw FormatError("channel message data byte has high bit set");
                ev.data.push_back(second);
            }
        }
        track.push_back(std::move(ev));
    }
    return track;
}

} // namespace smf_detail

inline SmfDocument parse_smf(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    {
        auto magic = r.bytes(4);
        static constexpr std::uint8_t kHeader[4] = {'M', 'T', 'h', 'd'};
        if (!std::equal(magic.begin(), magic.end(), kHeader))
            throw BadMagic("not a standard MIDI file (missing MThd)");
    }
    const std::uint32_t header_len = r.u32be();
    if (header_len < 6) throw FormatError("MThd chunk shorter than 6 bytes");
    SmfDocument doc;
    doc.format = r.u16be();
    const std::uint16_t declared_tracks = r.u16be();
    doc.division = r.u16be();
    r.skip(header_len - 6);

    while (doc.tracks.size() < declared_tracks) {
        auto tag = r.bytes(4);
        const std::uint32_t chunk_len = r.u32be();
        auto chunk = r.bytes(chunk_len);
        static constexpr std::uint8_t kTrack[4] = {'M', 'T', 'r', 'k'};
        if (std::equal(tag.begin(), tag.end(), kTrack))
            doc.tracks.push_back(smf_detail::parse_track(chunk));
        // alien chunk types are skipped, per the SMF spec
    }
    return doc;
}

inline std::vector<std::uint8_t> write_smf(const SmfDocument& doc) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_u32be(out, 6);
    put_u16be(out, doc.format);
    put_u16be(out, static_cast<std::uint16_t>(doc.tracks.size()));
    put_u16be(out, doc.division);

    for (const Track& track : doc.tracks) {
        std::vector<std::uint8_t> body;
        for (const TrackEvent& ev : track) {
            smf_detail::write_vlq(body, ev.delta);
            if (ev.status == 0xFF) {
                body.push_back(0xFF);
                body.push_back(ev.meta_type);
                smf_detail::write_vlq(body, static_cast<std::uint32_t>(ev.data.size()));
                body.insert(body.end(), ev.data.begin(), ev.data.end());
            } else if (ev.status == 0xF0 || ev.status == 0xF7) {
                body.push_back(ev.status);
                smf_detail::write_vlq(body, static_cast<std::uint32_t>(ev.data.size()));
                body.insert(body.end(), ev.data.begin(), ev.data.end());
            } else {
                if (!(ev.status & 0x80) || ev.status >= 0xF0)
                    throw FormatError("invalid channel status byte " +
                                      std::to_string(ev.status));
                const std::size_t expect =
                    static_cast<std::size_t>(smf_detail::channel_data_length(ev.status));
                if (ev.data.size() != expect)
                    throw FormatError("channel message carries wrong data length");
                for (std::uint8_t b : ev.data)
                    if (b & 0x80)
                        throw FormatError("channel data byte has high bit set");
                body.push_back(ev.status);
                body.insert(body.end(), ev.data.begin(), ev.data.end());
            }
        }
        out.insert(out.end(), {'M', 'T', 'r', 'k'});
        put_u32be(out, static_cast<std::uint32_t>(body.size()));
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

inline void save_smf(const SmfDocument& doc, const std::filesystem::path& path) {
    write_file_atomic(path, write_smf(doc));
}

inline SmfDocument load_smf(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return parse_smf(bytes);
}

} // namespace lzspa
