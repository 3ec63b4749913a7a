/*
 *  fabric-patch -- toolkit for patching circuits into FPGA bitstreams
 *
 *  Copyright (C) 2026  The fabric-patch developers
 *
 *  Permission to use, copy, modify, and/or distribute this software for any
 *  purpose with or without fee is hereby granted, provided that the above
 *  copyright notice and this permission notice appear in all copies.
 *
 *  THE SOFTWARE IS PROVIDED "AS IS" AND THE AUTHOR DISCLAIMS ALL WARRANTIES
 *  WITH REGARD TO THIS SOFTWARE INCLUDING ALL IMPLIED WARRANTIES OF
 *  MERCHANTABILITY AND FITNESS. IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR
 *  ANY SPECIAL, DIRECT, INDIRECT, OR CONSEQUENTIAL DAMAGES OR ANY DAMAGES
 *  WHATSOEVER RESULTING FROM LOSS OF USE, DATA OR PROFITS, WHETHER IN AN
 *  ACTION OF CONTRACT, NEGLIGENCE OR OTHER TORTIOUS ACTION, ARISING OUT OF
 *  OR IN CONNECTION WITH THE USE OR PERFORMANCE OF THIS SOFTWARE.
 */

// Frame-addressed configuration image. One frame per tile column, 256 bits
// per tile; bits are packed LSB-first within bytes on disk. Decoding maps
// set bits back to features; set bits matching no database entry are
// reported as opaque and preserved verbatim by every transformation.

#ifndef FABRICPATCH_BITSTREAM_HPP
#define FABRICPATCH_BITSTREAM_HPP

#include "fabricpatch/fasm.hpp"

namespace fabpatch {

// Reflected CRC-32, polynomial 0xEDB88320, init/final-xor 0xFFFFFFFF.
inline uint32_t crc32(const uint8_t *data, size_t len)
{
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; i++) {
        crc ^= data[i];
        for (int b = 0; b < 8; b++)
            crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
    }
    return crc ^ 0xFFFFFFFFu;
}

inline uint32_t crc32(const std::vector<uint8_t> &data) { return crc32(data.data(), data.size()); }

struct Bitstream
{
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t bits_per_tile = kTileRegionBits;
    uint64_t device_digest = 0;
    std::vector<uint8_t> frames; // width * height * bits_per_tile / 8 bytes

    uint64_t total_bits() const { return uint64_t(width) * height * bits_per_tile; }

    bool get_bit(uint64_t pos) const { return (frames[pos >> 3] >> (pos & 7)) & 1; }
    void set_bit(uint64_t pos, bool v)
    {
        if (v)
            frames[pos >> 3] |= uint8_t(1u << (pos & 7));
        else
            frames[pos >> 3] &= uint8_t(~(1u << (pos & 7)));
    }

    uint32_t content_crc() const { return crc32(frames); }

    bool operator==(const Bitstream &o) const
    {
        return width == o.width && height == o.height && bits_per_tile == o.bits_per_tile &&
               device_digest == o.device_digest && frames == o.frames;
    }
};

inline Bitstream make_empty_bitstream(const Device &dev)
{
    Bitstream bs;
    bs.width = uint32_t(dev.width());
    bs.height = uint32_t(dev.height());
    bs.device_digest = dev.digest;
    bs.frames.assign(dev.total_bits() / 8, 0);
    return bs;
}

inline Bitstream encode_bitstream(const Device &dev, const FeatureAssembly &fa)
{
    FeatureAssembly canon = canonicalize_fa(dev, fa); // throws on unknown/range/conflict
    Bitstream bs = make_empty_bitstream(dev);
    for (const auto &line : canon.lines) {
        auto bits = lookup_feature_bits(dev, line.feature);
        for (size_t i = 0; i < bits.size(); i++)
            bs.set_bit(bits[i], (line.value >> i) & 1);
    }
    return bs;
}

struct DecodedBitstream
{
    FeatureAssembly fa;
    std::set<uint64_t> opaque_bits;
};

inline void check_bitstream_header(const Device &dev, const Bitstream &bs)
{
    if (bs.width != uint32_t(dev.width()) || bs.height != uint32_t(dev.height()) ||
        bs.bits_per_tile != kTileRegionBits)
        throw BadHeader("bitstream geometry does not match device");
    if (bs.device_digest != dev.digest)
        throw DeviceDigestMismatch("bitstream was produced for a different device");
    if (bs.frames.size() * 8 != bs.total_bits())
        throw BadHeader("frame data size mismatch");
}

inline DecodedBitstream decode_bitstream(const Device &dev, const Bitstream &bs)
{
    check_bitstream_header(dev, bs);
    DecodedBitstream out;
    std::vector<bool> covered(bs.total_bits(), false);
    for (const auto &[name, fi] : dev.featdb) {
        uint64_t base = uint64_t(fi.frame) * dev.frame_bits() + fi.offset;
        uint64_t value = 0;
        for (uint32_t i = 0; i < fi.width; i++) {
            covered[base + i] = true;
            if (bs.get_bit(base + i))
                value |= uint64_t(1) << i;
        }
        if (value != 0)
            out.fa.set(name, value);
    }
    for (uint64_t pos = 0; pos < bs.total_bits(); pos++)
        if (bs.get_bit(pos) && !covered[pos])
            out.opaque_bits.insert(pos);
    out.fa = canonicalize_fa(dev, out.fa);
    return out;
}

// --------------------------------------------------------------------------
// On-disk format: little-endian header, packed frames, trailing crc32.
// --------------------------------------------------------------------------

constexpr uint32_t kBitstreamFormatVersion = 1;

inline std::vector<uint8_t> serialize_bitstream(const Bitstream &bs)
{
    ByteWriter w;
    w.raw("MFB1", 4);
    w.u32(kBitstreamFormatVersion);
    w.u32(bs.width);
    w.u32(bs.height);
    w.u32(bs.bits_per_tile);
    w.u32(uint32_t(bs.device_digest));
    w.u32(uint32_t(bs.device_digest >> 32));
    w.u32(bs.width); // frame count == columns
    w.raw(bs.frames.data(), bs.frames.size());
    w.u32(bs.content_crc());
    return w.bytes;
}

inline Bitstream deserialize_bitstream(const std::vector<uint8_t> &data)
{
    if (data.size() < 4 || memcmp(data.data(), "MFB1", 4) != 0)
        throw BadHeader("bad bitstream magic");
    ByteReader r(data);
    r.pos = 4;
    Bitstream bs;
    try {
        uint32_t ver = r.u32();
        if (ver != kBitstreamFormatVersion)
            throw BadHeader("bitstream version " + std::to_string(ver));
        bs.width = r.u32();
        bs.height = r.u32();
        bs.bits_per_tile = r.u32();
        bs.device_digest = uint64_t(r.u32());
        bs.device_digest |= uint64_t(r.u32()) << 32;
        uint32_t frame_count = r.u32();
        if (frame_count != bs.width)
            throw BadHeader("frame count mismatch");
        uint64_t nbytes = bs.total_bits() / 8;
        r.need(size_t(nbytes) + 4);
        bs.frames.assign(data.begin() + r.pos, data.begin() + r.pos + nbytes);
        r.pos += size_t(nbytes);
        uint32_t stored_crc = r.u32();
        if (stored_crc != bs.content_crc())
            throw CrcMismatch("stored " + std::to_string(stored_crc) + ", computed " +
                              std::to_string(bs.content_crc()));
        if (!r.at_end())
            throw BadHeader("trailing bytes after crc");
    } catch (const CorruptDeviceImage &e) {
        throw BadHeader(e.what()); // truncated stream
    }
    return bs;
}

} // namespace fabpatch

#endif
