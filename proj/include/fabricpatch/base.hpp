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

#ifndef FABRICPATCH_BASE_HPP
#define FABRICPATCH_BASE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fabpatch {

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure mode in the toolkit throws a subclass of
// Error carrying a stable kind() tag so callers (and the CLI) can map
// failures without string matching.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error
{
  public:
    Error(std::string kind, const std::string &msg) : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string &kind() const { return kind_; }

  private:
    std::string kind_;
};

#define FABPATCH_DEFINE_ERROR(Name)                                                                                    \
    class Name : public Error                                                                                          \
    {                                                                                                                  \
      public:                                                                                                          \
        explicit Name(const std::string &msg) : Error(#Name, msg) {}                                                   \
    }

FABPATCH_DEFINE_ERROR(InvalidParams);
FABPATCH_DEFINE_ERROR(UnknownFeature);
FABPATCH_DEFINE_ERROR(DeviceMismatch);
FABPATCH_DEFINE_ERROR(CorruptDeviceImage);
FABPATCH_DEFINE_ERROR(VersionMismatch);
FABPATCH_DEFINE_ERROR(ValueOutOfRange);
FABPATCH_DEFINE_ERROR(DuplicateFeature);
FABPATCH_DEFINE_ERROR(CrcMismatch);
FABPATCH_DEFINE_ERROR(DeviceDigestMismatch);
FABPATCH_DEFINE_ERROR(BadHeader);
FABPATCH_DEFINE_ERROR(SyntaxError);
FABPATCH_DEFINE_ERROR(MultipleDrivers);
FABPATCH_DEFINE_ERROR(UnsupportedCellKind);
FABPATCH_DEFINE_ERROR(UnknownNet);
FABPATCH_DEFINE_ERROR(UnknownPin);
FABPATCH_DEFINE_ERROR(PinNotDriven);
FABPATCH_DEFINE_ERROR(TapOverrideConflict);
FABPATCH_DEFINE_ERROR(NotDecomposable);
FABPATCH_DEFINE_ERROR(NoFreeLut);
FABPATCH_DEFINE_ERROR(Unplaceable);
FABPATCH_DEFINE_ERROR(UnassignedCell);
FABPATCH_DEFINE_ERROR(Unroutable);
FABPATCH_DEFINE_ERROR(UnroutableAfterRestarts);
FABPATCH_DEFINE_ERROR(MissingPlacement);
FABPATCH_DEFINE_ERROR(MissingRoute);
FABPATCH_DEFINE_ERROR(AddCollision);
FABPATCH_DEFINE_ERROR(ClearMissing);
FABPATCH_DEFINE_ERROR(CombinationalLoop);
FABPATCH_DEFINE_ERROR(UnconnectedInput);

#undef FABPATCH_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Small utilities shared across modules.
// ---------------------------------------------------------------------------

// FNV-1a, used for tile layout seeding and the device digest.
inline uint64_t fnv1a64(const void *data, size_t len, uint64_t h = 0xcbf29ce484222325ull)
{
    const auto *p = static_cast<const uint8_t *>(data);
    for (size_t i = 0; i < len; i++) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string &s) { return fnv1a64(s.data(), s.size()); }

// Little-endian byte stream helpers for the on-disk formats.
struct ByteWriter
{
    std::vector<uint8_t> bytes;

    void u8(uint8_t v) { bytes.push_back(v); }
    void u16(uint16_t v)
    {
        u8(v & 0xff);
        u8(v >> 8);
    }
    void u32(uint32_t v)
    {
        u16(v & 0xffff);
        u16(v >> 16);
    }
    void u64(uint64_t v)
    {
        u32(uint32_t(v));
        u32(uint32_t(v >> 32));
    }
    void str(const std::string &s)
    {
        u32(uint32_t(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void raw(const void *data, size_t len)
    {
        const auto *p = static_cast<const uint8_t *>(data);
        bytes.insert(bytes.end(), p, p + len);
    }
};

struct ByteReader
{
    const std::vector<uint8_t> &bytes;
    size_t pos = 0;

    explicit ByteReader(const std::vector<uint8_t> &b) : bytes(b) {}

    void need(size_t n) const
    {
        if (pos + n > bytes.size())
            throw CorruptDeviceImage("unexpected end of image at offset " + std::to_string(pos));
    }
    uint8_t u8()
    {
        need(1);
        return bytes[pos++];
    }
    uint16_t u16()
    {
        uint16_t lo = u8();
        return uint16_t(lo | (u8() << 8));
    }
    uint32_t u32()
    {
        uint32_t lo = u16();
        return lo | (uint32_t(u16()) << 16);
    }
    uint64_t u64()
    {
        uint64_t lo = u32();
        return lo | (uint64_t(u32()) << 32);
    }
    std::string str()
    {
        uint32_t n = u32();
        need(n);
        std::string s(bytes.begin() + pos, bytes.begin() + pos + n);
        pos += n;
        return s;
    }
    bool at_end() const { return pos == bytes.size(); }
};

} // namespace fabpatch

#endif
