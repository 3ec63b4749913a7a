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

// Textual feature assembly: one enabled configuration feature per line.
//
//   TILE_X2Y3.SBOX.PIP_N4_E1            # boolean feature, value 1
//   TILE_X2Y3.LUT1.INIT[15:0] = 16'hCAFE
//
// Values accept decimal, 0x-hex and width'h forms; the emitter always uses
// the width'h form and a canonical line order (tile y, then x, then site,
// then name).

#ifndef FABRICPATCH_FASM_HPP
#define FABRICPATCH_FASM_HPP

#include <cctype>
#include <sstream>

#include "fabricpatch/device.hpp"

namespace fabpatch {

struct FaLine
{
    std::string feature; // full canonical name, no bit range
    uint64_t value = 1;

    bool operator==(const FaLine &o) const { return feature == o.feature && value == o.value; }
};

struct FeatureAssembly
{
    std::vector<FaLine> lines;

    void set(const std::string &feature, uint64_t value = 1) { lines.push_back(FaLine{feature, value}); }

    bool operator==(const FeatureAssembly &o) const { return lines == o.lines; }
};

namespace detail {

struct FaSortKey
{
    int y, x;
    std::string rest;

    static FaSortKey of(const std::string &feature)
    {
        FaSortKey k{0, 0, feature};
        auto dot = feature.find('.');
        int x, y;
        if (dot != std::string::npos && Device::parse_tile(feature.substr(0, dot), x, y)) {
            k.y = y;
            k.x = x;
            k.rest = feature.substr(dot + 1);
        }
        return k;
    }

    bool operator<(const FaSortKey &o) const
    {
        if (y != o.y)
            return y < o.y;
        if (x != o.x)
            return x < o.x;
        return rest < o.rest;
    }
};

} // namespace detail

// Validate against the device, collapse duplicate lines (conflicts are an
// error) and sort into canonical order.
inline FeatureAssembly canonicalize_fa(const Device &dev, const FeatureAssembly &fa)
{
    std::map<detail::FaSortKey, std::pair<std::string, uint64_t>> seen;
    for (const auto &line : fa.lines) {
        const FeatureInfo *fi = dev.find_feature(line.feature);
        if (!fi)
            throw UnknownFeature(line.feature);
        if (fi->width < 64 && line.value >> fi->width)
            throw ValueOutOfRange(line.feature + " = " + std::to_string(line.value) + " (width " +
                                  std::to_string(fi->width) + ")");
        auto key = detail::FaSortKey::of(line.feature);
        auto it = seen.find(key);
        if (it != seen.end()) {
            if (it->second.second != line.value)
                throw DuplicateFeature(line.feature + " with conflicting values");
            continue;
        }
        seen.emplace(key, std::make_pair(line.feature, line.value));
    }
    FeatureAssembly out;
    for (auto &[key, fv] : seen)
        if (fv.second != 0)
            out.lines.push_back(FaLine{fv.first, fv.second});
    return out;
}

inline FeatureAssembly parse_fa(const Device &dev, const std::string &text)
{
    FeatureAssembly fa;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        lineno++;
        auto hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        auto err = [&](size_t col, const std::string &msg) -> SyntaxError {
            return SyntaxError("line " + std::to_string(lineno) + ", column " + std::to_string(col + 1) + ": " + msg);
        };

        size_t pos = 0;
        while (pos < line.size() && (std::isalnum((unsigned char)line[pos]) || line[pos] == '_' || line[pos] == '.'))
            pos++;
        std::string name = line.substr(0, pos);
        if (name.empty())
            throw err(0, "expected feature name");

        const FeatureInfo *fi = dev.find_feature(name);
        if (!fi)
            throw UnknownFeature(name + " (line " + std::to_string(lineno) + ")");

        auto skip_ws = [&]() {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t'))
                pos++;
        };
        skip_ws();

        if (pos < line.size() && line[pos] == '[') {
            size_t close = line.find(']', pos);
            if (close == std::string::npos)
                throw err(pos, "unterminated bit range");
            std::string range = line.substr(pos + 1, close - pos - 1);
            auto colon = range.find(':');
            try {
                int hi = std::stoi(colon == std::string::npos ? range : range.substr(0, colon));
                int lo = colon == std::string::npos ? hi : std::stoi(range.substr(colon + 1));
                if (lo != 0 || hi != int(fi->width) - 1)
                    throw err(pos, "bit range [" + range + "] does not match feature width " +
                                       std::to_string(fi->width));
            } catch (const SyntaxError &) {
                throw;
            } catch (...) {
                throw err(pos, "malformed bit range");
            }
            pos = close + 1;
            skip_ws();
        }

        uint64_t value = 1;
        if (pos < line.size()) {
            if (line[pos] != '=')
                throw err(pos, "expected '=' or end of line");
            pos++;
            skip_ws();
            std::string v = line.substr(pos);
            if (v.empty())
                throw err(pos, "expected value");
            try {
                auto tick = v.find("'h");
                if (tick != std::string::npos) {
                    unsigned w = unsigned(std::stoul(v.substr(0, tick)));
                    if (w != fi->width)
                        throw err(pos, "width prefix " + std::to_string(w) + " does not match feature width " +
                                           std::to_string(fi->width));
                    value = std::stoull(v.substr(tick + 2), nullptr, 16);
                } else if (v.rfind("0x", 0) == 0 || v.rfind("0X", 0) == 0) {
                    value = std::stoull(v.substr(2), nullptr, 16);
                } else {
                    value = std::stoull(v);
                }
            } catch (const SyntaxError &) {
                throw;
            } catch (...) {
                throw err(pos, "malformed value '" + v + "'");
            }
        }
        if (fi->width < 64 && value >> fi->width)
            throw ValueOutOfRange(name + " = " + std::to_string(value) + " (width " + std::to_string(fi->width) +
                                  ", line " + std::to_string(lineno) + ")");
        fa.set(name, value);
    }
    return canonicalize_fa(dev, fa);
}

inline std::string emit_fa(const Device &dev, const FeatureAssembly &fa)
{
    FeatureAssembly canon = canonicalize_fa(dev, fa);
    std::ostringstream out;
    for (const auto &line : canon.lines) {
        const FeatureInfo *fi = dev.find_feature(line.feature);
        if (fi->width == 1) {
            out << line.feature << "\n";
        } else {
            out << line.feature << "[" << (fi->width - 1) << ":0] = " << fi->width << "'h" << std::hex
                << std::uppercase << line.value << std::dec << "\n";
        }
    }
    return out.str();
}

} // namespace fabpatch

#endif
