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

// Step 5: bit-level merging. Turn netlists into feature sets, apply a
// modification's feature adds and clears to an existing image with exact
// change accounting, and render the patch report.

#ifndef FABRICPATCH_MERGE_HPP
#define FABRICPATCH_MERGE_HPP

#include "fabricpatch/reveng.hpp"

#include <iomanip>

namespace fabpatch {

// Full feature set of a placed-and-routed netlist: cell configuration,
// clock enables, and one feature per route pip. Stub edges implied by a pip
// elsewhere in the same tree produce no feature of their own.
inline FeatureAssembly netlist_to_features(const Device &dev, const DesignNetlist &nl)
{
    FeatureAssembly fa;

    for (const auto &c : nl.cells) {
        if (c.bel < 0)
            throw MissingPlacement("cell " + c.id + " has no BEL assignment");
        const BelData &bd = dev.bels[c.bel];
        if (bd.kind != bel_kind_for_cell(c.kind))
            throw Unplaceable("cell " + c.id + " (" + cell_kind_name(c.kind) + ") on BEL " + dev.bel_name(c.bel));
        std::string tn = Device::tile_name(bd.x, bd.y) + ".";
        switch (c.kind) {
        case CellKind::LUT4:
            fa.set(tn + bd.name + ".ENABLE");
            fa.set(tn + bd.name + ".INIT", c.lut_init());
            break;
        case CellKind::FF:
        case CellKind::CARRY4:
        case CellKind::MUXF2:
        case CellKind::TAPOUT:
            fa.set(tn + bd.name + ".ENABLE");
            break;
        case CellKind::IOPAD_IN:
            fa.set(tn + bd.name + ".IN_EN");
            break;
        case CellKind::IOPAD_OUT:
            fa.set(tn + bd.name + ".OUT_EN");
            break;
        case CellKind::BRAM16:
            fa.set(tn + "BRAM.ENABLE");
            for (int r = 0; r < 4; r++) {
                uint64_t row = 0;
                for (int byte = 0; byte < 4; byte++)
                    row |= uint64_t(c.config[size_t(4) * r + byte]) << (8 * byte);
                fa.set(Device::tile_name(bd.x, bd.y + r) + ".BRAM.INIT", row);
            }
            break;
        }
    }

    for (const auto &id : nl.clock_users) {
        const Cell *c = nl.find_cell(id);
        if (!c)
            throw UnknownNet("clock user " + id + " is not a cell");
        if (c->bel < 0)
            throw MissingPlacement("clock user " + id + " has no BEL assignment");
        const BelData &bd = dev.bels[c->bel];
        fa.set(Device::tile_name(bd.x, bd.y) + ".SBOX.CLKEN");
    }

    for (const auto &n : nl.nets) {
        // gather directed edges first so implied stub edges can be checked
        std::set<std::pair<WireId, WireId>> edges;
        std::set<WireId> wires;
        for (const auto &t : n.route)
            detail::route_edges(t, edges, wires);
        for (const auto &[a, b] : edges) {
            auto u = find_pip_use(dev, a, b);
            if (u) {
                fa.set(dev.pips[u->pip].feature);
                continue;
            }
            auto s = find_secondary_pip_use(dev, a, b);
            if (s && edges.count({a, dev.pip_dst(*s)}))
                continue; // stub of a pip already in this tree
            throw MissingRoute("net " + n.id + ": no pip " + dev.wire_name(a) + " -> " + dev.wire_name(b));
        }
    }

    return canonicalize_fa(dev, fa);
}

// A modification as bit-level edits: features to assert and pip features of
// the original design to switch off (the disconnected branches of
// overridden pins).
struct ModFeatures
{
    FeatureAssembly add;
    std::vector<std::string> clear;
};

struct MergeReport
{
    uint64_t total_bits = 0;
    uint64_t bits_set = 0;     // 0 -> 1
    uint64_t bits_cleared = 0; // 1 -> 0
    size_t features_added = 0;
    size_t features_cleared = 0;
    uint32_t crc_before = 0;
    uint32_t crc_after = 0;
    std::vector<std::pair<std::string, std::string>> extra; // pipeline stats
};

inline Bitstream merge_bitstreams(const Device &dev, const Bitstream &base, const ModFeatures &mod,
                                  MergeReport *report = nullptr)
{
    check_bitstream_header(dev, base);
    Bitstream out = base;
    MergeReport rep;
    rep.total_bits = base.total_bits();
    rep.crc_before = base.content_crc();

    FeatureAssembly add = canonicalize_fa(dev, mod.add);
    for (const auto &line : add.lines) {
        auto bits = lookup_feature_bits(dev, line.feature);
        uint64_t current = 0;
        for (size_t i = 0; i < bits.size(); i++)
            current |= uint64_t(out.get_bit(bits[i])) << i;
        if (current == line.value)
            continue; // already present (e.g. shared clock enable)
        if (current != 0)
            throw AddCollision("feature " + line.feature + " already holds a different value");
        for (size_t i = 0; i < bits.size(); i++)
            if ((line.value >> i) & 1) {
                out.set_bit(bits[i], true);
                rep.bits_set++;
            }
        rep.features_added++;
    }

    std::set<std::string> cleared;
    for (const auto &f : mod.clear) {
        if (!cleared.insert(f).second)
            continue;
        auto bits = lookup_feature_bits(dev, f);
        bool any = false;
        for (uint64_t b : bits)
            any = any || out.get_bit(b);
        if (!any)
            throw ClearMissing("feature " + f + " is not set in the base image");
        for (uint64_t b : bits)
            if (out.get_bit(b)) {
                out.set_bit(b, false);
                rep.bits_cleared++;
            }
        rep.features_cleared++;
    }

    rep.crc_after = out.content_crc();
    if (report) {
        rep.extra = report->extra;
        *report = rep;
    }
    return out;
}

inline std::string render_report(const MergeReport &r, const std::string &format = "text")
{
    std::ostringstream out;
    auto hex32 = [](uint32_t v) {
        std::ostringstream s;
        s << "0x" << std::hex << std::uppercase << std::setw(8) << std::setfill('0') << v;
        return s.str();
    };
    std::vector<std::pair<std::string, std::string>> rows = {
            {"Total Configuration Bits", std::to_string(r.total_bits)},
            {"Bits Modified (0 -> 1)", std::to_string(r.bits_set)},
            {"Bits Modified (1 -> 0)", std::to_string(r.bits_cleared)},
            {"Features Added", std::to_string(r.features_added)},
            {"Features Cleared", std::to_string(r.features_cleared)},
            {"CRC Before", hex32(r.crc_before)},
            {"CRC After", hex32(r.crc_after)},
    };
    rows.insert(rows.end(), r.extra.begin(), r.extra.end());

    if (format == "kv") {
        for (auto &[k, v] : rows) {
            std::string key = k;
            for (auto &ch : key) {
                if (ch == ' ')
                    ch = '_';
                else
                    ch = char(std::tolower((unsigned char)ch));
            }
            key.erase(std::remove_if(key.begin(), key.end(),
                                     [](char c) { return !(std::isalnum((unsigned char)c) || c == '_'); }),
                      key.end());
            out << key << "=" << v << "\n";
        }
        return out.str();
    }
    if (format != "text")
        throw InvalidParams("report format must be 'text' or 'kv', got '" + format + "'");

    size_t kw = 0, vw = 0;
    for (auto &[k, v] : rows) {
        kw = std::max(kw, k.size());
        vw = std::max(vw, v.size());
    }
    std::string bar = "+" + std::string(kw + 2, '-') + "+" + std::string(vw + 2, '-') + "+";
    out << bar << "\n";
    for (auto &[k, v] : rows)
        out << "| " << std::left << std::setw(int(kw)) << k << " | " << std::right << std::setw(int(vw)) << v
            << " |\n";
    out << bar << "\n";
    return out.str();
}

} // namespace fabpatch

#endif
