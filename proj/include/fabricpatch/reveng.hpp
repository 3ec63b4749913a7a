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

// Step 1: reverse engineering. Rebuild a placed-and-routed netlist from a
// configuration image, and derive the occupancy map that tells the rest of
// the pipeline which resources the original design already consumes.

#ifndef FABRICPATCH_REVENG_HPP
#define FABRICPATCH_REVENG_HPP

#include "fabricpatch/bitstream.hpp"
#include "fabricpatch/netlist.hpp"

#include <deque>
#include <functional>

namespace fabpatch {

// Directed pip connecting two wires, if any.
inline std::optional<PipUse> find_pip_use(const Device &dev, WireId from, WireId to)
{
    for (const auto &u : dev.pips_from(from))
        if (dev.pip_dst(u) == to)
            return u;
    return std::nullopt;
}

// Pip whose always-on secondary stub is `to` while its switched input is
// `from` (the stub mirrors the pip's source signal).
inline std::optional<PipUse> find_secondary_pip_use(const Device &dev, WireId from, WireId to)
{
    for (const auto &u : dev.pips_from(from))
        if (!u.reverse && dev.pips[u.pip].secondary == to)
            return u;
    return std::nullopt;
}

inline bool lut_depends_on(uint16_t init, int input)
{
    for (int idx = 0; idx < 16; idx++)
        if (((init >> idx) & 1) != ((init >> (idx ^ (1 << input))) & 1))
            return true;
    return false;
}

namespace detail {

inline std::string bel_cell_id(const Device &dev, BelId b)
{
    std::string s = dev.bel_name(b);
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

} // namespace detail

// Enabled-cell inventory of a decoded image (shared by reveng and DRC).
inline std::vector<Cell> enabled_cells(const Device &dev, const std::map<std::string, uint64_t> &feat,
                                       std::vector<std::string> *warnings = nullptr)
{
    auto has = [&](const std::string &f) {
        auto it = feat.find(f);
        return it != feat.end() && it->second != 0;
    };
    auto value = [&](const std::string &f) -> uint64_t {
        auto it = feat.find(f);
        return it == feat.end() ? 0 : it->second;
    };

    std::vector<Cell> cells;
    auto add = [&](int x, int y, const std::string &site, CellKind kind, std::vector<uint8_t> config) {
        Cell c;
        c.bel = dev.bel(x, y, site);
        c.id = detail::bel_cell_id(dev, c.bel);
        if (kind == CellKind::IOPAD_IN)
            c.id += "_IN";
        if (kind == CellKind::IOPAD_OUT)
            c.id += "_OUT";
        c.kind = kind;
        c.config = std::move(config);
        cells.push_back(std::move(c));
    };

    for (int y = 0; y < dev.height(); y++)
        for (int x = 0; x < dev.width(); x++) {
            std::string tn = Device::tile_name(x, y) + ".";
            switch (dev.tile_type(x, y)) {
            case TileType::CLB:
                for (int l = 0; l < 4; l++) {
                    std::string ls = "LUT" + std::to_string(l);
                    if (has(tn + ls + ".ENABLE")) {
                        uint64_t init = value(tn + ls + ".INIT");
                        add(x, y, ls, CellKind::LUT4, {uint8_t(init), uint8_t(init >> 8)});
                    }
                    std::string fs = "FF" + std::to_string(l);
                    if (has(tn + fs + ".ENABLE"))
                        add(x, y, fs, CellKind::FF, {});
                }
                if (has(tn + "CARRY4.ENABLE"))
                    add(x, y, "CARRY4", CellKind::CARRY4, {});
                for (int f = 0; f < 2; f++)
                    if (has(tn + "MUXF2_" + std::to_string(f) + ".ENABLE"))
                        add(x, y, "MUXF2_" + std::to_string(f), CellKind::MUXF2, {});
                break;
            case TileType::IO:
                for (int pd = 0; pd < 2; pd++) {
                    std::string ps = "PAD" + std::to_string(pd);
                    bool in_en = has(tn + ps + ".IN_EN");
                    bool out_en = has(tn + ps + ".OUT_EN");
                    if (in_en && out_en) {
                        if (warnings)
                            warnings->push_back("pad " + tn + ps + " enabled in both directions; keeping output");
                        in_en = false;
                    }
                    if (in_en)
                        add(x, y, ps, CellKind::IOPAD_IN, {});
                    if (out_en)
                        add(x, y, ps, CellKind::IOPAD_OUT, {});
                }
                if (has(tn + "TAP0.ENABLE"))
                    add(x, y, "TAP0", CellKind::TAPOUT, {});
                break;
            case TileType::BRAM:
                if (dev.is_bram_anchor(x, y) && has(tn + "BRAM.ENABLE")) {
                    std::vector<uint8_t> config(16, 0);
                    for (int r = 0; r < 4; r++) {
                        uint64_t row = value(Device::tile_name(x, y + r) + ".BRAM.INIT");
                        for (int byte = 0; byte < 4; byte++)
                            config[size_t(4) * r + byte] = uint8_t(row >> (8 * byte));
                    }
                    add(x, y, "BRAM", CellKind::BRAM16, std::move(config));
                }
                break;
            }
        }
    return cells;
}

struct RevengResult
{
    DesignNetlist netlist;
    std::vector<std::string> warnings;
};

inline RevengResult bitstream_to_netlist(const Device &dev, const Bitstream &bs)
{
    RevengResult res;
    DesignNetlist &nl = res.netlist;
    DecodedBitstream dec = decode_bitstream(dev, bs);
    if (!dec.opaque_bits.empty())
        res.warnings.push_back(std::to_string(dec.opaque_bits.size()) +
                               " opaque bit(s) not covered by the feature database");

    std::map<std::string, uint64_t> feat;
    for (const auto &line : dec.fa.lines)
        feat[line.feature] = line.value;

    for (auto &c : enabled_cells(dev, feat, &res.warnings))
        nl.add_cell(std::move(c));

    // Routable (non-permanent) input pins by wire, and the output wires that
    // hard-wired pins consume (these force a net even without routing).
    std::unordered_map<WireId, PinRef> in_pin_of_wire;
    std::set<WireId> perm_consumed;
    for (const auto &c : nl.cells) {
        for (const auto &pin : cell_input_pins(c.kind)) {
            WireId w = pin_wire(dev, c.bel, pin);
            if (w == kNoWire)
                continue;
            if (is_permanent_pin(dev.bels[c.bel].kind, pin))
                perm_consumed.insert(w);
            else
                in_pin_of_wire.emplace(w, PinRef{c.id, pin});
        }
    }

    // Active directed pip uses, grouped by source wire. A bidirectional
    // feature contributes both directions; traversal settles which one is
    // real (the one leaving a driven wire).
    std::unordered_map<WireId, std::vector<PipUse>> active_from;
    std::vector<std::pair<std::string, PipId>> active_pips;
    for (const auto &[name, v] : feat) {
        PipId pip = dev.pip_by_feature(name);
        if (pip < 0)
            continue;
        active_pips.emplace_back(name, pip);
        const PipData &pd = dev.pips[pip];
        active_from[pd.from].push_back(PipUse{pip, false});
        if (pd.bidirectional)
            active_from[pd.to].push_back(PipUse{pip, true});
    }

    // Net growth from a set of root wires. Every reached wire is claimed;
    // claiming a wire twice means two drivers meet.
    std::unordered_map<WireId, std::string> claimed_by;
    std::set<PipId> traversed;

    auto grow_tree = [&](const std::string &net_id, WireId root) -> RouteNode {
        auto claim = [&](WireId w) {
            auto prev = claimed_by.find(w);
            if (prev != claimed_by.end() && prev->second != net_id)
                throw MultipleDrivers("wire " + dev.wire_name(w) + " driven by nets " + prev->second + " and " +
                                      net_id);
            bool fresh = prev == claimed_by.end();
            claimed_by[w] = net_id;
            return fresh;
        };
        claim(root);
        std::map<WireId, std::vector<WireId>> children_of;
        std::deque<WireId> queue{root};
        while (!queue.empty()) {
            WireId w = queue.front();
            queue.pop_front();
            auto it = active_from.find(w);
            if (it == active_from.end())
                continue;
            for (const auto &u : it->second) {
                if (traversed.count(u.pip))
                    continue;
                WireId dst = dev.pip_dst(u);
                if (!claim(dst))
                    continue; // already reached within this net
                traversed.insert(u.pip);
                children_of[w].push_back(dst);
                queue.push_back(dst);
                // always-on stub: electrically driven by the pip's source
                WireId sec = dev.pips[u.pip].secondary;
                if (!u.reverse && sec != kNoWire && !claimed_by.count(sec)) {
                    claimed_by[sec] = net_id;
                    children_of[w].push_back(sec);
                    queue.push_back(sec);
                }
            }
        }
        std::function<RouteNode(WireId)> build = [&](WireId w) {
            RouteNode node{w, {}};
            for (WireId c : children_of[w])
                node.children.push_back(build(c));
            return node;
        };
        return build(root);
    };

    // Cell-driven nets, in deterministic cell order.
    for (const auto &c : nl.cells) {
        for (const auto &pin : cell_output_pins(c.kind)) {
            WireId w = pin_wire(dev, c.bel, pin);
            if (w == kNoWire)
                continue;
            bool routed = active_from.count(w) != 0;
            if (!routed && !perm_consumed.count(w))
                continue; // unused output
            Net n;
            n.id = "n_" + c.id + "_" + pin;
            n.driver = Driver::of_pin(c.id, pin);
            RouteNode tree = grow_tree(n.id, w);
            if (!tree.children.empty())
                n.route.push_back(std::move(tree)); // lone root carries no information
            nl.add_net(std::move(n));
        }
    }

    // Constant nets: one net per constant, trees hanging off any tile's
    // GND/VCC wire.
    for (int k = 0; k < 2; k++) {
        Net n;
        n.id = k ? "vcc" : "gnd";
        n.driver = Driver::of_const(k);
        for (int y = 0; y < dev.height(); y++)
            for (int x = 0; x < dev.width(); x++) {
                WireId w = dev.wire(x, y, k ? "VCC" : "GND");
                if (w != kNoWire && active_from.count(w) && !claimed_by.count(w))
                    n.route.push_back(grow_tree(n.id, w));
            }
        if (!n.route.empty())
            nl.add_net(std::move(n));
    }

    // Pips whose source never got driven are dangling antennas.
    for (const auto &[name, pip] : active_pips)
        if (!traversed.count(pip))
            res.warnings.push_back("dangling route: active pip " + name + " has no driven source");

    // Attach sinks: any claimed wire that is a routable input pin.
    for (auto &n : nl.nets) {
        std::set<std::string> seen;
        for (WireId w : route_wires(n.route)) {
            auto it = in_pin_of_wire.find(w);
            if (it == in_pin_of_wire.end())
                continue;
            const Cell *c = nl.find_cell(it->second.cell);
            // a stub-driven LUT input only matters if the function reads it
            if (c->kind == CellKind::LUT4 && !lut_depends_on(c->lut_init(), it->second.pin[1] - '0'))
                continue;
            if (seen.insert(it->second.str()).second)
                n.sinks.push_back(SinkRef::of_pin(it->second.cell, it->second.pin));
        }
    }

    // Permanent (hard-wired) connections become sinks on the driving nets.
    std::unordered_map<WireId, Net *> net_of_wire;
    for (auto &n : nl.nets)
        if (n.driver.kind == DriverKind::CellPin) {
            const Cell *c = nl.find_cell(n.driver.pin.cell);
            net_of_wire[pin_wire(dev, c->bel, n.driver.pin.pin)] = &n;
        }
    auto attach_permanent = [&](const Cell &c, const std::string &pin) {
        WireId w = pin_wire(dev, c.bel, pin);
        if (w == kNoWire)
            return;
        auto it = net_of_wire.find(w);
        if (it != net_of_wire.end())
            it->second->sinks.push_back(SinkRef::of_pin(c.id, pin));
    };
    for (const auto &c : nl.cells) {
        if (c.kind == CellKind::CARRY4) {
            attach_permanent(c, "CI");
            for (int b = 0; b < 4; b++)
                attach_permanent(c, "A" + std::to_string(b));
        } else if (c.kind == CellKind::MUXF2) {
            attach_permanent(c, "I0");
            attach_permanent(c, "I1");
        }
    }

    // Clock distribution: CLKEN gates a tile's sequential elements.
    for (const auto &c : nl.cells) {
        if (c.kind != CellKind::FF && c.kind != CellKind::BRAM16)
            continue;
        const auto &bd = dev.bels[c.bel];
        if (feat.count(Device::tile_name(bd.x, bd.y) + ".SBOX.CLKEN"))
            nl.clock_users.insert(c.id);
        else
            res.warnings.push_back("sequential cell " + c.id + " sits in a tile without SBOX.CLKEN");
    }

    validate_netlist(nl);
    return res;
}

// --------------------------------------------------------------------------
// Occupancy: everything the design consumes, plus interface wires of its
// BELs, so a modification cannot disturb it.
// --------------------------------------------------------------------------

inline OccupancyMap extract_occupancy(const Device &dev, const DesignNetlist &nl)
{
    OccupancyMap occ;
    occ.device_digest = dev.digest;

    for (const auto &c : nl.cells) {
        if (c.bel < 0)
            throw MissingPlacement("cell " + c.id + " has no BEL assignment");
        occ.used_bels.insert(c.bel);
        for (const auto &pin : cell_input_pins(c.kind)) {
            WireId w = pin_wire(dev, c.bel, pin);
            if (w != kNoWire)
                occ.used_wires.insert(w);
        }
        for (const auto &pin : cell_output_pins(c.kind)) {
            WireId w = pin_wire(dev, c.bel, pin);
            if (w != kNoWire)
                occ.used_wires.insert(w);
        }
    }

    for (const auto &n : nl.nets) {
        std::function<void(const RouteNode &)> walk = [&](const RouteNode &node) {
            occ.used_wires.insert(node.wire);
            for (const auto &ch : node.children) {
                occ.used_wires.insert(ch.wire);
                auto u = find_pip_use(dev, node.wire, ch.wire);
                if (!u) {
                    // implied stub edge of a pip that is elsewhere in the tree
                    auto s = find_secondary_pip_use(dev, node.wire, ch.wire);
                    if (!s)
                        throw MissingRoute("net " + n.id + ": no pip " + dev.wire_name(node.wire) + " -> " +
                                           dev.wire_name(ch.wire));
                } else {
                    occ.used_pips.insert(*u);
                    WireId sec = dev.pips[u->pip].secondary;
                    if (!u->reverse && sec != kNoWire)
                        occ.used_wires.insert(sec);
                }
                walk(ch);
            }
        };
        for (const auto &t : n.route)
            walk(t);
    }

    for (const auto &id : nl.clock_users) {
        const Cell *c = nl.find_cell(id);
        if (c && c->bel >= 0) {
            const auto &bd = dev.bels[c->bel];
            occ.clock_tiles.emplace(bd.x, bd.y);
        }
    }
    return occ;
}

} // namespace fabpatch

#endif
