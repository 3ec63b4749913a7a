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

// Step 2: modification binding. A modification netlist talks to the host
// design through named ports: tap ports read an existing net, override
// ports replace the signal feeding chosen sink pins. Binding validates the
// port contract against the reverse-engineered design and records which
// original route branches have to be switched off.
//
// Also here: single-output LUT decomposition, for squeezing a 4-input
// function through a spare LUT pair when no free 4-input site is in reach.

#ifndef FABRICPATCH_MODKIT_HPP
#define FABRICPATCH_MODKIT_HPP

#include "fabricpatch/reveng.hpp"

namespace fabpatch {

struct ModSpec
{
    DesignNetlist netlist;
    NetlistBindings bindings;
    // original pip features to clear, one per overridden pin (bind_ports)
    std::vector<std::string> override_branches;
};

inline ModSpec load_modnetlist(const Device &dev, const std::string &text)
{
    ModSpec mod;
    mod.netlist = read_netlist(dev, text, &mod.bindings);
    return mod;
}

// Validate the port contract and resolve override branches. The occupancy
// map is not consulted here; resource legality is the router's business.
inline std::vector<std::string> bind_ports(const Device &dev, const DesignNetlist &orig, ModSpec &mod)
{
    std::vector<std::string> warnings;
    mod.override_branches.clear();

    // ports the mod netlist actually exposes
    std::set<std::string> in_ports, out_ports;
    for (const auto &n : mod.netlist.nets) {
        if (n.driver.kind == DriverKind::Port)
            in_ports.insert(n.driver.port);
        for (const auto &s : n.sinks)
            if (s.is_port)
                out_ports.insert(s.port);
    }

    for (const auto &[port, net_id] : mod.bindings.taps) {
        if (!in_ports.count(port))
            throw UnknownPin("tap port '" + port + "' is not an input port of the modification");
        if (mod.bindings.overrides.count(port))
            throw TapOverrideConflict("port '" + port + "' is bound as both tap and override");
        if (!orig.find_net(net_id))
            throw UnknownNet("tap port '" + port + "' binds to unknown net " + net_id);
    }
    for (const auto &p : in_ports)
        if (!mod.bindings.taps.count(p))
            throw UnknownNet("input port '" + p + "' has no TAP binding");
    for (const auto &p : out_ports)
        if (!mod.bindings.overrides.count(p))
            throw UnknownNet("output port '" + p + "' has no OVERRIDE binding");

    // original sink pin -> owning net
    std::map<PinRef, const Net *> net_of_sink;
    for (const auto &n : orig.nets)
        for (const auto &s : n.sinks)
            if (!s.is_port)
                net_of_sink[s.pin] = &n;

    std::set<PinRef> overridden;
    for (const auto &[port, pins] : mod.bindings.overrides) {
        if (!out_ports.count(port))
            throw UnknownPin("override port '" + port + "' is not an output port of the modification");
        for (const auto &pin : pins) {
            const Cell *c = orig.find_cell(pin.cell);
            if (!c)
                throw UnknownPin("override target " + pin.str() + ": no such cell in the original design");
            auto ins = cell_input_pins(c->kind);
            if (std::find(ins.begin(), ins.end(), pin.pin) == ins.end())
                throw UnknownPin("override target " + pin.str() + " is not an input pin");
            if (is_permanent_pin(dev.bels[c->bel].kind, pin.pin))
                throw TapOverrideConflict("pin " + pin.str() + " is hard-wired and cannot be overridden");
            if (!overridden.insert(pin).second)
                throw TapOverrideConflict("pin " + pin.str() + " is overridden twice");

            auto it = net_of_sink.find(pin);
            if (it == net_of_sink.end())
                throw PinNotDriven("override target " + pin.str() + " is not driven in the original design");
            const Net *onet = it->second;

            // the branch to cut: the pip whose destination is the pin's wire
            WireId pw = pin_wire(dev, c->bel, pin.pin);
            std::set<std::pair<WireId, WireId>> edges;
            std::set<WireId> wires;
            for (const auto &t : onet->route)
                detail::route_edges(t, edges, wires);
            const PipData *branch = nullptr;
            for (const auto &[a, b] : edges) {
                if (b != pw)
                    continue;
                auto u = find_pip_use(dev, a, b);
                if (u) {
                    branch = &dev.pips[u->pip];
                    break;
                }
                if (find_secondary_pip_use(dev, a, b))
                    throw TapOverrideConflict("pin " + pin.str() + " is fed through an always-on stub; " +
                                              "its source pip cannot be cleared in isolation");
            }
            if (!branch)
                throw PinNotDriven("override target " + pin.str() + " has no switchable route branch");
            mod.override_branches.push_back(branch->feature);

            for (const auto &[tport, tnet] : mod.bindings.taps)
                if (tnet == onet->id)
                    warnings.push_back("override of " + pin.str() + " cuts a branch of net " + onet->id +
                                       ", which is also tapped via port '" + tport +
                                       "' -- the tap observes the pre-override signal");
        }
    }
    return warnings;
}

// Release the routing resources of every overridden pin's dangling branch.
// Once the branch pip is switched off, the chain of wires that served only
// this pin carries nothing and may be reused by the modification; all pips
// along the chain join the clear set. Call after bind_ports, before routing.
inline void liberate_overrides(const Device &dev, const DesignNetlist &orig, ModSpec &mod, OccupancyMap &occ)
{
    std::set<std::string> cleared(mod.override_branches.begin(), mod.override_branches.end());

    std::map<PinRef, const Net *> net_of_sink;
    for (const auto &n : orig.nets)
        for (const auto &s : n.sinks)
            if (!s.is_port)
                net_of_sink[s.pin] = &n;

    // gather overridden pin wires per original net: a trunk shared by
    // several overridden branches frees up only once all of them are gone
    std::map<const Net *, std::set<WireId>> by_net;
    for (const auto &[port, pins] : mod.bindings.overrides)
        for (const auto &pin : pins) {
            const Cell *c = orig.find_cell(pin.cell);
            auto oit = net_of_sink.find(pin);
            if (!c || c->bel < 0 || oit == net_of_sink.end())
                continue;
            WireId pw = pin_wire(dev, c->bel, pin.pin);
            if (pw != kNoWire)
                by_net[oit->second].insert(pw);
        }

    for (const auto &[onet, pws] : by_net) {
        std::set<std::pair<WireId, WireId>> edges;
        std::set<WireId> wires;
        for (const auto &t : onet->route)
            detail::route_edges(t, edges, wires);
        std::map<WireId, WireId> parent;
        std::map<WireId, int> nchild;
        for (const auto &[a, b] : edges) {
            parent[b] = a;
            nchild[a]++;
        }
        std::set<WireId> pinw; // non-overridden sinks' pin wires stay put
        for (const auto &s : onet->sinks)
            if (!s.is_port) {
                const Cell *sc = orig.find_cell(s.pin.cell);
                if (sc && sc->bel >= 0) {
                    WireId w2 = pin_wire(dev, sc->bel, s.pin.pin);
                    if (w2 != kNoWire && !pws.count(w2))
                        pinw.insert(w2);
                }
            }

        for (WireId pw : pws)
            for (WireId cur = pw;;) {
                auto pit = parent.find(cur);
                if (pit == parent.end())
                    break;
                WireId par = pit->second;
                auto u = find_pip_use(dev, par, cur);
                if (!u)
                    break; // implied stub edge; its pip is cleared elsewhere
                cleared.insert(dev.pips[u->pip].feature);
                occ.used_pips.erase(*u);
                parent.erase(cur);
                nchild[par]--;
                if (cur != pw)
                    occ.used_wires.erase(cur);
                WireId sec = !u->reverse ? dev.pips[u->pip].secondary : kNoWire;
                if (sec != kNoWire) {
                    occ.used_wires.erase(sec);
                    if (edges.count({par, sec})) {
                        nchild[par]--; // the tree lists the stub as a child
                        parent.erase(sec);
                    }
                }
                if (nchild[par] > 0 || pinw.count(par) || !parent.count(par))
                    break;
                cur = par;
            }
    }
    mod.override_branches.assign(cleared.begin(), cleared.end());
}

// --------------------------------------------------------------------------
// Ashenhurst-style decomposition of one LUT4 into a pair g/h with
// h(g(bound set), free var) == f. The new cell is dropped on a spare LUT
// site as close as possible to the original; its connecting net is left for
// the router.
// --------------------------------------------------------------------------

struct DecompositionResult
{
    std::string g_cell; // new LUT
    std::string g_net;  // new net g.O -> f.I<slot>
};

inline DecompositionResult decompose_lut(const Device &dev, DesignNetlist &nl, const std::string &cell_id,
                                         const OccupancyMap &occ)
{
    Cell *f = nl.find_cell(cell_id);
    if (!f)
        throw UnknownNet("no cell " + cell_id);
    if (f->kind != CellKind::LUT4)
        throw UnsupportedCellKind("decompose_lut needs a LUT4, got " + std::string(cell_kind_name(f->kind)));
    uint16_t init = f->lut_init();

    // find a free variable whose bound-set column multiplicity is <= 2
    int free_var = -1;
    uint8_t gtab = 0;   // g truth table over the bound set (3 vars)
    uint16_t htab = 0;  // h truth table over (I0 = g, I1 = free var)
    for (int l = 0; l < 4 && free_var < 0; l++) {
        int bound[3], bi = 0;
        for (int j = 0; j < 4; j++)
            if (j != l)
                bound[bi++] = j;
        // column pattern per bound assignment: (f|free=0, f|free=1)
        int col[8];
        for (int b = 0; b < 8; b++) {
            int idx0 = 0, idx1 = 0;
            for (int k = 0; k < 3; k++) {
                int bit = (b >> k) & 1;
                idx0 |= bit << bound[k];
                idx1 |= bit << bound[k];
            }
            idx1 |= 1 << l;
            col[b] = ((init >> idx0) & 1) | (((init >> idx1) & 1) << 1);
        }
        std::vector<int> classes;
        for (int b = 0; b < 8; b++)
            if (std::find(classes.begin(), classes.end(), col[b]) == classes.end())
                classes.push_back(col[b]);
        if (classes.size() > 2)
            continue;
        free_var = l;
        gtab = 0;
        for (int b = 0; b < 8; b++)
            if (size_t(std::find(classes.begin(), classes.end(), col[b]) - classes.begin()) == 1)
                gtab |= uint8_t(1 << b);
        // h(g, v): class pattern bit v
        uint16_t h = 0;
        for (int g = 0; g < 2; g++) {
            int pattern = classes[std::min(size_t(g), classes.size() - 1)];
            for (int v = 0; v < 2; v++)
                if ((pattern >> v) & 1)
                    for (int dc = 0; dc < 4; dc++) // I2, I3 are don't-care
                        h |= uint16_t(1 << (g | (v << 1) | (dc << 2)));
        }
        htab = h;
    }
    if (free_var < 0)
        throw NotDecomposable("LUT " + cell_id + " has no single-output simple decomposition");

    // a spare LUT site: same tile first, then ring by ring outwards
    BelId g_bel = -1;
    std::set<BelId> taken(occ.used_bels);
    for (const auto &c : nl.cells)
        if (c.bel >= 0)
            taken.insert(c.bel);
    const BelData &fb = dev.bels[f->bel];
    for (int radius = 0; radius < dev.width() + dev.height() && g_bel < 0; radius++)
        for (int y = 0; y < dev.height() && g_bel < 0; y++)
            for (int x = 0; x < dev.width() && g_bel < 0; x++) {
                if (std::abs(x - fb.x) + std::abs(y - fb.y) != radius || dev.tile_type(x, y) != TileType::CLB)
                    continue;
                for (int l = 0; l < 4; l++) {
                    BelId b = dev.bel(x, y, "LUT" + std::to_string(l));
                    if (b >= 0 && !taken.count(b)) {
                        g_bel = b;
                        break;
                    }
                }
            }
    if (g_bel < 0)
        throw NoFreeLut("no spare LUT site for the decomposition of " + cell_id);

    int bound[3], bi = 0;
    for (int j = 0; j < 4; j++)
        if (j != free_var)
            bound[bi++] = j;

    Cell g;
    g.id = cell_id + "_g";
    while (nl.find_cell(g.id))
        g.id += "_";
    g.kind = CellKind::LUT4;
    g.bel = g_bel;
    g.config = {gtab, 0};
    nl.add_cell(g);
    f = nl.find_cell(cell_id); // add_cell may reallocate

    // rewire: bound inputs move to g.I0..I2, free input moves to f.I1,
    // g output feeds f.I0
    for (auto &n : nl.nets)
        for (auto &s : n.sinks) {
            if (s.is_port || s.pin.cell != cell_id)
                continue;
            if (s.pin.pin == "I" + std::to_string(free_var)) {
                s.pin.pin = "I1";
            } else {
                for (int k = 0; k < 3; k++)
                    if (s.pin.pin == "I" + std::to_string(bound[k])) {
                        s.pin = PinRef{g.id, "I" + std::to_string(k)};
                        break;
                    }
            }
        }
    f->config = {uint8_t(htab), uint8_t(htab >> 8)};

    Net gn;
    gn.id = cell_id + "_gnet";
    while (nl.find_net(gn.id))
        gn.id += "_";
    gn.driver = Driver::of_pin(g.id, "O");
    gn.sinks.push_back(SinkRef::of_pin(cell_id, "I0"));
    nl.add_net(gn);

    validate_netlist(nl);
    return DecompositionResult{g.id, gn.id};
}

} // namespace fabpatch

#endif
