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

// Two-valued synchronous netlist simulator plus the verification layer:
// trace comparison keyed by pad geometry (so reconstructed netlists with
// different cell names still compare) and a design-rule check over merged
// images.

#ifndef FABRICPATCH_SIM_HPP
#define FABRICPATCH_SIM_HPP

#include "fabricpatch/reveng.hpp"

#include <array>

namespace fabpatch {

struct Stimulus
{
    int cycles = 0;
    uint64_t seed = 0;
    // input pad bel name (or cell id, or port name for unbound inputs) ->
    // one bit per cycle; missing or short sequences read as 0
    std::map<std::string, std::vector<uint8_t>> inputs;

    static Stimulus random(const Device &dev, const DesignNetlist &nl, int cycles, uint64_t seed)
    {
        Stimulus st;
        st.cycles = cycles;
        st.seed = seed;
        std::mt19937_64 rng(seed);
        for (const auto &c : nl.cells)
            if (c.kind == CellKind::IOPAD_IN) {
                auto &bits = st.inputs[dev.bel_name(c.bel)];
                for (int t = 0; t < cycles; t++)
                    bits.push_back(uint8_t(rng() & 1));
            }
        return st;
    }
};

struct Trace
{
    int cycles = 0;
    std::map<std::string, std::vector<uint8_t>> nets;        // net id -> settled value per cycle
    std::map<std::string, std::vector<uint8_t>> pad_outputs; // output pad / tap bel name -> value per cycle
    std::map<std::string, std::vector<uint8_t>> bram_final;  // bram bel name -> 16 bytes
};

inline Trace simulate(const Device &dev, const DesignNetlist &nl, const Stimulus &stim)
{
    validate_netlist(nl);

    // pin -> driving net index
    std::map<PinRef, size_t> net_of_pin;
    for (size_t ni = 0; ni < nl.nets.size(); ni++)
        for (const auto &s : nl.nets[ni].sinks)
            if (!s.is_port)
                net_of_pin[s.pin] = ni;

    // static check: a LUT must not functionally depend on a floating input
    for (const auto &c : nl.cells) {
        if (c.kind != CellKind::LUT4)
            continue;
        for (int j = 0; j < 4; j++)
            if (!net_of_pin.count({c.id, "I" + std::to_string(j)}) && lut_depends_on(c.lut_init(), j))
                throw UnconnectedInput("LUT " + c.id + " depends on unconnected input I" + std::to_string(j));
    }

    std::vector<uint8_t> val(nl.nets.size(), 0);
    auto pin_val = [&](const std::string &cell, const std::string &pin) -> int {
        auto it = net_of_pin.find({cell, pin});
        return it == net_of_pin.end() ? 0 : val[it->second];
    };

    // sequential state, reset to zero / the configured init image
    std::map<std::string, uint8_t> ff_q;
    std::map<std::string, std::array<uint8_t, 16>> bram_mem;
    for (const auto &c : nl.cells) {
        if (c.kind == CellKind::FF)
            ff_q[c.id] = 0;
        if (c.kind == CellKind::BRAM16) {
            std::array<uint8_t, 16> m{};
            std::copy(c.config.begin(), c.config.end(), m.begin());
            bram_mem[c.id] = m;
        }
    }

    auto input_bit = [&](const Cell &c, int cycle) -> int {
        for (const std::string &key : {c.bel >= 0 ? dev.bel_name(c.bel) : std::string(), c.id}) {
            auto it = stim.inputs.find(key);
            if (it != stim.inputs.end())
                return cycle < int(it->second.size()) ? (it->second[cycle] & 1) : 0;
        }
        return 0;
    };
    auto port_bit = [&](const std::string &port, int cycle) -> int {
        auto it = stim.inputs.find(port);
        if (it != stim.inputs.end())
            return cycle < int(it->second.size()) ? (it->second[cycle] & 1) : 0;
        return 0;
    };

    auto cell_output = [&](const Cell &c, const std::string &pin, int cycle) -> int {
        switch (c.kind) {
        case CellKind::LUT4: {
            int idx = 0;
            for (int j = 0; j < 4; j++)
                idx |= pin_val(c.id, "I" + std::to_string(j)) << j;
            return (c.lut_init() >> idx) & 1;
        }
        case CellKind::FF:
            return ff_q[c.id];
        case CellKind::CARRY4: {
            int carry = pin_val(c.id, "CI");
            for (int b = 0; b < 4; b++) {
                int a = pin_val(c.id, "A" + std::to_string(b));
                int bb = pin_val(c.id, "B" + std::to_string(b));
                int s = a ^ bb ^ carry;
                if (pin == "S" + std::to_string(b))
                    return s;
                carry = (a & bb) | (carry & (a | bb));
            }
            return carry; // CO
        }
        case CellKind::MUXF2:
            return pin_val(c.id, pin_val(c.id, "S") ? "I1" : "I0");
        case CellKind::BRAM16: {
            int addr = 0;
            for (int j = 0; j < 4; j++)
                addr |= pin_val(c.id, "A" + std::to_string(j)) << j;
            int bit = pin[1] - '0';
            return (bram_mem[c.id][addr] >> bit) & 1;
        }
        case CellKind::IOPAD_IN:
            return input_bit(c, cycle);
        case CellKind::IOPAD_OUT:
        case CellKind::TAPOUT:
            return 0; // no outputs
        }
        return 0;
    };

    Trace trace;
    trace.cycles = stim.cycles;

    size_t max_iter = nl.nets.size() + 8;
    for (int cycle = 0; cycle < stim.cycles; cycle++) {
        bool settled = false;
        for (size_t iter = 0; iter <= max_iter; iter++) {
            bool changed = false;
            for (size_t ni = 0; ni < nl.nets.size(); ni++) {
                const Net &n = nl.nets[ni];
                int v = 0;
                switch (n.driver.kind) {
                case DriverKind::Const0:
                    v = 0;
                    break;
                case DriverKind::Const1:
                    v = 1;
                    break;
                case DriverKind::Port:
                    v = port_bit(n.driver.port, cycle);
                    break;
                case DriverKind::CellPin:
                    v = cell_output(*nl.find_cell(n.driver.pin.cell), n.driver.pin.pin, cycle);
                    break;
                }
                if (v != val[ni]) {
                    val[ni] = uint8_t(v);
                    changed = true;
                }
            }
            if (!changed) {
                settled = true;
                break;
            }
        }
        if (!settled)
            throw CombinationalLoop("no fixpoint after " + std::to_string(max_iter) + " sweeps in cycle " +
                                    std::to_string(cycle));

        for (size_t ni = 0; ni < nl.nets.size(); ni++)
            trace.nets[nl.nets[ni].id].push_back(val[ni]);
        for (const auto &c : nl.cells)
            if (c.kind == CellKind::IOPAD_OUT || c.kind == CellKind::TAPOUT)
                trace.pad_outputs[c.bel >= 0 ? dev.bel_name(c.bel) : c.id].push_back(uint8_t(pin_val(c.id, "I")));

        // clock edge
        for (const auto &c : nl.cells) {
            if (!nl.clock_users.count(c.id))
                continue;
            if (c.kind == CellKind::FF)
                ff_q[c.id] = uint8_t(pin_val(c.id, "D"));
            else if (c.kind == CellKind::BRAM16 && pin_val(c.id, "WE")) {
                int addr = 0;
                for (int j = 0; j < 4; j++)
                    addr |= pin_val(c.id, "A" + std::to_string(j)) << j;
                uint8_t d = 0;
                for (int j = 0; j < 8; j++)
                    d |= uint8_t(pin_val(c.id, "D" + std::to_string(j)) << j);
                bram_mem[c.id][addr] = d;
            }
        }
    }

    for (const auto &c : nl.cells)
        if (c.kind == CellKind::BRAM16) {
            auto &m = bram_mem[c.id];
            trace.bram_final[c.bel >= 0 ? dev.bel_name(c.bel) : c.id] = std::vector<uint8_t>(m.begin(), m.end());
        }
    return trace;
}

// --------------------------------------------------------------------------
// Equivalence: compare output pad traces of two designs under one stimulus.
// Pads listed in `ignore` (bel names) are skipped -- used when a
// modification intentionally repurposes an output.
// --------------------------------------------------------------------------

inline bool equivalent_under(const Device &dev, const DesignNetlist &a, const DesignNetlist &b, const Stimulus &stim,
                             const std::set<std::string> &ignore = {}, std::string *why = nullptr)
{
    Trace ta = simulate(dev, a, stim);
    Trace tb = simulate(dev, b, stim);
    std::set<std::string> pads;
    for (auto &[k, v] : ta.pad_outputs)
        pads.insert(k);
    for (auto &[k, v] : tb.pad_outputs)
        pads.insert(k);
    for (const auto &pad : pads) {
        if (ignore.count(pad))
            continue;
        auto ia = ta.pad_outputs.find(pad), ib = tb.pad_outputs.find(pad);
        std::vector<uint8_t> zero(size_t(stim.cycles), 0);
        const auto &va = ia == ta.pad_outputs.end() ? zero : ia->second;
        const auto &vb = ib == tb.pad_outputs.end() ? zero : ib->second;
        if (va != vb) {
            if (why) {
                int cyc = 0;
                while (cyc < int(std::min(va.size(), vb.size())) && va[cyc] == vb[cyc])
                    cyc++;
                *why = "pad " + pad + " diverges at cycle " + std::to_string(cyc);
            }
            return false;
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// Design-rule check on a merged image: decodes it, rebuilds the netlist and
// reports electrical problems instead of throwing.
// --------------------------------------------------------------------------

struct DrcResult
{
    bool ok = true;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
};

inline DrcResult drc_bitstream(const Device &dev, const Bitstream &bs)
{
    DrcResult res;
    try {
        RevengResult rr = bitstream_to_netlist(dev, bs);
        for (const auto &w : rr.warnings) {
            if (w.rfind("dangling route", 0) == 0 || w.rfind("sequential cell", 0) == 0)
                res.violations.push_back(w);
            else
                res.warnings.push_back(w);
        }
        // floating functional LUT inputs surface as UnconnectedInput
        try {
            Stimulus st;
            st.cycles = 1;
            simulate(dev, rr.netlist, st);
        } catch (const Error &e) {
            res.violations.push_back(e.what());
        }
    } catch (const Error &e) {
        res.violations.push_back(e.what());
    }
    res.ok = res.violations.empty();
    return res;
}

// --------------------------------------------------------------------------
// VCD dump of a trace (one scalar per net).
// --------------------------------------------------------------------------

inline std::string dump_vcd(const Trace &trace, const std::string &top = "design")
{
    std::ostringstream out;
    out << "$timescale 1ns $end\n$scope module " << top << " $end\n";
    std::vector<std::string> ids;
    auto code = [](size_t i) {
        std::string s;
        do {
            s.push_back(char('!' + i % 94));
            i /= 94;
        } while (i);
        return s;
    };
    size_t i = 0;
    for (auto &[name, vals] : trace.nets) {
        out << "$var wire 1 " << code(i) << " " << name << " $end\n";
        ids.push_back(code(i));
        i++;
    }
    out << "$upscope $end\n$enddefinitions $end\n";
    std::vector<int> last(trace.nets.size(), -1);
    for (int t = 0; t < trace.cycles; t++) {
        out << "#" << t << "\n";
        size_t j = 0;
        for (auto &[name, vals] : trace.nets) {
            int v = t < int(vals.size()) ? vals[t] : 0;
            if (v != last[j])
                out << v << ids[j] << "\n";
            last[j] = v;
            j++;
        }
    }
    out << "#" << trace.cycles << "\n";
    return out.str();
}

} // namespace fabpatch

#endif
