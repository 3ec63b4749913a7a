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

// End-to-end demonstration fixtures. A small crypto SoC (toy block cipher,
// program counter, instruction ROM, key register) is built, placed and
// routed from scratch; four modification circuits are then patched into its
// bitstream through the full pipeline:
//
//   cs1  passive trace buffer: taps the key and the done strobe into a
//        BRAM ring buffer behind a trigger; zero overrides.
//   cs2  key/state multiplexer override: after a bus-match trigger, the key
//        register is silently swapped and the true key leaks via the state.
//   cs3  triggered instruction replacement: a marker opcode arms a two-step
//        counter that substitutes the following instruction words.
//   cs4  boot-sequence override: a combinational shadow ROM feeds the CPU a
//        fixed startup sequence once, ending in a jump back to address 0.
//
// Every scenario comes with a cycle-accurate software reference model so
// that the patched design can be checked against an independent oracle.

#ifndef FABRICPATCH_SCENARIOS_HPP
#define FABRICPATCH_SCENARIOS_HPP

#include "fabricpatch/merge.hpp"
#include "fabricpatch/modkit.hpp"
#include "fabricpatch/placer.hpp"
#include "fabricpatch/router.hpp"
#include "fabricpatch/sim.hpp"

namespace fabpatch {

// --------------------------------------------------------------------------
// Toy block cipher: 8-bit block, 4 rounds of rotl1(sbox(state ^ key)).
// --------------------------------------------------------------------------

inline constexpr std::array<uint8_t, 16> kToySbox = {0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
                                                     0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2};

inline uint8_t toy_sub(uint8_t v)
{
    return uint8_t(kToySbox[v & 0xF] | (kToySbox[v >> 4] << 4));
}

inline uint8_t rotl1(uint8_t v) { return uint8_t(uint8_t(v << 1) | (v >> 7)); }

inline uint8_t toy_round(uint8_t s, uint8_t k) { return rotl1(toy_sub(uint8_t(s ^ k))); }

inline uint8_t toy_encrypt(uint8_t p, uint8_t k)
{
    uint8_t s = p;
    for (int r = 0; r < 4; r++)
        s = toy_round(s, k);
    return s;
}

// --------------------------------------------------------------------------
// Scenario parameters
// --------------------------------------------------------------------------

struct ScenarioConfig
{
    uint8_t key = 0x5A;        // key the original firmware loads
    uint8_t trojan_key = 0xC3; // key injected by cs2/cs3/cs4
    uint8_t trigger = 0x0B;    // bus value arming cs2
    int depth = 16;            // cs1 trace-buffer depth (power of two, <= 16)
    int cycles = 96;           // default simulation horizon
    uint64_t route_seed = 1;
};

inline void validate_scenario_config(const ScenarioConfig &cfg)
{
    if (cfg.key == cfg.trojan_key)
        throw InvalidParams("scenario: key and trojan_key must differ");
    if (cfg.depth < 1 || cfg.depth > 16 || (cfg.depth & (cfg.depth - 1)) != 0)
        throw InvalidParams("scenario: trace-buffer depth must be a power of two in [1,16]");
    if (cfg.cycles < 1)
        throw InvalidParams("scenario: cycle count must be positive");
}

// Demo device used by all scenario fixtures.
inline DeviceParams reference_device_params()
{
    DeviceParams p;
    p.width = 24;
    p.height = 16;
    p.wires_per_side = 8;
    p.long_lines = 4;
    p.bram_columns = {6, 17};
    p.seed = 7;
    return p;
}

// Toy ISA (fixed-width 8-bit words, opcode in the high nibble):
//   0x0n  nop (0x0F doubles as the cs3 marker word)
//   0x1n  load key low nibble
//   0x2n  load key high nibble
//   0x8n  jump to address n
inline std::vector<uint8_t> toy_program(uint8_t key)
{
    std::vector<uint8_t> p(16, 0);
    p[0] = 0x0F;
    p[1] = uint8_t(0x10 | (key & 0x0F));
    p[2] = uint8_t(0x20 | (key >> 4));
    p[3] = 0x80;
    return p;
}

namespace detail {

// truth table from a predicate over the four LUT inputs
template <typename F> inline uint16_t lut_fn(F f)
{
    uint16_t v = 0;
    for (int i = 0; i < 16; i++)
        if (f(i & 1, (i >> 1) & 1, (i >> 2) & 1, (i >> 3) & 1))
            v |= uint16_t(1u << i);
    return v;
}

} // namespace detail

// --------------------------------------------------------------------------
// The original design: an 8-bit crypto SoC.
//
// Per cycle:  ib   = rom[pc]                (async instruction fetch)
//             done = (r == 3)
//             pc'  = jmp(ib) ? ib&15 : pc+1
//             key' = nibble loads from ib
//             m'   = m + in                 (pad-gated message counter)
//             s'   = done ? m : round(s, key)
//             c'   = done ? round(s, key) : c
//             r'   = r + 1
// The c register drives the eight output pads.
// --------------------------------------------------------------------------

inline DesignNetlist soc_netlist(const Device &dev, const ScenarioConfig &cfg)
{
    DesignNetlist nl;
    auto lut = [&](const std::string &id, uint16_t init) {
        Cell c;
        c.id = id;
        c.kind = CellKind::LUT4;
        c.config = {uint8_t(init & 0xFF), uint8_t(init >> 8)};
        nl.add_cell(std::move(c));
    };
    auto ff = [&](const std::string &id) {
        Cell c;
        c.id = id;
        c.kind = CellKind::FF;
        nl.add_cell(std::move(c));
        nl.clock_users.insert(id);
    };
    auto net = [&](const std::string &id, Driver d, const std::vector<std::string> &sinks) {
        Net n;
        n.id = id;
        n.driver = std::move(d);
        for (const auto &s : sinks) {
            auto dot = s.rfind('.');
            n.sinks.push_back(SinkRef::of_pin(s.substr(0, dot), s.substr(dot + 1)));
        }
        nl.add_net(std::move(n));
    };
    auto J = [](const std::string &base, int j) { return base + std::to_string(j); };

    uint16_t mux2 = detail::lut_fn([](int s, int a, int b, int) { return s ? a : b; });
    uint16_t id1 = detail::lut_fn([](int a, int, int, int) { return a; });

    // program counter: pc' = jmp ? ib : pc + 1 (ripple increment in LUTs)
    lut("pcmux0", detail::lut_fn([](int s, int a, int b, int) { return s ? a : !b; }));
    for (int j = 1; j < 4; j++)
        lut(J("pcmux", j), detail::lut_fn([](int s, int a, int b, int c) { return s ? a : (b ^ c); }));
    lut("and01", detail::lut_fn([](int a, int b, int, int) { return a && b; }));
    lut("and012", detail::lut_fn([](int a, int b, int c, int) { return a && b && c; }));
    for (int j = 0; j < 4; j++)
        ff(J("pcff", j));

    // instruction ROM (write port tied off)
    {
        Cell rom;
        rom.id = "rom";
        rom.kind = CellKind::BRAM16;
        rom.config = toy_program(cfg.key);
        nl.add_cell(std::move(rom));
        nl.clock_users.insert("rom");
    }

    // decode (opcode nibble on I0..I3 = ib4..ib7)
    // the three decoders read the opcode nibble with rotated input order
    // (decoder d sees ib[4 + ((k + d) % 4)] on input k), which makes all
    // three the same one-hot match and spreads their switchbox entries
    uint16_t onehot3 = detail::lut_fn([](int a, int b, int c, int d) { return !a && !b && !c && d; });
    lut("dec_jmp", onehot3);
    lut("dec_skl", onehot3);
    lut("dec_skh", onehot3);

    // key register with nibble-load muxes
    for (int j = 0; j < 8; j++) {
        lut(J("keymux", j), mux2);
        ff(J("keyff", j));
    }

    // message counter m: two stacked CARRY4s, identity feeder LUTs, B0 = in
    for (int j = 0; j < 8; j++) {
        lut(J("mfeed", j), id1);
        lut(J("mpass", j), id1);
        ff(J("mff", j));
    }
    for (const char *id : {"mlo", "mhi"}) {
        Cell c;
        c.id = id;
        c.kind = CellKind::CARRY4;
        nl.add_cell(std::move(c));
    }

    // cipher round: x = s ^ key, y = sbox(x), rot = rotl1(y)
    for (int j = 0; j < 8; j++) {
        lut(J("xor", j), detail::lut_fn([](int a, int b, int, int) { return a ^ b; }));
        // input order rotated per LUT so co-located s-box LUTs pull each
        // x-bit through different switchbox entry points
        int bit = j % 4, rot = j % 4;
        lut(J("sb", j), detail::lut_fn([bit, rot](int a, int b, int c, int d) {
                const int in[4] = {a, b, c, d};
                int idx = 0;
                for (int k = 0; k < 4; k++)
                    idx |= in[k] << ((k + rot) % 4);
                return (kToySbox[idx] >> bit) & 1;
            }));
        Cell mx;
        mx.id = J("smux", j);
        mx.kind = CellKind::MUXF2;
        nl.add_cell(std::move(mx));
        ff(J("sff", j));
    }

    // round counter and the done strobe
    lut("done", detail::lut_fn([](int a, int b, int, int) { return a && b; }));
    lut("r0lut", detail::lut_fn([](int a, int, int, int) { return !a; }));
    lut("r1lut", detail::lut_fn([](int a, int b, int, int) { return a ^ b; }));
    ff("rff0");
    ff("rff1");

    // ciphertext hold register and the output pads
    for (int j = 0; j < 8; j++) {
        lut(J("cmux", j), mux2);
        ff(J("cff", j));
    }
    for (int j = 0; j < 8; j++) {
        Cell p;
        p.id = J("pad", j);
        p.kind = CellKind::IOPAD_OUT;
        p.bel = dev.bel(dev.width() - 1, j / 2, "PAD" + std::to_string(j % 2));
        if (p.bel < 0)
            throw InvalidParams("device too small for the demo SoC output pads");
        nl.add_cell(std::move(p));
    }
    {
        Cell p;
        p.id = "pin0";
        p.kind = CellKind::IOPAD_IN;
        p.bel = dev.bel(0, 0, "PAD0");
        nl.add_cell(std::move(p));
    }

    // ---- nets ----------------------------------------------------------
    net("in0", Driver::of_pin("pin0", "O"), {"mlo.B0"});
    net("pc0_q", Driver::of_pin("pcff0", "Q"), {"pcmux0.I2", "pcmux1.I2", "and01.I0", "and012.I0", "rom.A0"});
    net("pc1_q", Driver::of_pin("pcff1", "Q"), {"pcmux1.I3", "and01.I1", "and012.I1", "rom.A1"});
    net("pc2_q", Driver::of_pin("pcff2", "Q"), {"pcmux2.I3", "and012.I2", "rom.A2"});
    net("pc3_q", Driver::of_pin("pcff3", "Q"), {"pcmux3.I3", "rom.A3"});
    net("and01_o", Driver::of_pin("and01", "O"), {"pcmux2.I2"});
    net("and012_o", Driver::of_pin("and012", "O"), {"pcmux3.I2"});
    for (int j = 0; j < 4; j++)
        net(J("pcmux", j) + "_o", Driver::of_pin(J("pcmux", j), "O"), {J("pcff", j) + ".D"});
    for (int j = 0; j < 8; j++) {
        std::vector<std::string> sinks;
        if (j < 4)
            sinks = {J("pcmux", j) + ".I1", J("keymux", j) + ".I1", J("keymux", j + 4) + ".I1"};
        else
            sinks = {"dec_jmp.I" + std::to_string(j - 4), "dec_skl.I" + std::to_string((j - 4 + 3) % 4),
                     "dec_skh.I" + std::to_string((j - 4 + 2) % 4)};
        net(J("ibus", j), Driver::of_pin("rom", "Q" + std::to_string(j)), sinks);
    }
    net("jmp", Driver::of_pin("dec_jmp", "O"), {"pcmux0.I0", "pcmux1.I0", "pcmux2.I0", "pcmux3.I0"});
    net("skl", Driver::of_pin("dec_skl", "O"), {"keymux0.I0", "keymux1.I0", "keymux2.I0", "keymux3.I0"});
    net("skh", Driver::of_pin("dec_skh", "O"), {"keymux4.I0", "keymux5.I0", "keymux6.I0", "keymux7.I0"});
    for (int j = 0; j < 8; j++) {
        net(J("keymux", j) + "_o", Driver::of_pin(J("keymux", j), "O"), {J("keyff", j) + ".D"});
        net(J("key", j) + "_q", Driver::of_pin(J("keyff", j), "Q"), {J("xor", j) + ".I1", J("keymux", j) + ".I2"});
        net(J("m", j) + "_q", Driver::of_pin(J("mff", j), "Q"), {J("mfeed", j) + ".I0", J("mpass", j) + ".I0"});
        net(J("mfeed", j) + "_o", Driver::of_pin(J("mfeed", j), "O"),
            {std::string(j < 4 ? "mlo" : "mhi") + ".A" + std::to_string(j % 4)});
    }
    net("gnd", Driver::of_const(false),
        {"rom.WE", "mlo.B1", "mlo.B2", "mlo.B3", "mhi.B0", "mhi.B1", "mhi.B2", "mhi.B3"});
    net("mcarry", Driver::of_pin("mlo", "CO"), {"mhi.CI"});
    for (int j = 0; j < 8; j++) {
        net(J("msum", j), Driver::of_pin(j < 4 ? "mlo" : "mhi", "S" + std::to_string(j % 4)),
            {J("mff", j) + ".D"});
        std::vector<std::string> xsinks;
        for (int t = 0; t < 4; t++)
            xsinks.push_back(J("sb", (j / 4) * 4 + t) + ".I" + std::to_string(((j % 4) - t + 4) % 4));
        net(J("x", j), Driver::of_pin(J("xor", j), "O"), xsinks);
        net(J("y", j), Driver::of_pin(J("sb", j), "O"),
            {J("smux", (j + 1) % 8) + ".I0", J("cmux", (j + 1) % 8) + ".I1"});
        net(J("mpass", j) + "_o", Driver::of_pin(J("mpass", j), "O"), {J("smux", j) + ".I1"});
    }
    {
        std::vector<std::string> dsinks;
        for (int j = 0; j < 8; j++)
            dsinks.push_back(J("smux", j) + ".S");
        for (int j = 0; j < 8; j++)
            dsinks.push_back(J("cmux", j) + ".I0");
        net("done_o", Driver::of_pin("done", "O"), dsinks);
    }
    for (int j = 0; j < 8; j++) {
        net(J("snext", j), Driver::of_pin(J("smux", j), "O"), {J("sff", j) + ".D"});
        net(J("s", j) + "_q", Driver::of_pin(J("sff", j), "Q"), {J("xor", j) + ".I0"});
    }
    net("r0_q", Driver::of_pin("rff0", "Q"), {"r0lut.I0", "r1lut.I0", "done.I0"});
    net("r1_q", Driver::of_pin("rff1", "Q"), {"r1lut.I1", "done.I1"});
    net("r0_n", Driver::of_pin("r0lut", "O"), {"rff0.D"});
    net("r1_n", Driver::of_pin("r1lut", "O"), {"rff1.D"});
    for (int j = 0; j < 8; j++) {
        net(J("cnext", j), Driver::of_pin(J("cmux", j), "O"), {J("cff", j) + ".D"});
        net(J("c", j) + "_q", Driver::of_pin(J("cff", j), "Q"), {J("pad", j) + ".I", J("cmux", j) + ".I2"});
    }

    validate_netlist(nl);
    return nl;
}

struct OriginalToy
{
    DesignNetlist netlist; // placed and routed
    Bitstream bitstream;
    PlaceResult placed;
    RouterStats routed;
};

// Build, place, route and encode the original SoC on an empty device. The
// routing step reuses the modification router against a blank occupancy.
inline OriginalToy build_original_toy(const Device &dev, const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    OriginalToy out;
    out.netlist = soc_netlist(dev, cfg);

    OccupancyMap empty;
    empty.device_digest = dev.digest;
    out.placed = place(dev, out.netlist, empty);

    ModSpec wrap;
    wrap.netlist = std::move(out.netlist);
    DesignNetlist none;
    out.routed = route_all(dev, none, wrap, empty, cfg.route_seed);
    out.netlist = std::move(wrap.netlist);

    out.bitstream = encode_bitstream(dev, netlist_to_features(dev, out.netlist));
    return out;
}

// --------------------------------------------------------------------------
// Mapping design-level names onto the reverse-engineered reconstruction
// (cell ids there are derived from BEL names, net ids from driver pins).
// --------------------------------------------------------------------------

inline std::string recon_cell_id(const DesignNetlist &built, const DesignNetlist &recon, const std::string &cell_id)
{
    const Cell *c = built.find_cell(cell_id);
    if (!c || c->bel < 0)
        throw UnknownNet("no placed cell " + cell_id + " in the source design");
    for (const auto &rc : recon.cells)
        if (rc.bel == c->bel && rc.kind == c->kind)
            return rc.id;
    throw UnknownNet("cell " + cell_id + " has no counterpart in the reconstruction");
}

inline std::string recon_net_id(const DesignNetlist &built, const DesignNetlist &recon, const std::string &net_id)
{
    const Net *n = built.find_net(net_id);
    if (!n)
        throw UnknownNet("no net " + net_id + " in the source design");
    if (n->driver.kind == DriverKind::Const0)
        return "gnd";
    if (n->driver.kind == DriverKind::Const1)
        return "vcc";
    if (n->driver.kind != DriverKind::CellPin)
        throw UnknownNet("net " + net_id + " has no cell driver to match on");
    std::string rc = recon_cell_id(built, recon, n->driver.pin.cell);
    for (const auto &rn : recon.nets)
        if (rn.driver.kind == DriverKind::CellPin && rn.driver.pin.cell == rc && rn.driver.pin.pin == n->driver.pin.pin)
            return rn.id;
    throw UnknownNet("net " + net_id + " has no counterpart in the reconstruction");
}

// --------------------------------------------------------------------------
// Scenario builders. Each returns an unplaced, unrouted ModSpec whose taps
// and overrides reference the reverse-engineered original.
// --------------------------------------------------------------------------

namespace detail {

struct ModBuilder
{
    ModSpec mod;

    void lut(const std::string &id, uint16_t init)
    {
        Cell c;
        c.id = id;
        c.kind = CellKind::LUT4;
        c.config = {uint8_t(init & 0xFF), uint8_t(init >> 8)};
        mod.netlist.add_cell(std::move(c));
    }
    void ff(const std::string &id)
    {
        Cell c;
        c.id = id;
        c.kind = CellKind::FF;
        mod.netlist.add_cell(std::move(c));
        mod.netlist.clock_users.insert(id);
    }
    void cell(const std::string &id, CellKind k, std::vector<uint8_t> config = {})
    {
        Cell c;
        c.id = id;
        c.kind = k;
        c.config = std::move(config);
        mod.netlist.add_cell(std::move(c));
        if (k == CellKind::BRAM16)
            mod.netlist.clock_users.insert(id);
    }
    // sinks: "cell.pin" or "$port"
    void net(const std::string &id, Driver d, const std::vector<std::string> &sinks)
    {
        Net n;
        n.id = id;
        n.driver = std::move(d);
        for (const auto &s : sinks) {
            if (!s.empty() && s[0] == '$') {
                n.sinks.push_back(SinkRef::of_port(s.substr(1)));
            } else {
                auto dot = s.rfind('.');
                n.sinks.push_back(SinkRef::of_pin(s.substr(0, dot), s.substr(dot + 1)));
            }
        }
        mod.netlist.add_net(std::move(n));
    }
    void tap(const std::string &port, const std::string &orig_net) { mod.bindings.taps[port] = orig_net; }
    void override_pins(const std::string &port, std::vector<PinRef> pins)
    {
        mod.bindings.overrides[port] = std::move(pins);
    }
};

} // namespace detail

// cs1: logic-analyzer-style trace buffer. Arms on the cipher's done strobe,
// then records the key byte into a BRAM each cycle until the buffer is
// full; bit 0 of the buffer streams out on a debug tap. No overrides.
inline ModSpec build_cs1(const DesignNetlist &built, const DesignNetlist &recon, const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    detail::ModBuilder b;
    auto J = [](const std::string &s, int j) { return s + std::to_string(j); };

    b.tap("t_trig", recon_net_id(built, recon, "done_o"));
    for (int j = 0; j < 8; j++)
        b.tap(J("t_d", j), recon_net_id(built, recon, J("key", j) + "_q"));

    b.cell("la_buf", CellKind::BRAM16, std::vector<uint8_t>(16, 0));
    b.cell("la_cy", CellKind::CARRY4);
    uint16_t id1 = detail::lut_fn([](int a, int, int, int) { return a; });
    for (int j = 0; j < 4; j++) {
        b.lut(J("la_af", j), id1);
        b.ff(J("la_a", j));
    }
    b.ff("la_arm");
    b.lut("la_armlut", detail::lut_fn([](int a, int bb, int, int) { return a || bb; }));
    int full_at = cfg.depth - 1;
    b.lut("la_full", detail::lut_fn([full_at](int a, int bb, int c, int d) {
              return (a | (bb << 1) | (c << 2) | (d << 3)) == full_at;
          }));
    b.lut("la_we", detail::lut_fn([](int a, int bb, int, int) { return a && !bb; }));
    b.cell("la_tap", CellKind::TAPOUT);

    b.net("p_trig", Driver::of_port("t_trig"), {"la_armlut.I1"});
    b.net("la_arm_q", Driver::of_pin("la_arm", "Q"), {"la_armlut.I0", "la_we.I0"});
    b.net("la_arm_d", Driver::of_pin("la_armlut", "O"), {"la_arm.D"});
    b.net("la_we_o", Driver::of_pin("la_we", "O"), {"la_buf.WE", "la_cy.B0"});
    b.net("la_full_o", Driver::of_pin("la_full", "O"), {"la_we.I1"});
    for (int j = 0; j < 4; j++) {
        b.net(J("la_a", j) + "_q", Driver::of_pin(J("la_a", j), "Q"),
              {J("la_af", j) + ".I0", "la_buf.A" + std::to_string(j), "la_full.I" + std::to_string(j)});
        b.net(J("la_af", j) + "_o", Driver::of_pin(J("la_af", j), "O"), {"la_cy.A" + std::to_string(j)});
        b.net(J("la_sum", j), Driver::of_pin("la_cy", "S" + std::to_string(j)), {J("la_a", j) + ".D"});
    }
    b.net("la_gnd", Driver::of_const(false), {"la_cy.B1", "la_cy.B2", "la_cy.B3"});
    for (int j = 0; j < 8; j++)
        b.net(J("p_d", j), Driver::of_port(J("t_d", j)), {"la_buf.D" + std::to_string(j)});
    b.net("la_q0", Driver::of_pin("la_buf", "Q0"), {"la_tap.I"});

    validate_netlist(b.mod.netlist);
    return std::move(b.mod);
}

// cs2: kleptographic key override. When the message counter hits the
// trigger value, the true key is pushed through the state register (and
// thus leaks through the ciphertext path) while the key register is
// permanently swapped to the attacker's key on the following cycles.
inline ModSpec build_cs2(const Device &dev, const DesignNetlist &built, const DesignNetlist &recon,
                         const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    detail::ModBuilder b;
    auto J = [](const std::string &s, int j) { return s + std::to_string(j); };

    // The register D inputs themselves are a poor override target (one
    // channel entry each); the same effect is had one level up, on the mux
    // select/data inputs that feed them.
    for (int j = 0; j < 8; j++) {
        b.tap(J("t_m", j), recon_net_id(built, recon, J("m", j) + "_q"));
        b.tap(J("t_k", j), recon_net_id(built, recon, J("key", j) + "_q"));
    }
    for (int j = 0; j < 4; j++)
        b.tap(J("t_ib", j), recon_net_id(built, recon, J("ibus", j)));
    b.tap("t_skl", recon_net_id(built, recon, "skl"));
    b.tap("t_skh", recon_net_id(built, recon, "skh"));
    b.tap("t_dn", recon_net_id(built, recon, "done_o"));

    std::vector<std::vector<int>> ss_groups;
    {
        std::vector<PinRef> klo, khi;
        for (int j = 0; j < 4; j++)
            klo.push_back(PinRef{recon_cell_id(built, recon, J("keymux", j)), "I0"});
        for (int j = 4; j < 8; j++)
            khi.push_back(PinRef{recon_cell_id(built, recon, J("keymux", j)), "I0"});
        b.override_pins("o_klo", klo);
        b.override_pins("o_khi", khi);
        // The mux select pins sit in tiles with only two channel entries
        // each, fed through a per-column corridor: selects stacked in one
        // column are reachable by a single net snaking down that corridor,
        // but a shared driver for all eight columns rarely finds a
        // congestion-free trunk.  So duplicate the little OR gate once per
        // occupied column and let each copy be placed near its own group.
        std::map<int, std::vector<int>> by_col;
        for (int j = 0; j < 8; j++) {
            const Cell *rc = recon.find_cell(recon_cell_id(built, recon, J("smux", j)));
            by_col[dev.bels[rc->bel].x].push_back(j);
        }
        for (auto &[x, js] : by_col) {
            std::vector<PinRef> pins;
            for (int j : js)
                pins.push_back(PinRef{recon_cell_id(built, recon, J("smux", j)), "S"});
            b.override_pins(J("o_ss", int(ss_groups.size())), pins);
            ss_groups.push_back(js);
        }
        // With only the select pins cut, the done net's trunk survives to
        // serve the output muxes and keeps the very corridors the new
        // select drivers need.  Overriding the output-mux selects with the
        // tapped done signal too (same value, so behaviour is unchanged)
        // lets the whole done net be cleared, vacating those corridors.
        std::vector<PinRef> cm;
        for (int j = 0; j < 8; j++)
            cm.push_back(PinRef{recon_cell_id(built, recon, J("cmux", j)), "I0"});
        b.override_pins("o_cm", cm);
    }
    for (int j = 0; j < 8; j++) {
        b.override_pins(J("o_kd", j), {PinRef{recon_cell_id(built, recon, J("keymux", j)), "I1"}});
        b.override_pins(J("o_sd", j), {PinRef{recon_cell_id(built, recon, J("mpass", j)), "I0"}});
    }

    int lo = cfg.trigger & 0x0F, hi = cfg.trigger >> 4;
    uint16_t or2 = detail::lut_fn([](int a, int bb, int, int) { return a || bb; });
    b.lut("c2_eqlo", detail::lut_fn([lo](int a, int bb, int c, int d) {
              return (a | (bb << 1) | (c << 2) | (d << 3)) == lo;
          }));
    b.lut("c2_eqhi", detail::lut_fn([hi](int a, int bb, int c, int d) {
              return (a | (bb << 1) | (c << 2) | (d << 3)) == hi;
          }));
    b.lut("c2_cmp", detail::lut_fn([](int a, int bb, int, int) { return a && bb; }));
    b.lut("c2_or", or2);
    b.ff("c2_trg");
    b.lut("c2_klo", or2); // skl OR armed trigger
    b.lut("c2_khi", or2); // skh OR armed trigger
    for (size_t g = 0; g < ss_groups.size(); g++)
        b.lut(J("c2_ds", int(g)), or2); // done OR raw compare, per column group
    for (int j = 0; j < 8; j++) {
        int ktbit = (cfg.trojan_key >> j) & 1;
        b.lut(J("c2_km", j), detail::lut_fn([ktbit](int s, int a, int, int) { return s ? ktbit : a; }));
        b.lut(J("c2_sm", j), detail::lut_fn([](int s, int a, int bb, int) { return s ? a : bb; }));
    }

    for (int j = 0; j < 8; j++)
        b.net(J("p_m", j), Driver::of_port(J("t_m", j)),
              {(j < 4 ? "c2_eqlo.I" + std::to_string(j) : "c2_eqhi.I" + std::to_string(j - 4)),
               J("c2_sm", j) + ".I2"});
    for (int j = 0; j < 8; j++)
        b.net(J("p_k", j), Driver::of_port(J("t_k", j)), {J("c2_sm", j) + ".I1"});
    for (int j = 0; j < 4; j++)
        b.net(J("p_ib", j), Driver::of_port(J("t_ib", j)),
              {J("c2_km", j) + ".I1", J("c2_km", j + 4) + ".I1"});
    b.net("p_skl", Driver::of_port("t_skl"), {"c2_klo.I0"});
    b.net("p_skh", Driver::of_port("t_skh"), {"c2_khi.I0"});
    {
        std::vector<std::string> sinks = {"$o_cm"};
        for (size_t g = 0; g < ss_groups.size(); g++)
            sinks.push_back(J("c2_ds", int(g)) + ".I0");
        b.net("p_dn", Driver::of_port("t_dn"), sinks);
    }
    b.net("c2_eqlo_o", Driver::of_pin("c2_eqlo", "O"), {"c2_cmp.I0"});
    b.net("c2_eqhi_o", Driver::of_pin("c2_eqhi", "O"), {"c2_cmp.I1"});
    {
        std::vector<std::string> sinks = {"c2_or.I1"};
        for (size_t g = 0; g < ss_groups.size(); g++)
            sinks.push_back(J("c2_ds", int(g)) + ".I1");
        for (int j = 0; j < 8; j++)
            sinks.push_back(J("c2_sm", j) + ".I0");
        b.net("c2_cmp_o", Driver::of_pin("c2_cmp", "O"), sinks);
    }
    {
        std::vector<std::string> sinks = {"c2_or.I0", "c2_klo.I1", "c2_khi.I1"};
        for (int j = 0; j < 8; j++)
            sinks.push_back(J("c2_km", j) + ".I0");
        b.net("c2_trg_q", Driver::of_pin("c2_trg", "Q"), sinks);
    }
    b.net("c2_or_o", Driver::of_pin("c2_or", "O"), {"c2_trg.D"});
    b.net("c2_klo_o", Driver::of_pin("c2_klo", "O"), {"$o_klo"});
    b.net("c2_khi_o", Driver::of_pin("c2_khi", "O"), {"$o_khi"});
    for (size_t g = 0; g < ss_groups.size(); g++)
        b.net(J("c2_ds", int(g)) + "_o", Driver::of_pin(J("c2_ds", int(g)), "O"), {"$" + J("o_ss", int(g))});
    for (int j = 0; j < 8; j++) {
        b.net(J("c2_km", j) + "_o", Driver::of_pin(J("c2_km", j), "O"), {"$" + J("o_kd", j)});
        b.net(J("c2_sm", j) + "_o", Driver::of_pin(J("c2_sm", j), "O"), {"$" + J("o_sd", j)});
    }

    validate_netlist(b.mod.netlist);
    return std::move(b.mod);
}

// helper: every sink pin of a reconstructed net (for whole-bus overrides)
inline std::vector<PinRef> recon_net_sinks(const DesignNetlist &recon, const std::string &net_id)
{
    const Net *n = recon.find_net(net_id);
    if (!n)
        throw UnknownNet("no net " + net_id + " in the reconstruction");
    std::vector<PinRef> pins;
    for (const auto &s : n->sinks)
        if (!s.is_port)
            pins.push_back(s.pin);
    return pins;
}

// cs3: triggered instruction replacement. The 0x0F marker word arms a
// two-step counter that replaces the next two fetched words with key-load
// instructions carrying the attacker's key.
inline ModSpec build_cs3(const DesignNetlist &built, const DesignNetlist &recon, const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    detail::ModBuilder b;
    auto J = [](const std::string &s, int j) { return s + std::to_string(j); };

    std::vector<std::string> ibus_recon(8);
    for (int j = 0; j < 8; j++) {
        ibus_recon[j] = recon_net_id(built, recon, J("ibus", j));
        b.tap(J("t_ib", j), ibus_recon[j]);
        b.override_pins(J("o_ib", j), recon_net_sinks(recon, ibus_recon[j]));
    }

    b.lut("c3_eqlo", detail::lut_fn([](int a, int bb, int c, int d) { return a && bb && c && d; }));
    b.lut("c3_eqhi", detail::lut_fn([](int a, int bb, int c, int d) { return !a && !bb && !c && !d; }));
    b.lut("c3_det", detail::lut_fn([](int a, int bb, int, int) { return a && bb; }));
    b.ff("c3_c0");
    b.lut("c3_sh", detail::lut_fn([](int a, int, int, int) { return a; }));
    b.ff("c3_c1");
    uint8_t w1 = uint8_t(0x10 | (cfg.trojan_key & 0x0F));
    uint8_t w2 = uint8_t(0x20 | (cfg.trojan_key >> 4));
    for (int j = 0; j < 8; j++) {
        int b1 = (w1 >> j) & 1, b2 = (w2 >> j) & 1;
        b.lut(J("c3_ob", j), detail::lut_fn([b1, b2](int s1, int s2, int ib, int) {
                  return s1 ? b1 : (s2 ? b2 : ib);
              }));
    }

    for (int j = 0; j < 8; j++)
        b.net(J("p_ib", j), Driver::of_port(J("t_ib", j)),
              {J("c3_ob", j) + ".I2",
               (j < 4 ? "c3_eqlo.I" + std::to_string(j) : "c3_eqhi.I" + std::to_string(j - 4))});
    b.net("c3_eqlo_o", Driver::of_pin("c3_eqlo", "O"), {"c3_det.I0"});
    b.net("c3_eqhi_o", Driver::of_pin("c3_eqhi", "O"), {"c3_det.I1"});
    b.net("c3_det_o", Driver::of_pin("c3_det", "O"), {"c3_c0.D"});
    {
        std::vector<std::string> sinks = {"c3_sh.I0"};
        for (int j = 0; j < 8; j++)
            sinks.push_back(J("c3_ob", j) + ".I0");
        b.net("c3_c0_q", Driver::of_pin("c3_c0", "Q"), sinks);
    }
    b.net("c3_sh_o", Driver::of_pin("c3_sh", "O"), {"c3_c1.D"});
    {
        std::vector<std::string> sinks;
        for (int j = 0; j < 8; j++)
            sinks.push_back(J("c3_ob", j) + ".I1");
        b.net("c3_c1_q", Driver::of_pin("c3_c1", "Q"), sinks);
    }
    for (int j = 0; j < 8; j++)
        b.net(J("c3_ob", j) + "_o", Driver::of_pin(J("c3_ob", j), "O"), {"$" + J("o_ib", j)});

    validate_netlist(b.mod.netlist);
    return std::move(b.mod);
}

// cs4: one-shot boot-sequence override. A combinational shadow ROM indexed
// by the PC feeds the CPU two key-load words and a return jump to address
// 0; a one-shot flag then disables the override for good.
inline ModSpec build_cs4(const DesignNetlist &built, const DesignNetlist &recon, const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    detail::ModBuilder b;
    auto J = [](const std::string &s, int j) { return s + std::to_string(j); };

    for (int j = 0; j < 8; j++) {
        std::string rn = recon_net_id(built, recon, J("ibus", j));
        b.tap(J("t_ib", j), rn);
        b.override_pins(J("o_ib", j), recon_net_sinks(recon, rn));
    }
    b.tap("t_pc0", recon_net_id(built, recon, "pc0_q"));
    b.tap("t_pc1", recon_net_id(built, recon, "pc1_q"));

    b.lut("c4_dlut", detail::lut_fn([](int os, int p0, int p1, int) { return os || (!p0 && p1); }));
    b.ff("c4_os");
    std::array<uint8_t, 4> shadow = {uint8_t(0x10 | (cfg.trojan_key & 0x0F)),
                                     uint8_t(0x20 | (cfg.trojan_key >> 4)), 0x80, 0x00};
    for (int j = 0; j < 8; j++) {
        std::array<int, 4> sb{};
        for (int a = 0; a < 4; a++)
            sb[size_t(a)] = (shadow[size_t(a)] >> j) & 1;
        b.lut(J("c4_ob", j), detail::lut_fn([sb](int os, int p0, int p1, int ib) {
                  return os ? ib : sb[size_t(p0 | (p1 << 1))];
              }));
    }

    {
        std::vector<std::string> s0 = {"c4_dlut.I1"}, s1 = {"c4_dlut.I2"};
        for (int j = 0; j < 8; j++) {
            s0.push_back(J("c4_ob", j) + ".I1");
            s1.push_back(J("c4_ob", j) + ".I2");
        }
        b.net("p_pc0", Driver::of_port("t_pc0"), s0);
        b.net("p_pc1", Driver::of_port("t_pc1"), s1);
    }
    for (int j = 0; j < 8; j++)
        b.net(J("p_ib", j), Driver::of_port(J("t_ib", j)), {J("c4_ob", j) + ".I3"});
    {
        std::vector<std::string> sinks = {"c4_dlut.I0"};
        for (int j = 0; j < 8; j++)
            sinks.push_back(J("c4_ob", j) + ".I0");
        b.net("c4_os_q", Driver::of_pin("c4_os", "Q"), sinks);
    }
    b.net("c4_os_d", Driver::of_pin("c4_dlut", "O"), {"c4_os.D"});
    for (int j = 0; j < 8; j++)
        b.net(J("c4_ob", j) + "_o", Driver::of_pin(J("c4_ob", j), "O"), {"$" + J("o_ib", j)});

    validate_netlist(b.mod.netlist);
    return std::move(b.mod);
}

// --------------------------------------------------------------------------
// Pipeline driver
// --------------------------------------------------------------------------

inline std::vector<std::string> scenario_ids() { return {"cs1", "cs2", "cs3", "cs4"}; }

inline ModSpec build_scenario_mod(const Device &dev, const std::string &id, const DesignNetlist &built,
                                  const DesignNetlist &recon, const ScenarioConfig &cfg)
{
    if (id == "cs1")
        return build_cs1(built, recon, cfg);
    if (id == "cs2")
        return build_cs2(dev, built, recon, cfg);
    if (id == "cs3")
        return build_cs3(built, recon, cfg);
    if (id == "cs4")
        return build_cs4(built, recon, cfg);
    throw InvalidParams("unknown scenario '" + id + "' (expected cs1..cs4)");
}

// Placement hints: taps anchor at the tapped net's driver, overrides at the
// centroid of their target pins.
inline PortAnchors anchor_ports(const Device &dev, const DesignNetlist &orig, const ModSpec &mod)
{
    PortAnchors anchors;
    for (const auto &[port, net_id] : mod.bindings.taps) {
        const Net *n = orig.find_net(net_id);
        if (!n || n->driver.kind != DriverKind::CellPin)
            continue;
        const Cell *c = orig.find_cell(n->driver.pin.cell);
        if (c && c->bel >= 0)
            anchors[port] = {double(dev.bels[c->bel].x), double(dev.bels[c->bel].y)};
    }
    for (const auto &[port, pins] : mod.bindings.overrides) {
        double sx = 0, sy = 0;
        int cnt = 0;
        for (const auto &p : pins) {
            const Cell *c = orig.find_cell(p.cell);
            if (c && c->bel >= 0) {
                sx += dev.bels[c->bel].x;
                sy += dev.bels[c->bel].y;
                cnt++;
            }
        }
        if (cnt)
            anchors[port] = {sx / cnt, sy / cnt};
    }
    return anchors;
}

struct ScenarioBuild
{
    std::string id;
    ScenarioConfig cfg;
    DesignNetlist original; // as constructed (placed + routed)
    Bitstream original_bs;
    DesignNetlist recon; // reverse-engineered from original_bs
    OccupancyMap occ;
    ModSpec mod; // bound, placed, routed
    Bitstream merged;
    MergeReport report;
    PlaceResult placed;
    RouterStats routed;
    std::vector<std::string> warnings;
};

inline ScenarioBuild run_scenario(const Device &dev, const std::string &id, const ScenarioConfig &cfg)
{
    validate_scenario_config(cfg);
    ScenarioBuild out;
    out.id = id;
    out.cfg = cfg;

    OriginalToy orig = build_original_toy(dev, cfg);
    out.original = std::move(orig.netlist);
    out.original_bs = std::move(orig.bitstream);

    RevengResult rr = bitstream_to_netlist(dev, out.original_bs);
    out.recon = std::move(rr.netlist);
    out.warnings.insert(out.warnings.end(), rr.warnings.begin(), rr.warnings.end());
    out.occ = extract_occupancy(dev, out.recon);

    out.mod = build_scenario_mod(dev, id, out.original, out.recon, cfg);
    auto bw = bind_ports(dev, out.recon, out.mod);
    out.warnings.insert(out.warnings.end(), bw.begin(), bw.end());
    liberate_overrides(dev, out.recon, out.mod, out.occ);

    PortAnchors anchors = anchor_ports(dev, out.recon, out.mod);
    out.placed = place(dev, out.mod.netlist, out.occ, anchors);
    out.routed = route_all(dev, out.recon, out.mod, out.occ, cfg.route_seed);

    ModFeatures mf;
    mf.add = netlist_to_features(dev, out.mod.netlist);
    mf.clear = out.mod.override_branches;
    // a liberated pip the modification re-enables must not be cleared
    std::set<std::string> setf;
    for (const auto &[f, v] : mf.add.lines)
        if (v)
            setf.insert(f);
    mf.clear.erase(std::remove_if(mf.clear.begin(), mf.clear.end(),
                                  [&](const std::string &f) { return setf.count(f) != 0; }),
                   mf.clear.end());

    size_t override_pins = 0;
    for (const auto &[port, pins] : out.mod.bindings.overrides)
        override_pins += pins.size();
    out.report.extra = {
        {"Signals Tapped", std::to_string(out.mod.bindings.taps.size())},
        {"Net Pins Overridden", std::to_string(override_pins)},
        {"Cells Added", std::to_string(out.mod.netlist.cells.size())},
        {"Nets Routed", std::to_string(out.routed.net_pips.size())},
        {"Routed PIPs", std::to_string(out.routed.total_pips)},
        {"Longest Path Cost", std::to_string(out.routed.longest_path)},
        {"Router Restarts", std::to_string(out.routed.restarts)},
    };
    out.merged = merge_bitstreams(dev, out.original_bs, mf, &out.report);
    return out;
}

// --------------------------------------------------------------------------
// Cycle-accurate reference models. Each mirrors the gate-level next-state
// functions exactly; traces are compared value-for-value against the
// simulator.
// --------------------------------------------------------------------------

struct SocModel
{
    std::array<uint8_t, 16> rom{};
    uint8_t pc = 0, key = 0, m = 0, s = 0, c = 0, r = 0;

    explicit SocModel(const ScenarioConfig &cfg)
    {
        auto p = toy_program(cfg.key);
        std::copy(p.begin(), p.end(), rom.begin());
    }

    uint8_t fetch() const { return rom[pc & 15]; }
    bool done() const { return (r & 3) == 3; }

    // Advance one clock. `in` gates the message counter; ib_eff is the
    // instruction word as seen by the CPU; the force pointers model
    // overridden register D inputs.
    void step(int in, uint8_t ib_eff, const uint8_t *force_key = nullptr, const uint8_t *force_s = nullptr)
    {
        bool jmp = (ib_eff >> 4) == 0x8, skl = (ib_eff >> 4) == 0x1, skh = (ib_eff >> 4) == 0x2;
        bool dn = done();
        uint8_t rot = toy_round(s, key);

        uint8_t key_n = key;
        if (skl)
            key_n = uint8_t((key & 0xF0) | (ib_eff & 0x0F));
        if (skh)
            key_n = uint8_t((key & 0x0F) | uint8_t((ib_eff & 0x0F) << 4));
        if (force_key)
            key_n = *force_key;
        uint8_t s_n = dn ? m : rot;
        if (force_s)
            s_n = *force_s;

        c = dn ? rot : c;
        s = s_n;
        key = key_n;
        pc = jmp ? uint8_t(ib_eff & 15) : uint8_t((pc + 1) & 15);
        m = uint8_t(m + (in ? 1 : 0));
        r = uint8_t((r + 1) & 3);
    }
};

// per-cycle observables shared by all models
struct ModelTrace
{
    std::vector<uint8_t> c;   // output-pad byte per cycle (pre-edge)
    std::vector<uint8_t> tap; // cs1 only: debug-tap bit per cycle
};

inline ModelTrace model_original(const ScenarioConfig &cfg, const std::vector<uint8_t> &in, int cycles)
{
    SocModel soc(cfg);
    ModelTrace tr;
    for (int t = 0; t < cycles; t++) {
        tr.c.push_back(soc.c);
        soc.step(t < int(in.size()) ? in[size_t(t)] : 0, soc.fetch());
    }
    return tr;
}

inline ModelTrace model_cs1(const ScenarioConfig &cfg, const std::vector<uint8_t> &in, int cycles)
{
    SocModel soc(cfg);
    bool arm = false;
    uint8_t addr = 0;
    std::array<uint8_t, 16> mem{};
    ModelTrace tr;
    for (int t = 0; t < cycles; t++) {
        tr.c.push_back(soc.c);
        tr.tap.push_back(uint8_t(mem[addr & 15] & 1));
        bool full = (addr & 15) == (cfg.depth - 1);
        bool we = arm && !full;
        if (we)
            mem[addr & 15] = soc.key;
        bool dn = soc.done();
        addr = uint8_t((addr + (we ? 1 : 0)) & 15);
        arm = arm || dn;
        soc.step(t < int(in.size()) ? in[size_t(t)] : 0, soc.fetch());
    }
    return tr;
}

inline ModelTrace model_cs2(const ScenarioConfig &cfg, const std::vector<uint8_t> &in, int cycles)
{
    SocModel soc(cfg);
    bool trg = false;
    ModelTrace tr;
    for (int t = 0; t < cycles; t++) {
        tr.c.push_back(soc.c);
        bool cmp = soc.m == cfg.trigger;
        uint8_t cur_key = soc.key;
        soc.step(t < int(in.size()) ? in[size_t(t)] : 0, soc.fetch(), trg ? &cfg.trojan_key : nullptr,
                 cmp ? &cur_key : nullptr);
        trg = trg || cmp;
    }
    return tr;
}

inline ModelTrace model_cs3(const ScenarioConfig &cfg, const std::vector<uint8_t> &in, int cycles)
{
    SocModel soc(cfg);
    bool c0 = false, c1 = false;
    ModelTrace tr;
    for (int t = 0; t < cycles; t++) {
        tr.c.push_back(soc.c);
        uint8_t real = soc.fetch();
        bool det = real == 0x0F;
        uint8_t eff = c0 ? uint8_t(0x10 | (cfg.trojan_key & 0x0F))
                         : (c1 ? uint8_t(0x20 | (cfg.trojan_key >> 4)) : real);
        soc.step(t < int(in.size()) ? in[size_t(t)] : 0, eff);
        c1 = c0;
        c0 = det;
    }
    return tr;
}

inline ModelTrace model_cs4(const ScenarioConfig &cfg, const std::vector<uint8_t> &in, int cycles)
{
    SocModel soc(cfg);
    bool os = false;
    std::array<uint8_t, 4> shadow = {uint8_t(0x10 | (cfg.trojan_key & 0x0F)),
                                     uint8_t(0x20 | (cfg.trojan_key >> 4)), 0x80, 0x00};
    ModelTrace tr;
    for (int t = 0; t < cycles; t++) {
        tr.c.push_back(soc.c);
        uint8_t real = soc.fetch();
        uint8_t eff = os ? real : shadow[soc.pc & 3];
        bool set = (soc.pc & 3) == 2;
        soc.step(t < int(in.size()) ? in[size_t(t)] : 0, eff);
        os = os || set;
    }
    return tr;
}

inline ModelTrace model_scenario(const std::string &id, const ScenarioConfig &cfg, const std::vector<uint8_t> &in,
                                 int cycles)
{
    if (id == "original")
        return model_original(cfg, in, cycles);
    if (id == "cs1")
        return model_cs1(cfg, in, cycles);
    if (id == "cs2")
        return model_cs2(cfg, in, cycles);
    if (id == "cs3")
        return model_cs3(cfg, in, cycles);
    if (id == "cs4")
        return model_cs4(cfg, in, cycles);
    throw InvalidParams("unknown scenario '" + id + "'");
}

// --------------------------------------------------------------------------
// Trace plumbing shared by tests and the CLI
// --------------------------------------------------------------------------

// the message-counter gate bit per cycle, as seen by the input pad
inline std::vector<uint8_t> stimulus_input_bits(const Device &dev, const Stimulus &stim)
{
    std::vector<uint8_t> bits(size_t(stim.cycles), 0);
    auto it = stim.inputs.find(dev.bel_name(dev.bel(0, 0, "PAD0")));
    if (it != stim.inputs.end())
        for (int t = 0; t < stim.cycles && t < int(it->second.size()); t++)
            bits[size_t(t)] = it->second[size_t(t)] ? 1 : 0;
    return bits;
}

// reassemble the 8 output pads into one byte per cycle
inline std::vector<uint8_t> pad_byte_trace(const Device &dev, const Trace &tr)
{
    std::vector<uint8_t> out(size_t(tr.cycles), 0);
    for (int j = 0; j < 8; j++) {
        auto it = tr.pad_outputs.find(dev.bel_name(dev.bel(dev.width() - 1, j / 2, "PAD" + std::to_string(j % 2))));
        if (it == tr.pad_outputs.end())
            continue;
        for (int t = 0; t < tr.cycles && t < int(it->second.size()); t++)
            if (it->second[size_t(t)])
                out[size_t(t)] |= uint8_t(1u << j);
    }
    return out;
}

// cs1's debug-tap bit per cycle (the TAPOUT cell placed by the pipeline)
inline std::vector<uint8_t> tap_bit_trace(const Device &dev, const DesignNetlist &nl, const Trace &tr)
{
    for (const auto &c : nl.cells)
        if (c.kind == CellKind::TAPOUT && c.bel >= 0) {
            auto it = tr.pad_outputs.find(dev.bel_name(c.bel));
            if (it != tr.pad_outputs.end())
                return it->second;
        }
    return {};
}

} // namespace fabpatch

#endif
