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

// Placed-and-routed netlist representation plus its text format:
//
//   CELLS
//   <id> <kind> <bel|-> <confighex|->
//   NETS
//   <id> <driver> [<sink> ...]        driver: cell.pin | GND | VCC | $port
//   ROUTES
//   <net-id> (wire (wire ...)) [(...)]
//   BINDINGS                          (modification netlists only)
//   TAP <port> <net-id>
//   OVERRIDE <port> <cell>.<pin> [...]
//   END

#ifndef FABRICPATCH_NETLIST_HPP
#define FABRICPATCH_NETLIST_HPP

#include "fabricpatch/device.hpp"

#include <sstream>

namespace fabpatch {

enum class CellKind : uint8_t
{
    LUT4,
    FF,
    CARRY4,
    MUXF2,
    BRAM16,
    IOPAD_IN,
    IOPAD_OUT,
    TAPOUT
};

inline const char *cell_kind_name(CellKind k)
{
    switch (k) {
    case CellKind::LUT4:
        return "LUT4";
    case CellKind::FF:
        return "FF";
    case CellKind::CARRY4:
        return "CARRY4";
    case CellKind::MUXF2:
        return "MUXF2";
    case CellKind::BRAM16:
        return "BRAM16";
    case CellKind::IOPAD_IN:
        return "IOPAD_IN";
    case CellKind::IOPAD_OUT:
        return "IOPAD_OUT";
    case CellKind::TAPOUT:
        return "TAPOUT";
    }
    return "?";
}

inline std::optional<CellKind> cell_kind_from_name(const std::string &s)
{
    for (CellKind k : {CellKind::LUT4, CellKind::FF, CellKind::CARRY4, CellKind::MUXF2, CellKind::BRAM16,
                       CellKind::IOPAD_IN, CellKind::IOPAD_OUT, CellKind::TAPOUT})
        if (s == cell_kind_name(k))
            return k;
    return std::nullopt;
}

inline BelKind bel_kind_for_cell(CellKind k)
{
    switch (k) {
    case CellKind::LUT4:
        return BelKind::LUT4;
    case CellKind::FF:
        return BelKind::FF;
    case CellKind::CARRY4:
        return BelKind::CARRY4;
    case CellKind::MUXF2:
        return BelKind::MUXF2;
    case CellKind::BRAM16:
        return BelKind::BRAM16;
    case CellKind::IOPAD_IN:
    case CellKind::IOPAD_OUT:
        return BelKind::IOPAD;
    case CellKind::TAPOUT:
        return BelKind::TAPOUT;
    }
    return BelKind::LUT4;
}

inline size_t cell_config_bytes(CellKind k)
{
    if (k == CellKind::LUT4)
        return 2;
    if (k == CellKind::BRAM16)
        return 16;
    return 0;
}

inline std::vector<std::string> cell_input_pins(CellKind k)
{
    switch (k) {
    case CellKind::LUT4:
        return {"I0", "I1", "I2", "I3"};
    case CellKind::FF:
        return {"D"};
    case CellKind::CARRY4:
        return {"CI", "A0", "A1", "A2", "A3", "B0", "B1", "B2", "B3"};
    case CellKind::MUXF2:
        return {"I0", "I1", "S"};
    case CellKind::BRAM16:
        return {"A0", "A1", "A2", "A3", "D0", "D1", "D2", "D3", "D4", "D5", "D6", "D7", "WE"};
    case CellKind::IOPAD_OUT:
    case CellKind::TAPOUT:
        return {"I"};
    case CellKind::IOPAD_IN:
        return {};
    }
    return {};
}

inline std::vector<std::string> cell_output_pins(CellKind k)
{
    switch (k) {
    case CellKind::LUT4:
        return {"O"};
    case CellKind::FF:
        return {"Q"};
    case CellKind::CARRY4:
        return {"S0", "S1", "S2", "S3", "CO"};
    case CellKind::MUXF2:
        return {"O"};
    case CellKind::BRAM16:
        return {"Q0", "Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7"};
    case CellKind::IOPAD_IN:
        return {"O"};
    case CellKind::IOPAD_OUT:
    case CellKind::TAPOUT:
        return {};
    }
    return {};
}

struct Cell
{
    std::string id;
    CellKind kind;
    BelId bel = -1; // -1: unplaced
    std::vector<uint8_t> config;

    uint16_t lut_init() const { return uint16_t(config[0] | (config[1] << 8)); }
};

struct PinRef
{
    std::string cell;
    std::string pin;

    std::string str() const { return cell + "." + pin; }
    bool operator==(const PinRef &o) const { return cell == o.cell && pin == o.pin; }
    bool operator<(const PinRef &o) const { return cell != o.cell ? cell < o.cell : pin < o.pin; }
};

enum class DriverKind : uint8_t
{
    CellPin,
    Const0,
    Const1,
    Port
};

struct Driver
{
    DriverKind kind = DriverKind::Const0;
    PinRef pin;       // CellPin
    std::string port; // Port

    static Driver of_pin(std::string cell, std::string pin) { return {DriverKind::CellPin, {cell, pin}, {}}; }
    static Driver of_const(bool v) { return {v ? DriverKind::Const1 : DriverKind::Const0, {}, {}}; }
    static Driver of_port(std::string port) { return {DriverKind::Port, {}, std::move(port)}; }
};

struct SinkRef
{
    bool is_port = false;
    PinRef pin;
    std::string port;

    static SinkRef of_pin(std::string cell, std::string p) { return {false, {std::move(cell), std::move(p)}, {}}; }
    static SinkRef of_port(std::string p) { return {true, {}, std::move(p)}; }
    std::string str() const { return is_port ? "$" + port : pin.str(); }
};

struct RouteNode
{
    WireId wire = kNoWire;
    std::vector<RouteNode> children;
};

using RouteForest = std::vector<RouteNode>;

struct Net
{
    std::string id;
    Driver driver;
    std::vector<SinkRef> sinks;
    RouteForest route;
};

struct DesignNetlist
{
    std::vector<Cell> cells;
    std::vector<Net> nets;
    std::set<std::string> clock_users; // cell ids of clocked FF/BRAM cells

    std::unordered_map<std::string, size_t> cell_index;
    std::unordered_map<std::string, size_t> net_index;

    Cell &add_cell(Cell c)
    {
        if (cell_index.count(c.id))
            throw SyntaxError("duplicate cell id " + c.id);
        cell_index.emplace(c.id, cells.size());
        cells.push_back(std::move(c));
        return cells.back();
    }
    Net &add_net(Net n)
    {
        if (net_index.count(n.id))
            throw SyntaxError("duplicate net id " + n.id);
        net_index.emplace(n.id, nets.size());
        nets.push_back(std::move(n));
        return nets.back();
    }

    const Cell *find_cell(const std::string &id) const
    {
        auto it = cell_index.find(id);
        return it == cell_index.end() ? nullptr : &cells[it->second];
    }
    Cell *find_cell(const std::string &id)
    {
        auto it = cell_index.find(id);
        return it == cell_index.end() ? nullptr : &cells[it->second];
    }
    const Net *find_net(const std::string &id) const
    {
        auto it = net_index.find(id);
        return it == net_index.end() ? nullptr : &nets[it->second];
    }
    Net *find_net(const std::string &id)
    {
        auto it = net_index.find(id);
        return it == net_index.end() ? nullptr : &nets[it->second];
    }

    // pin -> driving net id, across all nets (driver and sink pins)
    std::map<PinRef, std::string> sink_pin_to_net() const
    {
        std::map<PinRef, std::string> m;
        for (const auto &n : nets)
            for (const auto &s : n.sinks)
                if (!s.is_port)
                    m.emplace(s.pin, n.id);
        return m;
    }

    std::map<PinRef, std::string> driver_pin_to_net() const
    {
        std::map<PinRef, std::string> m;
        for (const auto &n : nets)
            if (n.driver.kind == DriverKind::CellPin)
                m.emplace(n.driver.pin, n.id);
        return m;
    }
};

// Structural well-formedness independent of a device: drivers exist and are
// outputs, sinks exist and are inputs, each input pin is driven at most once.
inline void validate_netlist(const DesignNetlist &nl)
{
    std::set<PinRef> driven_inputs;
    std::set<PinRef> used_outputs;
    for (const auto &net : nl.nets) {
        if (net.driver.kind == DriverKind::CellPin) {
            const Cell *c = nl.find_cell(net.driver.pin.cell);
            if (!c)
                throw UnknownNet("net " + net.id + " driven by unknown cell " + net.driver.pin.cell);
            auto outs = cell_output_pins(c->kind);
            if (std::find(outs.begin(), outs.end(), net.driver.pin.pin) == outs.end())
                throw UnknownPin("net " + net.id + " driven by non-output pin " + net.driver.pin.str());
            if (!used_outputs.insert(net.driver.pin).second)
                throw MultipleDrivers("output pin " + net.driver.pin.str() + " drives more than one net");
        }
        for (const auto &s : net.sinks) {
            if (s.is_port)
                continue;
            const Cell *c = nl.find_cell(s.pin.cell);
            if (!c)
                throw UnknownNet("net " + net.id + " sinks unknown cell " + s.pin.cell);
            auto ins = cell_input_pins(c->kind);
            if (std::find(ins.begin(), ins.end(), s.pin.pin) == ins.end())
                throw UnknownPin("net " + net.id + " sinks non-input pin " + s.pin.str());
            if (!driven_inputs.insert(s.pin).second)
                throw MultipleDrivers("input pin " + s.pin.str() + " is driven by more than one net");
        }
    }
    for (const auto &c : nl.cells) {
        size_t want = cell_config_bytes(c.kind);
        if (c.config.size() != want)
            throw SyntaxError("cell " + c.id + ": config must be " + std::to_string(want) + " bytes");
    }
}

// --------------------------------------------------------------------------
// Text format
// --------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_ws(const std::string &line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

inline std::string config_hex(const std::vector<uint8_t> &config)
{
    if (config.empty())
        return "-";
    static const char *digits = "0123456789ABCDEF";
    std::string s;
    for (auto it = config.rbegin(); it != config.rend(); ++it) {
        s.push_back(digits[*it >> 4]);
        s.push_back(digits[*it & 0xf]);
    }
    return s;
}

inline std::vector<uint8_t> parse_config_hex(const std::string &s, size_t nbytes, const std::string &ctx)
{
    std::vector<uint8_t> out(nbytes, 0);
    if (s == "-") {
        if (nbytes != 0)
            throw SyntaxError(ctx + ": expected " + std::to_string(nbytes) + " config bytes");
        return out;
    }
    if (s.size() != nbytes * 2)
        throw SyntaxError(ctx + ": config '" + s + "' must be " + std::to_string(nbytes * 2) + " hex digits");
    for (size_t i = 0; i < s.size(); i++) {
        char c = s[i];
        int v = (c >= '0' && c <= '9') ? c - '0'
                : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                         : -1;
        if (v < 0)
            throw SyntaxError(ctx + ": bad hex digit '" + std::string(1, c) + "'");
        size_t byte = nbytes - 1 - i / 2;
        out[byte] = uint8_t(out[byte] << 4 | v);
    }
    return out;
}

inline void emit_route_node(const Device &dev, const RouteNode &n, std::ostream &out)
{
    out << "(" << dev.wire_name(n.wire);
    for (const auto &c : n.children) {
        out << " ";
        emit_route_node(dev, c, out);
    }
    out << ")";
}

inline RouteNode parse_route_node(const Device &dev, const std::string &s, size_t &pos, const std::string &ctx)
{
    auto skip = [&]() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos]))
            pos++;
    };
    skip();
    if (pos >= s.size() || s[pos] != '(')
        throw SyntaxError(ctx + ": expected '(' in route tree");
    pos++;
    skip();
    size_t start = pos;
    while (pos < s.size() && s[pos] != '(' && s[pos] != ')' && !std::isspace((unsigned char)s[pos]))
        pos++;
    std::string wname = s.substr(start, pos - start);
    RouteNode node;
    node.wire = dev.wire_by_name(wname);
    if (node.wire == kNoWire)
        throw SyntaxError(ctx + ": unknown wire '" + wname + "'");
    skip();
    while (pos < s.size() && s[pos] == '(') {
        node.children.push_back(parse_route_node(dev, s, pos, ctx));
        skip();
    }
    if (pos >= s.size() || s[pos] != ')')
        throw SyntaxError(ctx + ": expected ')' in route tree");
    pos++;
    return node;
}

} // namespace detail

struct NetlistBindings
{
    std::map<std::string, std::string> taps;              // port -> original net id
    std::map<std::string, std::vector<PinRef>> overrides; // port -> original sink pins
};

inline std::string write_netlist(const Device &dev, const DesignNetlist &nl, const NetlistBindings *bind = nullptr)
{
    std::ostringstream out;
    out << "CELLS\n";
    for (const auto &c : nl.cells) {
        out << c.id << " " << cell_kind_name(c.kind) << " " << (c.bel < 0 ? std::string("-") : dev.bel_name(c.bel))
            << " " << detail::config_hex(c.config) << "\n";
    }
    out << "NETS\n";
    for (const auto &n : nl.nets) {
        out << n.id << " ";
        switch (n.driver.kind) {
        case DriverKind::CellPin:
            out << n.driver.pin.str();
            break;
        case DriverKind::Const0:
            out << "GND";
            break;
        case DriverKind::Const1:
            out << "VCC";
            break;
        case DriverKind::Port:
            out << "$" << n.driver.port;
            break;
        }
        for (const auto &s : n.sinks)
            out << " " << s.str();
        out << "\n";
    }
    out << "ROUTES\n";
    for (const auto &n : nl.nets) {
        if (n.route.empty())
            continue;
        out << n.id;
        for (const auto &t : n.route) {
            out << " ";
            detail::emit_route_node(dev, t, out);
        }
        out << "\n";
    }
    if (!nl.clock_users.empty()) {
        out << "CLOCK";
        for (const auto &c : nl.clock_users)
            out << " " << c;
        out << "\n";
    }
    if (bind) {
        out << "BINDINGS\n";
        for (const auto &[port, net] : bind->taps)
            out << "TAP " << port << " " << net << "\n";
        for (const auto &[port, pins] : bind->overrides) {
            out << "OVERRIDE " << port;
            for (const auto &p : pins)
                out << " " << p.str();
            out << "\n";
        }
    }
    out << "END\n";
    return out.str();
}

inline DesignNetlist read_netlist(const Device &dev, const std::string &text, NetlistBindings *bind = nullptr)
{
    DesignNetlist nl;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    enum class Section
    {
        None,
        Cells,
        Nets,
        Routes,
        Bindings
    } section = Section::None;

    auto parse_sink = [&](const std::string &tok, const std::string &ctx) -> SinkRef {
        if (!tok.empty() && tok[0] == '$')
            return SinkRef::of_port(tok.substr(1));
        auto dot = tok.rfind('.');
        if (dot == std::string::npos)
            throw SyntaxError(ctx + ": expected cell.pin, got '" + tok + "'");
        return SinkRef::of_pin(tok.substr(0, dot), tok.substr(dot + 1));
    };

    while (std::getline(in, raw)) {
        lineno++;
        auto hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        auto toks = detail::split_ws(line);
        if (toks.empty())
            continue;
        std::string ctx = "line " + std::to_string(lineno);

        if (toks[0] == "CELLS") {
            section = Section::Cells;
            continue;
        }
        if (toks[0] == "NETS") {
            section = Section::Nets;
            continue;
        }
        if (toks[0] == "ROUTES") {
            section = Section::Routes;
            continue;
        }
        if (toks[0] == "BINDINGS") {
            section = Section::Bindings;
            continue;
        }
        if (toks[0] == "END")
            break;
        if (toks[0] == "CLOCK") {
            for (size_t i = 1; i < toks.size(); i++)
                nl.clock_users.insert(toks[i]);
            continue;
        }

        switch (section) {
        case Section::Cells: {
            if (toks.size() != 4)
                throw SyntaxError(ctx + ": cell line needs 'id kind bel config'");
            Cell c;
            c.id = toks[0];
            if (c.id.find('.') != std::string::npos || c.id[0] == '$')
                throw SyntaxError(ctx + ": cell id '" + c.id + "' may not contain '.' or start with '$'");
            auto kind = cell_kind_from_name(toks[1]);
            if (!kind)
                throw UnsupportedCellKind(toks[1] + " (" + ctx + ")");
            c.kind = *kind;
            if (toks[2] != "-") {
                c.bel = dev.bel_by_name(toks[2]);
                if (c.bel < 0)
                    throw SyntaxError(ctx + ": unknown BEL '" + toks[2] + "'");
                if (dev.bels[c.bel].kind != bel_kind_for_cell(c.kind))
                    throw SyntaxError(ctx + ": cell kind " + toks[1] + " cannot sit on BEL " + toks[2]);
            }
            c.config = detail::parse_config_hex(toks[3], cell_config_bytes(c.kind), ctx);
            nl.add_cell(std::move(c));
            break;
        }
        case Section::Nets: {
            if (toks.size() < 2)
                throw SyntaxError(ctx + ": net line needs 'id driver [sinks...]'");
            Net n;
            n.id = toks[0];
            const std::string &d = toks[1];
            if (d == "GND")
                n.driver = Driver::of_const(false);
            else if (d == "VCC")
                n.driver = Driver::of_const(true);
            else if (!d.empty() && d[0] == '$')
                n.driver = Driver::of_port(d.substr(1));
            else {
                auto dot = d.rfind('.');
                if (dot == std::string::npos)
                    throw SyntaxError(ctx + ": bad driver '" + d + "'");
                n.driver = Driver::of_pin(d.substr(0, dot), d.substr(dot + 1));
            }
            for (size_t i = 2; i < toks.size(); i++)
                n.sinks.push_back(parse_sink(toks[i], ctx));
            nl.add_net(std::move(n));
            break;
        }
        case Section::Routes: {
            Net *n = nl.find_net(toks[0]);
            if (!n)
                throw UnknownNet(toks[0] + " in ROUTES (" + ctx + ")");
            std::string rest = line.substr(line.find(toks[0]) + toks[0].size());
            size_t pos = 0;
            while (true) {
                while (pos < rest.size() && std::isspace((unsigned char)rest[pos]))
                    pos++;
                if (pos >= rest.size())
                    break;
                n->route.push_back(detail::parse_route_node(dev, rest, pos, ctx));
            }
            break;
        }
        case Section::Bindings: {
            if (!bind)
                throw SyntaxError(ctx + ": BINDINGS section not expected here");
            if (toks[0] == "TAP") {
                if (toks.size() != 3)
                    throw SyntaxError(ctx + ": TAP needs 'TAP port net'");
                bind->taps[toks[1]] = toks[2];
            } else if (toks[0] == "OVERRIDE") {
                if (toks.size() < 3)
                    throw SyntaxError(ctx + ": OVERRIDE needs 'OVERRIDE port pin...'");
                auto &pins = bind->overrides[toks[1]];
                for (size_t i = 2; i < toks.size(); i++)
                    pins.push_back(parse_sink(toks[i], ctx).pin);
            } else {
                throw SyntaxError(ctx + ": unknown binding '" + toks[0] + "'");
            }
            break;
        }
        case Section::None:
            throw SyntaxError(ctx + ": content before a section header");
        }
    }
    validate_netlist(nl);
    return nl;
}

// --------------------------------------------------------------------------
// Structural comparison. Cell ids are renaming artifacts; identity is placed
// geometry: cells keyed by BEL, nets keyed by driver, routes as edge sets.
// --------------------------------------------------------------------------

namespace detail {

inline void route_edges(const RouteNode &n, std::set<std::pair<WireId, WireId>> &edges, std::set<WireId> &wires)
{
    wires.insert(n.wire);
    for (const auto &c : n.children) {
        edges.emplace(n.wire, c.wire);
        route_edges(c, edges, wires);
    }
}

struct CanonNet
{
    std::set<std::string> sinks;
    std::set<std::pair<WireId, WireId>> edges;
    std::set<WireId> wires;

    bool operator==(const CanonNet &o) const { return sinks == o.sinks && edges == o.edges && wires == o.wires; }
};

} // namespace detail

inline std::set<WireId> route_wires(const RouteForest &route)
{
    std::set<std::pair<WireId, WireId>> edges;
    std::set<WireId> wires;
    for (const auto &t : route)
        detail::route_edges(t, edges, wires);
    return wires;
}

inline bool structurally_equal(const Device &dev, const DesignNetlist &a, const DesignNetlist &b,
                               std::string *why = nullptr)
{
    auto fail = [&](const std::string &msg) {
        if (why)
            *why = msg;
        return false;
    };

    auto pin_key = [&](const DesignNetlist &nl, const PinRef &p) -> std::string {
        const Cell *c = nl.find_cell(p.cell);
        if (!c || c->bel < 0)
            return "?" + p.str();
        return dev.bel_name(c->bel) + "." + p.pin;
    };

    auto canon_cells = [&](const DesignNetlist &nl) {
        std::map<BelId, std::pair<CellKind, std::vector<uint8_t>>> m;
        for (const auto &c : nl.cells)
            m[c.bel] = {c.kind, c.config};
        return m;
    };
    if (canon_cells(a) != canon_cells(b))
        return fail("cell sets differ");

    auto canon_clock = [&](const DesignNetlist &nl) {
        std::set<BelId> s;
        for (const auto &id : nl.clock_users) {
            const Cell *c = nl.find_cell(id);
            s.insert(c ? c->bel : -1);
        }
        return s;
    };
    if (canon_clock(a) != canon_clock(b))
        return fail("clock user sets differ");

    auto canon_nets = [&](const DesignNetlist &nl) {
        std::map<std::string, detail::CanonNet> m;
        for (const auto &n : nl.nets) {
            std::string dkey;
            switch (n.driver.kind) {
            case DriverKind::CellPin:
                dkey = pin_key(nl, n.driver.pin);
                break;
            case DriverKind::Const0:
                dkey = "GND:" + n.id; // const nets keyed per net (see below)
                break;
            case DriverKind::Const1:
                dkey = "VCC:" + n.id;
                break;
            case DriverKind::Port:
                dkey = "$" + n.driver.port;
                break;
            }
            detail::CanonNet cn;
            for (const auto &s : n.sinks)
                cn.sinks.insert(s.is_port ? "$" + s.port : pin_key(nl, s.pin));
            for (const auto &t : n.route)
                detail::route_edges(t, cn.edges, cn.wires);
            // close over always-on stubs so a route that lists the implied
            // stub wire and one that omits it compare equal
            for (auto [src, dst] : std::vector<std::pair<WireId, WireId>>(cn.edges.begin(), cn.edges.end()))
                for (const auto &u : dev.pips_from(src))
                    if (dev.pip_dst(u) == dst && !u.reverse && dev.pips[u.pip].secondary != kNoWire) {
                        cn.edges.emplace(src, dev.pips[u.pip].secondary);
                        cn.wires.insert(dev.pips[u.pip].secondary);
                    }
            // const nets have no unique driver pin; key them by sink set
            if (dkey.rfind("GND:", 0) == 0 || dkey.rfind("VCC:", 0) == 0) {
                std::string k = dkey.substr(0, 3) + "=";
                for (auto &s : cn.sinks)
                    k += s + ",";
                dkey = k;
            }
            m[dkey] = std::move(cn);
        }
        return m;
    };
    auto na = canon_nets(a), nb = canon_nets(b);
    if (na != nb) {
        if (why) {
            for (auto &[k, v] : na)
                if (!nb.count(k) || !(nb[k] == v)) {
                    *why = "net " + k + " differs or is missing";
                    return false;
                }
            for (auto &[k, v] : nb)
                if (!na.count(k)) {
                    *why = "net " + k + " only in second netlist";
                    return false;
                }
        }
        return fail("net sets differ");
    }
    return true;
}

} // namespace fabpatch

#endif
