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

// MiniFabric device model.
//
// The fabric is an island-style grid of tiles. Columns 0 and width-1 hold IO
// tiles (pads plus a TAPOUT readout pad), designated interior columns hold
// BRAM tiles (one BRAM16 site per four vertically stacked tiles), all other
// columns hold CLBs (4x LUT4, 4x FF, one CARRY4, two MUXF2).
//
// Each tile owns a switchbox. Directional channel wires are owned by the
// tile that drives them: wire "E3" of tile (x,y) runs east and is an input
// of tile (x+1,y). Inside pip feature names a source token "E3" therefore
// means "the wire entering from the east", while a destination token "E3"
// means "our own eastbound output" -- the two never occur in the same
// position, so names stay unambiguous.
//
// Every configurable feature of a tile lives inside the tile's fixed 256-bit
// region of its column frame. The per-feature bit offsets are shuffled by a
// seeded permutation of the feature order so database lookups are exercised
// non-trivially while remaining reproducible.

#ifndef FABRICPATCH_DEVICE_HPP
#define FABRICPATCH_DEVICE_HPP

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fabricpatch/base.hpp"

namespace fabpatch {

struct DeviceParams
{
    int width = 0;
    int height = 0;
    int wires_per_side = 8;
    int long_lines = 4;
    std::set<int> bram_columns;
    uint64_t seed = 0;
};

enum class TileType : uint8_t
{
    IO,
    CLB,
    BRAM
};

enum class BelKind : uint8_t
{
    LUT4,
    FF,
    CARRY4,
    MUXF2,
    BRAM16,
    IOPAD,
    TAPOUT
};

inline const char *bel_kind_name(BelKind k)
{
    switch (k) {
    case BelKind::LUT4:
        return "LUT4";
    case BelKind::FF:
        return "FF";
    case BelKind::CARRY4:
        return "CARRY4";
    case BelKind::MUXF2:
        return "MUXF2";
    case BelKind::BRAM16:
        return "BRAM16";
    case BelKind::IOPAD:
        return "IOPAD";
    case BelKind::TAPOUT:
        return "TAPOUT";
    }
    return "?";
}

using WireId = int32_t;
using PipId = int32_t;
using BelId = int32_t;

constexpr WireId kNoWire = -1;

struct WireData
{
    int16_t x, y;
    std::string local;
};

struct PipData
{
    WireId from = kNoWire;
    WireId to = kNoWire;
    bool bidirectional = false;
    int cost = 1;
    std::string feature; // full feature name
    WireId secondary = kNoWire; // always-on stub driven whenever the pip is active
};

struct BelData
{
    int16_t x, y;
    std::string name; // "LUT0", "FF3", "CARRY4", "MUXF2_1", "BRAM", "PAD0", "TAP0"
    BelKind kind;
};

struct FeatureInfo
{
    uint32_t width;
    uint32_t frame;
    uint32_t offset; // bit offset within the frame
};

// Bits occupied by one tile region.
constexpr uint32_t kTileRegionBits = 256;

// Directed use of a pip: a bidirectional pip has two directions.
struct PipUse
{
    PipId pip;
    bool reverse; // only meaningful for bidirectional pips

    bool operator<(const PipUse &o) const { return pip != o.pip ? pip < o.pip : reverse < o.reverse; }
    bool operator==(const PipUse &o) const { return pip == o.pip && reverse == o.reverse; }
};

// Resources consumed by a design; the complement is what a modification may
// legally use. Derived from a DesignNetlist, see reveng.hpp.
struct OccupancyMap
{
    uint64_t device_digest = 0;
    std::set<BelId> used_bels;
    std::set<WireId> used_wires;
    std::set<PipUse> used_pips;
    std::set<std::pair<int, int>> clock_tiles;

    bool pip_blocked(const PipData &pd, PipId pip) const
    {
        if (used_pips.count(PipUse{pip, false}))
            return true;
        if (pd.bidirectional && used_pips.count(PipUse{pip, true}))
            return true;
        return false;
    }
};

class Device
{
  public:
    DeviceParams params;

    std::vector<WireData> wires;
    std::vector<PipData> pips;
    std::vector<BelData> bels;

    // feature name -> db entry, plus a name-sorted order for serialization
    std::unordered_map<std::string, FeatureInfo> featdb;

    uint64_t digest = 0;

    int width() const { return params.width; }
    int height() const { return params.height; }
    uint32_t frame_bits() const { return uint32_t(params.height) * kTileRegionBits; }
    uint64_t total_bits() const { return uint64_t(params.width) * frame_bits(); }

    bool in_grid(int x, int y) const { return x >= 0 && x < params.width && y >= 0 && y < params.height; }

    TileType tile_type(int x, int y) const
    {
        if (x == 0 || x == params.width - 1)
            return TileType::IO;
        if (params.bram_columns.count(x))
            return TileType::BRAM;
        return TileType::CLB;
    }

    bool is_bram_anchor(int x, int y) const { return tile_type(x, y) == TileType::BRAM && y % 4 == 0; }

    static std::string tile_name(int x, int y) { return "TILE_X" + std::to_string(x) + "Y" + std::to_string(y); }

    WireId wire(int x, int y, const std::string &local) const
    {
        if (!in_grid(x, y))
            return kNoWire;
        auto &m = wire_by_tile_[size_t(y) * params.width + x];
        auto it = m.find(local);
        return it == m.end() ? kNoWire : it->second;
    }

    std::string wire_name(WireId w) const
    {
        const auto &wd = wires[w];
        return tile_name(wd.x, wd.y) + "/" + wd.local;
    }

    WireId wire_by_name(const std::string &name) const
    {
        auto slash = name.find('/');
        if (slash == std::string::npos)
            return kNoWire;
        int x, y;
        if (!parse_tile(name.substr(0, slash), x, y))
            return kNoWire;
        return wire(x, y, name.substr(slash + 1));
    }

    static bool parse_tile(const std::string &t, int &x, int &y)
    {
        if (t.rfind("TILE_X", 0) != 0)
            return false;
        auto ypos = t.find('Y', 6);
        if (ypos == std::string::npos)
            return false;
        try {
            size_t used = 0;
            x = std::stoi(t.substr(6, ypos - 6), &used);
            y = std::stoi(t.substr(ypos + 1), &used);
            if (ypos + 1 + used != t.size())
                return false;
        } catch (...) {
            return false;
        }
        return true;
    }

    const std::vector<BelId> &tile_bels(int x, int y) const { return bels_by_tile_[size_t(y) * params.width + x]; }

    BelId bel(int x, int y, const std::string &name) const
    {
        if (!in_grid(x, y))
            return -1;
        for (BelId b : tile_bels(x, y))
            if (bels[b].name == name)
                return b;
        return -1;
    }

    std::string bel_name(BelId b) const
    {
        const auto &bd = bels[b];
        return tile_name(bd.x, bd.y) + "." + bd.name;
    }

    BelId bel_by_name(const std::string &name) const
    {
        auto dot = name.find('.');
        if (dot == std::string::npos)
            return -1;
        int x, y;
        if (!parse_tile(name.substr(0, dot), x, y))
            return -1;
        return bel(x, y, name.substr(dot + 1));
    }

    const FeatureInfo *find_feature(const std::string &name) const
    {
        auto it = featdb.find(name);
        return it == featdb.end() ? nullptr : &it->second;
    }

    PipId pip_by_feature(const std::string &feature) const
    {
        auto it = pip_by_feature_.find(feature);
        return it == pip_by_feature_.end() ? -1 : it->second;
    }

    // Directed routing edges out of / into a wire. Each entry is a pip use.
    const std::vector<PipUse> &pips_from(WireId w) const
    {
        static const std::vector<PipUse> empty;
        auto it = pips_from_.find(w);
        return it == pips_from_.end() ? empty : it->second;
    }
    const std::vector<PipUse> &pips_into(WireId w) const
    {
        static const std::vector<PipUse> empty;
        auto it = pips_into_.find(w);
        return it == pips_into_.end() ? empty : it->second;
    }

    WireId pip_src(const PipUse &u) const { return u.reverse ? pips[u.pip].to : pips[u.pip].from; }
    WireId pip_dst(const PipUse &u) const { return u.reverse ? pips[u.pip].from : pips[u.pip].to; }

    // -- construction hooks (used by build_device) --------------------------
    std::vector<std::unordered_map<std::string, WireId>> wire_by_tile_;
    std::vector<std::vector<BelId>> bels_by_tile_;
    std::unordered_map<std::string, PipId> pip_by_feature_;
    std::unordered_map<WireId, std::vector<PipUse>> pips_from_;
    std::unordered_map<WireId, std::vector<PipUse>> pips_into_;
};

namespace detail {

// Sides are indexed N=0 E=1 S=2 W=3; north is +y.
inline const char kSideLetter[4] = {'N', 'E', 'S', 'W'};
inline const int kSideDx[4] = {0, 1, 0, -1};
inline const int kSideDy[4] = {1, 0, -1, 0};

struct DeviceBuilder
{
    Device &dev;
    const DeviceParams &p;

    explicit DeviceBuilder(Device &d) : dev(d), p(d.params) {}

    WireId add_wire(int x, int y, const std::string &local)
    {
        WireId id = WireId(dev.wires.size());
        dev.wires.push_back(WireData{int16_t(x), int16_t(y), local});
        dev.wire_by_tile_[size_t(y) * p.width + x].emplace(local, id);
        return id;
    }

    BelId add_bel(int x, int y, const std::string &name, BelKind kind)
    {
        BelId id = BelId(dev.bels.size());
        dev.bels.push_back(BelData{int16_t(x), int16_t(y), name, kind});
        dev.bels_by_tile_[size_t(y) * p.width + x].push_back(id);
        return id;
    }

    // features of the tile currently being built, in creation order
    std::vector<std::pair<std::string, uint32_t>> tile_features;

    void add_config_feature(int x, int y, const std::string &site_and_name, uint32_t width)
    {
        tile_features.emplace_back(Device::tile_name(x, y) + "." + site_and_name, width);
    }

    void add_pip(int x, int y, WireId from, WireId to, const std::string &feat_local, bool bidir, int cost,
                 WireId secondary = kNoWire)
    {
        std::string feature = Device::tile_name(x, y) + "." + feat_local;
        if (dev.pip_by_feature_.count(feature))
            return; // duplicate source selection collapsed
        PipId id = PipId(dev.pips.size());
        dev.pips.push_back(PipData{from, to, bidir, cost, feature, secondary});
        dev.pip_by_feature_.emplace(feature, id);
        tile_features.emplace_back(feature, 1);
        dev.pips_from_[from].push_back(PipUse{id, false});
        dev.pips_into_[to].push_back(PipUse{id, false});
        if (bidir) {
            dev.pips_from_[to].push_back(PipUse{id, true});
            dev.pips_into_[from].push_back(PipUse{id, true});
        }
    }

    // Wire entering tile (x,y) from the given side, i.e. the neighbour's
    // outbound wire pointing back at us.
    WireId dir_in(int x, int y, int side, int i) const
    {
        int nx = x + kSideDx[side], ny = y + kSideDy[side];
        static const char *back[4] = {"S", "W", "N", "E"};
        return dev.wire(nx, ny, back[side] + std::to_string(i));
    }

    // Deterministic fallback across sides so edge tiles keep full pip sets.
    std::pair<WireId, std::string> pick_dir_in(int x, int y, int side, int i) const
    {
        // fallback prefers the opposite side so edge tiles keep connections
        // across rows/columns instead of degenerating into same-row chains
        static const int order[4] = {0, 2, 1, 3};
        for (int t = 0; t < 4; t++) {
            int s = (side + order[t]) % 4;
            WireId w = dir_in(x, y, s, i);
            if (w != kNoWire)
                return {w, std::string(1, kSideLetter[s]) + std::to_string(i)};
        }
        return {kNoWire, ""};
    }

    void build_tile(int x, int y)
    {
        tile_features.clear();
        TileType tt = dev.tile_type(x, y);
        int K = p.wires_per_side;
        int L = p.long_lines;
        std::string tn = Device::tile_name(x, y);

        // common wires
        add_wire(x, y, "GND");
        add_wire(x, y, "VCC");
        add_wire(x, y, "CLK");
        for (int i = 0; i < L; i++) {
            add_wire(x, y, "RL" + std::to_string(i));
            add_wire(x, y, "CL" + std::to_string(i));
        }
        if (x == 0)
            for (int i = 0; i < L; i++)
                add_wire(x, y, "HL" + std::to_string(i));
        if (y == 0)
            for (int i = 0; i < L; i++)
                add_wire(x, y, "VL" + std::to_string(i));

        for (int s = 0; s < 4; s++) {
            if (!dev.in_grid(x + kSideDx[s], y + kSideDy[s]))
                continue;
            for (int i = 0; i < K; i++)
                add_wire(x, y, std::string(1, kSideLetter[s]) + std::to_string(i));
        }

        switch (tt) {
        case TileType::CLB:
            for (int l = 0; l < 4; l++) {
                for (int j = 0; j < 4; j++)
                    add_wire(x, y, "L" + std::to_string(l) + "I" + std::to_string(j));
                add_wire(x, y, "L" + std::to_string(l) + "O");
                add_wire(x, y, "FF" + std::to_string(l) + "D");
                add_wire(x, y, "FF" + std::to_string(l) + "Q");
                add_wire(x, y, "CYB" + std::to_string(l));
                add_wire(x, y, "CYS" + std::to_string(l));
            }
            add_wire(x, y, "COUT");
            for (int f = 0; f < 2; f++) {
                add_wire(x, y, "MX" + std::to_string(f) + "S");
                add_wire(x, y, "MX" + std::to_string(f) + "O");
            }
            for (int l = 0; l < 4; l++) {
                add_bel(x, y, "LUT" + std::to_string(l), BelKind::LUT4);
                add_bel(x, y, "FF" + std::to_string(l), BelKind::FF);
            }
            add_bel(x, y, "CARRY4", BelKind::CARRY4);
            add_bel(x, y, "MUXF2_0", BelKind::MUXF2);
            add_bel(x, y, "MUXF2_1", BelKind::MUXF2);
            break;
        case TileType::IO:
            for (int pI = 0; pI < 2; pI++) {
                add_wire(x, y, "PAD" + std::to_string(pI) + "I");
                add_wire(x, y, "PAD" + std::to_string(pI) + "O");
                add_bel(x, y, "PAD" + std::to_string(pI), BelKind::IOPAD);
            }
            add_wire(x, y, "TAP0I");
            add_bel(x, y, "TAP0", BelKind::TAPOUT);
            break;
        case TileType::BRAM:
            if (dev.is_bram_anchor(x, y)) {
                for (int j = 0; j < 4; j++)
                    add_wire(x, y, "BA" + std::to_string(j));
                for (int j = 0; j < 8; j++) {
                    add_wire(x, y, "BD" + std::to_string(j));
                    add_wire(x, y, "BQ" + std::to_string(j));
                }
                add_wire(x, y, "BWE");
                add_bel(x, y, "BRAM", BelKind::BRAM16);
            }
            break;
        }
    }

    std::vector<std::pair<WireId, std::string>> belout_pool(int x, int y) const
    {
        std::vector<std::string> names;
        TileType tt = dev.tile_type(x, y);
        if (tt == TileType::CLB) {
            for (int l = 0; l < 4; l++)
                names.push_back("L" + std::to_string(l) + "O");
            for (int l = 0; l < 4; l++)
                names.push_back("FF" + std::to_string(l) + "Q");
            for (int b = 0; b < 4; b++)
                names.push_back("CYS" + std::to_string(b));
            names.push_back("MX0O");
            names.push_back("MX1O");
        } else if (tt == TileType::IO) {
            names.push_back("PAD0O");
            names.push_back("PAD1O");
        } else if (dev.is_bram_anchor(x, y)) {
            for (int j = 0; j < 8; j++)
                names.push_back("BQ" + std::to_string(j));
        }
        names.push_back("GND");
        names.push_back("VCC");
        for (int i = 0; i < p.long_lines; i++)
            names.push_back("RL" + std::to_string(i));
        for (int i = 0; i < p.long_lines; i++)
            names.push_back("CL" + std::to_string(i));

        std::vector<std::pair<WireId, std::string>> pool;
        for (auto &n : names)
            pool.emplace_back(dev.wire(x, y, n), n);
        return pool;
    }

    void build_tile_pips(int x, int y)
    {
        tile_features.clear();
        TileType tt = dev.tile_type(x, y);
        int K = p.wires_per_side;
        int L = p.long_lines;
        auto pool = belout_pool(x, y);
        auto w = [&](const std::string &n) { return dev.wire(x, y, n); };

        // outbound channel wires. Turn pips on every index keep the switch
        // graph strongly connected in direction space; BEL-output entry
        // points live on (up to) three of the tile's existing sides, which
        // still covers the whole output pool on edge and corner tiles.
        std::vector<int> bsides;
        for (int s = 0; s < 4 && int(bsides.size()) < 3; s++)
            if (dev.in_grid(x + kSideDx[s], y + kSideDy[s]))
                bsides.push_back(s);
        for (int s = 0; s < 4; s++) {
            if (!dev.in_grid(x + kSideDx[s], y + kSideDy[s]))
                continue;
            for (int i = 0; i < K; i++) {
                std::string dst_local = std::string(1, kSideLetter[s]) + std::to_string(i);
                WireId dst = w(dst_local);
                auto [a, atok] = pick_dir_in(x, y, (s + 2) % 4, i); // pass-through
                if (a != kNoWire)
                    add_pip(x, y, a, dst, "SBOX.PIP_" + dst_local + "_" + atok, false, 1);
                // turn pips; the side-dependent index shift (sum 5 over a
                // full rotation, coprime to K=8) makes every (direction,
                // index) combination reachable from every other
                auto [b, btok] = pick_dir_in(x, y, (s + 1) % 4, (i + (s == 3 ? 2 : 1)) % K);
                if (b != kNoWire)
                    add_pip(x, y, b, dst, "SBOX.PIP_" + dst_local + "_" + btok, false, 1);
                if (std::find(bsides.begin(), bsides.end(), s) != bsides.end()) {
                    auto &[cw, cn] = pool[(size_t(s) * K + i) % pool.size()];
                    add_pip(x, y, cw, dst, "SBOX.PIP_" + dst_local + "_" + cn, false, 1);
                }
            }
        }

        // long-line stubs: one drive pip plus the bidirectional long pip
        for (int i = 0; i < L; i++) {
            for (int col = 0; col < 2; col++) {
                std::string stub = (col ? "CL" : "RL") + std::to_string(i);
                WireId sw = w(stub);
                auto &[bw, bn] = pool[(size_t(2 + col) * i + 1 + col) % pool.size()];
                add_pip(x, y, bw, sw, "SBOX.PIP_" + stub + "_" + bn, false, 1);
                WireId longw = col ? dev.wire(x, 0, "VL" + std::to_string(i)) : dev.wire(0, y, "HL" + std::to_string(i));
                add_pip(x, y, longw, sw, "SBOX.BPIP_" + stub, true, 3);
            }
        }

        // local source pool for BEL inputs
        std::vector<std::pair<WireId, std::string>> loc;
        if (tt == TileType::CLB) {
            for (int l = 0; l < 4; l++)
                loc.emplace_back(w("FF" + std::to_string(l) + "Q"), "FF" + std::to_string(l) + "Q");
            loc.emplace_back(w("MX0O"), "MX0O");
            loc.emplace_back(w("MX1O"), "MX1O");
        }
        loc.emplace_back(w("GND"), "GND");
        loc.emplace_back(w("VCC"), "VCC");
        for (int i = 0; i < L; i++)
            loc.emplace_back(w("RL" + std::to_string(i)), "RL" + std::to_string(i));
        for (int i = 0; i < L; i++)
            loc.emplace_back(w("CL" + std::to_string(i)), "CL" + std::to_string(i));

        if (tt == TileType::CLB) {
            for (int l = 0; l < 4; l++) {
                for (int j = 0; j < 4; j++) {
                    std::string dst_local = "L" + std::to_string(l) + "I" + std::to_string(j);
                    WireId dst = w(dst_local);
                    auto [a, atok] = pick_dir_in(x, y, (l + j) % 4, (2 * l + j) % K);
                    // designated boundary pips carry an always-on secondary stub
                    WireId sec = kNoWire;
                    if ((l * 4 + j) % 7 == 3)
                        sec = w("L" + std::to_string((l + 1) % 4) + "I" + std::to_string(j));
                    if (a != kNoWire)
                        add_pip(x, y, a, dst, "SBOX.PIP_" + dst_local + "_" + atok, false, 1, sec);
                    auto [b, btok] = pick_dir_in(x, y, (l + j + 1) % 4, (2 * l + j + 3) % K);
                    if (b != kNoWire)
                        add_pip(x, y, b, dst, "SBOX.PIP_" + dst_local + "_" + btok, false, 1);
                    auto &[cw, cn] = loc[(size_t(4) * l + j) % loc.size()];
                    add_pip(x, y, cw, dst, "SBOX.PIP_" + dst_local + "_" + cn, false, 1);
                }
                std::string ffd = "FF" + std::to_string(l) + "D";
                add_pip(x, y, w("L" + std::to_string(l) + "O"), w(ffd),
                        "SBOX.PIP_" + ffd + "_L" + std::to_string(l) + "O", false, 1);
                add_pip(x, y, w("CYS" + std::to_string(l)), w(ffd),
                        "SBOX.PIP_" + ffd + "_CYS" + std::to_string(l), false, 1);
                std::string mxo = "MX" + std::to_string(l % 2) + "O";
                add_pip(x, y, w(mxo), w(ffd), "SBOX.PIP_" + ffd + "_" + mxo, false, 1);
                auto [fd, fdtok] = pick_dir_in(x, y, l % 4, (3 * l) % K);
                if (fd != kNoWire)
                    add_pip(x, y, fd, w(ffd), "SBOX.PIP_" + ffd + "_" + fdtok, false, 1);
            }
            for (int f = 0; f < 2; f++) {
                std::string mxs = "MX" + std::to_string(f) + "S";
                auto [a, atok] = pick_dir_in(x, y, f, (5 + f) % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w(mxs), "SBOX.PIP_" + mxs + "_" + atok, false, 1);
                auto [b, btok] = pick_dir_in(x, y, (f + 2) % 4, (1 + f) % K);
                if (b != kNoWire)
                    add_pip(x, y, b, w(mxs), "SBOX.PIP_" + mxs + "_" + btok, false, 1);
            }
            for (int b = 0; b < 4; b++) {
                std::string cyb = "CYB" + std::to_string(b);
                auto [a, atok] = pick_dir_in(x, y, b % 4, (b + 2) % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w(cyb), "SBOX.PIP_" + cyb + "_" + atok, false, 1);
                std::string cn = (b == 0) ? "VCC" : "GND";
                add_pip(x, y, w(cn), w(cyb), "SBOX.PIP_" + cyb + "_" + cn, false, 1);
            }
        } else if (tt == TileType::IO) {
            for (int pd = 0; pd < 2; pd++) {
                std::string padi = "PAD" + std::to_string(pd) + "I";
                auto [a, atok] = pick_dir_in(x, y, pd % 4, pd % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w(padi), "SBOX.PIP_" + padi + "_" + atok, false, 1);
                auto [b, btok] = pick_dir_in(x, y, (pd + 1) % 4, (pd + 3) % K);
                if (b != kNoWire)
                    add_pip(x, y, b, w(padi), "SBOX.PIP_" + padi + "_" + btok, false, 1);
                auto &[cw, cn] = loc[pd % loc.size()];
                add_pip(x, y, cw, w(padi), "SBOX.PIP_" + padi + "_" + cn, false, 1);
            }
            {
                auto [a, atok] = pick_dir_in(x, y, 2, 1 % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w("TAP0I"), "SBOX.PIP_TAP0I_" + atok, false, 1);
                auto [b, btok] = pick_dir_in(x, y, 3, 2 % K);
                if (b != kNoWire)
                    add_pip(x, y, b, w("TAP0I"), "SBOX.PIP_TAP0I_" + btok, false, 1);
                auto &[cw, cn] = loc[2 % loc.size()];
                add_pip(x, y, cw, w("TAP0I"), "SBOX.PIP_TAP0I_" + cn, false, 1);
            }
        } else if (dev.is_bram_anchor(x, y)) {
            for (int j = 0; j < 4; j++) {
                std::string ba = "BA" + std::to_string(j);
                auto [a, atok] = pick_dir_in(x, y, j % 4, (2 * j) % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w(ba), "SBOX.PIP_" + ba + "_" + atok, false, 1);
                auto [b, btok] = pick_dir_in(x, y, (j + 1) % 4, (2 * j + 3) % K);
                if (b != kNoWire)
                    add_pip(x, y, b, w(ba), "SBOX.PIP_" + ba + "_" + btok, false, 1);
                auto &[cw, cn] = loc[j % loc.size()];
                add_pip(x, y, cw, w(ba), "SBOX.PIP_" + ba + "_" + cn, false, 1);
            }
            for (int j = 0; j < 8; j++) {
                // entries must be pairwise distinct and disjoint from the
                // address pins', or wide writes cannot be routed at all
                std::string bd = "BD" + std::to_string(j);
                auto [a, atok] = pick_dir_in(x, y, j % 4, (2 * (j % 4) + 2 + 4 * (j / 4)) % K);
                if (a != kNoWire)
                    add_pip(x, y, a, w(bd), "SBOX.PIP_" + bd + "_" + atok, false, 1);
                auto [b, btok] = pick_dir_in(x, y, (j + 2) % 4, (2 * ((j + 2) % 4) + 3 + 4 * (j / 4)) % K);
                if (b != kNoWire)
                    add_pip(x, y, b, w(bd), "SBOX.PIP_" + bd + "_" + btok, false, 1);
            }
            {
                auto [a, atok] = pick_dir_in(x, y, 1, 1);
                if (a != kNoWire)
                    add_pip(x, y, a, w("BWE"), "SBOX.PIP_BWE_" + atok, false, 1);
                add_pip(x, y, w("GND"), w("BWE"), "SBOX.PIP_BWE_GND", false, 1);
                add_pip(x, y, w("VCC"), w("BWE"), "SBOX.PIP_BWE_VCC", false, 1);
            }
        }

        // configuration features
        add_config_feature(x, y, "SBOX.CLKEN", 1);
        if (tt == TileType::CLB) {
            for (int l = 0; l < 4; l++) {
                add_config_feature(x, y, "LUT" + std::to_string(l) + ".ENABLE", 1);
                add_config_feature(x, y, "LUT" + std::to_string(l) + ".INIT", 16);
                add_config_feature(x, y, "FF" + std::to_string(l) + ".ENABLE", 1);
            }
            add_config_feature(x, y, "CARRY4.ENABLE", 1);
            add_config_feature(x, y, "MUXF2_0.ENABLE", 1);
            add_config_feature(x, y, "MUXF2_1.ENABLE", 1);
        } else if (tt == TileType::IO) {
            for (int pd = 0; pd < 2; pd++) {
                add_config_feature(x, y, "PAD" + std::to_string(pd) + ".IN_EN", 1);
                add_config_feature(x, y, "PAD" + std::to_string(pd) + ".OUT_EN", 1);
            }
            add_config_feature(x, y, "TAP0.ENABLE", 1);
        } else { // BRAM rows: 32 init bits per stacked region
            if (dev.is_bram_anchor(x, y))
                add_config_feature(x, y, "BRAM.ENABLE", 1);
            add_config_feature(x, y, "BRAM.INIT", 32);
        }

        layout_tile_features(x, y);
    }

    void layout_tile_features(int x, int y)
    {
        uint32_t total = 0;
        for (auto &[name, wbits] : tile_features)
            total += wbits;
        if (total > kTileRegionBits)
            throw InvalidParams("wires_per_side/long_lines: tile " + Device::tile_name(x, y) + " needs " +
                                std::to_string(total) + " config bits, region is " +
                                std::to_string(kTileRegionBits));

        // seeded shuffle of feature order inside the tile region
        std::vector<size_t> order(tile_features.size());
        for (size_t i = 0; i < order.size(); i++)
            order[i] = i;
        uint64_t tile_seed = p.seed;
        tile_seed = fnv1a64(&x, sizeof(x), tile_seed);
        tile_seed = fnv1a64(&y, sizeof(y), tile_seed);
        std::mt19937_64 rng(tile_seed);
        std::shuffle(order.begin(), order.end(), rng);

        uint32_t off = 0;
        for (size_t idx : order) {
            auto &[name, wbits] = tile_features[idx];
            dev.featdb.emplace(name, FeatureInfo{wbits, uint32_t(x), uint32_t(y) * kTileRegionBits + off});
            off += wbits;
        }
    }
};

} // namespace detail

inline void validate_params(const DeviceParams &p)
{
    if (p.width < 4)
        throw InvalidParams("width: must be >= 4, got " + std::to_string(p.width));
    if (p.height < 4)
        throw InvalidParams("height: must be >= 4, got " + std::to_string(p.height));
    if (p.wires_per_side < 4)
        throw InvalidParams("wires_per_side: must be >= 4, got " + std::to_string(p.wires_per_side));
    if (p.long_lines < 1)
        throw InvalidParams("long_lines: must be >= 1, got " + std::to_string(p.long_lines));
    for (int c : p.bram_columns)
        if (c <= 0 || c >= p.width - 1)
            throw InvalidParams("bram_columns: column " + std::to_string(c) + " is not an interior column");
    if (!p.bram_columns.empty() && p.height % 4 != 0)
        throw InvalidParams("height: must be a multiple of 4 when bram_columns is non-empty");
}

inline std::vector<uint8_t> persist_device(const Device &dev);

inline Device build_device(const DeviceParams &params)
{
    validate_params(params);
    Device dev;
    dev.params = params;
    size_t ntiles = size_t(params.width) * params.height;
    dev.wire_by_tile_.resize(ntiles);
    dev.bels_by_tile_.resize(ntiles);

    detail::DeviceBuilder b(dev);
    for (int y = 0; y < params.height; y++)
        for (int x = 0; x < params.width; x++)
            b.build_tile(x, y);
    for (int y = 0; y < params.height; y++)
        for (int x = 0; x < params.width; x++)
            b.build_tile_pips(x, y);

    auto image = persist_device(dev);
    dev.digest = fnv1a64(image.data(), image.size());
    return dev;
}

// Absolute bit positions of a feature, ordered value-LSB first; strictly
// increasing since a feature's bits are laid out contiguously.
inline std::vector<uint64_t> lookup_feature_bits(const Device &dev, const std::string &feature)
{
    const FeatureInfo *fi = dev.find_feature(feature);
    if (!fi)
        throw UnknownFeature(feature);
    std::vector<uint64_t> out(fi->width);
    for (uint32_t i = 0; i < fi->width; i++)
        out[i] = uint64_t(fi->frame) * dev.frame_bits() + fi->offset + i;
    return out;
}

inline std::vector<BelId> free_bels(const Device &dev, const OccupancyMap &occ)
{
    if (occ.device_digest != dev.digest)
        throw DeviceMismatch("occupancy map was derived from a different device");
    std::vector<BelId> out;
    for (BelId b = 0; b < BelId(dev.bels.size()); b++)
        if (!occ.used_bels.count(b))
            out.push_back(b);
    return out;
}

// --------------------------------------------------------------------------
// Device image: magic "MFDB", version, params, then the feature database
// sorted by name. Loading rebuilds the device from params and cross-checks
// the stored database, so a corrupted image cannot produce a skewed device.
// --------------------------------------------------------------------------

constexpr uint32_t kDeviceFormatVersion = 1;

inline std::vector<uint8_t> persist_device(const Device &dev)
{
    ByteWriter w;
    w.raw("MFDB", 4);
    w.u32(kDeviceFormatVersion);
    w.u32(uint32_t(dev.params.width));
    w.u32(uint32_t(dev.params.height));
    w.u32(uint32_t(dev.params.wires_per_side));
    w.u32(uint32_t(dev.params.long_lines));
    w.u32(uint32_t(dev.params.bram_columns.size()));
    for (int c : dev.params.bram_columns)
        w.u32(uint32_t(c));
    w.u64(dev.params.seed);

    std::vector<std::pair<std::string, FeatureInfo>> feats(dev.featdb.begin(), dev.featdb.end());
    std::sort(feats.begin(), feats.end(), [](auto &a, auto &b) { return a.first < b.first; });
    w.u32(uint32_t(feats.size()));
    for (auto &[name, fi] : feats) {
        w.str(name);
        w.u32(fi.width);
        w.u32(fi.frame);
        w.u32(fi.offset);
    }
    return w.bytes;
}

inline Device load_device(const std::vector<uint8_t> &image)
{
    ByteReader r(image);
    r.need(4);
    if (memcmp(image.data(), "MFDB", 4) != 0)
        throw CorruptDeviceImage("bad magic");
    r.pos = 4;
    uint32_t ver = r.u32();
    if (ver != kDeviceFormatVersion)
        throw VersionMismatch("device image version " + std::to_string(ver) + ", expected " +
                              std::to_string(kDeviceFormatVersion));
    DeviceParams p;
    p.width = int(r.u32());
    p.height = int(r.u32());
    p.wires_per_side = int(r.u32());
    p.long_lines = int(r.u32());
    uint32_t nbram = r.u32();
    for (uint32_t i = 0; i < nbram; i++)
        p.bram_columns.insert(int(r.u32()));
    p.seed = r.u64();

    Device dev = build_device(p);

    uint32_t nfeat = r.u32();
    if (nfeat != dev.featdb.size())
        throw CorruptDeviceImage("feature count mismatch");
    for (uint32_t i = 0; i < nfeat; i++) {
        std::string name = r.str();
        FeatureInfo fi;
        fi.width = r.u32();
        fi.frame = r.u32();
        fi.offset = r.u32();
        const FeatureInfo *have = dev.find_feature(name);
        if (!have || have->width != fi.width || have->frame != fi.frame || have->offset != fi.offset)
            throw CorruptDeviceImage("feature database mismatch at " + name);
    }
    if (!r.at_end())
        throw CorruptDeviceImage("trailing bytes");
    return dev;
}

// --------------------------------------------------------------------------
// BEL pin geometry. Pins marked permanent are hard-wired (carry chain, the
// carry A inputs from the slot LUTs, MUXF2 data inputs) and never routed.
// --------------------------------------------------------------------------

inline bool is_permanent_pin(BelKind kind, const std::string &pin)
{
    if (kind == BelKind::CARRY4)
        return pin == "CI" || (pin.size() == 2 && pin[0] == 'A');
    if (kind == BelKind::MUXF2)
        return pin == "I0" || pin == "I1";
    return false;
}

// Wire a pin reads from / drives. For permanent pins this resolves through
// the hard-wired connection (e.g. CARRY4.A2 -> L2O of the same tile,
// CARRY4.CI -> COUT of the tile below). Returns kNoWire for a chain start.
inline WireId pin_wire(const Device &dev, BelId bel, const std::string &pin)
{
    const BelData &bd = dev.bels[bel];
    int x = bd.x, y = bd.y;
    auto local = [&](const std::string &n) { return dev.wire(x, y, n); };
    switch (bd.kind) {
    case BelKind::LUT4: {
        char l = bd.name[3];
        if (pin == "O")
            return local(std::string("L") + l + "O");
        if (pin.size() == 2 && pin[0] == 'I' && pin[1] >= '0' && pin[1] <= '3')
            return local(std::string("L") + l + "I" + pin[1]);
        break;
    }
    case BelKind::FF: {
        char l = bd.name[2];
        if (pin == "D")
            return local(std::string("FF") + l + "D");
        if (pin == "Q")
            return local(std::string("FF") + l + "Q");
        break;
    }
    case BelKind::CARRY4:
        if (pin == "CO")
            return local("COUT");
        if (pin == "CI")
            return dev.wire(x, y - 1, "COUT"); // kNoWire below the fabric => chain start
        if (pin.size() == 2 && pin[1] >= '0' && pin[1] <= '3') {
            if (pin[0] == 'A')
                return local(std::string("L") + pin[1] + "O");
            if (pin[0] == 'B')
                return local(std::string("CYB") + pin[1]);
            if (pin[0] == 'S')
                return local(std::string("CYS") + pin[1]);
        }
        break;
    case BelKind::MUXF2: {
        char f = bd.name[6];
        int fi = f - '0';
        if (pin == "S")
            return local(std::string("MX") + f + "S");
        if (pin == "O")
            return local(std::string("MX") + f + "O");
        if (pin == "I0")
            return local("L" + std::to_string(2 * fi) + "O");
        if (pin == "I1")
            return local("L" + std::to_string(2 * fi + 1) + "O");
        break;
    }
    case BelKind::BRAM16:
        if (pin == "WE")
            return local("BWE");
        if (pin.size() == 2 && pin[1] >= '0' && pin[1] <= '7') {
            if (pin[0] == 'A' && pin[1] <= '3')
                return local(std::string("BA") + pin[1]);
            if (pin[0] == 'D')
                return local(std::string("BD") + pin[1]);
            if (pin[0] == 'Q')
                return local(std::string("BQ") + pin[1]);
        }
        break;
    case BelKind::IOPAD: {
        char pc = bd.name[3];
        if (pin == "I")
            return local(std::string("PAD") + pc + "I");
        if (pin == "O")
            return local(std::string("PAD") + pc + "O");
        break;
    }
    case BelKind::TAPOUT:
        if (pin == "I")
            return local("TAP0I");
        break;
    }
    throw UnknownPin(dev.bel_name(bel) + "." + pin);
}

} // namespace fabpatch

#endif
