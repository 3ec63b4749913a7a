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

// Step 3: placement. Modification cells go onto BELs the original design
// left free. Hard-wired structure fixes part of the geometry up front:
// carry chains stack vertically with their feeder LUTs in matching slots,
// MUXF2 data inputs come from the slot pair of the chosen mux site. The
// rigid pieces are placed first (most constrained to least), then greedy
// assignment plus a relocation pass handles the rest; tiny problems are
// solved by exhaustive enumeration instead.

#ifndef FABRICPATCH_PLACER_HPP
#define FABRICPATCH_PLACER_HPP

#include <array>
#include <cmath>
#include <functional>

#include "fabricpatch/netlist.hpp"

namespace fabpatch {

using PortAnchors = std::map<std::string, std::pair<double, double>>;

// Wirelength estimate: per net, each placed endpoint contributes its
// Euclidean distance to the nearest other endpoint. Constant-driven nets
// are free (tie-offs exist in every tile).
inline double placement_cost(const Device &dev, const DesignNetlist &nl, const PortAnchors &anchors = {})
{
    double total = 0;
    for (const auto &n : nl.nets) {
        if (n.driver.kind == DriverKind::Const0 || n.driver.kind == DriverKind::Const1)
            continue;
        std::vector<std::pair<double, double>> pts;
        auto add_cell = [&](const std::string &id) {
            const Cell *c = nl.find_cell(id);
            if (!c)
                throw UnknownNet("net " + n.id + " references unknown cell " + id);
            if (c->bel < 0)
                throw UnassignedCell("cell " + id + " is not placed");
            pts.emplace_back(dev.bels[c->bel].x, dev.bels[c->bel].y);
        };
        auto add_port = [&](const std::string &p) {
            auto it = anchors.find(p);
            if (it != anchors.end())
                pts.push_back(it->second);
        };
        if (n.driver.kind == DriverKind::CellPin)
            add_cell(n.driver.pin.cell);
        else if (n.driver.kind == DriverKind::Port)
            add_port(n.driver.port);
        for (const auto &s : n.sinks) {
            if (s.is_port)
                add_port(s.port);
            else
                add_cell(s.pin.cell);
        }
        if (pts.size() < 2)
            continue;
        for (size_t i = 0; i < pts.size(); i++) {
            double best = 1e30;
            for (size_t j = 0; j < pts.size(); j++) {
                if (i == j)
                    continue;
                double dx = pts[i].first - pts[j].first, dy = pts[i].second - pts[j].second;
                best = std::min(best, std::sqrt(dx * dx + dy * dy));
            }
            total += best;
        }
    }
    return total;
}

namespace detail {

struct MacroMember
{
    size_t cell;    // index into nl.cells
    int dx, dy;     // tile offset from the macro anchor
    std::string site; // BEL site name at that tile
};

struct MacroCandidate
{
    std::vector<BelId> bels; // one per member
    int x, y;                // anchor tile (tie-break key)
};

struct Macro
{
    std::vector<MacroMember> members;
    std::vector<MacroCandidate> candidates;
    bool splittable = false; // soft pair: may fall apart if nothing fits
};

} // namespace detail

struct PlaceResult
{
    double cost = 0;
    bool exhaustive = false;
    std::vector<std::string> warnings;
};

inline PlaceResult place(const Device &dev, DesignNetlist &nl, const OccupancyMap &occ,
                         const PortAnchors &anchors = {})
{
    if (occ.device_digest != dev.digest)
        throw DeviceMismatch("occupancy map was derived from a different device");
    PlaceResult res;

    std::set<BelId> taken(occ.used_bels.begin(), occ.used_bels.end());
    // channel demand per tile (routable pins plus already-routed wires),
    // for the crowding penalty
    std::vector<int> tile_load(size_t(dev.width()) * size_t(dev.height()), 0);
    auto pin_demand = [](CellKind k) {
        switch (k) {
        case CellKind::LUT4: return 5;   // 4 inputs + output injection
        case CellKind::BRAM16: return 21;
        case CellKind::CARRY4: return 4; // B inputs; A/CI are hard-wired
        default: return 2;
        }
    };
    auto load_at = [&](BelId b) -> int & {
        const BelData &bd = dev.bels[b];
        return tile_load[size_t(bd.y) * size_t(dev.width()) + size_t(bd.x)];
    };
    for (const auto &c : nl.cells)
        if (c.bel >= 0) {
            if (taken.count(c.bel))
                throw Unplaceable("pre-placed cell " + c.id + " sits on occupied BEL " + dev.bel_name(c.bel));
            taken.insert(c.bel);
            load_at(c.bel) += pin_demand(c.kind);
        }
    for (BelId b : occ.used_bels) {
        BelKind k = dev.bels[b].kind;
        load_at(b) += k == BelKind::LUT4 ? 5 : k == BelKind::BRAM16 ? 21 : k == BelKind::CARRY4 ? 4 : 2;
    }
    for (WireId wu : occ.used_wires) {
        const WireData &wd = dev.wires[wu];
        tile_load[size_t(wd.y) * size_t(dev.width()) + size_t(wd.x)] += 1;
    }

    // --- hard structural relations -------------------------------------
    // carry chains (via CO -> CI nets), feeder LUTs (A pins), mux feeders
    std::map<size_t, size_t> chain_next; // CARRY cell idx -> CARRY above it
    std::map<size_t, std::array<int, 4>> carry_feeder, carry_sff; // b -> LUT / FF cell idx (-1 none)
    std::map<size_t, std::array<int, 2>> mux_feeder;              // MUXF2 idx -> I0/I1 LUTs
    std::map<size_t, int> lutff;                                  // LUT idx -> FF idx fed by its O
    std::map<size_t, int> muxff;                                  // MUXF2 idx -> FF idx fed by its O

    auto idx_of = [&](const std::string &id) { return nl.cell_index.at(id); };
    for (size_t ci = 0; ci < nl.cells.size(); ci++) {
        if (nl.cells[ci].kind == CellKind::CARRY4) {
            carry_feeder[ci] = {-1, -1, -1, -1};
            carry_sff[ci] = {-1, -1, -1, -1};
        }
        if (nl.cells[ci].kind == CellKind::MUXF2)
            mux_feeder[ci] = {-1, -1};
    }
    for (const auto &n : nl.nets) {
        if (n.driver.kind != DriverKind::CellPin)
            continue;
        size_t di = idx_of(n.driver.pin.cell);
        for (const auto &s : n.sinks) {
            if (s.is_port)
                continue;
            size_t si = idx_of(s.pin.cell);
            const Cell &dc = nl.cells[di], &sc = nl.cells[si];
            if (dc.kind == CellKind::CARRY4 && sc.kind == CellKind::CARRY4 && n.driver.pin.pin == "CO" &&
                s.pin.pin == "CI")
                chain_next[di] = si;
            if (dc.kind == CellKind::LUT4 && sc.kind == CellKind::CARRY4 && s.pin.pin.size() == 2 &&
                s.pin.pin[0] == 'A')
                carry_feeder[si][s.pin.pin[1] - '0'] = int(di);
            if (dc.kind == CellKind::CARRY4 && sc.kind == CellKind::FF && n.driver.pin.pin.size() == 2 &&
                n.driver.pin.pin[0] == 'S' && s.pin.pin == "D")
                carry_sff[di][n.driver.pin.pin[1] - '0'] = int(si);
            if (dc.kind == CellKind::LUT4 && sc.kind == CellKind::MUXF2 &&
                (s.pin.pin == "I0" || s.pin.pin == "I1"))
                mux_feeder[si][s.pin.pin[1] - '0'] = int(di);
            if (dc.kind == CellKind::LUT4 && sc.kind == CellKind::FF && s.pin.pin == "D" && !lutff.count(di))
                lutff[di] = int(si);
            if (dc.kind == CellKind::MUXF2 && sc.kind == CellKind::FF && s.pin.pin == "D" && !muxff.count(di))
                muxff[di] = int(si);
        }
    }

    // --- macro construction --------------------------------------------
    std::vector<detail::Macro> macros;
    std::vector<char> grouped(nl.cells.size(), 0);
    for (size_t ci = 0; ci < nl.cells.size(); ci++)
        if (nl.cells[ci].bel >= 0)
            grouped[ci] = 1; // fixed

    // carry chains, bottom cell first (one without an incoming CO->CI)
    std::set<size_t> has_pred;
    for (auto &[lo, hi] : chain_next)
        has_pred.insert(hi);
    for (size_t ci = 0; ci < nl.cells.size(); ci++) {
        if (nl.cells[ci].kind != CellKind::CARRY4 || has_pred.count(ci) || grouped[ci])
            continue;
        detail::Macro m;
        int dy = 0;
        for (size_t cur = ci;; dy++) {
            m.members.push_back({cur, 0, dy, "CARRY4"});
            grouped[cur] = 1;
            for (int b = 0; b < 4; b++) {
                int f = carry_feeder[cur][b];
                if (f >= 0 && !grouped[f]) {
                    m.members.push_back({size_t(f), 0, dy, "LUT" + std::to_string(b)});
                    grouped[f] = 1;
                }
                int q = carry_sff[cur][b];
                if (q >= 0 && !grouped[q]) {
                    m.members.push_back({size_t(q), 0, dy, "FF" + std::to_string(b)});
                    grouped[q] = 1;
                }
            }
            auto nx = chain_next.find(cur);
            if (nx == chain_next.end())
                break;
            cur = nx->second;
        }
        macros.push_back(std::move(m));
    }

    // mux groups: the site index is free, so emit per-variant candidates later
    std::vector<std::pair<size_t, std::array<int, 2>>> mux_groups;
    for (auto &[mi, feeders] : mux_feeder) {
        if (grouped[mi])
            continue;
        detail::Macro m;
        m.members.push_back({mi, 0, 0, "MUXF2_?"});
        grouped[mi] = 1;
        for (int k = 0; k < 2; k++)
            if (feeders[k] >= 0 && !grouped[feeders[k]]) {
                m.members.push_back({size_t(feeders[k]), 0, 0, "MUXI" + std::to_string(k)});
                grouped[feeders[k]] = 1;
            }
        // a single FF sink rides along so it can use the local MX->FF pip
        auto qf = muxff.find(mi);
        if (qf != muxff.end() && qf->second >= 0 && !grouped[qf->second]) {
            m.members.push_back({size_t(qf->second), 0, 0, "MUXFF"});
            grouped[qf->second] = 1;
        }
        macros.push_back(std::move(m));
    }

    // soft LUT->FF pairs (same slot, same tile preferred)
    for (auto &[li, fi] : lutff) {
        if (grouped[li] || grouped[size_t(fi)])
            continue;
        detail::Macro m;
        m.splittable = true;
        m.members.push_back({li, 0, 0, "LUT?"});
        m.members.push_back({size_t(fi), 0, 0, "FFSAME"});
        grouped[li] = 1;
        grouped[size_t(fi)] = 1;
        macros.push_back(std::move(m));
    }

    // everything else is a single
    for (size_t ci = 0; ci < nl.cells.size(); ci++) {
        if (grouped[ci])
            continue;
        detail::Macro m;
        m.members.push_back({ci, 0, 0, ""});
        macros.push_back(std::move(m));
    }

    // --- candidate enumeration -----------------------------------------
    auto bel_free = [&](BelId b) { return b >= 0 && !taken.count(b); };
    auto enumerate = [&](detail::Macro &m) {
        m.candidates.clear();
        for (int y = 0; y < dev.height(); y++)
            for (int x = 0; x < dev.width(); x++) {
                // variants: mux site / lut slot wildcards
                int nvar = 1;
                if (m.members[0].site == "MUXF2_?")
                    nvar = 2;
                else if (m.members[0].site == "LUT?" || m.members[0].site.empty())
                    nvar = 4;
                for (int var = 0; var < nvar; var++) {
                    std::vector<BelId> bels;
                    bool ok = true;
                    for (const auto &mem : m.members) {
                        int tx = x + mem.dx, ty = y + mem.dy;
                        if (!dev.in_grid(tx, ty)) {
                            ok = false;
                            break;
                        }
                        std::string site = mem.site;
                        if (site == "MUXF2_?")
                            site = "MUXF2_" + std::to_string(var);
                        else if (site == "MUXI0")
                            site = "LUT" + std::to_string(2 * var);
                        else if (site == "MUXI1")
                            site = "LUT" + std::to_string(2 * var + 1);
                        else if (site == "LUT?")
                            site = "LUT" + std::to_string(var);
                        else if (site == "FFSAME")
                            site = "FF" + std::to_string(var);
                        else if (site == "MUXFF") {
                            // the MX->FF pip reaches FF(var) and FF(var+2)
                            site = "FF" + std::to_string(var);
                            BelId fb = dev.bel(tx, ty, site);
                            if (!bel_free(fb) || std::find(bels.begin(), bels.end(), fb) != bels.end())
                                site = "FF" + std::to_string(var + 2);
                        }
                        else if (site.empty()) {
                            // single of arbitrary kind: pick var-th matching site
                            BelKind want = bel_kind_for_cell(nl.cells[mem.cell].kind);
                            int seen = 0;
                            site.clear();
                            for (BelId b : dev.tile_bels(tx, ty))
                                if (dev.bels[b].kind == want && seen++ == var) {
                                    site = dev.bels[b].name;
                                    break;
                                }
                            if (site.empty()) {
                                ok = false;
                                break;
                            }
                        }
                        BelId b = dev.bel(tx, ty, site);
                        if (!bel_free(b) || dev.bels[b].kind != bel_kind_for_cell(nl.cells[mem.cell].kind) ||
                            std::find(bels.begin(), bels.end(), b) != bels.end()) {
                            ok = false;
                            break;
                        }
                        if (site == "CARRY4") {
                            // hard-wired carry coupling: our CO must not feed
                            // an occupied CI, and the chain start must not
                            // read a driven COUT from the tile below
                            if (occ.used_wires.count(dev.wire(tx, ty, "COUT")))
                                ok = false;
                            WireId ci = dev.wire(tx, ty - 1, "COUT");
                            if (mem.dy == 0 && ci != kNoWire && occ.used_wires.count(ci))
                                ok = false;
                            if (!ok)
                                break;
                        }
                        bels.push_back(b);
                    }
                    if (ok)
                        m.candidates.push_back({std::move(bels), x, y});
                }
            }
    };

    for (auto &m : macros)
        enumerate(m);

    // split soft pairs with no joint home
    for (size_t mi = 0; mi < macros.size(); mi++) {
        if (!macros[mi].candidates.empty())
            continue;
        if (macros[mi].splittable) {
            detail::Macro a, b;
            a.members.push_back({macros[mi].members[0].cell, 0, 0, ""});
            b.members.push_back({macros[mi].members[1].cell, 0, 0, ""});
            enumerate(a);
            enumerate(b);
            res.warnings.push_back("LUT/FF pair " + nl.cells[macros[mi].members[0].cell].id + "/" +
                                   nl.cells[macros[mi].members[1].cell].id + " split: no joint site available");
            macros[mi] = std::move(a);
            macros.push_back(std::move(b));
        }
    }
    for (const auto &m : macros)
        if (m.candidates.empty() && !m.members.empty())
            throw Unplaceable("no feasible site for cell " + nl.cells[m.members[0].cell].id);

    auto apply = [&](const detail::Macro &m, const detail::MacroCandidate &c) {
        for (size_t k = 0; k < m.members.size(); k++) {
            nl.cells[m.members[k].cell].bel = c.bels[k];
            taken.insert(c.bels[k]);
            load_at(c.bels[k]) += pin_demand(nl.cells[m.members[k].cell].kind);
        }
    };
    auto unapply = [&](const detail::Macro &m) {
        for (const auto &mem : m.members) {
            taken.erase(nl.cells[mem.cell].bel);
            load_at(nl.cells[mem.cell].bel) -= pin_demand(nl.cells[mem.cell].kind);
            nl.cells[mem.cell].bel = -1;
        }
    };
    auto candidate_blocked = [&](const detail::MacroCandidate &c) {
        for (BelId b : c.bels)
            if (taken.count(b))
                return true;
        return false;
    };

    // --- exhaustive search for tiny problems ----------------------------
    size_t movable_cells = 0;
    for (const auto &m : macros)
        for (size_t k = 0; k < m.members.size(); k++)
            movable_cells++;
    uint64_t combos = 1;
    for (const auto &m : macros) {
        combos *= std::max<size_t>(m.candidates.size(), 1);
        if (combos > 2000000)
            break;
    }
    if (movable_cells <= 3 && combos <= 2000000 && !macros.empty()) {
        double best = 1e30;
        std::vector<size_t> pick(macros.size(), 0), bestpick;
        std::function<void(size_t)> rec = [&](size_t mi) {
            if (mi == macros.size()) {
                double c = placement_cost(dev, nl, anchors);
                if (c + 1e-9 < best) {
                    best = c;
                    bestpick = pick;
                }
                return;
            }
            for (size_t ci = 0; ci < macros[mi].candidates.size(); ci++) {
                if (candidate_blocked(macros[mi].candidates[ci]))
                    continue;
                pick[mi] = ci;
                apply(macros[mi], macros[mi].candidates[ci]);
                rec(mi + 1);
                unapply(macros[mi]);
            }
        };
        rec(0);
        if (bestpick.empty())
            throw Unplaceable("no conflict-free assignment exists");
        for (size_t mi = 0; mi < macros.size(); mi++)
            apply(macros[mi], macros[mi].candidates[bestpick[mi]]);
        res.cost = best;
        res.exhaustive = true;
        return res;
    }

    // --- greedy: most constrained macro first ---------------------------
    std::vector<size_t> order(macros.size());
    for (size_t i = 0; i < order.size(); i++)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (macros[a].members.size() != macros[b].members.size())
            return macros[a].members.size() > macros[b].members.size();
        return macros[a].candidates.size() < macros[b].candidates.size();
    });

    auto try_cost = [&](const detail::Macro &m, const detail::MacroCandidate &c) {
        // partial cost: distances from this macro's cells to already-placed
        // endpoints of their nets
        for (size_t k = 0; k < m.members.size(); k++)
            nl.cells[m.members[k].cell].bel = c.bels[k];
        double cost = 0;
        for (const auto &n : nl.nets) {
            if (n.driver.kind == DriverKind::Const0 || n.driver.kind == DriverKind::Const1)
                continue;
            std::vector<std::pair<double, double>> pts;
            bool mine = false;
            auto visit = [&](const std::string &cell_id) {
                const Cell *cc = nl.find_cell(cell_id);
                if (cc && cc->bel >= 0) {
                    pts.emplace_back(dev.bels[cc->bel].x, dev.bels[cc->bel].y);
                    for (const auto &mem : m.members)
                        if (&nl.cells[mem.cell] == cc)
                            mine = true;
                }
            };
            if (n.driver.kind == DriverKind::CellPin)
                visit(n.driver.pin.cell);
            else if (n.driver.kind == DriverKind::Port) {
                auto it = anchors.find(n.driver.port);
                if (it != anchors.end())
                    pts.push_back(it->second);
            }
            for (const auto &s : n.sinks) {
                if (s.is_port) {
                    auto it = anchors.find(s.port);
                    if (it != anchors.end())
                        pts.push_back(it->second);
                } else
                    visit(s.pin.cell);
            }
            if (!mine || pts.size() < 2)
                continue;
            for (size_t i = 0; i < pts.size(); i++) {
                double bd = 1e30;
                for (size_t j = 0; j < pts.size(); j++)
                    if (i != j) {
                        double dx = pts[i].first - pts[j].first, dy = pts[i].second - pts[j].second;
                        bd = std::min(bd, std::sqrt(dx * dx + dy * dy));
                    }
                if (bd < 1e29)
                    cost += bd;
            }
        }
        for (const auto &mem : m.members)
            nl.cells[mem.cell].bel = -1;
        // crowding penalty: channel capacity around a tile is finite, so
        // discourage stacking unrelated logic into the same neighbourhood;
        // weigh it harder when placing into an already-occupied fabric,
        // where the surviving channel entries are scarce
        double crowd_w = occ.used_wires.empty() ? 0.6 : 1.5;
        for (BelId b : c.bels) {
            const BelData &bd = dev.bels[b];
            double around = 0;
            for (int dy = -1; dy <= 1; dy++)
                for (int dx = -1; dx <= 1; dx++) {
                    int tx = bd.x + dx, ty = bd.y + dy;
                    if (!dev.in_grid(tx, ty))
                        continue;
                    size_t ti = size_t(ty) * size_t(dev.width()) + size_t(tx);
                    around += tile_load[ti] * (dx || dy ? 0.5 : 1.0);
                }
            cost += crowd_w * around;
            // tiles on the top/bottom rows lack one channel side, so they
            // take less traffic before saturating
            if (bd.y == 0 || bd.y == dev.height() - 1)
                cost += 6.0;
        }
        return cost;
    };

    auto pick_best = [&](detail::Macro &m) -> const detail::MacroCandidate * {
        const detail::MacroCandidate *best = nullptr;
        double bestc = 1e30;
        for (const auto &c : m.candidates) {
            if (candidate_blocked(c))
                continue;
            double cost = try_cost(m, c);
            bool better = cost + 1e-9 < bestc;
            if (!better && best && std::abs(cost - bestc) <= 1e-9) {
                // deterministic tie-break: lower y, then x, then first bel
                auto key = [&](const detail::MacroCandidate &q) {
                    return std::make_tuple(q.y, q.x, q.bels.empty() ? 0 : q.bels[0]);
                };
                better = key(c) < key(*best);
            }
            if (better) {
                best = &c;
                bestc = cost;
            }
        }
        return best;
    };

    for (size_t oi : order) {
        auto &m = macros[oi];
        const auto *c = pick_best(m);
        if (!c)
            throw Unplaceable("no conflict-free site left for cell " + nl.cells[m.members[0].cell].id);
        apply(m, *c);
    }

    // --- relocation improvement ----------------------------------------
    for (int pass = 0; pass < 3; pass++) {
        bool improved = false;
        for (size_t oi : order) {
            auto &m = macros[oi];
            std::vector<BelId> saved;
            for (const auto &mem : m.members)
                saved.push_back(nl.cells[mem.cell].bel);
            unapply(m);
            // try_cost only involves nets touching this macro, so comparing
            // candidate values is comparing true total costs
            double basec = 1e30;
            const detail::MacroCandidate *best = nullptr;
            double bestc = 1e30;
            for (const auto &c : m.candidates) {
                if (candidate_blocked(c))
                    continue;
                double cost = try_cost(m, c);
                if (c.bels == saved)
                    basec = cost;
                if (cost + 1e-9 < bestc) {
                    bestc = cost;
                    best = &c;
                }
            }
            if (best && bestc + 1e-9 < basec) {
                apply(m, *best);
                improved = true;
            } else {
                for (size_t k = 0; k < m.members.size(); k++) {
                    nl.cells[m.members[k].cell].bel = saved[k];
                    taken.insert(saved[k]);
                    load_at(saved[k]) += pin_demand(nl.cells[m.members[k].cell].kind);
                }
            }
        }
        if (!improved)
            break;
    }

    res.cost = placement_cost(dev, nl, anchors);
    return res;
}

// --------------------------------------------------------------------------
// Placement legality audit.
// --------------------------------------------------------------------------

struct PlacementCheck
{
    bool ok = true;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
};

inline PlacementCheck check_placement(const Device &dev, const DesignNetlist &nl, const OccupancyMap &occ)
{
    PlacementCheck chk;
    auto bad = [&](const std::string &m) { chk.violations.push_back(m); };

    std::set<BelId> seen;
    for (const auto &c : nl.cells) {
        if (c.bel < 0) {
            bad("cell " + c.id + " is not placed");
            continue;
        }
        if (dev.bels[c.bel].kind != bel_kind_for_cell(c.kind))
            bad("cell " + c.id + " (" + cell_kind_name(c.kind) + ") on incompatible BEL " + dev.bel_name(c.bel));
        if (occ.used_bels.count(c.bel))
            bad("cell " + c.id + " overlaps the original design on " + dev.bel_name(c.bel));
        if (!seen.insert(c.bel).second)
            bad("two cells share BEL " + dev.bel_name(c.bel));
    }
    if (!chk.violations.empty()) {
        chk.ok = false;
        return chk;
    }

    auto tile_of = [&](const Cell &c) { return std::make_pair(int(dev.bels[c.bel].x), int(dev.bels[c.bel].y)); };
    for (const auto &n : nl.nets) {
        if (n.driver.kind != DriverKind::CellPin)
            continue;
        const Cell *dc = nl.find_cell(n.driver.pin.cell);
        for (const auto &s : n.sinks) {
            if (s.is_port)
                continue;
            const Cell *sc = nl.find_cell(s.pin.cell);
            // carry chain: CO of (x,y) is CI of (x,y+1)
            if (dc->kind == CellKind::CARRY4 && sc->kind == CellKind::CARRY4 && n.driver.pin.pin == "CO" &&
                s.pin.pin == "CI") {
                auto [dx, dy] = tile_of(*dc);
                auto [sx, sy] = tile_of(*sc);
                if (sx != dx || sy != dy + 1)
                    bad("carry chain " + dc->id + " -> " + sc->id + " is not vertically stacked");
            }
            // feeder LUT slots for the carry A inputs
            if (dc->kind == CellKind::LUT4 && sc->kind == CellKind::CARRY4 && s.pin.pin.size() == 2 &&
                s.pin.pin[0] == 'A') {
                if (tile_of(*dc) != tile_of(*sc) || dev.bels[dc->bel].name != "LUT" + std::string(1, s.pin.pin[1]))
                    bad("carry input " + sc->id + "." + s.pin.pin + " must come from slot LUT" + s.pin.pin[1] +
                        " of the same tile (driver " + dc->id + " at " + dev.bel_name(dc->bel) + ")");
            }
            // mux data inputs from the slot pair
            if (dc->kind == CellKind::LUT4 && sc->kind == CellKind::MUXF2 &&
                (s.pin.pin == "I0" || s.pin.pin == "I1")) {
                int f = dev.bels[sc->bel].name[6] - '0';
                std::string want = "LUT" + std::to_string(2 * f + (s.pin.pin == "I1" ? 1 : 0));
                if (tile_of(*dc) != tile_of(*sc) || dev.bels[dc->bel].name != want)
                    bad("mux input " + sc->id + "." + s.pin.pin + " must come from " + want +
                        " of the same tile (driver at " + dev.bel_name(dc->bel) + ")");
            }
            // soft: FF next to its driving LUT
            if (dc->kind == CellKind::LUT4 && sc->kind == CellKind::FF && s.pin.pin == "D") {
                bool same_slot = tile_of(*dc) == tile_of(*sc) &&
                                 dev.bels[dc->bel].name.substr(3) == dev.bels[sc->bel].name.substr(2);
                if (!same_slot)
                    chk.warnings.push_back("FF " + sc->id + " is not in the slot of its driver " + dc->id +
                                           "; the route needs a channel hop");
            }
        }
    }
    chk.ok = chk.violations.empty();
    return chk;
}

} // namespace fabpatch

#endif
