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

// Step 4: merge-aware routing. Modification nets are routed through
// whatever the original design left free. Tap nets start from the entire
// original route tree of the tapped net; constant nets start from every
// tie-off; override sinks are the one place a mod net may legally touch an
// occupied wire. Bidirectional long-line pips block both directions at
// once, and a pip whose always-on stub would corrupt a used wire is off
// limits.

#ifndef FABRICPATCH_ROUTER_HPP
#define FABRICPATCH_ROUTER_HPP

#include <queue>

#include "fabricpatch/modkit.hpp"

namespace fabpatch {

struct RouteRequest
{
    std::string net_id;
    std::vector<WireId> sources;
    std::vector<WireId> sinks;
    std::set<WireId> allowed_sinks; // occupied wires this net may still enter
};

struct RouterStats
{
    int restarts = 0;
    size_t total_pips = 0;
    int longest_path = 0; // cost of the most expensive source->sink path
    std::map<std::string, size_t> net_pips;
};

namespace detail {

struct ModUsage
{
    std::map<WireId, std::string> wires; // wire -> owning mod net
    std::map<PipId, std::string> pips;
};

} // namespace detail

// Route one net; extends `use` and returns the route forest.
// `salt` perturbs only the tie-break between equal-cost paths (the true pip
// cost is scaled up so shortest paths stay shortest); restarts use different
// salts so repeated attempts explore different routes through contested
// regions.
inline RouteForest route_net(const Device &dev, const OccupancyMap &occ, const RouteRequest &req,
                             detail::ModUsage &use, size_t *pips_out = nullptr, int *longest_out = nullptr,
                             uint64_t salt = 0, const std::map<WireId, int> *reserve = nullptr,
                             const std::set<WireId> *own_reserve = nullptr,
                             const std::set<WireId> *forbid = nullptr)
{
    constexpr int kCostScale = 4096; // > any tie-break a path can accumulate
    if (req.sources.empty())
        throw Unroutable("net " + req.net_id + " has no source wires");

    auto wire_free_for = [&](WireId w) {
        if (occ.used_wires.count(w) && !req.allowed_sinks.count(w))
            return false;
        if (forbid && forbid->count(w))
            return false; // sole surviving entry of another net's pin
        auto it = use.wires.find(w);
        return it == use.wires.end() || it->second == req.net_id;
    };
    auto pip_legal = [&](const PipUse &u) {
        const PipData &pd = dev.pips[u.pip];
        if (occ.pip_blocked(pd, u.pip))
            return false;
        auto it = use.pips.find(u.pip);
        if (it != use.pips.end() && it->second != req.net_id)
            return false; // either direction of a bidirectional pip
        if (!wire_free_for(dev.pip_dst(u)))
            return false;
        if (!u.reverse && pd.secondary != kNoWire) {
            WireId sec = pd.secondary;
            if (occ.used_wires.count(sec))
                return false;
            auto ms = use.wires.find(sec);
            if (ms != use.wires.end() && ms->second != req.net_id)
                return false;
        }
        return true;
    };

    std::map<WireId, WireId> parent;       // tree edges of this net
    std::map<WireId, PipUse> parent_pip;
    std::set<WireId> tree(req.sources.begin(), req.sources.end());
    std::set<WireId> todo(req.sinks.begin(), req.sinks.end());
    for (WireId s : req.sinks)
        if (tree.count(s))
            todo.erase(s);

    size_t pips_used = 0;
    int longest = 0;

    std::vector<int> dist(dev.wires.size());
    std::vector<PipUse> via(dev.wires.size());
    while (!todo.empty()) {
        // Dijkstra from the current tree; the first sink popped is nearest
        std::fill(dist.begin(), dist.end(), INT32_MAX);
        using QE = std::pair<int, WireId>;
        std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
        for (WireId s : tree) {
            dist[s] = 0;
            pq.push({0, s});
        }
        WireId best = kNoWire;
        int bestd = INT32_MAX;
        while (!pq.empty()) {
            auto [d, w] = pq.top();
            pq.pop();
            if (d != dist[w])
                continue;
            if (todo.count(w)) {
                best = w;
                bestd = d;
                break;
            }
            for (const auto &u : dev.pips_from(w)) {
                if (!pip_legal(u))
                    continue;
                WireId nw = dev.pip_dst(u);
                int jitter = 0;
                if (salt != 0) {
                    uint64_t k = (uint64_t(uint32_t(nw)) << 24) ^ salt;
                    jitter = int(fnv1a64(&k, sizeof k) & 15);
                }
                if (reserve) {
                    // wires next to other nets' pins are scarce: their pin
                    // entries/exits have little or no alternative, so prefer
                    // equal-cost paths that stay clear of them
                    auto rit = reserve->find(nw);
                    if (rit != reserve->end()) {
                        int r = rit->second - (own_reserve && own_reserve->count(nw) ? 1 : 0);
                        jitter += 16 * kCostScale * std::min(r, 4);
                    }
                }
                int nd = d + dev.pips[u.pip].cost * kCostScale + jitter;
                if (nd < dist[nw] || (nd == dist[nw] && u < via[nw])) {
                    dist[nw] = nd;
                    via[nw] = u;
                    pq.push({nd, nw});
                }
            }
        }
        if (best == kNoWire)
            throw Unroutable("net " + req.net_id + ": sink " + dev.wire_name(*todo.begin()) + " unreachable");
        longest = std::max(longest, bestd / kCostScale);
        // claim the path back to the tree
        for (WireId w = best; !tree.count(w);) {
            PipUse u = via[size_t(w)];
            WireId pw = dev.pip_src(u);
            parent[w] = pw;
            parent_pip[w] = u;
            tree.insert(w);
            use.wires[w] = req.net_id;
            use.pips[u.pip] = req.net_id;
            WireId sec = !u.reverse ? dev.pips[u.pip].secondary : kNoWire;
            if (sec != kNoWire)
                use.wires.emplace(sec, req.net_id);
            pips_used++;
            w = pw;
        }
        todo.erase(best);
    }

    // assemble the forest from the parent map
    std::map<WireId, std::vector<WireId>> children;
    std::set<WireId> roots;
    for (auto &[w, pw] : parent) {
        children[pw].push_back(w);
        if (!parent.count(pw))
            roots.insert(pw);
    }
    std::function<RouteNode(WireId)> build = [&](WireId w) {
        RouteNode n{w, {}};
        for (WireId c : children[w])
            n.children.push_back(build(c));
        return n;
    };
    RouteForest forest;
    for (WireId r : roots)
        forest.push_back(build(r));
    if (pips_out)
        *pips_out = pips_used;
    if (longest_out)
        *longest_out = longest;
    return forest;
}

// Build the route requests for a bound modification netlist. Tap sources
// come from the tapped net's route, but only wires that are still driven:
// liberated branches keep their wires in the route description while their
// pips are already switched off.
inline std::vector<RouteRequest> build_route_requests(const Device &dev, const DesignNetlist &orig,
                                                      const ModSpec &mod, const OccupancyMap &occ)
{
    std::vector<RouteRequest> reqs;
    for (const auto &n : mod.netlist.nets) {
        RouteRequest req;
        req.net_id = n.id;

        switch (n.driver.kind) {
        case DriverKind::CellPin: {
            const Cell *c = mod.netlist.find_cell(n.driver.pin.cell);
            if (!c || c->bel < 0)
                throw MissingPlacement("net " + n.id + ": driver cell is not placed");
            req.sources.push_back(pin_wire(dev, c->bel, n.driver.pin.pin));
            break;
        }
        case DriverKind::Port: {
            auto it = mod.bindings.taps.find(n.driver.port);
            if (it == mod.bindings.taps.end())
                throw UnknownNet("net " + n.id + ": input port '" + n.driver.port + "' has no TAP binding");
            const Net *onet = orig.find_net(it->second);
            if (!onet)
                throw UnknownNet("tap binding of port '" + n.driver.port + "' references unknown net " + it->second);
            if (onet->driver.kind == DriverKind::CellPin) {
                const Cell *oc = orig.find_cell(onet->driver.pin.cell);
                if (oc && oc->bel >= 0) {
                    WireId w = pin_wire(dev, oc->bel, onet->driver.pin.pin);
                    if (w != kNoWire)
                        req.sources.push_back(w);
                }
            }
            std::set<std::pair<WireId, WireId>> oedges;
            std::set<WireId> owires;
            for (const auto &t : onet->route)
                detail::route_edges(t, oedges, owires);
            std::map<WireId, WireId> oparent;
            for (const auto &[a, b] : oedges)
                oparent[b] = a;
            for (WireId w : owires) {
                auto pit = oparent.find(w);
                if (pit != oparent.end()) {
                    bool live = false;
                    if (auto u = find_pip_use(dev, pit->second, w))
                        live = occ.used_pips.count(*u) != 0;
                    else if (auto su = find_secondary_pip_use(dev, pit->second, w))
                        live = occ.used_pips.count(*su) != 0;
                    if (!live)
                        continue;
                }
                req.sources.push_back(w);
            }
            break;
        }
        case DriverKind::Const0:
        case DriverKind::Const1: {
            const char *local = n.driver.kind == DriverKind::Const1 ? "VCC" : "GND";
            for (int y = 0; y < dev.height(); y++)
                for (int x = 0; x < dev.width(); x++) {
                    WireId w = dev.wire(x, y, local);
                    if (w != kNoWire)
                        req.sources.push_back(w);
                }
            break;
        }
        }

        for (const auto &s : n.sinks) {
            if (s.is_port) {
                auto it = mod.bindings.overrides.find(s.port);
                if (it == mod.bindings.overrides.end())
                    throw UnknownNet("net " + n.id + ": output port '" + s.port + "' has no OVERRIDE binding");
                for (const auto &pin : it->second) {
                    const Cell *oc = orig.find_cell(pin.cell);
                    if (!oc)
                        throw UnknownPin("override target " + pin.str() + " not in original design");
                    WireId w = pin_wire(dev, oc->bel, pin.pin);
                    req.sinks.push_back(w);
                    req.allowed_sinks.insert(w);
                }
            } else {
                const Cell *c = mod.netlist.find_cell(s.pin.cell);
                if (!c || c->bel < 0)
                    throw MissingPlacement("net " + n.id + ": sink cell " + s.pin.cell + " is not placed");
                if (is_permanent_pin(dev.bels[c->bel].kind, s.pin.pin))
                    continue; // hard-wired, nothing to route
                req.sinks.push_back(pin_wire(dev, c->bel, s.pin.pin));
            }
        }
        if (!req.sinks.empty())
            reqs.push_back(std::move(req));
    }
    return reqs;
}

// Route every modification net. On failure the offending net moves to the
// front of the order, all modification routes are discarded and routing
// starts over; after max_restarts the failure is final.
inline RouterStats route_all(const Device &dev, const DesignNetlist &orig, ModSpec &mod, const OccupancyMap &occ,
                             uint64_t seed = 1, int max_restarts = 64)
{
    auto reqs = build_route_requests(dev, orig, mod, occ);

    // soft reservations: the wires a net must pass right before its sinks
    // and right after its (single-wire) sources often have no substitute
    std::map<WireId, int> reserve;
    std::vector<std::set<WireId>> own(reqs.size());
    for (size_t ri = 0; ri < reqs.size(); ri++) {
        auto &o = own[ri];
        for (WireId sw : reqs[ri].sinks) {
            auto into = dev.pips_into(sw);
            for (const auto &u : into) {
                WireId ew = dev.pip_src(u);
                o.insert(ew);
                // a pin with very few entries also needs its approach ring
                // kept clear, or transit traffic walls the pin in
                if (into.size() <= 3)
                    for (const auto &v : dev.pips_into(ew))
                        o.insert(dev.pip_src(v));
            }
        }
        if (reqs[ri].sources.size() == 1)
            for (const auto &u : dev.pips_from(reqs[ri].sources[0]))
                o.insert(dev.pip_dst(u));
        for (WireId w : o)
            reserve[w]++;
    }

    // hard reservations: a pin whose every entry but one is already taken by
    // the original design leaves no room for negotiation; that last entry
    // wire belongs to the pin's net and nobody else may route over it
    std::map<WireId, size_t> exclusive;
    for (size_t ri = 0; ri < reqs.size(); ri++)
        for (WireId sw : reqs[ri].sinks) {
            std::vector<WireId> open;
            for (const auto &u : dev.pips_into(sw)) {
                if (occ.pip_blocked(dev.pips[u.pip], u.pip))
                    continue;
                WireId ew = dev.pip_src(u);
                if (!occ.used_wires.count(ew))
                    open.push_back(ew);
            }
            if (open.size() == 1)
                exclusive.emplace(open[0], ri);
        }
    std::vector<std::set<WireId>> forbid(reqs.size());
    for (const auto &[w, owner] : exclusive)
        for (size_t ri = 0; ri < reqs.size(); ri++)
            if (ri != owner)
                forbid[ri].insert(w);

    std::vector<size_t> order(reqs.size());
    for (size_t i = 0; i < order.size(); i++)
        order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    RouterStats stats;
    std::string last_error;
    for (stats.restarts = 0; stats.restarts <= max_restarts; stats.restarts++) {
        detail::ModUsage use;
        stats.total_pips = 0;
        stats.longest_path = 0;
        stats.net_pips.clear();
        for (auto &n : mod.netlist.nets)
            n.route.clear();
        size_t failed = SIZE_MAX;
        for (size_t oi = 0; oi < order.size(); oi++) {
            auto &req = reqs[order[oi]];
            try {
                size_t pips = 0;
                int longest = 0;
                RouteForest forest = route_net(dev, occ, req, use, &pips, &longest,
                                               stats.restarts == 0 ? 0 : seed + uint64_t(stats.restarts),
                                               &reserve, &own[order[oi]], &forbid[order[oi]]);
                mod.netlist.find_net(req.net_id)->route = std::move(forest);
                stats.total_pips += pips;
                stats.longest_path = std::max(stats.longest_path, longest);
                stats.net_pips[req.net_id] = pips;
            } catch (const Unroutable &e) {
                last_error = e.what();
                failed = oi;
                break;
            }
        }
        if (failed == SIZE_MAX)
            return stats;
        // reorder: the failed net goes first; earlier failures keep their
        // priority, everything else is reshuffled for the next attempt
        size_t f = order[failed];
        order.erase(order.begin() + failed);
        size_t prio = std::min<size_t>(size_t(stats.restarts), order.size());
        std::shuffle(order.begin() + ptrdiff_t(prio), order.end(), rng);
        order.insert(order.begin(), f);
    }
    throw UnroutableAfterRestarts("gave up after " + std::to_string(max_restarts) + " restarts; last failure: " +
                                  last_error);
}

// --------------------------------------------------------------------------
// Route audit: edges must be real pips, resources must not collide with the
// original design (override sinks excepted), stubs must stay harmless.
// --------------------------------------------------------------------------

struct RouteCheck
{
    bool ok = true;
    std::vector<std::string> violations;
};

inline RouteCheck check_routes(const Device &dev, const OccupancyMap &occ, const ModSpec &mod)
{
    RouteCheck chk;
    auto bad = [&](const std::string &m) { chk.violations.push_back(m); };

    // Occupied wires may only appear as roots (tap branch points) or leaves
    // (override sinks); interior use would corrupt the original signal.
    std::map<WireId, std::string> wire_owner; // non-root wires only
    std::map<PipId, std::string> pip_owner;
    for (const auto &n : mod.netlist.nets) {
        std::set<std::pair<WireId, WireId>> edges;
        std::set<WireId> wires;
        for (const auto &t : n.route)
            detail::route_edges(t, edges, wires);
        std::set<WireId> roots(wires);
        std::set<WireId> interior; // wires with outgoing edges
        for (const auto &[a, b] : edges) {
            roots.erase(b);
            interior.insert(a);
        }

        for (const auto &[a, b] : edges) {
            auto u = find_pip_use(dev, a, b);
            if (!u) {
                bad("net " + n.id + ": no pip " + dev.wire_name(a) + " -> " + dev.wire_name(b));
                continue;
            }
            const PipData &pd = dev.pips[u->pip];
            if (occ.pip_blocked(pd, u->pip))
                bad("net " + n.id + ": pip " + pd.feature + " is used by the original design");
            auto po = pip_owner.find(u->pip);
            if (po != pip_owner.end() && po->second != n.id)
                bad("nets " + po->second + " and " + n.id + " share pip " + pd.feature);
            pip_owner[u->pip] = n.id;
            if (!u->reverse && pd.secondary != kNoWire && occ.used_wires.count(pd.secondary))
                bad("net " + n.id + ": stub of pip " + pd.feature + " drives occupied wire " +
                    dev.wire_name(pd.secondary));
            if (occ.used_wires.count(b) && interior.count(b))
                bad("net " + n.id + ": routes through occupied wire " + dev.wire_name(b));
        }
        for (WireId wv : wires) {
            if (roots.count(wv))
                continue; // taps branch off original wires by design
            auto wo = wire_owner.find(wv);
            if (wo != wire_owner.end() && wo->second != n.id)
                bad("nets " + wo->second + " and " + n.id + " share wire " + dev.wire_name(wv));
            wire_owner[wv] = n.id;
        }
    }
    chk.ok = chk.violations.empty();
    return chk;
}

} // namespace fabpatch

#endif
