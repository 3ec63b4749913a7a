// fabric-patch: batch driver for the bitstream patching pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 step failure, 3 verification
// failure. Step failures carry the pipeline step number ("step-N: ...").

#include "CLI11.hpp"

#include "fabricpatch/merge.hpp"
#include "fabricpatch/modkit.hpp"
#include "fabricpatch/placer.hpp"
#include "fabricpatch/router.hpp"
#include "fabricpatch/scenarios.hpp"
#include "fabricpatch/sim.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace fabpatch;

namespace {

struct StepFailure
{
    int step;
    std::string what;
};

[[noreturn]] void fail_step(int step, const std::string &what) { throw StepFailure{step, what}; }

template <typename F> auto step(int n, F &&f) -> decltype(f())
{
    try {
        return f();
    } catch (const Error &e) {
        fail_step(n, e.what());
    } catch (const std::exception &e) {
        fail_step(n, e.what());
    }
}

std::vector<uint8_t> read_bytes(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidParams("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text(const std::string &path)
{
    auto b = read_bytes(path);
    return std::string(b.begin(), b.end());
}

void write_bytes(const std::string &path, const std::vector<uint8_t> &data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidParams("cannot write " + path);
    out.write(reinterpret_cast<const char *>(data.data()), std::streamsize(data.size()));
}

void write_text(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidParams("cannot write " + path);
    out << text;
}

Device load_device_file(const std::string &path) { return load_device(read_bytes(path)); }

Bitstream load_bitstream_file(const std::string &path) { return deserialize_bitstream(read_bytes(path)); }

// Shared state for the step subcommands: everything up to the requested
// stage is recomputed from the original bitstream and the mod netlist so
// each subcommand is self-contained.
struct Flow
{
    Device dev;
    DesignNetlist recon;
    OccupancyMap occ;
    ModSpec mod;
    std::vector<std::string> warnings;

    Flow(const std::string &dev_path, const std::string &base_path, const std::string &mod_path)
        : dev(step(1, [&] { return load_device_file(dev_path); }))
    {
        step(1, [&] {
            Bitstream base = load_bitstream_file(base_path);
            RevengResult rr = bitstream_to_netlist(dev, base);
            recon = std::move(rr.netlist);
            warnings = std::move(rr.warnings);
            occ = extract_occupancy(dev, recon);
            return 0;
        });
        step(2, [&] {
            mod = load_modnetlist(dev, read_text(mod_path));
            auto bw = bind_ports(dev, recon, mod);
            warnings.insert(warnings.end(), bw.begin(), bw.end());
            liberate_overrides(dev, recon, mod, occ);
            return 0;
        });
    }

    PlaceResult run_place()
    {
        return step(3, [&] { return place(dev, mod.netlist, occ, anchor_ports(dev, recon, mod)); });
    }

    RouterStats run_route(uint64_t seed, int max_restarts)
    {
        return step(4, [&] { return route_all(dev, recon, mod, occ, seed, max_restarts); });
    }

    ModFeatures features()
    {
        ModFeatures mf;
        mf.add = netlist_to_features(dev, mod.netlist);
        mf.clear = mod.override_branches;
        std::set<std::string> setf;
        for (const auto &[f, v] : mf.add.lines)
            if (v)
                setf.insert(f);
        mf.clear.erase(std::remove_if(mf.clear.begin(), mf.clear.end(),
                                      [&](const std::string &f) { return setf.count(f) != 0; }),
                       mf.clear.end());
        return mf;
    }

    bool placed() const
    {
        for (const auto &c : mod.netlist.cells)
            if (c.bel < 0)
                return false;
        return true;
    }

    bool routed() const
    {
        for (const auto &n : mod.netlist.nets)
            if (!n.route.empty())
                return true;
        return false;
    }
};

void print_warnings(const std::vector<std::string> &ws)
{
    for (const auto &w : ws)
        std::cerr << "warning: " << w << "\n";
}

std::string clear_fa_text(const std::vector<std::string> &clear)
{
    std::string out;
    std::vector<std::string> sorted = clear;
    std::sort(sorted.begin(), sorted.end());
    for (const auto &f : sorted)
        out += f + "\n";
    return out;
}

Stimulus parse_stimulus(const std::string &text)
{
    Stimulus st;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string name, bits;
        ls >> name >> bits;
        auto &v = st.inputs[name];
        for (char c : bits)
            v.push_back(c == '1');
        st.cycles = std::max(st.cycles, int(v.size()));
    }
    return st;
}

int dispatch(int argc, char **argv)
{
    CLI::App app{"fabric-patch: patch pre-synthesized modification circuits into FPGA bitstreams"};
    app.require_subcommand(1);

    std::string dev_path, base_path, mod_path, fa_path, bs_path, nl_path, out_path, out_dir = ".";
    std::string patched_path, report_format = "text", stim_path;
    uint64_t seed = 0;
    int max_restarts = 64, cycles = 96, seeds = 5, stop_after = 5;
    bool expect_equal = false, do_verify = false, emit_traces = false;

    // ---- gen-device -----------------------------------------------------
    auto *gen = app.add_subcommand("gen-device", "build a device and write its image");
    DeviceParams gp = reference_device_params();
    gen->add_option("--width", gp.width);
    gen->add_option("--height", gp.height);
    gen->add_option("--wires", gp.wires_per_side);
    gen->add_option("--longs", gp.long_lines);
    gen->add_option("--bram-cols", gp.bram_columns, "BRAM column x positions");
    gen->add_option("--seed", gp.seed);
    gen->add_option("-o,--output", out_path)->required();
    gen->callback([&] {
        Device d = step(1, [&] { return build_device(gp); });
        write_bytes(out_path, persist_device(d));
        std::cout << "device " << d.width() << "x" << d.height() << " digest 0x" << std::hex << d.digest << std::dec
                  << " -> " << out_path << "\n";
    });

    // ---- decode / encode ------------------------------------------------
    auto *dec = app.add_subcommand("decode", "bitstream -> feature assembly");
    dec->add_option("--device", dev_path)->required();
    dec->add_option("-b,--bitstream", bs_path)->required();
    dec->add_option("-o,--output", out_path)->required();
    dec->callback([&] {
        step(1, [&] {
            Device d = load_device_file(dev_path);
            DecodedBitstream db = decode_bitstream(d, load_bitstream_file(bs_path));
            write_text(out_path, emit_fa(d, db.fa));
            std::cout << "features " << db.fa.lines.size() << " opaque-bits " << db.opaque_bits.size() << "\n";
            return 0;
        });
    });

    auto *enc = app.add_subcommand("encode", "feature assembly -> bitstream");
    enc->add_option("--device", dev_path)->required();
    enc->add_option("--fa", fa_path)->required();
    enc->add_option("-o,--output", out_path)->required();
    enc->callback([&] {
        step(1, [&] {
            Device d = load_device_file(dev_path);
            Bitstream bs = encode_bitstream(d, parse_fa(d, read_text(fa_path)));
            write_bytes(out_path, serialize_bitstream(bs));
            return 0;
        });
    });

    // ---- reveng ---------------------------------------------------------
    auto *rev = app.add_subcommand("reveng", "bitstream -> placed-and-routed netlist");
    rev->add_option("--device", dev_path)->required();
    rev->add_option("-b,--bitstream", bs_path)->required();
    rev->add_option("-o,--output", out_path)->required();
    rev->callback([&] {
        step(1, [&] {
            Device d = load_device_file(dev_path);
            RevengResult rr = bitstream_to_netlist(d, load_bitstream_file(bs_path));
            print_warnings(rr.warnings);
            write_text(out_path, write_netlist(d, rr.netlist));
            std::cout << "cells " << rr.netlist.cells.size() << " nets " << rr.netlist.nets.size() << "\n";
            return 0;
        });
    });

    // ---- place / route --------------------------------------------------
    auto add_flow_opts = [&](CLI::App *c) {
        c->add_option("--device", dev_path)->required();
        c->add_option("--base", base_path, "original bitstream")->required();
        c->add_option("--mod", mod_path, "modification netlist with port bindings")->required();
    };

    auto *plc = app.add_subcommand("place", "place the modification onto free sites");
    add_flow_opts(plc);
    plc->add_option("-o,--output", out_path)->required();
    plc->callback([&] {
        Flow f(dev_path, base_path, mod_path);
        PlaceResult pr = f.run_place();
        print_warnings(f.warnings);
        print_warnings(pr.warnings);
        write_text(out_path, write_netlist(f.dev, f.mod.netlist, &f.mod.bindings));
        std::cout << "placement cost " << pr.cost << (pr.exhaustive ? " (exhaustive optimum)" : "") << "\n";
    });

    auto *rte = app.add_subcommand("route", "route the placed modification");
    add_flow_opts(rte);
    rte->add_option("-o,--output", out_path)->required();
    rte->add_option("--seed", seed);
    rte->add_option("--max-restarts", max_restarts);
    rte->callback([&] {
        Flow f(dev_path, base_path, mod_path);
        if (!f.placed())
            f.run_place();
        RouterStats rs = f.run_route(seed ? seed : 1, max_restarts);
        print_warnings(f.warnings);
        write_text(out_path, write_netlist(f.dev, f.mod.netlist, &f.mod.bindings));
        std::cout << "nets " << rs.net_pips.size() << " pips " << rs.total_pips << " restarts " << rs.restarts
                  << " longest-path-cost " << rs.longest_path << "\n";
    });

    // ---- merge ----------------------------------------------------------
    auto *mrg = app.add_subcommand("merge", "merge the routed modification into the bitstream");
    add_flow_opts(mrg);
    mrg->add_option("-o,--out-dir", out_dir);
    mrg->add_option("--report-format", report_format)->check(CLI::IsMember({"text", "kv"}));
    mrg->callback([&] {
        Flow f(dev_path, base_path, mod_path);
        if (!f.placed())
            f.run_place();
        if (!f.routed())
            f.run_route(1, max_restarts);
        MergeReport rep;
        Bitstream merged = step(5, [&] {
            return merge_bitstreams(f.dev, load_bitstream_file(base_path), f.features(), &rep);
        });
        print_warnings(f.warnings);
        fs::create_directories(out_dir);
        ModFeatures mf = f.features();
        write_bytes(out_dir + "/patched.bit", serialize_bitstream(merged));
        write_text(out_dir + "/patched.add.fa", emit_fa(f.dev, mf.add));
        write_text(out_dir + "/patched.clear.fa", clear_fa_text(mf.clear));
        write_text(out_dir + "/report.txt", render_report(rep, report_format));
        std::cout << render_report(rep, report_format);
    });

    // ---- verify ---------------------------------------------------------
    auto *ver = app.add_subcommand("verify", "design-rule-check a bitstream; optionally compare traces");
    ver->add_option("--device", dev_path)->required();
    ver->add_option("-b,--bitstream", bs_path, "bitstream to check")->required();
    ver->add_option("--against", patched_path, "second bitstream for trace comparison");
    ver->add_option("--cycles", cycles);
    ver->add_option("--seeds", seeds);
    ver->add_flag("--expect-equal", expect_equal, "fail unless pad traces match");
    ver->callback([&] {
        Device d = step(1, [&] { return load_device_file(dev_path); });
        Bitstream bs = step(1, [&] { return load_bitstream_file(bs_path); });
        DrcResult drc = drc_bitstream(d, bs);
        for (const auto &v : drc.violations)
            std::cout << "violation: " << v << "\n";
        print_warnings(drc.warnings);
        std::cout << "drc " << (drc.ok ? "clean" : "FAILED") << "\n";
        bool equal_ok = true;
        if (!patched_path.empty()) {
            DesignNetlist a = step(1, [&] { return bitstream_to_netlist(d, bs).netlist; });
            DesignNetlist b = step(1, [&] {
                return bitstream_to_netlist(d, load_bitstream_file(patched_path)).netlist;
            });
            for (int s = 0; s < seeds; s++) {
                std::string why;
                Stimulus st = Stimulus::random(d, a, cycles, uint64_t(s) + 1);
                bool eq = equivalent_under(d, a, b, st, {}, &why);
                std::cout << "seed " << s + 1 << ": " << (eq ? "equivalent" : "different (" + why + ")") << "\n";
                if (!eq)
                    equal_ok = false;
            }
        }
        if (!drc.ok || (expect_equal && !equal_ok))
            std::exit(3);
    });

    // ---- sim ------------------------------------------------------------
    auto *simc = app.add_subcommand("sim", "simulate a netlist and dump a VCD trace");
    simc->add_option("--device", dev_path)->required();
    simc->add_option("--netlist", nl_path, "netlist text file");
    simc->add_option("-b,--bitstream", bs_path, "or: bitstream to reverse-engineer first");
    simc->add_option("--stimulus", stim_path, "per-pad bit strings, one 'name bits' pair per line");
    simc->add_option("--cycles", cycles);
    simc->add_option("--seed", seed);
    simc->add_option("-o,--output", out_path)->required();
    simc->callback([&] {
        Device d = step(1, [&] { return load_device_file(dev_path); });
        DesignNetlist nl;
        if (!nl_path.empty())
            nl = step(1, [&] { return read_netlist(d, read_text(nl_path)); });
        else if (!bs_path.empty())
            nl = step(1, [&] { return bitstream_to_netlist(d, load_bitstream_file(bs_path)).netlist; });
        else
            throw CLI::ValidationError("sim", "need --netlist or --bitstream");
        Stimulus st =
            stim_path.empty() ? Stimulus::random(d, nl, cycles, seed) : parse_stimulus(read_text(stim_path));
        Trace tr = step(1, [&] { return simulate(d, nl, st); });
        write_text(out_path, dump_vcd(tr));
        std::cout << "simulated " << tr.cycles << " cycles, " << tr.nets.size() << " nets -> " << out_path << "\n";
    });

    // ---- scenario -------------------------------------------------------
    std::string scenario_id;
    ScenarioConfig scfg;
    auto *scn = app.add_subcommand("scenario", "emit a case-study fixture (device, bitstream, mod netlist, traces)");
    scn->add_option("id", scenario_id, "cs1|cs2|cs3|cs4")->required()->check(CLI::IsMember(scenario_ids()));
    int s_key = scfg.key, s_tkey = scfg.trojan_key, s_trig = scfg.trigger;
    scn->add_option("-o,--out-dir", out_dir);
    scn->add_option("--key", s_key)->check(CLI::Range(0, 255));
    scn->add_option("--trojan-key", s_tkey)->check(CLI::Range(0, 255));
    scn->add_option("--trigger", s_trig)->check(CLI::Range(0, 255));
    scn->add_option("--depth", scfg.depth);
    scn->add_option("--cycles", scfg.cycles);
    scn->callback([&] {
        scfg.key = uint8_t(s_key);
        scfg.trojan_key = uint8_t(s_tkey);
        scfg.trigger = uint8_t(s_trig);
        Device d = step(1, [&] { return build_device(reference_device_params()); });
        fs::create_directories(out_dir);
        step(1, [&] {
            OriginalToy orig = build_original_toy(d, scfg);
            RevengResult rr = bitstream_to_netlist(d, orig.bitstream);
            ModSpec mod = build_scenario_mod(d, scenario_id, orig.netlist, rr.netlist, scfg);
            write_bytes(out_dir + "/device.mfdb", persist_device(d));
            write_bytes(out_dir + "/original.bit", serialize_bitstream(orig.bitstream));
            write_text(out_dir + "/original.nl", write_netlist(d, orig.netlist));
            write_text(out_dir + "/mod.nl", write_netlist(d, mod.netlist, &mod.bindings));
            // expected pad bytes under the canonical random stimulus
            Stimulus st = Stimulus::random(d, orig.netlist, scfg.cycles, 42);
            ModelTrace mt = model_scenario(scenario_id, scfg, stimulus_input_bits(d, st), scfg.cycles);
            std::ostringstream exp;
            for (int t = 0; t < scfg.cycles; t++)
                exp << int(mt.c[t]) << "\n";
            write_text(out_dir + "/expected_pads.txt", exp.str());
            return 0;
        });
        std::cout << "scenario " << scenario_id << " fixtures -> " << out_dir << "\n";
    });

    // ---- pipeline -------------------------------------------------------
    auto *pipe = app.add_subcommand("pipeline", "run the full five-step flow");
    add_flow_opts(pipe);
    pipe->add_option("-o,--out-dir", out_dir);
    pipe->add_option("--seed", seed);
    pipe->add_option("--max-restarts", max_restarts);
    pipe->add_option("--stop-after-step", stop_after)->check(CLI::Range(1, 5));
    pipe->add_option("--report-format", report_format)->check(CLI::IsMember({"text", "kv"}));
    pipe->add_flag("--verify", do_verify, "DRC the patched bitstream (exit 3 on violations)");
    pipe->add_flag("--emit-traces", emit_traces, "dump VCD traces of original and patched designs");
    pipe->callback([&] {
        fs::create_directories(out_dir);
        Device d = step(1, [&] { return load_device_file(dev_path); });
        Bitstream base = step(1, [&] { return load_bitstream_file(base_path); });
        DecodedBitstream db = step(1, [&] { return decode_bitstream(d, base); });
        write_text(out_dir + "/decoded.fa", emit_fa(d, db.fa));
        RevengResult rr = step(1, [&] { return bitstream_to_netlist(d, base); });
        write_text(out_dir + "/recon.nl", write_netlist(d, rr.netlist));
        OccupancyMap occ = extract_occupancy(d, rr.netlist);
        if (stop_after < 2)
            return;

        ModSpec mod = step(2, [&] { return load_modnetlist(d, read_text(mod_path)); });
        auto bw = step(2, [&] { return bind_ports(d, rr.netlist, mod); });
        step(2, [&] {
            liberate_overrides(d, rr.netlist, mod, occ);
            return 0;
        });
        print_warnings(rr.warnings);
        print_warnings(bw);
        if (stop_after < 3)
            return;

        PlaceResult pr = step(3, [&] { return place(d, mod.netlist, occ, anchor_ports(d, rr.netlist, mod)); });
        write_text(out_dir + "/placed.nl", write_netlist(d, mod.netlist, &mod.bindings));
        if (stop_after < 4)
            return;

        RouterStats rs = step(4, [&] { return route_all(d, rr.netlist, mod, occ, seed ? seed : 1, max_restarts); });
        write_text(out_dir + "/routed.nl", write_netlist(d, mod.netlist, &mod.bindings));
        if (stop_after < 5)
            return;

        ModFeatures mf;
        mf.add = netlist_to_features(d, mod.netlist);
        mf.clear = mod.override_branches;
        std::set<std::string> setf;
        for (const auto &[fk, v] : mf.add.lines)
            if (v)
                setf.insert(fk);
        mf.clear.erase(std::remove_if(mf.clear.begin(), mf.clear.end(),
                                      [&](const std::string &fk) { return setf.count(fk) != 0; }),
                       mf.clear.end());
        MergeReport rep;
        Bitstream merged = step(5, [&] { return merge_bitstreams(d, base, mf, &rep); });
        size_t override_pins = 0;
        for (const auto &[port, pins] : mod.bindings.overrides)
            override_pins += pins.size();
        rep.extra = {
            {"Signals Tapped", std::to_string(mod.bindings.taps.size())},
            {"Net Pins Overridden", std::to_string(override_pins)},
            {"Cells Added", std::to_string(mod.netlist.cells.size())},
            {"Placement Cost", std::to_string(pr.cost)},
            {"Nets Routed", std::to_string(rs.net_pips.size())},
            {"Routed PIPs", std::to_string(rs.total_pips)},
            {"Router Restarts", std::to_string(rs.restarts)},
        };
        write_bytes(out_dir + "/patched.bit", serialize_bitstream(merged));
        write_text(out_dir + "/patched.add.fa", emit_fa(d, mf.add));
        write_text(out_dir + "/patched.clear.fa", clear_fa_text(mf.clear));
        write_text(out_dir + "/report.txt", render_report(rep, report_format));
        std::cout << render_report(rep, report_format);

        if (emit_traces) {
            Stimulus st = Stimulus::random(d, rr.netlist, cycles, 42);
            write_text(out_dir + "/original.vcd", dump_vcd(simulate(d, rr.netlist, st)));
            DesignNetlist mn = step(5, [&] { return bitstream_to_netlist(d, merged).netlist; });
            write_text(out_dir + "/patched.vcd", dump_vcd(simulate(d, mn, st)));
        }
        if (do_verify) {
            DrcResult drc = drc_bitstream(d, merged);
            for (const auto &v : drc.violations)
                std::cout << "violation: " << v << "\n";
            std::cout << "drc " << (drc.ok ? "clean" : "FAILED") << "\n";
            if (!drc.ok)
                std::exit(3);
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    try {
        return dispatch(argc, argv);
    } catch (const StepFailure &sf) {
        std::cerr << "step-" << sf.step << ": " << sf.what << "\n";
        return 2;
    } catch (const Error &e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
