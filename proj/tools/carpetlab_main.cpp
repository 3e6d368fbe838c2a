#include "carpetlab/bending.hpp"
#include "carpetlab/carpet.hpp"
#include "carpetlab/curvefam.hpp"
#include "carpetlab/cutset.hpp"
#include "carpetlab/measure.hpp"
#include "carpetlab/modgraph.hpp"
#include "carpetlab/render.hpp"
#include "carpetlab/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace carpetlab;
using nlohmann::ordered_json;

namespace {

std::vector<int> parse_seq(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string part;
    while (std::getline(is, part, ',')) out.push_back(std::stoi(part));
    return out;
}

RPoint parse_point(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("point must be x,y");
    return RPoint{parse_rat(s.substr(0, comma)), parse_rat(s.substr(comma + 1))};
}

void write_out(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    f << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carpetlab: non-self-similar Sierpinski carpet laboratory"};
    app.require_subcommand(1);

    std::string seq_str = "3,5", gen_tag, out_path, mode = "empirical";
    std::string x_str = "0,0", y_str = "1,1", render_path;
    int level = 2, strip_level = -1, nparam = 2, cut_n = 1, samples = 50;
    double p = 2.0, q = 2.0, tol = 1e-6, c2 = 2.0;
    std::uint64_t seed = 0;
    bool relax = false;
    int level_lo = 1, level_hi = 2;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seq", seq_str, "comma-separated odd denominators");
        cmd->add_option("--level", level, "construction level M");
        cmd->add_option("--out", out_path, "output file (default stdout)");
        cmd->add_option("--seed", seed, "sampling seed");
    };

    auto* carpet_cmd = app.add_subcommand("carpet", "carpet construction");
    auto* carpet_gen = carpet_cmd->add_subcommand("gen", "summary + exact identities");
    add_common(carpet_gen);
    auto* carpet_render = carpet_cmd->add_subcommand("render", "SVG of the precarpet");
    add_common(carpet_render);

    auto* measure_cmd = app.add_subcommand("measure", "canonical measure");
    auto* measure_stats = measure_cmd->add_subcommand("stats", "ball mass CSV");
    add_common(measure_stats);
    measure_stats->add_option("--samples", samples, "number of (x, r) samples");

    auto* modulus_cmd = app.add_subcommand("modulus", "discrete p-modulus");
    auto* mod_cross = modulus_cmd->add_subcommand("crossing", "left-right crossings");
    add_common(mod_cross);
    mod_cross->add_option("--p", p, "exponent in [1,8]");
    mod_cross->add_option("--tol", tol, "oracle tolerance");
    auto* mod_keith = modulus_cmd->add_subcommand("keith", "Keith functional ratio");
    add_common(mod_keith);
    mod_keith->add_option("--p", p);
    mod_keith->add_option("--tol", tol);
    mod_keith->add_option("--c2", c2, "kernel ball factor C2");
    mod_keith->add_option("--x", x_str, "rational point a/b,c/d");
    mod_keith->add_option("--y", y_str);

    auto* blocks_cmd = app.add_subcommand("blocks", "building blocks");
    auto* blocks_chain = blocks_cmd->add_subcommand("chain", "Lemma 5.9-style chain");
    add_common(blocks_chain);
    blocks_chain->add_option("--x", x_str);
    blocks_chain->add_option("--y", y_str);
    blocks_chain->add_flag("--relax", relax, "allow denominators >= 5 instead of >= 21");
    blocks_chain->add_option("--render", render_path, "SVG overlay path");

    auto* bend_cmd = app.add_subcommand("bend", "curve-family bending");
    auto* bend_pipe = bend_cmd->add_subcommand("pipeline", "bend the strip family");
    add_common(bend_pipe);
    bend_pipe->add_option("--q", q, "Holder conjugate exponent");
    bend_pipe->add_option("--strip", strip_level, "strip level (default M-1)");
    bend_pipe->add_option("--mode", mode, "certified | empirical");
    bend_pipe->add_option("--n", nparam, "bump scale exponent N");
    bend_pipe->add_option("--render", render_path, "SVG of bent curves");

    auto* cutset_cmd = app.add_subcommand("cutset", "folding cut sets");
    auto* cutset_build = cutset_cmd->add_subcommand("build", "region dump");
    add_common(cutset_build);
    cutset_build->add_option("--n", cut_n, "folding depth");
    cutset_build->add_option("--render", render_path, "SVG of the regions");

    auto* sweep_cmd = app.add_subcommand("sweep", "experiment tables");
    auto* sweep_thr = sweep_cmd->add_subcommand("threshold", "threshold study rows");
    add_common(sweep_thr);
    sweep_thr->add_option("--gen", gen_tag, "constant:k | l1 | l2 (overrides --seq)");
    sweep_thr->add_option("--levels", level_hi, "highest level");
    sweep_thr->add_option("--level-lo", level_lo, "lowest level");
    sweep_thr->add_option("--p", p);
    sweep_thr->add_option("--q", q);
    sweep_thr->add_option("--tol", tol);

    CLI11_PARSE(app, argc, argv);

    try {
        if (carpet_gen->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            ordered_json j;
            j["schema"] = 1;
            j["denominators"] = parse_seq(seq_str);
            j["level"] = level;
            j["cell_count"] = seq.cell_count(level);
            j["side"] = rat_to_string(seq.side(level));
            j["area"] = rat_to_string(carpet::precarpet_area(seq, level));
            j["cantor_length"] = rat_to_string(carpet::cantor_length(seq, level));
            j["l1_partial"] = rat_to_string(seq.l1_partial(level));
            j["l2_partial"] = rat_to_string(seq.l2_partial(level));
            write_out(out_path, j.dump(2) + "\n");
        } else if (carpet_render->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            write_out(out_path, render::render_carpet(seq, level));
        } else if (measure_stats->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            measure::CanonicalMeasure mu(seq);
            std::ostringstream os;
            os << "# schema: 1\nx,y,r,lower,upper,h,ratio\n";
            std::uint64_t st = seed ^ 0x5eedULL;
            for (int i = 0; i < samples; ++i) {
                std::int64_t g = seq.grid(level);
                std::int64_t gx = (std::int64_t)(sweep::mix64(st) % (std::uint64_t)g);
                std::int64_t gy = (std::int64_t)(sweep::mix64(st) % (std::uint64_t)g);
                if (!carpet::is_retained(seq, carpet::GlobalCell{level, gx, gy})) continue;
                RPoint x{Rat(gx) * seq.side(level), Rat(gy) * seq.side(level)};
                double rr = std::pow(10.0, -1.3 + 1.3 * sweep::unit_double(st));
                auto [lo, hi] = mu.ball_mass(x, rat_from_double(rr), level);
                double h = mu.h_estimate(rr);
                double mid = 0.5 * (to_double(lo) + to_double(hi));
                char buf[256];
                std::snprintf(buf, sizeof buf, "%s,%s,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                              rat_to_string(x.x).c_str(), rat_to_string(x.y).c_str(), rr,
                              to_double(lo), to_double(hi), h, mid / h);
                os << buf;
            }
            write_out(out_path, os.str());
        } else if (mod_cross->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            auto g = modgraph::build_grid(seq, level);
            auto res = modgraph::solve_modulus(g, modgraph::crossing_family(g), p, g.node_weight,
                                               tol);
            ordered_json j;
            j["schema"] = 1;
            j["value"] = res.value;
            j["gap"] = res.gap;
            j["iterations"] = res.iterations;
            j["converged"] = res.converged;
            j["strip_bound_l1"] = to_double(modgraph::crossing_upper_bound_l1(seq, level));
            write_out(out_path, j.dump(2) + "\n");
        } else if (mod_keith->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            auto g = modgraph::build_grid(seq, level);
            measure::CanonicalMeasure mu(seq);
            auto kr = modgraph::keith_ratio(g, mu, parse_point(x_str), parse_point(y_str), p, c2,
                                            tol);
            ordered_json j;
            j["schema"] = 1;
            j["ratio"] = kr.ratio;
            j["value"] = kr.mod.value;
            j["gap"] = kr.mod.gap;
            j["iterations"] = kr.mod.iterations;
            write_out(out_path, j.dump(2) + "\n");
        } else if (blocks_chain->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            curvefam::ChainOptions opts;
            opts.enforce_scale_bound = !relax;
            auto chain = curvefam::block_chain(seq, parse_point(x_str), parse_point(y_str), level,
                                               opts);
            auto rep = curvefam::validate_chain(seq, chain);
            ordered_json j;
            j["schema"] = 1;
            j["blocks"] = ordered_json::array();
            for (const auto& l : chain.links) {
                RRect r = l.block.rect(seq);
                j["blocks"].push_back({{"level", l.block.level},
                                       {"x0", rat_to_string(r.x0)},
                                       {"y0", rat_to_string(r.y0)},
                                       {"x1", rat_to_string(r.x1)},
                                       {"y1", rat_to_string(r.y1)},
                                       {"kind", curvefam::to_string(l.kind)},
                                       {"reversed", l.reversed},
                                       {"endpoint", l.endpoint}});
            }
            j["mid"] = chain.mid;
            j["level_m"] = chain.level_m;
            j["clauses"] = ordered_json::array();
            for (const auto& e : rep.entries) {
                j["clauses"].push_back({{"clause", e.clause},
                                        {"pass", e.pass},
                                        {"margin", e.margin},
                                        {"note", e.note}});
            }
            j["all_pass"] = rep.all_pass();
            write_out(out_path, j.dump(2) + "\n");
            if (!render_path.empty())
                write_out(render_path, render::render_chain(seq, chain));
            return rep.all_pass() ? 0 : 1;
        } else if (bend_pipe->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            int m0 = strip_level >= 0 ? strip_level : level - 1;
            auto res = bending::bend_pipeline(seq, m0, level, q,
                                              mode == "certified" ? bending::BendMode::Certified
                                                                  : bending::BendMode::Empirical,
                                              nparam);
            ordered_json j;
            j["schema"] = 1;
            j["initial_norm"] = res.initial_norm;
            j["w_norm_q"] = res.w_norm_q;
            j["lower_bound"] = res.lower_bound;
            j["spacing_ok"] = res.spacing_ok;
            j["pushes"] = ordered_json::array();
            for (const auto& r : res.rows) {
                j["pushes"].push_back(
                    {{"level", r.level}, {"zx", r.zx}, {"zy", r.zy}, {"gain", r.gain},
                     {"notes", r.notes}});
            }
            write_out(out_path, j.dump(2) + "\n");
            if (!render_path.empty()) write_out(render_path, render::render_bend(seq, level, res));
        } else if (cutset_build->parsed()) {
            auto seq = carpet::ScaleSequence::validate(parse_seq(seq_str));
            cutset::FoldData fd(seq, cut_n);
            ordered_json j;
            j["schema"] = 1;
            j["n"] = cut_n;
            j["measure_bound"] = rat_to_string(fd.measure_bound());
            j["levels"] = ordered_json::array();
            for (const auto& lv : fd.levels()) {
                ordered_json rects = ordered_json::array();
                for (const auto& r : lv.rects) {
                    rects.push_back({rat_to_string(r.x0), rat_to_string(r.y0), rat_to_string(r.x1),
                                     rat_to_string(r.y1)});
                }
                j["levels"].push_back(
                    {{"level", lv.level}, {"l", lv.l}, {"rects", rects},
                     {"triangles", lv.triangles.size()}});
            }
            auto cut = fd.unfold_set();
            j["excluded_polygons"] = cut.excluded.size();
            if (level >= cut_n + 1) {
                std::int64_t partial = 0;
                auto [lo, hi] = fd.measure_exact(level, &partial);
                j["measure_exact"] = {
                    {"M", level}, {"lower", rat_to_string(lo)}, {"upper", rat_to_string(hi)},
                    {"partial_cells", partial}};
            }
            write_out(out_path, j.dump(2) + "\n");
            if (!render_path.empty()) write_out(render_path, render::render_cutset(fd, level));
        } else if (sweep_thr->parsed()) {
            sweep::ExperimentConfig cfg;
            cfg.seq = gen_tag.empty() ? parse_seq(seq_str) : sweep::make_sequence(gen_tag, level_hi);
            cfg.level_lo = level_lo;
            cfg.level_hi = level_hi;
            cfg.p = p;
            cfg.q = q;
            cfg.tol = tol;
            cfg.seed = seed;
            auto rows = sweep::run_threshold_sweep(cfg);
            if (!out_path.empty() && out_path != "-") {
                write_out(out_path + ".csv", sweep::emit_csv(rows));
                write_out(out_path + ".json", sweep::emit_json(rows));
            } else {
                std::cout << sweep::emit_csv(rows);
            }
            for (const auto& r : rows) {
                if (!r.pass) return 1;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
