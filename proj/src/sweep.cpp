#include "carpetlab/sweep.hpp"

#include "carpetlab/bending.hpp"
#include "carpetlab/curvefam.hpp"
#include "carpetlab/cutset.hpp"
#include "carpetlab/modgraph.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace carpetlab::sweep {

std::uint64_t mix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
double unit_double(std::uint64_t& state) { return (mix64(state) >> 11) * 0x1.0p-53; }

std::vector<int> make_sequence(const std::string& tag, int count) {
    std::vector<int> out;
    if (tag.rfind("constant:", 0) == 0) {
        int k = std::stoi(tag.substr(9));
        out.assign(count, k);
    } else if (tag == "l1") {
        for (int m = 1; m <= count; ++m) out.push_back(2 * m * m + 1);
    } else if (tag == "l2") {
        for (int m = 1; m <= count; ++m) out.push_back(2 * m + 1);
    } else {
        throw std::invalid_argument("unknown sequence tag: " + tag);
    }
    return out;
}

namespace {
RPoint random_carpet_corner(const carpet::ScaleSequence& seq, int M,
                            std::uint64_t& state) {
    std::int64_t g = seq.grid(M);
    for (int tries = 0; tries < 256; ++tries) {
        std::int64_t gx = (std::int64_t)(mix64(state) % (std::uint64_t)g);
        std::int64_t gy = (std::int64_t)(mix64(state) % (std::uint64_t)g);
        if (carpet::is_retained(seq, carpet::GlobalCell{M, gx, gy})) {
            return {Rat(gx) * seq.side(M), Rat(gy) * seq.side(M)};
        }
    }
    return {Rat(0), Rat(0)};
}
}  // namespace

std::vector<ResultRow> run_threshold_sweep(const ExperimentConfig& cfg) {
    auto seq = carpet::ScaleSequence::validate(cfg.seq);
    std::vector<ResultRow> rows;
    auto add = [&](int M, const std::string& quantity, double value, double bound, bool pass) {
        rows.push_back({cfg.id, M, quantity, value, bound, pass});
    };
    std::vector<double> mod1_values;
    for (int M = cfg.level_lo; M <= cfg.level_hi; ++M) {
        double strip = to_double(modgraph::crossing_upper_bound_l1(seq, M));
        add(M, "l1_strip_bound", strip, 0.0, true);
        try {
            auto g = modgraph::build_grid(seq, M);
            auto fam = modgraph::crossing_family(g);
            auto m1 = modgraph::solve_modulus(g, fam, 1.0, g.node_weight, cfg.tol);
            mod1_values.push_back(m1.value);
            add(M, "mod1_crossing", m1.value, strip, m1.value <= strip + 1e-6);
            auto m2 = modgraph::solve_modulus(g, fam, 2.0, g.node_weight, cfg.tol);
            add(M, "mod2_crossing", m2.value, 0.0, m2.value > 0.0 && m2.converged);
        } catch (const std::exception&) {
            add(M, "mod_crossing_error", 0.0, 0.0, false);
        }
        double pi_len = to_double(carpet::cantor_length(seq, M));
        try {
            auto ps = curvefam::pi_set(
                seq, curvefam::LatticeEdge{0, {false, Rat(0), Rat(0), Rat(1)}}, M);
            add(M, "pi_length", to_double(ps.length), pi_len, ps.length == carpet::cantor_length(seq, M));
        } catch (const std::exception&) {
            add(M, "pi_length_error", 0.0, pi_len, false);
        }
        if (M >= 2) {
            try {
                cutset::FoldData fd(seq, M - 1);
                add(M, "measure_bound", to_double(fd.measure_bound()), 1.0, true);
            } catch (const std::exception&) {
                add(M, "measure_bound_error", 0.0, 0.0, false);
            }
        }
        if (M >= 2) {
            try {
                auto bend = bending::bend_pipeline(seq, M - 1, M, cfg.q,
                                                   bending::BendMode::Empirical, cfg.bend_N);
                auto g = modgraph::build_grid(seq, M);
                auto m2 = modgraph::solve_modulus(g, modgraph::crossing_family(g), 2.0,
                                                  g.node_weight, cfg.tol);
                add(M, "bend_lower_bound", bend.lower_bound, m2.value * 1.5,
                    bend.lower_bound <= m2.value * 1.5);
            } catch (const std::exception&) {
                add(M, "bend_error", 0.0, 0.0, false);
            }
        }
        if (M >= 2 && cfg.keith_pairs > 0) {
            std::uint64_t st = cfg.seed ^ (0x9e37ULL * M);
            try {
                auto g = modgraph::build_grid(seq, M);
                measure::CanonicalMeasure mu(seq);
                int done = 0;
                double acc = 0.0;
                for (int i = 0; i < cfg.keith_pairs * 8 && done < cfg.keith_pairs; ++i) {
                    auto x = random_carpet_corner(seq, M, st);
                    auto y = random_carpet_corner(seq, M, st);
                    if (dist2(x, y) < 16 * sqr(seq.side(M))) continue;
                    auto kr = modgraph::keith_ratio(g, mu, x, y, cfg.p, 2.0, cfg.tol);
                    acc += kr.ratio;
                    ++done;
                }
                if (done > 0) add(M, "keith_ratio_mean", acc / done, 0.0, acc > 0.0);
            } catch (const std::exception&) {
                add(M, "keith_error", 0.0, 0.0, false);
            }
        }
    }
    // Trend flags across the level range.
    if (mod1_values.size() >= 2) {
        bool decaying = true;
        for (size_t i = 1; i < mod1_values.size(); ++i) {
            if (mod1_values[i] >= mod1_values[i - 1] - 1e-12) decaying = false;
        }
        double infinite_floor = 1.0;
        for (int j = 1; j <= seq.levels(); ++j)
            infinite_floor *= (double)seq.n(j) / (seq.n(j) + 1.0);
        bool floored = true;
        for (double v : mod1_values) {
            if (v < infinite_floor - 1e-6) floored = false;
        }
        Rat l1 = seq.l1_partial(seq.levels());
        bool looks_l1 = to_double(l1) < 1.0;  // truncation heuristic
        add(cfg.level_hi, "mod1_trend", decaying ? 1.0 : 0.0, floored ? 1.0 : 0.0,
            looks_l1 ? floored : decaying);
    }
    return rows;
}

std::string emit_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "# schema: 1\n";
    os << "experiment,M,quantity,value,bound,pass\n";
    char buf[64];
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.M << ',' << r.quantity << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.bound);
        os << buf << ',' << (r.pass ? 1 : 0) << '\n';
    }
    return os.str();
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<ResultRow> rows;
    bool schema_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("schema: 1") != std::string::npos) schema_seen = true;
            continue;
        }
        if (line.rfind("experiment,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string part;
        ResultRow r;
        std::getline(ls, r.experiment, ',');
        std::getline(ls, part, ',');
        r.M = std::stoi(part);
        std::getline(ls, r.quantity, ',');
        std::getline(ls, part, ',');
        r.value = std::strtod(part.c_str(), nullptr);
        std::getline(ls, part, ',');
        r.bound = std::strtod(part.c_str(), nullptr);
        std::getline(ls, part, ',');
        r.pass = part == "1";
        rows.push_back(r);
    }
    if (!schema_seen) throw std::invalid_argument("parse_csv: missing schema header");
    return rows;
}

std::string emit_json(const std::vector<ResultRow>& rows) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"experiment", r.experiment},
                             {"M", r.M},
                             {"quantity", r.quantity},
                             {"value", r.value},
                             {"bound", r.bound},
                             {"pass", r.pass}});
    }
    return j.dump(2) + "\n";
}

}  // namespace carpetlab::sweep
