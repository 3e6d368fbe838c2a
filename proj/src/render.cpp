#include "carpetlab/render.hpp"

#include <sstream>

namespace carpetlab::render {

namespace {
constexpr int kDigits = 7;
constexpr std::int64_t kCellCap = 100'000;

std::string num(const Rat& r) { return rat_to_decimal(r, kDigits); }
std::string num(double v) { return rat_to_decimal(rat_from_double(v), kDigits); }

// y-flip so the carpet origin sits at the lower-left of the image.
void open_svg(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\" "
          "width=\"640\" height=\"640\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<g transform=\"translate(0,1) scale(1,-1)\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" fill=\"white\"/>\n";
}
void close_svg(std::ostringstream& os) { os << "</g>\n</svg>\n"; }

void cell_rects(std::ostringstream& os, const carpet::ScaleSequence& seq, int M,
                const std::string& fill) {
    if (seq.cell_count(M) > kCellCap) throw std::length_error("render: cell cap exceeded");
    std::string side = num(seq.side(M));
    carpet::for_each_cell(seq, M, [&](const carpet::CellAddress& a) {
        RRect r = carpet::cell_rect(seq, a);
        os << "<rect x=\"" << num(r.x0) << "\" y=\"" << num(r.y0) << "\" width=\"" << side
           << "\" height=\"" << side << "\" fill=\"" << fill << "\"/>\n";
    });
}

void polyline(std::ostringstream& os, const curvefam::Polyline& pl, const std::string& stroke,
              const std::string& width) {
    os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width
       << "\" points=\"";
    for (size_t i = 0; i < pl.pts.size(); ++i) {
        if (i) os << ' ';
        os << num(pl.pts[i].x) << ',' << num(pl.pts[i].y);
    }
    os << "\"/>\n";
}
}  // namespace

std::string render_carpet(const carpet::ScaleSequence& seq, int M) {
    std::ostringstream os;
    open_svg(os, "precarpet level " + std::to_string(M));
    cell_rects(os, seq, M, "#333333");
    close_svg(os);
    return os.str();
}

std::string render_chain(const carpet::ScaleSequence& seq, const curvefam::BlockChain& chain,
                         int curve_samples) {
    std::ostringstream os;
    open_svg(os, "block chain");
    cell_rects(os, seq, chain.level_M, "#dddddd");
    for (const auto& link : chain.links) {
        RRect r = link.block.rect(seq);
        os << "<rect x=\"" << num(r.x0) << "\" y=\"" << num(r.y0) << "\" width=\""
           << num(r.width()) << "\" height=\"" << num(r.height())
           << "\" fill=\"none\" stroke=\"#2060c0\" stroke-width=\"0.002\"/>\n";
        auto e = link.block.leading_edge(seq);
        curvefam::Polyline lead{{e.seg.point_at(e.seg.lo), e.seg.point_at(e.seg.hi)}};
        polyline(os, lead, "#d03020", "0.004");
    }
    try {
        auto fam = curvefam::concatenate(seq, chain);
        for (int i = 1; i <= curve_samples; ++i) {
            Rat t = fam->param_length() * Rat(i, curve_samples + 1);
            polyline(os, fam->curve_at(t), "#108040", "0.0015");
        }
    } catch (const std::exception&) {
        // Chain without families renders blocks only.
    }
    close_svg(os);
    return os.str();
}

std::string render_bend(const carpet::ScaleSequence& seq, int M,
                        const bending::PipelineResult& result, int curve_samples) {
    std::ostringstream os;
    open_svg(os, "bent family");
    cell_rects(os, seq, M, "#dddddd");
    const auto& fam = result.family;
    for (int i = 0; i < curve_samples; ++i) {
        double u = fam.u0() + (fam.u1() - fam.u0()) * (2.0 * i + 1.0) / (2.0 * curve_samples);
        curvefam::Polyline pl;
        for (int k = 0; k <= 256; ++k) {
            double x = fam.x0() + (fam.x1() - fam.x0()) * k / 256.0;
            double y = fam.curve_jet(bending::CurveRef{u, 0}, x).y;
            pl.pts.push_back(RPoint{rat_from_double(x), rat_from_double(y)});
        }
        polyline(os, pl, "#108040", "0.0015");
    }
    close_svg(os);
    return os.str();
}

std::string render_cutset(const cutset::FoldData& fd, int M) {
    std::ostringstream os;
    open_svg(os, "cut set approximant");
    cell_rects(os, fd.seq(), M, "#dddddd");
    for (const auto& lv : fd.levels()) {
        for (const auto& r : lv.rects) {
            os << "<rect x=\"" << num(r.x0) << "\" y=\"" << num(r.y0) << "\" width=\""
               << num(r.width()) << "\" height=\"" << num(r.height())
               << "\" fill=\"#d03020\" fill-opacity=\"0.6\"/>\n";
        }
        for (const auto& t : lv.triangles) {
            os << "<polygon fill=\"#2060c0\" fill-opacity=\"0.5\" points=\"";
            for (size_t i = 0; i < t.tri.pts.size(); ++i) {
                if (i) os << ' ';
                os << num(t.tri.pts[i].x) << ',' << num(t.tri.pts[i].y);
            }
            os << "\"/>\n";
        }
    }
    for (const auto& poly : fd.unfold_set().excluded) {
        os << "<polygon fill=\"none\" stroke=\"#803010\" stroke-width=\"0.0015\" points=\"";
        for (size_t i = 0; i < poly.pts.size(); ++i) {
            if (i) os << ' ';
            os << num(poly.pts[i].x) << ',' << num(poly.pts[i].y);
        }
        os << "\"/>\n";
    }
    close_svg(os);
    return os.str();
}

}  // namespace carpetlab::render
