#include "carpetlab/carpet.hpp"

#include <sstream>

namespace carpetlab::carpet {

ScaleSequence ScaleSequence::validate(const std::vector<int>& raw) {
    if (raw.empty()) throw std::invalid_argument("sequence: empty");
    ScaleSequence s;
    s.side_.push_back(Rat(1));
    s.grid_.push_back(1);
    s.count_.push_back(1);
    s.l1_.push_back(Rat(0));
    s.l2_.push_back(Rat(0));
    for (size_t i = 0; i < raw.size(); ++i) {
        int n = raw[i];
        if (n < 3)
            throw std::invalid_argument("denominator must be >= 3 (index " + std::to_string(i) + ")");
        if (n % 2 == 0)
            throw std::invalid_argument("denominator must be odd (index " + std::to_string(i) + ")");
        s.n_.push_back(n);
        s.side_.push_back(s.side_.back() / n);
        s.grid_.push_back(s.grid_.back() * n);
        s.count_.push_back(s.count_.back() * (std::int64_t(n) * n - 1));
        s.l1_.push_back(s.l1_.back() + Rat(1, n));
        s.l2_.push_back(s.l2_.back() + Rat(1, std::int64_t(n) * n));
    }
    return s;
}

void ScaleSequence::require_level(int m) const {
    if (m < 0 || m > levels())
        throw std::out_of_range("level " + std::to_string(m) + " outside sequence of length " +
                                std::to_string(levels()));
}

std::string address_to_string(const CellAddress& a) {
    std::ostringstream os;
    for (size_t k = 0; k < a.digits.size(); ++k) {
        if (k) os << '/';
        os << a.digits[k].first << ',' << a.digits[k].second;
    }
    return os.str();
}

CellAddress address_from_string(const std::string& s) {
    CellAddress a;
    if (s.empty()) return a;
    std::istringstream is(s);
    std::string part;
    while (std::getline(is, part, '/')) {
        auto comma = part.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("address: missing comma");
        a.digits.emplace_back(std::stoi(part.substr(0, comma)), std::stoi(part.substr(comma + 1)));
    }
    return a;
}

CellAddress address_of(const ScaleSequence& seq, const GlobalCell& c) {
    seq.require_level(c.level);
    CellAddress a;
    a.digits.resize(c.level);
    std::int64_t gx = c.gx, gy = c.gy;
    for (int k = c.level; k >= 1; --k) {
        int n = seq.n(k);
        a.digits[k - 1] = {int(gx % n), int(gy % n)};
        gx /= n;
        gy /= n;
    }
    if (gx != 0 || gy != 0) throw std::out_of_range("global cell outside grid");
    return a;
}

GlobalCell global_of(const ScaleSequence& seq, const CellAddress& a) {
    seq.require_level(a.level());
    std::int64_t gx = 0, gy = 0;
    for (int k = 1; k <= a.level(); ++k) {
        int n = seq.n(k);
        auto [i, j] = a.digits[k - 1];
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw std::out_of_range("digit out of range at level " + std::to_string(k));
        gx = gx * n + i;
        gy = gy * n + j;
    }
    return GlobalCell{a.level(), gx, gy};
}

bool is_retained(const ScaleSequence& seq, const CellAddress& addr) {
    seq.require_level(addr.level());
    for (int k = 1; k <= addr.level(); ++k) {
        int n = seq.n(k);
        auto [i, j] = addr.digits[k - 1];
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw std::out_of_range("digit out of range at level " + std::to_string(k));
        int c = seq.center(k);
        if (i == c && j == c) return false;
    }
    return true;
}

bool is_retained(const ScaleSequence& seq, const GlobalCell& c) {
    std::int64_t gx = c.gx, gy = c.gy;
    if (gx < 0 || gy < 0 || gx >= seq.grid(c.level) || gy >= seq.grid(c.level)) return false;
    for (int k = c.level; k >= 1; --k) {
        int n = seq.n(k);
        int i = int(gx % n), j = int(gy % n);
        int cen = seq.center(k);
        if (i == cen && j == cen) return false;
        gx /= n;
        gy /= n;
    }
    return true;
}

RRect cell_rect(const ScaleSequence& seq, const GlobalCell& c) {
    const Rat& s = seq.side(c.level);
    Rat x0 = Rat(c.gx) * s, y0 = Rat(c.gy) * s;
    return RRect{x0, y0, x0 + s, y0 + s};
}

RRect cell_rect(const ScaleSequence& seq, const CellAddress& a) {
    return cell_rect(seq, global_of(seq, a));
}

std::vector<GlobalCell> cells_containing(const ScaleSequence& seq, const RPoint& p, int m) {
    seq.require_level(m);
    std::int64_t g = seq.grid(m);
    auto candidates = [&](const Rat& t) {
        std::vector<std::int64_t> ks;
        Rat scaled = t * g;
        Int f = rat_floor(scaled);
        std::int64_t k = f.convert_to<std::int64_t>();
        if (Rat(f) == scaled && k > 0) ks.push_back(k - 1);
        if (k >= 0 && k < g) ks.push_back(k);
        return ks;
    };
    std::vector<GlobalCell> out;
    for (auto kx : candidates(p.x)) {
        for (auto ky : candidates(p.y)) {
            GlobalCell c{m, kx, ky};
            if (is_retained(seq, c)) out.push_back(c);
        }
    }
    return out;
}

bool contains(const ScaleSequence& seq, const RPoint& p, int m) {
    if (p.x < 0 || p.x > 1 || p.y < 0 || p.y > 1) return false;
    return !cells_containing(seq, p, m).empty();
}

GlobalCell locate_cell(const ScaleSequence& seq, const RPoint& p, int m) {
    auto cells = cells_containing(seq, p, m);
    if (cells.empty()) throw std::invalid_argument("point not in precarpet");
    GlobalCell best = cells[0];
    for (const auto& c : cells) {
        if (c.gx < best.gx || (c.gx == best.gx && c.gy < best.gy)) best = c;
    }
    return best;
}

Rat precarpet_area(const ScaleSequence& seq, int m) {
    seq.require_level(m);
    Rat r(1);
    for (int j = 1; j <= m; ++j) {
        std::int64_t n2 = std::int64_t(seq.n(j)) * seq.n(j);
        r *= Rat(n2 - 1, n2);
    }
    return r;
}

Rat cantor_length(const ScaleSequence& seq, int m) {
    seq.require_level(m);
    Rat r(1);
    for (int j = 1; j <= m; ++j) r *= Rat(seq.n(j) - 1, seq.n(j));
    return r;
}

namespace {
void recurse(const ScaleSequence& seq, int m, CellAddress& a,
             const std::function<void(const CellAddress&)>& fn) {
    int k = a.level() + 1;
    if (k > m) {
        fn(a);
        return;
    }
    int n = seq.n(k), c = seq.center(k);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == c && j == c) continue;
            a.digits.emplace_back(i, j);
            recurse(seq, m, a, fn);
            a.digits.pop_back();
        }
    }
}
}  // namespace

void for_each_cell(const ScaleSequence& seq, int m,
                   const std::function<void(const CellAddress&)>& fn) {
    seq.require_level(m);
    CellAddress a;
    recurse(seq, m, a, fn);
}

std::vector<CellAddress> enumerate_cells(const ScaleSequence& seq, int m) {
    std::vector<CellAddress> out;
    out.reserve(seq.cell_count(m));
    for_each_cell(seq, m, [&](const CellAddress& a) { out.push_back(a); });
    return out;
}

}  // namespace carpetlab::carpet
