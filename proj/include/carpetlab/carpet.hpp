#pragma once

#include "carpetlab/geometry.hpp"
#include "carpetlab/rational.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace carpetlab::carpet {

// Defining sequence a = (1/n_1, 1/n_2, ...), n_j odd >= 3, with precomputed
// exact side lengths s_m and retained-cell counts.
class ScaleSequence {
  public:
    static ScaleSequence validate(const std::vector<int>& raw);

    int levels() const { return (int)n_.size(); }
    int n(int j) const { return n_.at(j - 1); }       // 1-based level index
    Rat a(int j) const { return Rat(1) / n(j); }
    const Rat& side(int m) const { return side_.at(m); }     // s_m, side(0) = 1
    std::int64_t grid(int m) const { return grid_.at(m); }   // prod n_j
    std::int64_t cell_count(int m) const { return count_.at(m); }  // prod (n_j^2-1)
    int center(int j) const { return (n(j) - 1) / 2; }

    // Exact partial sums of a_j and a_j^2 (summability of the truncation).
    const Rat& l1_partial(int m) const { return l1_.at(m); }
    const Rat& l2_partial(int m) const { return l2_.at(m); }

    void require_level(int m) const;

  private:
    std::vector<int> n_;
    std::vector<Rat> side_, l1_, l2_;
    std::vector<std::int64_t> grid_, count_;
};

// Base-n_j digit address of a level-m cell, column digit first, origin at
// the lower-left corner.
struct CellAddress {
    std::vector<std::pair<int, int>> digits;  // (i_k, j_k)

    int level() const { return (int)digits.size(); }
    bool operator==(const CellAddress& o) const { return digits == o.digits; }
};

std::string address_to_string(const CellAddress& a);
CellAddress address_from_string(const std::string& s);

// Global lattice coordinates of a level-m cell: (gx, gy) in [0, grid(m))^2.
struct GlobalCell {
    int level;
    std::int64_t gx, gy;
    bool operator==(const GlobalCell& o) const {
        return level == o.level && gx == o.gx && gy == o.gy;
    }
};

CellAddress address_of(const ScaleSequence& seq, const GlobalCell& c);
GlobalCell global_of(const ScaleSequence& seq, const CellAddress& a);

// True iff no prefix level has the central digit pair.
bool is_retained(const ScaleSequence& seq, const CellAddress& addr);
bool is_retained(const ScaleSequence& seq, const GlobalCell& c);

RRect cell_rect(const ScaleSequence& seq, const GlobalCell& c);
RRect cell_rect(const ScaleSequence& seq, const CellAddress& a);

// Closed-cell membership in the level-m precarpet.
bool contains(const ScaleSequence& seq, const RPoint& p, int m);

// All retained level-m cells containing p (up to four on lattice lines).
std::vector<GlobalCell> cells_containing(const ScaleSequence& seq, const RPoint& p, int m);

// Canonical containing cell of a point in [0,1]^2: lower-left tie break.
GlobalCell locate_cell(const ScaleSequence& seq, const RPoint& p, int m);

Rat precarpet_area(const ScaleSequence& seq, int m);   // prod (1 - a_j^2)
Rat cantor_length(const ScaleSequence& seq, int m);    // prod (1 - a_j)

// Yields exactly cell_count(m) retained addresses in lexicographic digit
// order; the callback form streams without materializing.
void for_each_cell(const ScaleSequence& seq, int m,
                   const std::function<void(const CellAddress&)>& fn);
std::vector<CellAddress> enumerate_cells(const ScaleSequence& seq, int m);

}  // namespace carpetlab::carpet
