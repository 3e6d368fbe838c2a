#pragma once

#include "carpetlab/bending.hpp"
#include "carpetlab/carpet.hpp"
#include "carpetlab/curvefam.hpp"
#include "carpetlab/cutset.hpp"

#include <string>

namespace carpetlab::render {

// Deterministic SVG scenes: retained cells filled, removed squares white,
// curves as paths, blocks outlined with leading edges marked. Byte-identical
// across runs for identical inputs. Cell cap 10^5.
std::string render_carpet(const carpet::ScaleSequence& seq, int M);
std::string render_chain(const carpet::ScaleSequence& seq, const curvefam::BlockChain& chain,
                         int curve_samples = 5);
std::string render_bend(const carpet::ScaleSequence& seq, int M,
                        const bending::PipelineResult& result, int curve_samples = 9);
std::string render_cutset(const cutset::FoldData& fd, int M);

}  // namespace carpetlab::render
