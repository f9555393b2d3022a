// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/grouping.hpp"

#include <span>
#include <vector>

namespace jsdm {

struct PrecoderStack {
    std::vector<CMatrix> pre_beamformers; // B_g, M x b_g
    std::vector<CMatrix> mu_precoders;    // P_g, b_g x (streams of g); empty for beam-only stacks
    std::vector<double> zeta;
    double per_stream_power = 1.0;

    int num_groups() const { return static_cast<int>(pre_beamformers.size()); }
};

// Block-diagonalizing pre-beamformer for group g against `others`: an
// orthonormal basis of their common null space, rotated onto the `streams`
// dominant directions of group g's subspace inside it.
CMatrix bd_prebeamformer(const Subspace& own, std::span<const Subspace> others, int streams);

// Same, against every other group of g's pattern in the layout.
CMatrix bd_prebeamformer(const GroupLayout& layout, int g, int streams);

struct ZfPrecoder {
    CMatrix precoder; // b_g x streams
    double zeta = 0.0;
};

// ZF precoder on the effective channel H_eff = B^H H (b_g x streams), with
// streams = load * n. The normalization uses the general trace formula unless
// `tall_unitary` is set, in which case B^H B = I is assumed and B may be empty.
ZfPrecoder zfbf_precoder(const CMatrix& effective_channel, double load, int n, const CMatrix& pre_beamformer,
                         bool tall_unitary);

// Stack of ZF precoders for one pattern. `channels[g]` holds the raw channels
// (M x streams_g) of the users selected in group g. Equal power per stream:
// total_power / (total streams).
PrecoderStack build_zf_stack(std::vector<CMatrix> pre_beamformers, std::span<const CMatrix> channels, int n,
                             double total_power, bool tall_unitary);

// Opportunistic beam SINR with per-beam power stack.per_stream_power.
double beam_sinr(const CVector& h, const PrecoderStack& stack, int g, int m);

// Beam SINRs of one user for every beam of group g.
RVector beam_sinrs(const CVector& h, const PrecoderStack& stack, int g);

// SINR of the selected user in column `n` of channels[g] under ZF precoding:
// P^u |h^H B_g p_n|^2 / (1 + sum_{g' != g} P^u ||h^H B_g' P_g'||^2).
double zf_sinr(std::span<const CMatrix> channels, const PrecoderStack& stack, int g, int n);

} // namespace jsdm
