"""Frozen reference values and small helpers shared by the test modules.

Every constant here was computed independently of the package (closed-form
arithmetic, or adaptive quadrature via scipy for the wrapped-entropy values)
and then frozen.  Tests compare the implementation against these numbers at
stated tolerances; they must never be regenerated from the implementation
itself.
"""

import math

import numpy as np

from rwz.graphs import DegreeProfile, build_graph, default_ldgm_profile

P_V = 0.28

# rate 0.9531 bits/sample (the simulator's native operating rate)
D_9531 = 0.07470241699100034
ALPHA_9531 = 0.7332056536035703
ALPHA_D_9531 = 0.05477223447565286
A2PV_9531 = 0.15052534853334681          # alpha^2 * P_V
APV_9531 = 0.2052975830089997            # alpha * P_V

# rate 0.953 bits/sample (the rounded rate used by the worked design chain)
D_953 = 0.07471277366279722
ALPHA_953 = 0.73316866549001
ALPHA_D_953 = 0.0547770645614102
A2PV_953 = 0.15051016177579263
APV_953 = 0.20528722633720284

# wrapped-entropy gap oracles (adaptive quadrature, abs err < 1e-9)
GAP_3_APV953 = 0.003881123477420312      # gap(3.0, APV_953)
GAP_3_LITERAL = 0.003881120564254714     # gap(3.0, 0.2052872)

# design-chain oracles
RATE_R1_3_953 = 0.6800090325373666       # rate_R1(3.0, ALPHA_953, 0.28)
A_EPS_GRID = 2.94                        # find_A_eps(0.005, APV_953), 0.01 grid
PROFILE_RATE = 0.68000966763343          # shipped degree profile, renormalized
MODULO_FOR_PROFILE_RATE_953 = 3.0000013206454272
MODULO_FOR_RATE_068_9531 = 3.0000769942218217   # modulo_for_rate(0.68009667..., ALPHA_9531)
BOUND_PAPER = 3.2621845373935283         # practical_modulo_bound(3, .7332, .28, .185, .0577)
SNR_EPS_PAPER = 2.7014303248012714       # snr_diagnostics(3, 3.29, 16, .7332, .28, .0577, .185)
SNR_P_PAPER = 3.07618148806715
D2_P_PAPER = 0.06939450777777778
SIGMA2_N_P_PAPER = 0.22249538888888887


TOY_LDGM_ENTRIES = ((1, 0.2), (2, 0.8))


def toy_parity_graph():
    # 20 degree-2 variables over 10 checks: sparse enough for a 4-cycle-free
    # placement, small enough to enumerate the 2048 codewords
    return build_graph(20, DegreeProfile.regular(2, 4), seed=31)


def toy_generator_graph(k=8, m=32):
    prof = default_ldgm_profile(k, m, chk_entries=TOY_LDGM_ENTRIES)
    return build_graph(k, prof, kind="generator", seed=32, n_chk=m)


def rng_for(*entropy):
    """The per-stream generator convention used throughout the simulator."""
    return np.random.default_rng(np.random.SeedSequence(entropy))


def wrapped_llr_reference(w, levels, mod_size, var, wrap_limit):
    """Direct-sum reference for the one-bit wrapped-Gaussian likelihood ratio.

    Computed in plain floats per sample: for each candidate level, sum the
    Gaussian density over fold offsets, then take the log ratio.  Slower than,
    and algebraically independent of, the logsumexp path in the implementation.
    """
    out = np.empty(len(w))
    for i, wi in enumerate(w):
        dens = []
        for lv in levels:
            total = 0.0
            for b in range(-wrap_limit, wrap_limit + 1):
                z = wi - lv + b * mod_size
                total += math.exp(-0.5 * z * z / var)
            dens.append(total)
        out[i] = math.log(dens[0]) - math.log(dens[1])
    return out


def parity_codewords(graph):
    """Every codeword of a parity-check graph, via GF(2) elimination.

    Builds the dense parity matrix, row-reduces it, and spans the nullspace
    basis.  Only suitable for graphs whose nullspace dimension is small.
    """
    h = np.zeros((graph.n_chk, graph.n_var), dtype=np.int64)
    h[graph.edge_chk, graph.edge_var] = 1
    m = h.copy()
    piv_cols = []
    rank = 0
    for col in range(graph.n_var):
        piv = next((r for r in range(rank, graph.n_chk) if m[r, col]), None)
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        for r in range(graph.n_chk):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        piv_cols.append(col)
        rank += 1
    free = [c for c in range(graph.n_var) if c not in piv_cols]
    basis = []
    for f in free:
        w = np.zeros(graph.n_var, dtype=np.int64)
        w[f] = 1
        for i, pc in enumerate(piv_cols):
            w[pc] = m[i, f]
        basis.append(w)
    words = [np.zeros(graph.n_var, dtype=np.int64)]
    for b in basis:
        words += [w ^ b for w in list(words)]
    return words


def generator_images(graph, cmap):
    """Constellation image of every codeword of a small generator graph."""
    k = graph.n_var
    images = []
    for value in range(2 ** k):
        info = np.array([(value >> i) & 1 for i in range(k)], dtype=np.int64)
        images.append(cmap.bits_to_levels(graph.generate_bits(info)))
    return images
