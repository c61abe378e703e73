"""Gauge-model construction tests.

The Hamiltonian oracle used throughout is an independent dense build on the
full tensor-product space (every site a two-level factor, every link a
(2S+1)-level factor) assembled from Kronecker products of single-factor
operators.  The enumerated restricted basis is embedded into that space and
matrix elements are compared entry by entry.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlmol.qlm import (
    QlmParams,
    enumerate_qlm_basis,
    build_qlm_hamiltonian,
    gauss_diagonal,
    gauss_operator,
    dynamical_gauss_sites,
    string_preset,
    apply_mass_sign_flip_transform,
    cp_transform,
    cp_odd_observables,
)


# ---------------------------------------------------------------- dense oracle

def _site_ops():
    # basis order (empty, occupied)
    c = np.array([[0.0, 1.0], [0.0, 0.0]])       # annihilate
    n = np.array([[0.0, 0.0], [0.0, 1.0]])
    return c, n


def _link_ops(S):
    d = int(round(2 * S)) + 1
    sp_op = np.zeros((d, d))
    s3 = np.zeros((d, d))
    for i in range(d):
        m3 = i - S
        s3[i, i] = m3
        if i + 1 < d:
            sp_op[i + 1, i] = math.sqrt(S * (S + 1) - m3 * (m3 + 1))
    return sp_op, s3


def _kron_chain(ops):
    out = np.array([[1.0]])
    for op in ops:
        out = np.kron(out, op)
    return out


def _dense_oracle(params):
    """H on the unrestricted tensor space, sites then links, leftmost first."""
    S, N = params.S, params.N
    n_sites = 2 * N
    c, n = _site_ops()
    sp_op, s3 = _link_ops(S)
    dims = [2] * n_sites + [int(round(2 * S)) + 1] * n_sites

    def embed(factors):
        ops = [np.eye(d) for d in dims]
        for pos, op in factors:
            ops[pos] = op
        return _kron_chain(ops)

    D = int(np.prod(dims))
    H = np.zeros((D, D))
    for x in range(1, n_sites):              # bonds 1 .. 2N-1 (1-based)
        hop = embed([(x - 1, c.T), (n_sites + x - 1, sp_op), (x, c)])
        H -= params.w * (hop + hop.T)
    for x in range(1, n_sites + 1):
        H += params.m * (-1) ** x * embed([(x - 1, n)])
    if S != 0.5:
        for l in range(1, n_sites):          # dynamical links only
            H += 0.5 * params.g2 * embed([(n_sites + l - 1, s3 @ s3)])
    return H, dims


def _embedding_indices(basis, dims):
    n_sites = basis.n_sites
    strides = np.ones(len(dims), dtype=np.int64)
    for i in range(len(dims) - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    idx = np.zeros(basis.dim, dtype=np.int64)
    for k in range(basis.dim):
        digits = list(basis.occ[k]) + list(basis.link_idx[k])
        idx[k] = int(np.dot(digits, strides))
    return idx


@pytest.mark.parametrize("S,N", [(0.5, 1), (0.5, 2), (1.0, 1), (1.0, 2)])
def test_hamiltonian_matches_dense_kron_oracle(S, N):
    params = QlmParams(w=1.0, m=0.37, g2=0.85, S=S, N=N)
    basis = enumerate_qlm_basis(S, N, frozen_last_link=S, total_fermion_number=N)
    H = build_qlm_hamiltonian(params, basis).toarray()
    H_full, dims = _dense_oracle(params)
    emb = _embedding_indices(basis, dims)
    H_ref = H_full[np.ix_(emb, emb)]
    assert np.allclose(H, H_ref, atol=1e-14)
    # the restricted space is invariant: no leakage out of the embedded block
    mask = np.ones(H_full.shape[0], dtype=bool)
    mask[emb] = False
    assert np.max(np.abs(H_full[np.ix_(np.where(mask)[0], emb)])) == 0.0


# ----------------------------------------------------------------- dimensions

def test_basis_dimensions():
    assert enumerate_qlm_basis(0.5, 1, 0.5).dim == 8          # no fermion filter
    assert enumerate_qlm_basis(0.5, 3, 0.5, 3).dim == 640     # C(6,3) * 2^5
    assert enumerate_qlm_basis(1.0, 3, 1.0, 3).dim == 4860    # C(6,3) * 3^5
    assert enumerate_qlm_basis(1.0, 2, 1.0, 2).dim == 6 * 27


def test_basis_dimension_brute_force():
    # independently count by filtering the full product space
    from itertools import product as iproduct
    for S, N, nf in [(0.5, 2, 2), (1.0, 1, 1)]:
        two_s = int(round(2 * S))
        count = 0
        for occ in iproduct((0, 1), repeat=2 * N):
            if sum(occ) != nf:
                continue
            count += (two_s + 1) ** (2 * N - 1)
        assert enumerate_qlm_basis(S, N, S, nf).dim == count


def test_basis_ordering_and_roundtrip():
    basis = enumerate_qlm_basis(1.0, 2, 1.0, 2)
    # lexicographic: first state has fermions fully to the right, links lowest
    assert tuple(basis.occ[0]) == (0, 0, 1, 1)
    assert tuple(basis.link_idx[0]) == (0, 0, 0, basis.frozen_index)
    for k in [0, 1, 17, basis.dim - 1]:
        assert basis.index_of(basis.state(k)) == k


def test_frozen_link_validation():
    with pytest.raises(ValueError):
        enumerate_qlm_basis(0.5, 2, 0.3)
    with pytest.raises(ValueError):
        enumerate_qlm_basis(1.0, 2, 1.5)
    with pytest.raises(ValueError):
        enumerate_qlm_basis(0.5, 2, -1.5)


def test_param_validation():
    with pytest.raises(ValueError):
        QlmParams(w=1.0, m=0.0, g2=0.0, S=0.75, N=2)
    with pytest.raises(ValueError):
        QlmParams(w=-1.0, m=0.0, g2=0.0, S=0.5, N=2)
    with pytest.raises(ValueError):
        QlmParams(w=1.0, m=0.0, g2=0.0, S=0.5, N=0)
    params = QlmParams(w=1.0, m=0.0, g2=0.0, S=0.5, N=2)
    basis = enumerate_qlm_basis(1.0, 2, 1.0, 2)
    with pytest.raises(ValueError):
        build_qlm_hamiltonian(params, basis)


# ------------------------------------------------------------------ symmetries

def test_fermion_number_conserved_in_unfiltered_basis():
    basis = enumerate_qlm_basis(0.5, 2, 0.5)       # all fermion sectors
    params = QlmParams(w=1.0, m=0.3, g2=0.0, S=0.5, N=2)
    H = build_qlm_hamiltonian(params, basis)
    nf = np.sum(basis.occ, axis=1).astype(np.float64)
    comm = H.multiply(nf[:, None]) - H.multiply(nf[None, :])
    assert abs(comm).max() == 0.0


@pytest.mark.parametrize("S,N", [(0.5, 2), (1.0, 2)])
def test_gauss_operators_commute_with_hamiltonian(S, N):
    params = QlmParams(w=1.0, m=0.45, g2=1.2, S=S, N=N)
    basis = enumerate_qlm_basis(S, N, S, N)
    H = build_qlm_hamiltonian(params, basis)
    for x in dynamical_gauss_sites(basis):
        g = gauss_diagonal(x, basis)
        comm = H.multiply(g[:, None]) - H.multiply(g[None, :])
        assert abs(comm).max() == 0.0


@pytest.mark.parametrize("S,N", [(0.5, 2), (0.5, 3), (1.0, 2), (1.0, 3)])
def test_string_preset_is_gauss_null(S, N):
    basis = enumerate_qlm_basis(S, N, S, N)
    k = basis.index_of(string_preset(S, N))
    for x in dynamical_gauss_sites(basis):
        assert gauss_diagonal(x, basis)[k] == 0.0


def test_gauss_values_after_single_link_flip():
    # lowering one interior link raises G on its left site and lowers it on
    # its right site by exactly one unit
    S, N = 1.0, 2
    basis = enumerate_qlm_basis(S, N, S, N)
    preset = string_preset(S, N)
    flipped = list(preset.link_m3)
    flipped[1] -= 1.0                       # link 2, between sites 2 and 3
    from qlmol.qlm import QlmBasisState
    state = QlmBasisState(preset.occupation, tuple(flipped), S, N)
    k = basis.index_of(state)
    assert gauss_diagonal(2, basis)[k] == +1.0
    assert gauss_diagonal(3, basis)[k] == -1.0
    assert gauss_diagonal(4, basis)[k] == 0.0


def test_gauss_values_empty_lattice():
    # all sites empty, uniform links: G = 0 on even sites, -1 on odd sites
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 0)
    from qlmol.qlm import QlmBasisState
    state = QlmBasisState((0, 0, 0, 0), (0.5, 0.5, 0.5, 0.5), 0.5, 2)
    k = basis.index_of(state)
    assert gauss_diagonal(2, basis)[k] == 0.0
    assert gauss_diagonal(3, basis)[k] == -1.0
    assert gauss_diagonal(4, basis)[k] == 0.0


def test_gauss_operator_rejects_boundary_sites():
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 2)
    with pytest.raises(ValueError):
        gauss_operator(1, basis)
    with pytest.raises(ValueError):
        gauss_operator(5, basis)
    g = gauss_operator(2, basis)
    assert (abs(g - g.T)).max() == 0.0      # diagonal, symmetric


def test_hamiltonian_preserves_gauss_null_subspace():
    S, N = 1.0, 2
    params = QlmParams(w=1.0, m=0.2, g2=0.7, S=S, N=N)
    basis = enumerate_qlm_basis(S, N, S, N)
    H = build_qlm_hamiltonian(params, basis).toarray()
    gs = np.array([gauss_diagonal(x, basis) for x in dynamical_gauss_sites(basis)])
    phys = np.all(gs == 0.0, axis=0)
    assert np.count_nonzero(phys) > 0
    assert np.max(np.abs(H[np.ix_(~phys, phys)])) == 0.0


def test_s_half_electric_term_is_dropped():
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 2)
    h0 = build_qlm_hamiltonian(QlmParams(1.0, 0.3, 0.0, 0.5, 2), basis)
    h1 = build_qlm_hamiltonian(QlmParams(1.0, 0.3, 7.3, 0.5, 2), basis)
    assert abs(h0 - h1).max() == 0.0


def test_s_one_hop_amplitude_is_sqrt_two():
    basis = enumerate_qlm_basis(1.0, 1, 1.0, 1)
    H = build_qlm_hamiltonian(QlmParams(1.0, 0.0, 0.0, 1.0, 1), basis).toarray()
    off = np.abs(H - np.diag(np.diag(H)))
    vals = set(np.round(np.unique(off), 12))
    assert vals <= {0.0, round(math.sqrt(2.0), 12)}
    assert round(math.sqrt(2.0), 12) in vals


def test_string_preset_diagonal_energy():
    S, N = 1.0, 2
    m, g2 = 0.6, 1.1
    basis = enumerate_qlm_basis(S, N, S, N)
    H = build_qlm_hamiltonian(QlmParams(1.0, m, g2, S, N), basis)
    k = basis.index_of(string_preset(S, N))
    expected = -N * m + 0.5 * g2 * (2 * N - 1) * S**2
    assert H.diagonal()[k] == pytest.approx(expected, rel=1e-14)


# ---------------------------------------------------- discrete transformations

def test_mass_flip_transform_squares_to_identity():
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 2)
    u = apply_mass_sign_flip_transform(basis)
    assert np.array_equal(u * u, np.ones(basis.dim))
    assert set(np.unique(u)) == {-1.0, 1.0}


def test_mass_flip_transform_maps_h_to_minus_h_flipped():
    # U H(m) U = -H(-m) for the half-integer model (no electric term)
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 2)
    u = apply_mass_sign_flip_transform(basis)
    hp = build_qlm_hamiltonian(QlmParams(1.0, 0.8, 0.0, 0.5, 2), basis).toarray()
    hm = build_qlm_hamiltonian(QlmParams(1.0, -0.8, 0.0, 0.5, 2), basis).toarray()
    assert np.allclose(u[:, None] * hp * u[None, :], -hm, atol=1e-14)


def test_mass_flip_transform_rejects_s_one():
    basis = enumerate_qlm_basis(1.0, 2, 1.0, 2)
    with pytest.raises(ValueError):
        apply_mass_sign_flip_transform(basis)


@pytest.mark.parametrize("S,N", [(0.5, 2), (1.0, 2)])
def test_cp_transform_is_an_involution_preserving_h(S, N):
    basis = enumerate_qlm_basis(S, N, S, N)
    perm, phases = cp_transform(basis)
    assert np.array_equal(phases, np.ones(basis.dim))
    assert np.array_equal(perm[perm], np.arange(basis.dim))
    H = build_qlm_hamiltonian(QlmParams(1.0, 0.55, 0.9, S, N), basis).toarray()
    assert np.allclose(H[np.ix_(perm, perm)], H, atol=1e-14)


def test_cp_transform_fixes_string_preset():
    for S, N in [(0.5, 2), (1.0, 3)]:
        basis = enumerate_qlm_basis(S, N, S, N)
        perm, _ = cp_transform(basis)
        k = basis.index_of(string_preset(S, N))
        assert perm[k] == k


def test_cp_transform_rejects_asymmetric_filling():
    basis = enumerate_qlm_basis(0.5, 2, 0.5, 1)    # 1 fermion on 4 sites
    with pytest.raises(ValueError):
        cp_transform(basis)


def test_cp_odd_observables_vanish_on_preset():
    basis = enumerate_qlm_basis(1.0, 2, 1.0, 2)
    k = basis.index_of(string_preset(1.0, 2))
    density, flux = cp_odd_observables(basis)
    for obs in density + flux:
        assert obs[k] == 0.0


def test_cp_odd_observables_are_odd_under_cp():
    basis = enumerate_qlm_basis(1.0, 2, 1.0, 2)
    perm, _ = cp_transform(basis)
    density, flux = cp_odd_observables(basis)
    for obs in density + flux:
        assert np.allclose(obs[perm], -obs, atol=1e-14)


# ----------------------------------------------------------------- properties

@given(
    S=st.sampled_from([0.5, 1.0]),
    N=st.sampled_from([1, 2]),
    m=st.floats(-3, 3),
    g2=st.floats(0, 3),
)
@settings(max_examples=25, deadline=None)
def test_property_hermitian_and_gauss_commuting(S, N, m, g2):
    params = QlmParams(w=1.0, m=m, g2=g2, S=S, N=N)
    basis = enumerate_qlm_basis(S, N, S, N)
    H = build_qlm_hamiltonian(params, basis)
    assert abs(H - H.T).max() == 0.0
    for x in dynamical_gauss_sites(basis):
        g = gauss_diagonal(x, basis)
        comm = H.multiply(g[:, None]) - H.multiply(g[None, :])
        assert abs(comm).max() == 0.0


@given(
    S=st.sampled_from([0.5, 1.0]),
    N=st.sampled_from([1, 2, 3]),
)
@settings(max_examples=12, deadline=None)
def test_property_preset_flux_sum(S, N):
    # every dynamical link carries +S in the preset
    preset = string_preset(S, N)
    assert sum(preset.link_m3[:-1]) == pytest.approx(S * (2 * N - 1))
    assert preset.link_m3[-1] == S
    assert sum(preset.occupation) == N
