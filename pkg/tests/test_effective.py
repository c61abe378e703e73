"""Second-order reduction onto the near-degenerate band and its target check."""

import json
import math
from functools import lru_cache

import numpy as np
import pytest
import scipy.sparse as sp

from qlmol.params import assign_energies, default_ladder, default_geometry
from qlmol.qlm import QlmParams, QlmBasis
from qlmol.rotational import LEVEL_INDEX
from qlmol.dmh import MoleculeArray, enumerate_dmh_basis, build_dmh_hamiltonian, build_embedding
from qlmol.effective import (
    SubspacePartition,
    partition_around,
    first_order_coupling_norm,
    second_order_effective,
    embedded_sector_indices,
    residual_terms,
    ladder_reference_energies,
    compare_effective_to_target,
)


def _oracle_two_level_ground(delta, v):
    """Exact ground energy of [[0, v], [v, delta]], no perturbation theory."""
    return 0.5 * (delta - math.sqrt(delta * delta + 4.0 * v * v))


def _pset(S, N, m, g2, gamma=None):
    w = 1.0 if S == 0.5 else 1.0 / math.sqrt(2.0)
    qlm = QlmParams(w=w, m=m, g2=g2, S=S, N=N)
    return assign_energies(S, qlm, default_ladder(S, N), default_geometry(S, gamma=gamma)), qlm


@lru_cache(maxsize=None)
def _compare(S, N, m=None, gamma=None):
    if m is None:
        m = 0.1 if S == 0.5 else 0.25
    g2 = 0.0 if S == 0.5 else 1.0
    pset, qlm = _pset(S, N, m, g2, gamma=gamma)
    return compare_effective_to_target(pset, qlm)


# ------------------------------------------------------- reduction formula

@pytest.mark.parametrize("delta,v", [(10.0, 0.3), (7.0, 0.05), (100.0, 1.0)])
def test_two_level_reduction_matches_exact_diagonalization(delta, v):
    H = sp.csr_matrix(np.array([[0.0, v], [v, delta]]))
    part = partition_around(H, [0], threshold=delta / 2)
    assert list(part.alpha) == [0] and list(part.complement) == [1]

    out = second_order_effective(H, part)
    assert out.shape == (1, 1)
    # closed form of the symmetric-denominator sum for a single detuned state
    assert out[0, 0] == pytest.approx(-v * v / delta, rel=1e-14)
    # against the exact eigenvalue the error is the next order in v/delta
    exact = _oracle_two_level_ground(delta, v)
    assert abs(out[0, 0] - exact) <= 3.0 * v**4 / delta**3


def test_zero_coupling_returns_unperturbed_diagonal():
    E = np.array([0.0, 0.4, -0.2, 30.0, 31.0])
    H = sp.diags(E).tocsr()
    part = partition_around(H, [0], threshold=5.0)
    out = second_order_effective(H, part)
    assert np.array_equal(out, np.diag(E[:3]))


def test_effective_block_is_symmetric():
    rng = np.random.default_rng(7)
    M = rng.normal(size=(12, 12))
    H = (M + M.T) / 2
    H[np.diag_indices(12)] = np.concatenate([rng.uniform(0, 1, 5), rng.uniform(40, 60, 7)])
    part = partition_around(sp.csr_matrix(H), [0], threshold=10.0)
    assert part.alpha.size == 5
    out = second_order_effective(sp.csr_matrix(H), part)
    assert np.array_equal(out, out.T)


def test_degenerate_coupled_pair_rejected():
    H = sp.csr_matrix(np.array([[1.0, 0.3], [0.3, 1.0]]))
    part = SubspacePartition(
        alpha=np.array([0]), complement=np.array([1]),
        energies=np.array([1.0, 1.0]), threshold=0.1,
    )
    with pytest.raises(ValueError, match="resonant"):
        second_order_effective(H, part)


def test_degenerate_uncoupled_pair_is_harmless():
    H = sp.diags([1.0, 1.0]).tocsr()
    part = SubspacePartition(
        alpha=np.array([0]), complement=np.array([1]),
        energies=np.array([1.0, 1.0]), threshold=0.1,
    )
    out = second_order_effective(H, part)
    assert out[0, 0] == 1.0


# ------------------------------------------------------------- partitions

def test_partition_window_selection():
    H = sp.diags([0.0, 0.2, 5.0, 9.0, 9.3]).tocsr()
    part = partition_around(H, [0], threshold=0.5)
    assert list(part.alpha) == [0, 1]
    assert list(part.complement) == [2, 3, 4]
    assert np.array_equal(part.energies, H.diagonal())
    assert part.threshold == 0.5
    # several anchors: union of windows
    part = partition_around(H, [0, 3], threshold=0.5)
    assert list(part.alpha) == [0, 1, 3, 4]


def test_partition_accepts_reference_energy_override():
    H = sp.diags([0.0, 0.2, 5.0]).tocsr()
    ref = np.array([0.0, 0.0, 5.5])
    part = partition_around(H, [0], threshold=0.5, unperturbed=ref)
    assert np.array_equal(part.energies, ref)
    with pytest.raises(ValueError, match="dimension"):
        partition_around(H, [0], threshold=0.5, unperturbed=np.zeros(7))


def test_partition_overlap_rejected():
    with pytest.raises(ValueError, match="overlap"):
        SubspacePartition(
            alpha=np.array([0, 1]), complement=np.array([1, 2]),
            energies=np.zeros(3), threshold=1.0,
        )


def test_partition_contains_every_sector_image():
    pset, qlm = _pset(0.5, 2, m=0.1, g2=0.0)
    array = MoleculeArray.from_parameter_set(pset)
    basis = enumerate_dmh_basis(array, n_a=2)
    H = build_dmh_hamiltonian(array, basis)
    qlm_basis = QlmBasis(0.5, 2, frozen_last_link=0.5, total_fermion_number=2)
    embedding = build_embedding(qlm_basis, array, basis)
    _, dmh_idx = embedded_sector_indices(qlm_basis, embedding)

    threshold = 10.0 * max(pset.w, 0.1 * pset.scale)
    part = partition_around(H, dmh_idx, threshold,
                            unperturbed=ladder_reference_energies(array, basis))
    assert np.all(np.isin(dmh_idx, part.alpha))
    # the band is narrow on the scale of the level splittings
    assert np.ptp(H.diagonal()[part.alpha]) < 2.0 * threshold + 1e-12
    assert first_order_coupling_norm(H, part) == 0.0


def test_reference_energies_are_bare_ladder():
    pset, _ = _pset(0.5, 1, m=0.1, g2=0.0)
    array = MoleculeArray.from_parameter_set(pset)
    basis = enumerate_dmh_basis(array, n_a=1)
    ref = ladder_reference_energies(array, basis)
    two_b = 2.0 * pset.ladder.B_rot
    for k in range(basis.dim):
        expect = 0.0
        for i, lv in enumerate(basis.levels(k)):
            expect += (0.0 if lv == "a" else two_b) + pset.eps_leading[i, LEVEL_INDEX[lv]]
        assert ref[k] == pytest.approx(expect, rel=1e-12)


# ------------------------------------------------------- residual reporting

def test_residual_classification_kinds():
    target = np.zeros((4, 4))
    eff = np.zeros((4, 4))
    eff[0, 0] = 0.5                      # diagonal leftover
    eff[1, 2] = eff[2, 1] = 0.3          # between states with equal profiles
    eff[0, 3] = eff[3, 0] = 0.2          # between different flux-law sectors
    profiles = [(0, 0), (0, 1), (0, 1), (1, 0)]
    entries = residual_terms(eff, target, gauss_profiles=profiles, drop_mean=False)
    assert entries == [
        (0, 0, 0.5, "diagonal"),
        (1, 2, 0.3, "gauss-commuting"),
        (0, 3, 0.2, "violation"),
    ]


def test_residual_uniform_shift_carries_no_physics():
    rng = np.random.default_rng(3)
    target = rng.normal(size=(5, 5))
    target = (target + target.T) / 2
    eff = target + 0.7 * np.eye(5)
    assert all(abs(v) < 1e-15 for _, _, v, _ in residual_terms(eff, target))
    kept = residual_terms(eff, target, drop_mean=False)
    assert len(kept) == 5
    assert all(kind == "diagonal" and v == pytest.approx(0.7) for _, _, v, kind in kept)


# ------------------------------------------------- full default-setup checks

def test_s_half_reduction_matches_target():
    c = _compare(0.5, 3)
    assert c.alpha_size == 49
    assert c.sector_size == 13
    assert c.first_order_max == 0.0
    assert c.residual_in_w() < 1e-2
    assert c.residual_in_w() == pytest.approx(3.7200969e-3, rel=1e-6)
    assert c.residual_offdiag_max <= 1e-12 * c.w


def test_s_half_residual_is_mass_independent():
    a = _compare(0.5, 3, m=0.1)
    b = _compare(0.5, 3, m=2.0)
    assert a.residual_max == pytest.approx(b.residual_max, rel=1e-12)


@pytest.mark.parametrize("S,N", [(0.5, 3), (1.0, 2)])
def test_effective_hopping_matches_solver(S, N):
    c = _compare(S, N)
    assert c.hopping_effective / c.w == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("N,res_w,n_above", [(2, 0.3993732041, 5), (3, 0.8353125325, 13)])
def test_s_one_leftovers_are_diagonal_flux_preserving(N, res_w, n_above):
    c = _compare(1.0, N)
    assert c.first_order_max == 0.0
    assert c.residual_offdiag_max <= 1e-12 * c.w
    assert c.residual_in_w() == pytest.approx(res_w, rel=1e-6)
    above = [(i, j, v, kind) for i, j, v, kind in c.entries if abs(v) > 1e-2 * c.w]
    assert len(above) == n_above
    assert all(kind == "diagonal" for _, _, _, kind in above)


def test_s_one_spacing_ratio_suppresses_leftovers():
    near = _compare(1.0, 2, gamma=1.0)
    far = _compare(1.0, 2, gamma=3.0)
    assert near.residual_diag_max == pytest.approx(2.1432252852e-3, rel=1e-9)
    assert far.residual_diag_max == pytest.approx(2.6350626285e-6, rel=1e-9)
    # dominant leftover couplings scale as 1/r^6, so tripling the long gap
    # wins about 3^6; next-nearest pairs decay more slowly and add ~10%
    ratio = near.residual_diag_max / far.residual_diag_max
    assert 0.9 <= ratio / 3**6 <= 1.4


def test_comparison_report_serializes():
    c = _compare(0.5, 3)
    d = c.to_json_dict(top=3)
    assert d["schema_version"] == 1
    assert d["S"] == 0.5 and d["n_cells"] == 3
    assert d["residual_max_w"] == c.residual_in_w()
    assert d["first_order_max_v0"] == 0.0
    assert len(d["largest_terms"]) == 3
    assert {"i", "j", "value_w", "kind"} == set(d["largest_terms"][0])
    json.dumps(d)  # plain types only
