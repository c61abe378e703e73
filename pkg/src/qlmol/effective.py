"""Quasidegenerate second-order reduction of the molecular Hamiltonian.

The emulated dynamics lives in a narrow band of nearly degenerate
configurations; everything else is detuned by the level splittings.  This
module folds the detuned states into the band perturbatively,

    H_eff[m,n] = E_m δ_mn + V[m,n] + ½ Σ_l V[m,l] V[l,n] (1/(E_m−E_l) + 1/(E_n−E_l)),

and compares the result, restricted to the flux-law sector, against the
target gauge-model Hamiltonian.  The difference is reported term by term:
diagonal leftovers are benign (they commute with every local flux-law
generator); off-diagonal ones would signal a genuine scheme violation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dmh import build_embedding, build_dmh_hamiltonian, enumerate_dmh_basis, MoleculeArray
from .qlm import QlmBasis, build_qlm_hamiltonian, gauss_diagonal, dynamical_gauss_sites


@dataclass(frozen=True)
class SubspacePartition:
    """Nearly degenerate index set α, its complement, and all level energies."""

    alpha: np.ndarray
    complement: np.ndarray
    energies: np.ndarray
    threshold: float

    def __post_init__(self):
        if len(np.intersect1d(self.alpha, self.complement)):
            raise ValueError("alpha and complement overlap")


def partition_around(hamiltonian, anchor, threshold, unperturbed=None):
    """States whose diagonal energy lies within ``threshold`` of any anchor.

    ``unperturbed`` optionally supplies the zeroth-order energies used for
    the perturbative denominators (default: the full diagonal).  Passing the
    bare ladder energies here reproduces the splitting convention of the
    level-scheme solver, which folds every engineered correction into the
    perturbation rather than the reference spectrum.
    """
    diag = np.asarray(hamiltonian.diagonal())
    anchor = np.asarray(anchor, dtype=np.int64)
    keep = np.zeros(diag.size, dtype=bool)
    for e in diag[anchor]:
        keep |= np.abs(diag - e) <= threshold
    alpha = np.nonzero(keep)[0]
    energies = diag if unperturbed is None else np.asarray(unperturbed, dtype=float)
    if energies.shape != diag.shape:
        raise ValueError("unperturbed energies must match the basis dimension")
    return SubspacePartition(
        alpha=alpha,
        complement=np.nonzero(~keep)[0],
        energies=energies,
        threshold=float(threshold),
    )


def first_order_coupling_norm(hamiltonian, partition):
    """max |V[m,n]| over distinct α states — expected to vanish, and checked."""
    block = hamiltonian.tocsr()[partition.alpha][:, partition.alpha].toarray()
    np.fill_diagonal(block, 0.0)
    return float(np.abs(block).max()) if block.size else 0.0


def second_order_effective(hamiltonian, partition, degeneracy_tol=1e-9):
    """Dense effective operator on α with symmetrized energy denominators.

    Raises ``ValueError`` when a complement state coupled to α is degenerate
    with it (vanishing denominator: the perturbative split is ill-defined).
    """
    H = hamiltonian.tocsr()
    alpha, comp = partition.alpha, partition.complement
    e_a = partition.energies[alpha]
    e_c = partition.energies[comp]

    V_ac = H[alpha][:, comp].toarray()
    den = e_a[:, None] - e_c[None, :]
    scale = max(1.0, np.abs(partition.energies).max())
    bad = (np.abs(den) < degeneracy_tol * scale) & (V_ac != 0.0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"degenerate subspace split: complement state {comp[j]} is "
            f"resonant with alpha state {alpha[i]} but coupled to it"
        )
    den_safe = np.where(den == 0.0, 1.0, den)   # zeros only where V_ac is 0 too
    weighted = np.where(V_ac != 0.0, V_ac / den_safe, 0.0)
    A = weighted @ V_ac.T
    out = 0.5 * (A + A.T)
    out += H[alpha][:, alpha].toarray()      # E_m δ_mn + first-order block
    return out


def embedded_sector_indices(qlm_basis, embedding):
    """Positions (QLM-side and molecular-side) of the flux-law-clean states."""
    null = np.ones(qlm_basis.dim, dtype=bool)
    for x in dynamical_gauss_sites(qlm_basis):
        null &= gauss_diagonal(x, qlm_basis) == 0
    qlm_idx = np.nonzero(null)[0]
    return qlm_idx, embedding.indices[qlm_idx]


def residual_terms(effective_block, target_block, gauss_profiles=None, drop_mean=True):
    """Element-wise difference, largest first, with a benignity tag per term.

    ``gauss_profiles[k]`` is the tuple of local flux-law eigenvalues of basis
    state k; off-diagonal residuals between states with equal profiles still
    commute with every generator.  A uniform diagonal offset carries no
    physics and is removed by default.
    """
    R = np.asarray(effective_block) - np.asarray(target_block)
    if drop_mean:
        R = R - np.eye(R.shape[0]) * (np.trace(R) / R.shape[0])
    order = np.argsort(np.abs(R), axis=None)[::-1]
    entries = []
    for flat in order:
        i, j = divmod(int(flat), R.shape[1])
        if j < i or R[i, j] == 0.0:
            continue
        if i == j:
            kind = "diagonal"
        elif gauss_profiles is not None and gauss_profiles[i] == gauss_profiles[j]:
            kind = "gauss-commuting"
        else:
            kind = "violation"
        entries.append((i, j, float(R[i, j]), kind))
    return entries


@dataclass(frozen=True)
class EffectiveComparison:
    """Outcome of the reduction-vs-target check, all energies in V0 units."""

    S: float
    n_cells: int
    w: float
    alpha_size: int
    sector_size: int
    first_order_max: float
    residual_max: float
    residual_diag_max: float
    residual_offdiag_max: float
    entries: tuple
    hopping_effective: float

    def residual_in_w(self):
        return self.residual_max / self.w

    def to_json_dict(self, top=10):
        return {
            "schema_version": 1,
            "S": self.S,
            "n_cells": self.n_cells,
            "w_v0": self.w,
            "alpha_size": self.alpha_size,
            "sector_size": self.sector_size,
            "first_order_max_v0": self.first_order_max,
            "residual_max_v0": self.residual_max,
            "residual_max_w": self.residual_in_w(),
            "residual_diag_max_w": self.residual_diag_max / self.w,
            "residual_offdiag_max_w": self.residual_offdiag_max / self.w,
            "effective_hopping_v0": self.hopping_effective,
            "largest_terms": [
                {"i": i, "j": j, "value_w": v / self.w, "kind": kind}
                for i, j, v, kind in self.entries[:top]
            ],
        }


def ladder_reference_energies(array, basis):
    """Zeroth-order diagonal: rotational ladder only, no engineered shifts."""
    pset = array.parameter_set
    out = np.zeros(basis.dim)
    two_b = 2.0 * pset.ladder.B_rot
    for i in range(array.n_molecules):
        lv = basis.configs[:, i].astype(np.int64)
        out += np.where(lv == 0, 0.0, two_b) + pset.eps_leading[i, lv]
    if not np.all(np.isfinite(out)):
        raise ValueError("basis reaches a level with no reference energy")
    return out


def compare_effective_to_target(pset, qlm_params, window_factor=10.0):
    """Build everything from a solved ParameterSet and run the comparison."""
    S, N = pset.S, pset.n_cells
    array = MoleculeArray.from_parameter_set(pset)
    dmh_basis = enumerate_dmh_basis(array, n_a=N)
    H = build_dmh_hamiltonian(array, dmh_basis)
    qlm_basis = QlmBasis(S, N, frozen_last_link=S, total_fermion_number=N)
    embedding = build_embedding(qlm_basis, array, dmh_basis)
    qlm_idx, dmh_idx = embedded_sector_indices(qlm_basis, embedding)

    threshold = window_factor * max(
        pset.w, abs(qlm_params.m) * pset.scale, abs(qlm_params.g2) * pset.scale
    )
    partition = partition_around(
        H, dmh_idx, threshold, unperturbed=ladder_reference_energies(array, dmh_basis)
    )
    h_eff = second_order_effective(H, partition)

    target_full = (build_qlm_hamiltonian(qlm_params, qlm_basis) * pset.scale).toarray()
    target = target_full[np.ix_(qlm_idx, qlm_idx)]

    pos_in_alpha = np.searchsorted(partition.alpha, dmh_idx)
    assert np.array_equal(partition.alpha[pos_in_alpha], dmh_idx)
    block = h_eff[np.ix_(pos_in_alpha, pos_in_alpha)]

    profiles = [
        tuple(int(gauss_diagonal(x, qlm_basis)[k]) for x in dynamical_gauss_sites(qlm_basis))
        for k in qlm_idx
    ]
    entries = residual_terms(block, target, gauss_profiles=profiles)
    res = [abs(v) for _, _, v, _ in entries]
    diag = [abs(v) for i, j, v, _ in entries if i == j]
    off = [abs(v) for i, j, v, _ in entries if i != j]

    # effective hopping read from a matrix element the target fixes to -w·amp
    hop = 0.0
    T = np.abs(target)
    if T.size and (T > 0).any():
        off_t = T.copy()
        off_t[np.diag_indices_from(off_t)] = 0.0
        i, j = np.unravel_index(off_t.argmax(), off_t.shape)
        hop = float(block[i, j] / (target[i, j] / pset.w))

    return EffectiveComparison(
        S=S,
        n_cells=N,
        w=pset.w,
        alpha_size=len(partition.alpha),
        sector_size=len(dmh_idx),
        first_order_max=first_order_coupling_norm(H, partition),
        residual_max=max(res) if res else 0.0,
        residual_diag_max=max(diag) if diag else 0.0,
        residual_offdiag_max=max(off) if off else 0.0,
        entries=tuple(entries),
        hopping_effective=hop,
    )
