"""Molecular-array Hamiltonian on the restricted level sets.

The chain alternates site and link molecules.  Each molecule keeps a small
set of rotational levels (selected by the trapping scheme); the pair
couplings are the dipolar exchange elements of :mod:`qlmol.rotational`,
evaluated for every molecule pair at the actual chain geometry.  Because
the exchange conserves the number of molecules in the rotational ground
level ``a``, the simulation works inside one fixed-``a``-count sector,
with the last link molecule frozen to its boundary level.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .params import ParameterSet, molecule_role
from .rotational import LEVELS, LEVEL_INDEX, catalog_coefficient, catalog_transitions

_ROLE_LEVELS = {
    0.5: (("a", "b"), ("a", "b", "d")),
    1.0: (("a", "c"), ("a", "b", "c", "d")),
}

_BOUNDARY_LEVEL = {0.5: "d", 1.0: "c"}


def full_hilbert_dimension(n_cells):
    """Size of the unrestricted four-level many-body space."""
    return 4 ** (4 * n_cells)


@dataclass(frozen=True)
class MoleculeArray:
    """Geometry, roles, retained levels and one-body energies of the chain."""

    S: float
    n_cells: int
    positions: np.ndarray          # [4N, 3], units of the base spacing
    roles: tuple
    allowed: tuple                 # per-molecule tuple of level letters
    parameter_set: ParameterSet

    @classmethod
    def from_parameter_set(cls, pset):
        n_mol = 4 * pset.n_cells
        site_levels, link_levels = _ROLE_LEVELS[pset.S]
        allowed = tuple(
            site_levels if i % 2 == 0 else link_levels for i in range(n_mol)
        )
        return cls(
            S=pset.S,
            n_cells=pset.n_cells,
            positions=pset.geometry.positions(pset.n_cells),
            roles=tuple(molecule_role(i) for i in range(n_mol)),
            allowed=allowed,
            parameter_set=pset,
        )

    @property
    def n_molecules(self):
        return 4 * self.n_cells

    def pair_geometry(self, i, j):
        return self.parameter_set.context.pair_geom(i, j)

    def pair_distance(self, i, j):
        return abs(
            self.parameter_set.context.coords[i] - self.parameter_set.context.coords[j]
        )

    def unrestricted_dimension(self):
        """Product of per-molecule retained-level counts, before any filtering."""
        out = 1
        for levels in self.allowed:
            out *= len(levels)
        return out

    def default_frozen(self):
        return {self.n_molecules - 1: _BOUNDARY_LEVEL[self.S]}


@dataclass(frozen=True)
class DmhBasis:
    """Canonically ordered configurations of one fixed-``a``-count sector.

    ``configs[k, i]`` is the level index (0..3 for a..d) of molecule ``i``
    in basis state ``k``; states are sorted by their base-4 encoding with
    molecule 0 as the least significant digit.
    """

    configs: np.ndarray            # int8 [dim, 4N]
    keys: np.ndarray               # int64 [dim], strictly increasing
    n_a: int
    frozen: tuple                  # ((molecule, level letter), ...)

    @property
    def dim(self):
        return self.configs.shape[0]

    @property
    def n_molecules(self):
        return self.configs.shape[1]

    def levels(self, k):
        """Level letters of basis state k."""
        return tuple(LEVELS[c] for c in self.configs[k])

    def index_of_key(self, key):
        pos = int(np.searchsorted(self.keys, key))
        if pos == self.dim or self.keys[pos] != key:
            raise KeyError(f"configuration key {key} not in basis")
        return pos


def _encode(configs):
    weights = 4 ** np.arange(configs.shape[1], dtype=np.int64)
    return configs.astype(np.int64) @ weights


def enumerate_dmh_basis(array, n_a, frozen=None):
    """All level assignments with ``n_a`` molecules in level a.

    ``frozen`` maps molecule indices to a fixed level (default: the last
    link pinned to its boundary value).  Raises ``ValueError`` when a
    frozen level is not retained on that molecule.
    """
    if frozen is None:
        frozen = array.default_frozen()
    choice_sets = []
    for i in range(array.n_molecules):
        if i in frozen:
            if frozen[i] not in array.allowed[i]:
                raise ValueError(
                    f"frozen level {frozen[i]!r} not retained on molecule {i}"
                )
            choice_sets.append((LEVEL_INDEX[frozen[i]],))
        else:
            choice_sets.append(tuple(LEVEL_INDEX[l] for l in array.allowed[i]))

    configs = np.zeros((1, 0), dtype=np.int8)
    for choices in choice_sets:
        block = np.repeat(configs, len(choices), axis=0)
        col = np.tile(np.array(choices, dtype=np.int8), configs.shape[0])
        configs = np.column_stack([block, col])
    mask = (configs == 0).sum(axis=1) == n_a
    configs = configs[mask]
    keys = _encode(configs)
    order = np.argsort(keys)
    return DmhBasis(
        configs=np.ascontiguousarray(configs[order]),
        keys=keys[order],
        n_a=int(n_a),
        frozen=tuple(sorted((i, frozen[i]) for i in frozen)),
    )


def build_dmh_hamiltonian(array, basis, max_range=None, max_neighbor=None):
    """Sparse symmetric Hamiltonian in the given sector, V0 units.

    One-body part: rotational ladder plus the solved level shifts.
    Two-body part: all-pairs dipolar exchange, projected on the sector
    (transitions that would leave it — changed ``a`` count or a frozen
    molecule — drop out through the projection).  ``max_range`` optionally
    discards pairs beyond that distance; ``max_neighbor`` discards pairs
    more than that many chain positions apart (``max_neighbor=1`` keeps
    nearest molecules only, regardless of the gap pattern).  By default
    every pair is kept.
    """
    pset = array.parameter_set
    cfg = basis.configs
    dim = basis.dim
    n_mol = array.n_molecules

    diag = np.zeros(dim)
    two_b = 2.0 * pset.ladder.B_rot
    for i in range(n_mol):
        lv = cfg[:, i].astype(np.int64)
        diag += np.where(lv == 0, 0.0, two_b) + pset.eps_full[i, lv]
    if not np.all(np.isfinite(diag)):
        raise ValueError("basis reaches a level with no assigned energy")

    weights = 4 ** np.arange(n_mol, dtype=np.int64)
    rows, cols, vals = [], [], []
    for i in range(n_mol):
        for j in range(i + 1, n_mol):
            if max_range is not None and array.pair_distance(i, j) > max_range:
                continue
            if max_neighbor is not None and j - i > max_neighbor:
                continue
            geom = array.pair_geometry(i, j)
            for al, be, ga, eta in catalog_transitions():
                if al not in array.allowed[i] or ga not in array.allowed[i]:
                    continue
                if be not in array.allowed[j] or eta not in array.allowed[j]:
                    continue
                coeff = catalog_coefficient(geom, al, be, ga, eta)
                if coeff == 0.0:
                    continue
                assert abs(coeff.imag) <= 1e-15 * abs(coeff)
                src = np.nonzero(
                    (cfg[:, i] == LEVEL_INDEX[ga]) & (cfg[:, j] == LEVEL_INDEX[eta])
                )[0]
                if src.size == 0:
                    continue
                dkey = (
                    basis.keys[src]
                    + (LEVEL_INDEX[al] - LEVEL_INDEX[ga]) * weights[i]
                    + (LEVEL_INDEX[be] - LEVEL_INDEX[eta]) * weights[j]
                )
                pos = np.searchsorted(basis.keys, dkey)
                pos = np.minimum(pos, dim - 1)
                ok = basis.keys[pos] == dkey
                if not np.any(ok):
                    continue
                rows.append(pos[ok])
                cols.append(src[ok])
                vals.append(np.full(int(ok.sum()), coeff.real))

    if rows:
        off = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        ).tocsr()
    else:
        off = sp.csr_matrix((dim, dim))
    return (off + sp.diags(diag)).tocsr()


# ---------------------------------------------------------------------------
# state maps between the gauge-model space and the molecular sector

def _qlm_level_maps(S):
    if S == 0.5:
        occ_map = {0: LEVEL_INDEX["b"], 1: LEVEL_INDEX["a"]}
        m3_map = {0.5: LEVEL_INDEX["d"], -0.5: LEVEL_INDEX["b"]}
    else:
        occ_map = {0: LEVEL_INDEX["c"], 1: LEVEL_INDEX["a"]}
        m3_map = {1.0: LEVEL_INDEX["c"], 0.0: LEVEL_INDEX["b"], -1.0: LEVEL_INDEX["d"]}
    return occ_map, m3_map


@dataclass(frozen=True)
class QlmDmhEmbedding:
    """Index map realizing the level dictionary between the two spaces."""

    indices: np.ndarray            # QLM basis index -> DMH basis index
    qlm_dim: int
    dmh_dim: int


def build_embedding(qlm_basis, array, dmh_basis):
    occ_map, m3_map = _qlm_level_maps(array.S)
    n_mol = array.n_molecules
    weights = 4 ** np.arange(n_mol, dtype=np.int64)
    keys = np.zeros(qlm_basis.dim, dtype=np.int64)
    for x in range(2 * array.n_cells):          # sites -> even molecules
        col = qlm_basis.occ[:, x].astype(np.int64)
        keys += np.where(col == 1, occ_map[1], occ_map[0]) * weights[2 * x]
    for l in range(2 * array.n_cells):          # links -> odd molecules
        m3 = qlm_basis.link_m3[:, l]
        lv = np.zeros(qlm_basis.dim, dtype=np.int64)
        for value, idx in m3_map.items():
            lv[np.isclose(m3, value)] = idx
        keys += lv * weights[2 * l + 1]
    pos = np.searchsorted(dmh_basis.keys, keys)
    pos = np.minimum(pos, dmh_basis.dim - 1)
    if not np.all(dmh_basis.keys[pos] == keys):
        raise ValueError(
            "gauge-model state maps outside the enumerated molecular sector "
            "(check the a-count and the frozen boundary level)"
        )
    return QlmDmhEmbedding(
        indices=pos.astype(np.int64), qlm_dim=qlm_basis.dim, dmh_dim=dmh_basis.dim
    )


def embed_qlm_state(psi, embedding):
    """Isometric injection; amplitudes are carried over with unit phases."""
    psi = np.asarray(psi)
    if psi.shape != (embedding.qlm_dim,):
        raise ValueError("vector does not match the gauge-model dimension")
    out = np.zeros(embedding.dmh_dim, dtype=psi.dtype)
    out[embedding.indices] = psi
    return out


def project_dmh_state(psi, embedding):
    """Adjoint of the embedding.  No renormalization: lost weight is leakage."""
    psi = np.asarray(psi)
    if psi.shape != (embedding.dmh_dim,):
        raise ValueError("vector does not match the molecular-sector dimension")
    return psi[embedding.indices].copy()
