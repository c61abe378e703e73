"""U(1) quantum link model on a staggered-fermion chain.

Chain layout for N unit cells: sites S_1 .. S_2N interleaved with links
L_1 .. L_2N, where link L_x sits between sites x and x+1.  The last link
L_2N has no site to its right; it is frozen to a fixed projection by basis
construction (open boundary).  The Hamiltonian is

    H = -w sum_x [psi+_x U_x psi_{x+1} + h.c.]
        + m sum_x (-1)^x psi+_x psi_x
        + (g^2/2) sum_x (S^3_x)^2

with U_x = S^+ on link x and the electric field E_{x,x+1} = S^3.  Fermions
are treated as hard-core bosons; for nearest-neighbour hopping on an open
chain the Jordan-Wigner strings cancel, so all hopping amplitudes are
sign-free in the occupation basis.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
import math

import numpy as np
import scipy.sparse as sp

_VALID_S = (0.5, 1.0)


@dataclass(frozen=True)
class QlmParams:
    w: float
    m: float
    g2: float
    S: float
    N: int

    def __post_init__(self):
        if float(self.S) not in _VALID_S:
            raise ValueError(f"link spin must be 1/2 or 1, got {self.S}")
        if self.N < 1:
            raise ValueError("need at least one unit cell")
        if self.w <= 0:
            raise ValueError("hopping w must be positive")


@dataclass(frozen=True)
class QlmBasisState:
    occupation: tuple      # fermion occupation per site, left to right
    link_m3: tuple         # S^3 projection per link, left to right (incl. frozen)
    S: float
    N: int


class QlmBasis:
    """Enumerated basis with a fixed fermion number and frozen last link.

    States are ordered lexicographically: site occupations first (left to
    right), then dynamical link projections.  The ordering is part of the
    contract; every matrix built on the basis is reproducible bit for bit.
    """

    def __init__(self, S, N, frozen_last_link, total_fermion_number=None):
        S = float(S)
        if S not in _VALID_S:
            raise ValueError(f"link spin must be 1/2 or 1, got {S}")
        if N < 1:
            raise ValueError("need at least one unit cell")
        n_sites = 2 * N
        if total_fermion_number is not None and not (0 <= total_fermion_number <= n_sites):
            raise ValueError("fermion number out of range")
        two_s = int(round(2 * S))
        frozen_idx = Fraction(frozen_last_link) + Fraction(two_s, 2)
        if frozen_idx.denominator != 1 or not (0 <= frozen_idx <= two_s):
            raise ValueError(f"frozen link projection {frozen_last_link} invalid for S={S}")
        self.S = S
        self.N = N
        self.n_sites = n_sites
        self.n_links = n_sites
        self.two_s = two_s
        self.frozen_index = int(frozen_idx)
        self.frozen_last_link = float(frozen_last_link)
        self.total_fermion_number = total_fermion_number

        if total_fermion_number is None:
            occs = list(product((0, 1), repeat=n_sites))
        else:
            occs = []
            for filled in combinations(range(n_sites), total_fermion_number):
                occ = [0] * n_sites
                for k in filled:
                    occ[k] = 1
                occs.append(tuple(occ))
            occs.sort()
        link_choices = list(product(range(two_s + 1), repeat=n_sites - 1))

        occ_rows = []
        link_rows = []
        for occ in occs:
            for links in link_choices:
                occ_rows.append(occ)
                link_rows.append(links + (self.frozen_index,))
        self.occ = np.array(occ_rows, dtype=np.int8)
        self.link_idx = np.array(link_rows, dtype=np.int8)
        self.dim = len(occ_rows)
        self._lookup = {
            (occ, links): k for k, (occ, links) in enumerate(zip(occ_rows, link_rows))
        }
        # cache of per-link m3 values (float)
        self.link_m3 = self.link_idx.astype(np.float64) - S

    def index_of(self, state):
        occ = tuple(int(v) for v in state.occupation)
        links = tuple(int(round(m3 + self.S)) for m3 in state.link_m3)
        key = (occ, links)
        if key not in self._lookup:
            raise KeyError("state not in enumerated basis")
        return self._lookup[key]

    def index_of_raw(self, occ, link_idx):
        return self._lookup.get((tuple(occ), tuple(link_idx)))

    def state(self, k):
        return QlmBasisState(
            occupation=tuple(int(v) for v in self.occ[k]),
            link_m3=tuple(float(v) - self.S for v in self.link_idx[k]),
            S=self.S,
            N=self.N,
        )

    def state_vector(self, state):
        vec = np.zeros(self.dim)
        vec[self.index_of(state)] = 1.0
        return vec


def enumerate_qlm_basis(S, N, frozen_last_link, total_fermion_number=None):
    return QlmBasis(S, N, frozen_last_link, total_fermion_number)


def _raise_amp(S, idx):
    # <m3+1|S+|m3> for m3 = idx - S
    m3 = idx - S
    return math.sqrt(S * (S + 1) - m3 * (m3 + 1))


def build_qlm_hamiltonian(params, basis):
    """Sparse Hermitian H on the enumerated basis (real, CSR).

    For S=1/2 the electric term (g^2/2) sum (S^3)^2 is a constant on the
    restricted space and is dropped; g2 is ignored in that case.  The
    electric sum runs over dynamical links only.
    """
    if float(params.S) != basis.S or params.N != basis.N:
        raise ValueError("params and basis disagree on (S, N)")
    S, N = basis.S, basis.N
    n_sites = basis.n_sites
    dim = basis.dim

    stagger = np.array([(-1) ** x for x in range(1, n_sites + 1)], dtype=np.float64)
    diag = params.m * (basis.occ @ stagger)
    if S != 0.5 and params.g2 != 0.0:
        m3_dyn = basis.link_m3[:, : n_sites - 1]
        diag = diag + 0.5 * params.g2 * np.sum(m3_dyn**2, axis=1)

    rows = []
    cols = []
    vals = []
    occ = basis.occ
    links = basis.link_idx
    for k in range(dim):
        okk = occ[k]
        lkk = links[k]
        for x in range(n_sites - 1):          # bond between sites x, x+1 (0-based)
            if okk[x] == 0 and okk[x + 1] == 1 and lkk[x] < basis.two_s:
                new_occ = okk.copy()
                new_occ[x] = 1
                new_occ[x + 1] = 0
                new_links = lkk.copy()
                new_links[x] += 1
                tgt = basis.index_of_raw(new_occ, new_links)
                if tgt is None:
                    continue
                amp = -params.w * _raise_amp(S, lkk[x])
                rows.append(tgt)
                cols.append(k)
                vals.append(amp)
                rows.append(k)
                cols.append(tgt)
                vals.append(amp)
    H = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    H = H + sp.diags(diag)
    return H.tocsr()


def gauss_diagonal(x, basis):
    """Diagonal of the Gauss operator G~_x as a dense vector.

    G~_x = psi+_x psi_x - E_{x,x+1} + E_{x-1,x} + [(-1)^x - 1]/2, defined for
    sites x = 2 .. 2N which have links on both flanks.
    """
    if not (2 <= x <= basis.n_sites):
        raise ValueError(f"Gauss operator needs links on both sides; x={x} is a boundary site")
    offset = ((-1) ** x - 1) / 2.0
    f = basis.occ[:, x - 1].astype(np.float64)
    e_right = basis.link_m3[:, x - 1]
    e_left = basis.link_m3[:, x - 2]
    return f - e_right + e_left + offset


def gauss_operator(x, basis):
    return sp.diags(gauss_diagonal(x, basis)).tocsr()


def dynamical_gauss_sites(basis):
    """Site indices where the Gauss operator is defined (2 .. 2N)."""
    return tuple(range(2, basis.n_sites + 1))


def string_preset(S, N, direction="right"):
    """Uniform-flux string: odd sites occupied, every link at +S.

    Gauss-consistent by construction: on odd (occupied) sites equal fluxes on
    both flanks cancel against the staggered offset; on even (empty) sites
    the flux difference is zero.
    """
    if direction != "right":
        raise ValueError("only right-pointing strings are defined")
    S = float(S)
    if S not in _VALID_S:
        raise ValueError(f"link spin must be 1/2 or 1, got {S}")
    occupation = tuple(1 if (x % 2 == 1) else 0 for x in range(1, 2 * N + 1))
    link_m3 = tuple(S for _ in range(2 * N))
    return QlmBasisState(occupation=occupation, link_m3=link_m3, S=S, N=N)


def apply_mass_sign_flip_transform(basis):
    """Diagonal +-1 unitary U = (-1)^(sum of odd-site occupations).

    Anticommutes with the hopping part and commutes with the mass part, so
    together with complex conjugation it maps evolution under H(m) onto
    evolution under H(-m).  Only the S=1/2 model has this symmetry; for S=1
    the electric term spoils it and the call is rejected.
    """
    if basis.S != 0.5:
        raise ValueError("mass-sign-flip transform exists only for S=1/2")
    odd_cols = basis.occ[:, 0::2]          # sites 1, 3, 5, ... (1-based odd)
    parity = np.sum(odd_cols, axis=1) % 2
    return np.where(parity == 1, -1.0, 1.0)


def cp_transform(basis):
    """Charge conjugation x parity as a basis permutation.

    Site x maps to site 2N+1-x with occupation flipped; link l maps to link
    2N-l with projection preserved; the frozen boundary link keeps its value.
    Returns (perm, phases) with perm[k] = index of the image of state k; the
    map is phase-free in this occupation basis, so phases are identically 1.
    """
    n_sites = basis.n_sites
    perm = np.empty(basis.dim, dtype=np.int64)
    for k in range(basis.dim):
        occ = basis.occ[k]
        links = basis.link_idx[k]
        new_occ = tuple(1 - int(occ[n_sites - 1 - x]) for x in range(n_sites))
        new_links = tuple(
            int(links[n_sites - 2 - l]) for l in range(n_sites - 1)
        ) + (basis.frozen_index,)
        tgt = basis.index_of_raw(new_occ, new_links)
        if tgt is None:
            raise ValueError("CP image leaves the enumerated basis (check fermion-number filter)")
        perm[k] = tgt
    phases = np.ones(basis.dim)
    return perm, phases


def cp_odd_observables(basis):
    """Diagonals of the CP-odd operators.

    Returns (density_combos, flux_combos): f_x + f_{2N+1-x} - 1 for
    x = 1..N, and E_l - E_{2N-l} for l = 1..N-ish (dynamical mirror pairs).
    Expectation values of all of them vanish at all times when the initial
    state is CP-symmetric.
    """
    n_sites = basis.n_sites
    density = []
    for x in range(1, n_sites // 2 + 1):
        f_a = basis.occ[:, x - 1].astype(np.float64)
        f_b = basis.occ[:, n_sites - x].astype(np.float64)
        density.append(f_a + f_b - 1.0)
    flux = []
    for l in range(1, (n_sites - 1) // 2 + 1):
        e_a = basis.link_m3[:, l - 1]
        e_b = basis.link_m3[:, n_sites - 1 - l]
        flux.append(e_a - e_b)
    return density, flux
