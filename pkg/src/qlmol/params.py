"""Level-scheme solver for the molecular chain.

A chain of 4N molecules (alternating site and link roles) emulates the
gauge model when the internal-level energies ε are tuned so that

  * the intended gauge configurations are degenerate at leading order,
  * every fermion hop is a resonant second-order exchange process with the
    same amplitude on every bond, and
  * the second-order self-interaction shifts Σ that the dipolar coupling
    generates on top of the leading energies are absorbed back into the ε
    (otherwise they detune the resonances by amounts comparable to the
    hopping itself).

This module owns that tuning problem.  Energies are expressed in units of
V0 = (dipole moment)²/(4πε₀ r³ h), the dipolar coupling of the first
site-link pair at distance r.  The ladder of detunings is parameterised by
two arithmetic sequences δ_{1,n}, δ_{2,n} stepping down by D1 and D2, with
link offsets Δ_{1,n} = δ_{1,n} + D1/2 and Δ_{2,n} = δ_{2,n} + D2/2.
Distances repeat the four-gap pattern [r, γr, βr, βγr]; choosing
β = (D1/D2)^(1/6) makes the bond amplitude x-independent because the
factor β⁻⁶ in |V|² exactly compensates the D2/D1 ratio of the virtual-state
splittings.

Second-order sums run over the restricted level sets (sites keep two
levels, links three or four) and keep only intermediates with the same
number of rotational ground states |a⟩; virtual states split by the
rotational constant B are dropped, as are corrections of order m, g², Σ to
the denominators.  Both truncations are deliberate and are what the
matching conditions are defined against.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const

from .rotational import LEVELS, LEVEL_INDEX, LEVEL_N, PairGeometry, catalog_coefficient

DIPOLE_MOMENT_DEBYE = 3.3
MIN_SPACING_UM = 0.5
_DEBYE = 1e-21 / _const.c        # C·m

_GAP_PATTERN = ("r", "gamma_r", "beta_r", "beta_gamma_r")


class InfeasibleParametersError(ValueError):
    """Raised when a level scheme cannot realise the matching conditions."""


# --------------------------------------------------------------------- ladder

class EnergyLadder:
    """Arithmetic detuning ladder δ_{1,n}, δ_{2,n} with offsets Δ.

    delta1[n] and delta2[n] are the characteristic site detunings of unit
    cell n; they obey delta2[n] = delta1[n] - D1 and
    delta1[n+1] = delta2[n] - D2.  The link offsets follow as
    Delta1[n] = delta1[n] + D1/2 and Delta2[n] = delta2[n] + D2/2, which is
    equivalent to Delta1 = (3*delta1 - delta2)/2 and
    Delta2 = (3*delta2 - delta1')/2.  All values are in units of V0.

    ``delta_offset`` shifts every link manifold away from its matched
    position.  It exists as a diagnostic knob: any nonzero value violates
    the Delta relations above, detunes the virtual states, and should make
    the downstream consistency checks fail.
    """

    def __init__(self, delta1_0, D1, D2, B_rot, n_cells, delta_offset=0.0):
        if n_cells < 1:
            raise ValueError("need at least one unit cell")
        if B_rot <= 0:
            raise ValueError("rotational constant must be positive")
        self.delta1_0 = float(delta1_0)
        self.D1 = float(D1)
        self.D2 = float(D2)
        self.B_rot = float(B_rot)
        self.n_cells = int(n_cells)
        self.delta_offset = float(delta_offset)
        n = np.arange(n_cells + 1)
        delta1_ext = delta1_0 - n * (D1 + D2)
        self.delta1 = delta1_ext[:-1]
        self.delta2 = self.delta1 - D1
        self.Delta1 = self.delta1 + D1 / 2.0 + self.delta_offset
        self.Delta2 = self.delta2 + D2 / 2.0 + self.delta_offset
        self._delta1_next = delta1_ext[1:]

    def check_invariants(self):
        assert np.allclose(self.delta2, self.delta1 - self.D1)
        assert np.allclose(self._delta1_next, self.delta2 - self.D2)
        assert np.allclose(self.Delta1, (3 * self.delta1 - self.delta2) / 2.0)
        assert np.allclose(self.Delta2, (3 * self.delta2 - self._delta1_next) / 2.0)

    def beta(self):
        if self.D1 <= 0 or self.D2 <= 0:
            raise InfeasibleParametersError(
                f"ladder requires positive decrements, got D1={self.D1}, D2={self.D2}"
            )
        return (self.D1 / self.D2) ** (1.0 / 6.0)


def default_ladder(S, n_cells):
    if float(S) == 0.5:
        return EnergyLadder(25.0, 20.0, 140.0, 1000.0, n_cells)
    return EnergyLadder(12.5, 10.0, 70.0, 1000.0, n_cells)


# ------------------------------------------------------------------- geometry

@dataclass(frozen=True)
class ChainGeometry:
    """Collinear molecule positions: gaps cycle through r, γr, βr, βγr."""

    r: float
    beta: float
    gamma: float
    theta: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("base distance must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.gamma < 1.0:
            raise ValueError("gamma is the long/short ratio and must be >= 1")

    @classmethod
    def from_ladder(cls, ladder, gamma, theta, r=1.0):
        return cls(r=r, beta=ladder.beta(), gamma=gamma, theta=theta)

    def gap(self, k):
        kind = _GAP_PATTERN[k % 4]
        scale = {
            "r": 1.0,
            "gamma_r": self.gamma,
            "beta_r": self.beta,
            "beta_gamma_r": self.beta * self.gamma,
        }[kind]
        return self.r * scale

    def coordinates(self, n_cells):
        """1-d coordinates of the 4N molecules along the chain axis."""
        n_mol = 4 * n_cells
        coords = np.zeros(n_mol)
        for k in range(1, n_mol):
            coords[k] = coords[k - 1] + self.gap(k - 1)
        return coords

    def positions(self, n_cells):
        """3-d positions; the chain axis points along (sinθ, 0, cosθ)."""
        axis = np.array([math.sin(self.theta), 0.0, math.cos(self.theta)])
        return self.coordinates(n_cells)[:, None] * axis[None, :]


def solve_s1_angle():
    """cos²θ roots that give both bond channels equal magnitude.

    The two exchange channels on a bond carry angular factors sinθcosθ/√2
    and (3cos²θ-1)/3 with virtual-state splittings D/2 and 3D/2; equal
    second-order amplitudes require |sinθcosθ|/√2 = |3cos²θ-1|/9, i.e.
    99c⁴ - 93c² + 2 = 0 in c = cosθ.  Returns both roots of c², ascending.
    The smaller root (3cos²θ-1 < 0) is the one that also aligns the signs
    of the two channels.
    """
    disc = math.sqrt(93.0**2 - 4.0 * 99.0 * 2.0)
    return ((93.0 - disc) / 198.0, (93.0 + disc) / 198.0)


def default_geometry(S, gamma=None, ladder=None):
    S = float(S)
    if ladder is None:
        ladder = default_ladder(S, 1)
    if S == 0.5:
        gamma = 1.0 if gamma is None else gamma
        theta = math.pi / 2.0
    else:
        gamma = 1.5 if gamma is None else gamma
        theta = math.acos(math.sqrt(solve_s1_angle()[0]))
    return ChainGeometry.from_ladder(ladder, gamma=gamma, theta=theta)


# -------------------------------------------------------- roles and level sets

def molecule_role(i):
    return "Site" if i % 2 == 0 else "Link"


def molecule_label(i):
    if i % 2 == 0:
        return f"S{i // 2 + 1}"
    return f"L{(i + 1) // 2}"


def allowed_levels(S, i, n_cells):
    """Retained internal levels of molecule i; the last link is pinned."""
    S = float(S)
    if i == 4 * n_cells - 1:                      # frozen boundary link
        return ("d",) if S == 0.5 else ("c",)
    if i % 2 == 0:
        return ("a", "b") if S == 0.5 else ("a", "c")
    return ("a", "b", "d") if S == 0.5 else ("a", "b", "c", "d")


_ROT_SHIFT = {"a": 0.0, "b": 2.0, "c": 2.0, "d": 2.0}   # B·N(N+1)/B_rot


# ------------------------------------------------------------ leading energies

def leading_order_energies(S, ladder, n_cells):
    """Tabulated ε at leading order, [4N, 4] in V0 units; NaN = excluded.

    Site molecules put the occupied state |a⟩ at zero and the empty state
    (|b⟩ for S=1/2, |c⟩ for S=1) at δ_{1,n} / δ_{2,n}.  Link molecules
    spread their gauge levels around Δ_{1,n} / Δ_{2,n} with spacing D so
    every hop channel is resonant.  The rotational energy 2B common to all
    N=1 levels is not included here; it is a separate additive constant.
    """
    S = float(S)
    n_mol = 4 * n_cells
    eps = np.full((n_mol, 4), np.nan)
    allowed = np.zeros((n_mol, 4), dtype=bool)
    for i in range(n_mol):
        n = i // 4
        kind = i % 4
        if S == 0.5:
            if kind == 0:
                table = {"a": 0.0, "b": ladder.delta1[n]}
            elif kind == 1:
                table = {"a": 0.0, "b": ladder.Delta1[n] - ladder.D1, "d": ladder.Delta1[n]}
            elif kind == 2:
                table = {"a": 0.0, "b": ladder.delta2[n]}
            else:
                table = {"a": 0.0, "b": ladder.Delta2[n] - ladder.D2, "d": ladder.Delta2[n]}
        else:
            if kind == 0:
                table = {"a": 0.0, "c": ladder.delta1[n]}
            elif kind == 1:
                d0 = ladder.Delta1[n]
                table = {"a": 0.0, "b": d0, "c": d0 + ladder.D1, "d": d0 - ladder.D1}
            elif kind == 2:
                table = {"a": 0.0, "c": ladder.delta2[n]}
            else:
                d0 = ladder.Delta2[n]
                table = {"a": 0.0, "b": d0, "c": d0 + ladder.D2, "d": d0 - ladder.D2}
        for lev in allowed_levels(S, i, n_cells):
            eps[i, LEVEL_INDEX[lev]] = table[lev]
            allowed[i, LEVEL_INDEX[lev]] = True
    return eps, allowed


# ------------------------------------------------------------------- context

@dataclass
class ParameterContext:
    """Everything the second-order sums need: levels, energies, distances."""

    S: float
    n_cells: int
    ladder: EnergyLadder
    geometry: ChainGeometry
    eps0: np.ndarray
    allowed_mask: np.ndarray
    coords: np.ndarray
    v0: float = 1.0

    @classmethod
    def build(cls, S, ladder, geometry, n_cells=None, v0=1.0):
        S = float(S)
        if n_cells is None:
            n_cells = ladder.n_cells
        if n_cells > ladder.n_cells:
            raise ValueError("ladder too short for the requested chain")
        if ladder.D1 <= 0 or ladder.D2 <= 0:
            raise InfeasibleParametersError(
                "infeasible ladder: non-positive level splittings "
                f"(D1={ladder.D1}, D2={ladder.D2}) make the virtual-state "
                "denominators collapse"
            )
        eps0, allowed = leading_order_energies(S, ladder, n_cells)
        coords = geometry.coordinates(n_cells)
        return cls(S=S, n_cells=n_cells, ladder=ladder, geometry=geometry,
                   eps0=eps0, allowed_mask=allowed, coords=coords, v0=v0)

    def levels(self, i):
        return allowed_levels(self.S, i, self.n_cells)

    def energy(self, i, level):
        """Leading one-body energy incl. the rotational constant, V0 units."""
        e = self.eps0[i, LEVEL_INDEX[level]]
        if np.isnan(e):
            raise ValueError(f"level {level} is excluded on molecule {molecule_label(i)}")
        return e + _ROT_SHIFT[level] * self.ladder.B_rot

    def pair_geom(self, i, j):
        dist = abs(self.coords[i] - self.coords[j])
        return PairGeometry(r=dist, theta=self.geometry.theta, phi=0.0, v0=self.v0)

    def coupling(self, i, j, bra_i, bra_j, ket_i, ket_j):
        """⟨bra_i bra_j|V|ket_i ket_j⟩ for molecules i<j, real at φ=0."""
        val = catalog_coefficient(self.pair_geom(i, j), bra_i, bra_j, ket_i, ket_j)
        return float(val.real)


def _denominator_guard(ctx, den, what):
    scale = max(abs(ctx.ladder.D1), abs(ctx.ladder.D2))
    if abs(den) < 1e-9 * scale:
        raise InfeasibleParametersError(
            f"degenerate virtual state in {what}: denominator {den:.3e} V0"
        )
    return den


# -------------------------------------------------------------- Σ coefficients

def sigma_self_interaction(i, alpha, j, beta, ctx):
    """Second-order energy shift of the pair state (i:α, j:β), in V0 units.

    Sums |⟨γη|V|αβ⟩|² / (ε_α+ε_β-ε_γ-ε_η) over the retained levels of the
    two molecules, keeping intermediates with the same number of |a⟩
    occupations (others sit a rotational quantum away and are dropped).
    When both levels are rotationally excited, or both are |a⟩, no such
    intermediate couples and the shift is exactly zero.
    """
    ctx = getattr(ctx, "context", ctx)
    if i == j:
        raise ValueError("self-interaction needs two distinct molecules")
    if alpha not in ctx.levels(i) or beta not in ctx.levels(j):
        raise ValueError(
            f"pair state ({molecule_label(i)}:{alpha}, {molecule_label(j)}:{beta}) "
            "uses an excluded level"
        )
    if LEVEL_N[alpha] == LEVEL_N[beta]:
        return 0.0
    a_count = (alpha == "a") + (beta == "a")
    e_m = ctx.energy(i, alpha) + ctx.energy(j, beta)
    total = 0.0
    label = f"Σ({molecule_label(i)}:{alpha}, {molecule_label(j)}:{beta})"
    for ga in ctx.levels(i):
        for eta in ctx.levels(j):
            if (ga, eta) == (alpha, beta):
                continue
            if (ga == "a") + (eta == "a") != a_count:
                continue
            v = ctx.coupling(i, j, ga, eta, alpha, beta)
            if v == 0.0:
                continue
            den = _denominator_guard(ctx, e_m - ctx.energy(i, ga) - ctx.energy(j, eta), label)
            total += v * v / den
    return total


# ----------------------------------------------------------- hopping amplitude

def _second_order_element(ctx, molecules, final, initial):
    """⟨final|H_eff|initial⟩ between resonant configurations of a molecule
    triple, from all single-pair virtual paths with the same |a⟩ count."""
    idx = list(molecules)
    e_m = sum(ctx.energy(i, lev) for i, lev in zip(idx, initial))
    e_n = sum(ctx.energy(i, lev) for i, lev in zip(idx, final))
    a_count = sum(lev == "a" for lev in initial)
    level_sets = [ctx.levels(i) for i in idx]
    total = 0.0

    def step(bra, ket):
        diff = [k for k in range(3) if bra[k] != ket[k]]
        if len(diff) != 2:
            return 0.0
        p, q = diff
        return ctx.coupling(idx[p], idx[q], bra[p], bra[q], ket[p], ket[q])

    for l0 in level_sets[0]:
        for l1 in level_sets[1]:
            for l2 in level_sets[2]:
                inter = (l0, l1, l2)
                if inter == tuple(initial) or inter == tuple(final):
                    continue
                if sum(lev == "a" for lev in inter) != a_count:
                    continue
                v_in = step(inter, tuple(initial))
                if v_in == 0.0:
                    continue
                v_out = step(tuple(final), inter)
                if v_out == 0.0:
                    continue
                e_l = sum(ctx.energy(i, lev) for i, lev in zip(idx, inter))
                d1 = _denominator_guard(ctx, e_m - e_l, "hop channel")
                d2 = _denominator_guard(ctx, e_n - e_l, "hop channel")
                total += 0.5 * v_out * v_in * (1.0 / d1 + 1.0 / d2)
    return total


def _hop_channel_states(S):
    # (left site, link, right site): initial has the fermion on the right;
    # the hop raises the link projection by one unit.
    if float(S) == 0.5:
        return [(("a", "d", "b"), ("b", "b", "a"))]
    return [
        (("a", "b", "c"), ("c", "d", "a")),
        (("a", "c", "c"), ("c", "b", "a")),
    ]


def hop_elements(ctx):
    """Matrix element of every hop channel on every bond, in V0 units."""
    ctx = getattr(ctx, "context", ctx)
    out = []
    for x in range(1, 2 * ctx.n_cells):          # bond between sites x, x+1
        triple = (2 * (x - 1), 2 * x - 1, 2 * x)
        for final, initial in _hop_channel_states(ctx.S):
            val = _second_order_element(ctx, triple, final, initial)
            out.append((x, final[1], val))
    return out

def _matched_hop(ctx, rel_tol=1e-10):
    elements = hop_elements(ctx)
    vals = np.array([v for (_, _, v) in elements])
    if np.max(np.abs(vals)) < 1e-300:
        raise InfeasibleParametersError("hop amplitude vanishes for this geometry")
    spread = np.max(vals) - np.min(vals)
    if spread > rel_tol * np.max(np.abs(vals)):
        details = ", ".join(f"bond {x} ({lev}): {v:.6e}" for x, lev, v in elements)
        raise InfeasibleParametersError(
            "hop amplitude is not uniform along the chain — geometry and "
            f"ladder are mismatched ({details})"
        )
    element = float(np.mean(vals))
    if element >= 0.0:
        raise InfeasibleParametersError(
            f"hop element {element:.3e} V0 has the wrong sign; "
            "check the polar angle branch"
        )
    return element


def compute_hopping(S, parameter_set, rel_tol=1e-10):
    """Uniform hopping amplitude w (V0 units) implied by a parameter set.

    The raw bond element is -w for S=1/2 and -√2·w for S=1 (the √2 being
    the link raising amplitude already present in the gauge model).
    Raises if the element varies from bond to bond beyond rel_tol.
    """
    S = float(S)
    ctx = getattr(parameter_set, "context", parameter_set)
    if ctx.S != S:
        raise ValueError("parameter set was built for a different link spin")
    element = _matched_hop(ctx, rel_tol)
    return -element if S == 0.5 else -element / math.sqrt(2.0)


def _check_s1_angle(ctx):
    c2 = math.cos(ctx.geometry.theta) ** 2
    residual = 99.0 * c2 * c2 - 93.0 * c2 + 2.0
    if abs(residual) > 1e-6:
        raise InfeasibleParametersError(
            f"polar angle cos²θ={c2:.6f} violates the channel-matching "
            f"constraint (residual {residual:.3e}); "
            f"admissible cos²θ: {solve_s1_angle()}"
        )


# ----------------------------------------------------------------- assignment

@dataclass
class ParameterSet:
    """Solved level scheme: energies, Σ bookkeeping and the hop amplitude."""

    S: float
    n_cells: int
    qlm: object
    ladder: EnergyLadder
    geometry: ChainGeometry
    context: ParameterContext
    eps_leading: np.ndarray
    eps_full: np.ndarray
    allowed_mask: np.ndarray
    sigma: dict
    w: float                       # V0 units
    scale: float = field(default=1.0)   # V0 per model energy unit

    def excluded_levels(self, i):
        return tuple(l for l in LEVELS if l not in allowed_levels(self.S, i, self.n_cells))

    def to_json_dict(self, v0_hz=None, r_um=None):
        def energies(i):
            out = {}
            for lev in allowed_levels(self.S, i, self.n_cells):
                e = self.eps_full[i, LEVEL_INDEX[lev]]
                entry = {"v0": e}
                if v0_hz is not None:
                    entry["hz"] = e * v0_hz
                out[lev] = entry
            return out

        coords = self.context.coords / self.geometry.r   # units of the base gap
        doc = {
            "schema_version": 1,
            "S": self.S,
            "n_cells": self.n_cells,
            "w_v0": self.w,
            "gamma": self.geometry.gamma,
            "beta": self.geometry.beta,
            "theta_rad": self.geometry.theta,
            "ladder": {
                "delta1_0": self.ladder.delta1_0,
                "D1": self.ladder.D1,
                "D2": self.ladder.D2,
                "B_rot": self.ladder.B_rot,
            },
            "sigma_v0": {k: v for k, v in self.sigma.items()},
            "gaps_r": [coords[i + 1] - coords[i]
                       for i in range(4 * self.n_cells - 1)],
            "molecules": [
                {
                    "index": i,
                    "label": molecule_label(i),
                    "role": molecule_role(i),
                    "frozen": i == 4 * self.n_cells - 1,
                    "position_r": coords[i],
                    "levels": energies(i),
                    "excluded": list(self.excluded_levels(i)),
                }
                for i in range(4 * self.n_cells)
            ],
        }
        if v0_hz is not None:
            doc["v0_hz"] = v0_hz
            doc["w_hz"] = self.w * v0_hz
        if r_um is not None:
            doc["r_um"] = r_um
            doc["gaps_um"] = [g * r_um for g in doc["gaps_r"]]
            for mol in doc["molecules"]:
                mol["position_um"] = mol["position_r"] * r_um
        return doc

    def to_json(self, v0_hz=None, r_um=None, indent=2):
        return json.dumps(self.to_json_dict(v0_hz, r_um=r_um),
                          indent=indent, sort_keys=True)


def assign_energies(S, qlm_params, ladder, geometry):
    """Full ε assignment: leading table + mass/electric targets + Σ absorption.

    The gauge-model couplings in qlm_params are interpreted in model units
    (energies measured in the bond element, so pass w=1 for S=1/2 and
    w=1/√2 for S=1); they are converted to V0 units with the solved hop
    amplitude.  Compensations are applied pair by pair: each nearest
    site-link pair contributes second-order shifts on the physical
    configurations, and those shifts reduce — through the gauge constraint
    — to one-body corrections on a handful of levels.  For S=1 only the
    two short pairs of each cell are absorbed; the long-pair remainder is
    the approximation quantified by check_s1_cancellation.
    """
    S = float(S)
    if float(qlm_params.S) != S:
        raise ValueError("S argument disagrees with qlm_params.S")
    n_cells = qlm_params.N
    ctx = ParameterContext.build(S, ladder, geometry, n_cells)
    if S == 1.0:
        _check_s1_angle(ctx)
    element = _matched_hop(ctx)
    w_v0 = -element if S == 0.5 else -element / math.sqrt(2.0)
    scale = w_v0 / qlm_params.w
    m_v0 = qlm_params.m * scale
    g2_v0 = qlm_params.g2 * scale

    A, B_, C, D = (LEVEL_INDEX[l] for l in LEVELS)
    eps_full = ctx.eps0.copy()
    sigma = {}

    def sig(i, alpha, j, beta):
        val = sigma_self_interaction(i, alpha, j, beta, ctx)
        sigma[f"{molecule_label(i)}:{alpha}|{molecule_label(j)}:{beta}"] = val
        return val

    # mass staggering on the occupied-site level
    for i in range(0, 4 * n_cells, 2):
        x = i // 2 + 1
        eps_full[i, A] += m_v0 * (-1) ** x

    if S == 1.0 and g2_v0 != 0.0:
        # electric energy of the dynamical links: (g²/2)·E², E² = n_c + n_d
        for i in range(1, 4 * n_cells - 1, 2):
            eps_full[i, C] += 0.5 * g2_v0
            eps_full[i, D] += 0.5 * g2_v0

    for n in range(n_cells):
        i_s1, i_l1, i_s2, i_l2 = 4 * n, 4 * n + 1, 4 * n + 2, 4 * n + 3
        if S == 0.5:
            sb = sig(i_s1, "a", i_l1, "b")
            sd = sig(i_s1, "a", i_l1, "d")
            eps_full[i_s1, A] -= sb
            eps_full[i_l1, D] -= sd - sb
            eps_full[i_s2, A] -= sig(i_l1, "b", i_s2, "a")
            if n < n_cells - 1:
                eps_full[i_s2, A] -= sig(i_s2, "a", i_l2, "d")
                sb4 = sig(i_l2, "b", i_s2 + 2, "a")
                sd4 = sig(i_l2, "d", i_s2 + 2, "a")
                eps_full[i_s2 + 2, A] -= sb4
                eps_full[i_l2 + 2, D] -= sd4 - sb4
        else:
            sb1 = sig(i_s1, "a", i_l1, "b")
            sd1 = sig(i_s1, "a", i_l1, "d")
            eps_full[i_s1, A] -= sb1
            eps_full[i_l1, C] += sd1 - sb1
            if n >= 1:
                eps_full[i_l1 - 2, D] -= sd1 - sb1
            if n < n_cells - 1:
                sb4 = sig(i_s2, "a", i_l2, "b")
                sd4 = sig(i_s2, "a", i_l2, "d")
                eps_full[i_s2, A] -= sb4
                eps_full[i_l2, C] += sd4 - sb4
                eps_full[i_l1, C] -= sd4 - sb4

    return ParameterSet(
        S=S, n_cells=n_cells, qlm=qlm_params, ladder=ladder, geometry=geometry,
        context=ctx, eps_leading=ctx.eps0, eps_full=eps_full,
        allowed_mask=ctx.allowed_mask, sigma=sigma, w=w_v0, scale=scale,
    )


# --------------------------------------------------------------- cancellation

@dataclass
class CancellationReport:
    short_max: float          # max |Σc - 2Σb + Σd| over compensated pairs, V0
    long_max: float           # same for the uncompensated long pairs, V0
    w: float                  # hop amplitude for scale, V0
    per_pair: dict

    def long_over_w(self):
        return self.long_max / self.w if self.w else math.inf


def check_s1_cancellation(parameter_set):
    """Diagnostic for the S=1 scheme: which Σ combinations actually vanish.

    For each site-link pair the combination Σ_c - 2Σ_b + Σ_d (link-level
    subscripts) is the part of the second-order shift that cannot be
    absorbed into one-body energies.  The angle constraint kills it for the
    short pairs; for the long pairs it survives at order V0²/(γ⁶D1) and is
    the dominant systematic error of the emulation.
    """
    ctx = getattr(parameter_set, "context", parameter_set)
    if ctx.S != 1.0:
        raise ValueError("cancellation report is specific to the S=1 scheme")
    n_cells = ctx.n_cells
    per_pair = {}
    short_vals, long_vals = [], []
    for n in range(n_cells):
        i_s1, i_l1, i_s2, i_l2 = 4 * n, 4 * n + 1, 4 * n + 2, 4 * n + 3
        pairs = [
            ("short", i_s1, i_l1, "site_first"),
            ("long", i_l1, i_s2, "link_first"),
            ("short", i_s2, i_l2, "site_first"),
        ]
        if n < n_cells - 1:
            pairs.append(("long", i_l2, i_s2 + 2, "link_first"))
        for kind, i, j, order in pairs:
            if 4 * n_cells - 1 in (i, j):
                continue                      # frozen link: no virtual shifts
            if order == "site_first":
                combo = (
                    sigma_self_interaction(i, "a", j, "c", ctx)
                    - 2.0 * sigma_self_interaction(i, "a", j, "b", ctx)
                    + sigma_self_interaction(i, "a", j, "d", ctx)
                )
            else:
                combo = (
                    sigma_self_interaction(i, "c", j, "a", ctx)
                    - 2.0 * sigma_self_interaction(i, "b", j, "a", ctx)
                    + sigma_self_interaction(i, "d", j, "a", ctx)
                )
            per_pair[f"{molecule_label(i)}|{molecule_label(j)}"] = (kind, combo)
            (short_vals if kind == "short" else long_vals).append(abs(combo))
    return CancellationReport(
        short_max=max(short_vals) if short_vals else 0.0,
        long_max=max(long_vals) if long_vals else 0.0,
        w=getattr(parameter_set, "w", 0.0),
        per_pair=per_pair,
    )


# ------------------------------------------------------------- physical units

@dataclass(frozen=True)
class PhysicalScales:
    """Anchors the dimensionless scheme to laboratory numbers."""

    r_um: float
    v0_hz: float
    d_debye: float = DIPOLE_MOMENT_DEBYE

    @classmethod
    def from_min_spacing(cls, beta, min_spacing_um=MIN_SPACING_UM,
                         d_debye=DIPOLE_MOMENT_DEBYE):
        # the tightest gap in the chain is βr (β < 1, γ ≥ 1)
        r_um = min_spacing_um / beta
        return cls(r_um=r_um, v0_hz=dipolar_coupling_hz(r_um, d_debye),
                   d_debye=d_debye)


def dipolar_coupling_hz(r_um, d_debye=DIPOLE_MOMENT_DEBYE):
    """V0/h in Hz for two molecules of dipole moment d at distance r."""
    d = d_debye * _DEBYE
    r = r_um * 1e-6
    return d * d / (4.0 * math.pi * _const.epsilon_0 * r**3) / _const.h
