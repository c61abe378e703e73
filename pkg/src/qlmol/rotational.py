"""Rotational-level algebra for rigid polar molecules.

Four working levels per molecule: the rotational ground state and the three
projections of the first excited rotational manifold,

    a = |N=0, m=0>,  b = |N=1, m=-1>,  c = |N=1, m=0>,  d = |N=1, m=+1>.

Provides exact Wigner 3-j symbols, single-molecule dipole matrix elements,
and the two-molecule dipole-dipole coupling coefficients V^{alpha,beta;gamma,eta}
computed along two independent routes (spherical-tensor contraction and the
closed-form angular catalog).
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import sph_harm_y

LEVELS = ("a", "b", "c", "d")
LEVEL_INDEX = {lev: k for k, lev in enumerate(LEVELS)}
LEVEL_N = {"a": 0, "b": 1, "c": 1, "d": 1}
LEVEL_MN = {"a": 0, "b": -1, "c": 0, "d": +1}

_SQRT6 = math.sqrt(6.0)
_SQRT5 = math.sqrt(5.0)


def _as_doubled(x, what):
    two_x = 2.0 * x
    if abs(two_x - round(two_x)) > 1e-9:
        raise ValueError(f"{what} must be integer or half-integer, got {x}")
    return int(round(two_x))


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Exact Wigner 3-j symbol via the Racah sum.

    Arguments may be integers or half-integers.  Returns 0.0 when a selection
    rule (m-sum, triangle, |m| <= j) fails; raises ValueError on inputs that
    are not (half-)integers or mix integer j with half-integer m.
    """
    sq = wigner_3j_signed_square(j1, j2, j3, m1, m2, m3)
    if sq == 0:
        return 0.0
    sign = 1.0 if sq > 0 else -1.0
    return sign * math.sqrt(abs(sq))


def wigner_3j_signed_square(j1, j2, j3, m1, m2, m3):
    """sign(w3j) * w3j**2 as an exact Fraction (0 when selection rules fail)."""
    tj = [_as_doubled(j, "j") for j in (j1, j2, j3)]
    tm = [_as_doubled(m, "m") for m in (m1, m2, m3)]
    for a, b in zip(tj, tm):
        if (a - b) % 2 != 0:
            raise ValueError("j and m must differ by an integer")
        if abs(b) > a:
            return Fraction(0)
    if sum(tm) != 0:
        return Fraction(0)
    if tj[2] > tj[0] + tj[1] or tj[2] < abs(tj[0] - tj[1]):
        return Fraction(0)
    if (tj[0] + tj[1] + tj[2]) % 2 != 0:
        return Fraction(0)

    f = math.factorial
    tj1, tj2, tj3 = tj
    tm1, tm2, tm3 = tm
    # all arguments below are guaranteed even; halve to plain integers
    h = lambda x: x // 2
    tri = Fraction(
        f(h(tj1 + tj2 - tj3)) * f(h(tj1 - tj2 + tj3)) * f(h(-tj1 + tj2 + tj3)),
        f(h(tj1 + tj2 + tj3) + 1),
    )
    pref = (
        f(h(tj1 + tm1)) * f(h(tj1 - tm1))
        * f(h(tj2 + tm2)) * f(h(tj2 - tm2))
        * f(h(tj3 + tm3)) * f(h(tj3 - tm3))
    )
    t_min = max(0, h(tj2 - tj3 - tm1), h(tj1 - tj3 + tm2))
    t_max = min(h(tj1 + tj2 - tj3), h(tj1 - tm1), h(tj2 + tm2))
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        den = (
            f(t)
            * f(h(tj3 - tj2 + tm1) + t)
            * f(h(tj3 - tj1 - tm2) + t)
            * f(h(tj1 + tj2 - tj3) - t)
            * f(h(tj1 - tm1) - t)
            * f(h(tj2 + tm2) - t)
        )
        total += Fraction((-1) ** t, den)
    if total == 0:
        return Fraction(0)
    phase = -1 if h(tj1 - tj2 - tm3) % 2 else 1
    signed = phase * (1 if total > 0 else -1)
    return signed * tri * pref * total * total


def dipole_matrix_element(bra, q, ket, d=1.0):
    """<bra| d_q |ket> for spherical component q in {-1, 0, +1}.

    Levels are labels from LEVELS; d is the body-frame dipole moment.  Zero
    whenever the Delta N = +-1 or Delta m = q rule fails.
    """
    n1, m1 = LEVEL_N[bra], LEVEL_MN[bra]
    n2, m2 = LEVEL_N[ket], LEVEL_MN[ket]
    if abs(n1 - n2) != 1:
        return 0.0
    val = (
        (-1) ** m1
        * math.sqrt((2 * n1 + 1) * (2 * n2 + 1))
        * wigner_3j(n1, 1, n2, -m1, q, m2)
        * wigner_3j(n1, 1, n2, 0, 0, 0)
    )
    return d * val


@dataclass(frozen=True)
class PairGeometry:
    """Relative geometry of one molecule pair.

    r is the separation in units of the reference distance at which v0 (the
    dipole-dipole energy scale d^2/(4 pi eps0 r_ref^3)) is quoted; theta and
    phi orient the intermolecular axis relative to the quantization axis.
    """

    r: float
    theta: float
    phi: float = 0.0
    v0: float = 1.0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("pair separation must be positive")

    @property
    def energy_prefactor(self):
        return self.v0 / self.r**3


def _c2(p, theta, phi):
    # Racah normalization: C^2_p = sqrt(4 pi / 5) Y_{2,p}
    return math.sqrt(4.0 * math.pi / 5.0) * complex(sph_harm_y(2, p, theta, phi))


def pair_coefficient(geom, alpha, beta, gamma, eta):
    """<alpha_i beta_j| V_dd |gamma_i eta_j> by spherical-tensor contraction.

    V_dd = -sqrt(6) (v0/r^3) sum_p (-1)^p C^2_{-p}(theta, phi) [d_i x d_j]^2_p.
    Returns a complex energy in the units of geom.v0.
    """
    total = 0.0 + 0.0j
    for q1 in (-1, 0, 1):
        d1 = dipole_matrix_element(alpha, q1, gamma)
        if d1 == 0.0:
            continue
        for q2 in (-1, 0, 1):
            d2 = dipole_matrix_element(beta, q2, eta)
            if d2 == 0.0:
                continue
            p = q1 + q2
            if abs(p) > 2:
                continue
            cg = (-1) ** p * _SQRT5 * wigner_3j(1, 1, 2, q1, q2, -p)
            if cg == 0.0:
                continue
            total += (-1) ** p * _c2(-p, geom.theta, geom.phi) * cg * d1 * d2
    return -_SQRT6 * geom.energy_prefactor * total


# Closed-form angular catalog.  Keys are (alpha, beta, gamma, eta) for the
# matrix element <alpha_i beta_j|V|gamma_i eta_j>; values are functions of
# (s, c, u, phi) with s = sin(theta), c = cos(theta), u = 3 cos^2(theta) - 1,
# returning the coefficient in units of v0/r^3.  The catalog is closed under
# Hermitian conjugation and under the i<->j swap.
_ROOT_ENTRIES = {
    # both molecules excited / de-excited together
    ("a", "a", "b", "b"): lambda s, c, u, phi: -cmath.exp(-2j * phi) * s * s / 2.0,
    ("a", "a", "c", "c"): lambda s, c, u, phi: -u / 3.0,
    ("a", "a", "d", "d"): lambda s, c, u, phi: -cmath.exp(2j * phi) * s * s / 2.0,
    ("a", "a", "b", "c"): lambda s, c, u, phi: -cmath.exp(-1j * phi) * s * c / math.sqrt(2.0),
    ("a", "a", "b", "d"): lambda s, c, u, phi: -u / 6.0,
    ("a", "a", "c", "d"): lambda s, c, u, phi: +cmath.exp(1j * phi) * s * c / math.sqrt(2.0),
    # excitation exchange
    ("b", "a", "a", "b"): lambda s, c, u, phi: u / 6.0,
    ("c", "a", "a", "c"): lambda s, c, u, phi: -u / 3.0,
    ("d", "a", "a", "d"): lambda s, c, u, phi: u / 6.0,
    ("b", "a", "a", "c"): lambda s, c, u, phi: -cmath.exp(1j * phi) * s * c / math.sqrt(2.0),
    ("b", "a", "a", "d"): lambda s, c, u, phi: +cmath.exp(2j * phi) * s * s / 2.0,
    ("c", "a", "a", "d"): lambda s, c, u, phi: +cmath.exp(1j * phi) * s * c / math.sqrt(2.0),
}


def _build_catalog():
    cat = {}

    def put(key, fn):
        if key not in cat:
            cat[key] = fn

    def conj_fn(fn):
        return lambda s, c, u, phi: fn(s, c, u, phi).conjugate()

    for (al, be, ga, et), fn in _ROOT_ENTRIES.items():
        put((al, be, ga, et), fn)
        put((be, al, et, ga), fn)                 # i <-> j swap
        put((ga, et, al, be), conj_fn(fn))        # Hermitian conjugate
        put((et, ga, be, al), conj_fn(fn))
    return cat


_CATALOG = _build_catalog()


def catalog_coefficient(geom, alpha, beta, gamma, eta):
    """Same matrix element as pair_coefficient, from the closed-form catalog.

    Combinations absent from the catalog (forbidden by the one-dipole-photon
    selection rules) return exactly 0.
    """
    fn = _CATALOG.get((alpha, beta, gamma, eta))
    if fn is None:
        return 0.0 + 0.0j
    s = math.sin(geom.theta)
    c = math.cos(geom.theta)
    u = 3.0 * c * c - 1.0
    return complex(fn(s, c, u, geom.phi)) * geom.energy_prefactor


def catalog_transitions():
    """All (alpha, beta, gamma, eta) combinations with nonzero coefficients."""
    return tuple(_CATALOG.keys())
