"""Collision kernel coefficients for the periodized Landau operator.

On the box [-L, L]^3 the bilinear collision operator acts diagonally on
Fourier modes: pairing exp(i pi l.v/L) with exp(i pi m.v/L) produces
beta(l, m) exp(i pi (l+m).v/L), so the whole operator is determined by
the numbers beta(l, m).

For the Coulomb interaction (gamma = -3) the coefficient has the closed
form (x = |l| pi, sinc x = sin x / x)

    beta(l, m) = (4 pi / |l|^4) [ |l x m|^2 (cos x - sinc x)
                 + 2 (|l|^4 - (l.m)^2)(1 - sinc x) ],        l != 0,
    beta(0, m) = -(4 pi^3 / 3) |m|^2,

which is quadratic in m.  Collecting the m-dependence gives the
separable table form used by the fast collision path:

    beta(l, m) = A(l) + B(l)|m|^2 + sum_ij C_ij(l) m_i m_j,

    A(l)    =  8 pi (1 - sinc x),
    B(l)    =  4 pi (cos x - sinc x) / |l|^2,
    C_ij(l) = -4 pi (cos x + 2 - 3 sinc x) l_i l_j / |l|^4.

For general gamma in [-4, 1] the same structure holds with radial
integrals replacing the trigonometric profiles (c = (L/pi)^(gamma+3),
x = |l| pi):

    F1(x) = 2 int_0^x u^(gamma+4) I1(u) du,
    F2(x) =   int_0^x u^(gamma+4) (I1(u) + 2 I2(u)) du,
    I1(u) = 4 (sin u - u cos u) / u^3,      I1(0) = 4/3,
    I2(u) = 2 ((u^2-2) sin u + 2u cos u) / u^3,  I2(0) = 2/3,

    A(l)    =  pi c F1(x) / |l|^(gamma+3),
    B(l)    = -pi c F2(x) / |l|^(gamma+5),
    C_ij(l) =  pi c (F2(x) - F1(x)) l_i l_j / |l|^(gamma+7),
    B(0)    = -c (8 pi / 3) pi^(gamma+5) / (gamma + 5),  A(0) = C(0) = 0,

and beta(l, m) = pi c [ a1b1 F1(x) + a2b2 F2(x) ] / |l|^(gamma+5) with
a1b1 = (|l|^4 - (l.m)^2)/|l|^2 and a2b2 = -|l x m|^2/|l|^2.  At
gamma = -3 these reduce exactly to the closed form above.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .spectral import GridSpec, _mode_ints

_4PI = 4.0 * np.pi
_B0_COULOMB = -4.0 * np.pi**3 / 3.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class BetaParams:
    """Kernel exponent and box half-width for quadrature-based coefficients."""

    gamma: float = -3.0
    L: float = 1.0

    def __post_init__(self):
        if not -4.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [-4, 1], got {self.gamma}")
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")


@dataclass
class KernelTables:
    """Separable kernel tables over the mode set, FFT order, shape (P, P, P).

    beta(l, m) = A(l) + B(l)|m|^2 + sum_ij C_ij(l) m_i m_j with the
    off-diagonal C entries stored once and counted twice in the sum.
    """

    gamma: float
    L: float
    P: int
    A: np.ndarray
    B: np.ndarray
    C11: np.ndarray
    C22: np.ndarray
    C33: np.ndarray
    C12: np.ndarray
    C13: np.ndarray
    C23: np.ndarray

    def c_list(self):
        """The six stored tensor components, diagonal first."""
        return [self.C11, self.C22, self.C33, self.C12, self.C13, self.C23]


def _as_int_vec(a, name):
    arr = np.asarray(a)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have a trailing dimension of 3, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.round(arr)):
            raise ValueError(f"{name} must be an integer mode vector")
    return arr.astype(np.int64)


def _one_minus_sinc(x):
    """1 - sin(x)/x, series below 1e-3 to dodge the cancellation at 0."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, x2 / 6.0 - x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0,
                    1.0 - np.sin(xs) / xs)


def _cos_minus_sinc(x):
    """cos(x) - sin(x)/x with the same series-safe branch."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, -x2 / 3.0 + x2 * x2 / 30.0 - x2 * x2 * x2 / 840.0,
                    np.cos(xs) - np.sin(xs) / xs)


def _ramp_c(x):
    """cos(x) + 2 - 3 sin(x)/x; O(x^4) at the origin, hence the series branch."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, x2 * x2 / 60.0 - x2 * x2 * x2 / 1260.0,
                    np.cos(xs) + 2.0 - 3.0 * np.sin(xs) / xs)


def beta_coulomb(l, m):
    """Closed-form Coulomb (gamma = -3) kernel coefficient beta(l, m).

    Accepts integer 3-vectors or arrays of them ((..., 3)); broadcasts.
    The quadratic invariants |l x m|^2, (l.m)^2, |l|^4 are evaluated in
    integer arithmetic, so identities like beta(l, -l) = 0 and the
    parity beta(-l, -m) = beta(l, m) hold exactly.  |l| enters the
    trigonometric part as a true Euclidean norm (generally irrational),
    so sin(|l| pi) does not vanish off the axes.
    """
    lv = _as_int_vec(l, "l")
    mv = _as_int_vec(m, "m")
    lv, mv = np.broadcast_arrays(lv, mv)
    ll = np.sum(lv * lv, axis=-1)
    mm = np.sum(mv * mv, axis=-1)
    lm = np.sum(lv * mv, axis=-1)
    cx = np.cross(lv, mv)
    cr2 = np.sum(cx * cx, axis=-1)
    d = ll * ll - lm * lm  # |l|^4 - (l.m)^2, exact

    ll_f = ll.astype(np.float64)
    zero = ll == 0
    x = np.pi * np.sqrt(np.where(zero, 1.0, ll_f))
    s = np.sin(x) / x
    c = np.cos(x)
    num = cr2 * (c - s) + 2.0 * d * (1.0 - s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _4PI * num / (ll_f * ll_f)
    out = np.where(zero, _B0_COULOMB * mm, out)
    if out.ndim == 0:
        return float(out)
    return out


def coulomb_profiles(r):
    """Radial profiles (A, B, C_scale) of the Coulomb tables at real |l| = r.

    C_ij = C_scale * l_i l_j.  All three profiles extend continuously to
    r = 0 with A(0) = 0, B(0) = -4 pi^3 / 3, C_scale(0) = -pi^5/15; the
    series-safe branches keep them accurate through the origin.
    """
    r = np.asarray(r, dtype=np.float64)
    x = np.pi * r
    A = 8.0 * np.pi * _one_minus_sinc(x)
    zero = r == 0
    r2 = np.where(zero, 1.0, r * r)
    B = np.where(zero, _B0_COULOMB, _4PI * _cos_minus_sinc(x) / r2)
    # _ramp_c ~ x^4/60, so the ratio has a finite limit -4 pi^5 / 60
    Cs = np.where(zero, -(np.pi**5) / 15.0, -_4PI * _ramp_c(x) / (r2 * r2))
    if A.ndim == 0:
        return float(A), float(B), float(Cs)
    return A, B, Cs


def _i1(u):
    u = np.asarray(u, dtype=np.float64)
    small = np.abs(u) < 0.25
    us = np.where(small, 1.0, u)
    u2 = u * u
    series = (4.0 / 3.0 - 2.0 * u2 / 15.0 + u2 * u2 / 210.0
              - u2 * u2 * u2 / 11340.0 + u2 * u2 * u2 * u2 / 997920.0)
    return np.where(small, series, 4.0 * (np.sin(us) - us * np.cos(us)) / us**3)


def _i2(u):
    u = np.asarray(u, dtype=np.float64)
    small = np.abs(u) < 0.25
    us = np.where(small, 1.0, u)
    u2 = u * u
    series = (2.0 / 3.0 - u2 / 5.0 + u2 * u2 / 84.0
              - u2 * u2 * u2 / 3240.0 + u2 * u2 * u2 * u2 / 221760.0)
    direct = 2.0 * ((us * us - 2.0) * np.sin(us) + 2.0 * us * np.cos(us)) / us**3
    return np.where(small, series, direct)


def _quad_or_raise(f, x, tol, limit):
    # tol acts as both absolute and relative target: the integrals range over
    # many orders of magnitude (|l| from 1 to P*sqrt(3)/2) and a purely
    # absolute tolerance trips QUADPACK's roundoff detector on the large ones.
    res = quad(f, 0.0, x, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    if len(res) > 3:
        raise QuadratureError(
            f"radial kernel integral on [0, {x:g}] did not converge "
            f"(estimate {res[0]:.6e}, error {res[1]:.2e}): {res[3]}"
        )
    return res[0]


@lru_cache(maxsize=65536)
def _radial_F(gamma: float, x: float, tol: float, limit: int):
    """(F1, F2) radial integrals; cached since tables revisit the same |l|."""
    p = gamma + 4.0
    F1 = 2.0 * _quad_or_raise(lambda u: u**p * _i1(u), x, tol, limit)
    F2 = _quad_or_raise(lambda u: u**p * (_i1(u) + 2.0 * _i2(u)), x, tol, limit)
    return F1, F2


def _b_zero_mode(gamma: float, L: float) -> float:
    """B(0) for general gamma: -(L/pi)^(gamma+3) (8 pi/3) pi^(gamma+5)/(gamma+5)."""
    c = (L / np.pi) ** (gamma + 3.0)
    return -c * (8.0 * np.pi / 3.0) * np.pi ** (gamma + 5.0) / (gamma + 5.0)


def beta_quadrature(l, m, params: BetaParams, tol: float = 1e-10, limit: int = 200):
    """Kernel coefficient for general gamma via adaptive radial quadrature.

    Independent of ``beta_coulomb`` except for sharing the definition: the
    m-dependence factors out exactly and only two 1-D oscillatory
    integrals remain, handled by Gauss-Kronrod refinement with absolute
    tolerance ``tol`` and a subdivision cap ``limit`` (non-convergence
    raises ``QuadratureError``).
    """
    lv = _as_int_vec(l, "l")
    mv = _as_int_vec(m, "m")
    if lv.ndim != 1 or mv.ndim != 1:
        raise ValueError("beta_quadrature evaluates one (l, m) pair at a time")
    gamma, L = params.gamma, params.L
    ll = int(np.sum(lv * lv))
    mm = int(np.sum(mv * mv))
    if ll == 0:
        return _b_zero_mode(gamma, L) * mm
    lm = int(np.sum(lv * mv))
    cx = np.cross(lv, mv)
    cr2 = int(np.sum(cx * cx))
    a1b1_num = ll * ll - lm * lm
    if a1b1_num == 0 and cr2 == 0:
        return 0.0  # m is parallel to l with |m| = |l|; both couplings vanish
    x = np.pi * np.sqrt(float(ll))
    F1, F2 = _radial_F(gamma, x, tol, limit)
    c = (L / np.pi) ** (gamma + 3.0)
    a1b1 = a1b1_num / ll
    a2b2 = -cr2 / ll
    return np.pi * c * (a1b1 * F1 + a2b2 * F2) / float(ll) ** ((gamma + 5.0) / 2.0)


def build_kernel_tables(grid: GridSpec, tol: float = 1e-10, limit: int = 200) -> KernelTables:
    """Tabulate A, B, C_ij over the grid's mode set.

    gamma = -3 uses the closed form (vectorized, exact); other gamma
    values integrate the radial profiles once per distinct |l|^2, which
    keeps the quadrature count at O(N^2) rather than O(N^3).
    """
    P = grid.P
    k = _mode_ints(P)
    K1 = k[:, None, None]
    K2 = k[None, :, None]
    K3 = k[None, None, :]
    ll = (K1 * K1 + K2 * K2 + K3 * K3).astype(np.int64)
    ll_f = ll.astype(np.float64)
    zero = ll == 0
    x = np.pi * np.sqrt(np.where(zero, 1.0, ll_f))

    if grid.gamma == -3.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            A = 8.0 * np.pi * _one_minus_sinc(x)
            B = _4PI * _cos_minus_sinc(x) / ll_f
            Cs = -_4PI * _ramp_c(x) / (ll_f * ll_f)
        A = np.where(zero, 0.0, A)
        B = np.where(zero, _B0_COULOMB, B)
    else:
        c = (grid.L / np.pi) ** (grid.gamma + 3.0)
        uniq, inv = np.unique(ll, return_inverse=True)
        F1u = np.empty(uniq.shape, dtype=np.float64)
        F2u = np.empty(uniq.shape, dtype=np.float64)
        for i, q in enumerate(uniq):
            if q == 0:
                F1u[i] = F2u[i] = 0.0
                continue
            F1u[i], F2u[i] = _radial_F(grid.gamma, float(np.pi * np.sqrt(q)), tol, limit)
        F1 = F1u[inv].reshape(ll.shape)
        F2 = F2u[inv].reshape(ll.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.pi * c * F1 / ll_f ** ((grid.gamma + 3.0) / 2.0)
            B = -np.pi * c * F2 / ll_f ** ((grid.gamma + 5.0) / 2.0)
            Cs = np.pi * c * (F2 - F1) / ll_f ** ((grid.gamma + 7.0) / 2.0)
        A = np.where(zero, 0.0, A)
        B = np.where(zero, _b_zero_mode(grid.gamma, grid.L), B)

    Cs = np.where(zero, 0.0, Cs)
    return KernelTables(
        gamma=grid.gamma, L=grid.L, P=P,
        A=A, B=B,
        C11=Cs * (K1 * K1), C22=Cs * (K2 * K2), C33=Cs * (K3 * K3),
        C12=Cs * (K1 * K2), C13=Cs * (K1 * K3), C23=Cs * (K2 * K3),
    )


def beta_from_tables(tables: KernelTables):
    """A beta(l, m) callable backed by table reconstruction (m may be an array)."""
    P = tables.P

    def beta(l, m):
        lv = _as_int_vec(l, "l")
        if lv.ndim != 1:
            raise ValueError("l must be a single mode vector")
        if np.any(lv < -P // 2) or np.any(lv > P // 2 - 1):
            raise ValueError(f"mode {lv} outside the table range for P={P}")
        i1, i2, i3 = (int(q) % P for q in lv)
        mv = _as_int_vec(m, "m").astype(np.float64)
        m1, m2, m3 = mv[..., 0], mv[..., 1], mv[..., 2]
        mm = m1 * m1 + m2 * m2 + m3 * m3
        val = (
            tables.A[i1, i2, i3]
            + tables.B[i1, i2, i3] * mm
            + tables.C11[i1, i2, i3] * m1 * m1
            + tables.C22[i1, i2, i3] * m2 * m2
            + tables.C33[i1, i2, i3] * m3 * m3
            + 2.0 * tables.C12[i1, i2, i3] * m1 * m2
            + 2.0 * tables.C13[i1, i2, i3] * m1 * m3
            + 2.0 * tables.C23[i1, i2, i3] * m2 * m3
        )
        if val.ndim == 0:
            return float(val)
        return val

    return beta


# ---------------------------------------------------------------------------
# binary kernel table cache ("LSKT")
# ---------------------------------------------------------------------------

_LSKT_MAGIC = b"LSKT"
_LSKT_VERSION = 1
_LSKT_HEADER = struct.Struct("<4sIddI")  # magic, version, gamma, L, modes per dim


class TableCacheError(ValueError):
    """Malformed kernel table cache file."""


def save_tables(path, tables: KernelTables) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _LSKT_HEADER.pack(_LSKT_MAGIC, _LSKT_VERSION, tables.gamma, tables.L, tables.P)
        )
        for arr in [tables.A, tables.B] + tables.c_list():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_tables(path) -> KernelTables:
    with open(path, "rb") as fh:
        raw = fh.read(_LSKT_HEADER.size)
        if len(raw) != _LSKT_HEADER.size:
            raise TableCacheError(f"{path}: truncated header")
        magic, version, gamma, L, P = _LSKT_HEADER.unpack(raw)
        if magic != _LSKT_MAGIC:
            raise TableCacheError(f"{path}: bad magic {magic!r}")
        if version != _LSKT_VERSION:
            raise TableCacheError(f"{path}: unsupported version {version}")
        arrs = []
        count = P**3
        for _ in range(8):
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise TableCacheError(f"{path}: truncated data section")
            a = np.frombuffer(buf, dtype="<f8")
            arrs.append(a.reshape(P, P, P).copy())
    return KernelTables(gamma, L, P, *arrs)


def build_or_load_tables(
    grid: GridSpec, cache_path=None, tol: float = 1e-10, limit: int = 200
) -> KernelTables:
    """Load tables from the cache when the key (gamma, L, P) matches, else
    build them (and refresh the cache if a path was given)."""
    if cache_path is not None:
        try:
            t = load_tables(cache_path)
        except (FileNotFoundError, TableCacheError):
            t = None
        if t is not None and t.gamma == grid.gamma and t.L == grid.L and t.P == grid.P:
            return t
    tables = build_kernel_tables(grid, tol=tol, limit=limit)
    if cache_path is not None:
        save_tables(cache_path, tables)
    return tables
