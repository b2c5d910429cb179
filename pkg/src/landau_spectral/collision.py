"""Bilinear collision operator on the mode set.

The periodized Landau operator acts on Fourier coefficients as

    Qhat(g, h)(k) = (2L)^-3 sum_{l+m=k; l,m in J_N} ghat(l) hhat(m) beta(l, m),

and since beta is quadratic in m it splits into eight truncated
convolutions (one per table A, B, C_ij), each evaluated with FFTs.  The
direct double-sum evaluator is retained as an O(P^6) oracle for small P.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .kernel import KernelTables, beta_coulomb
from .spectral import (
    GridSpec,
    ShapeMismatchError,
    SpectralField,
    _embed_full,
    _extract_full,
    _fftn,
    _ifftn,
    _mode_ints,
    apply_cutoff,
    convolve_hermitian_sum,
    project,
)


class CostGuardError(RuntimeError):
    """Refusal to run the O(P^6) direct sum on a large grid."""


@lru_cache(maxsize=32)
def _m_broadcast(P: int):
    """Float mode coordinates shaped for broadcasting along each axis."""
    k = _mode_ints(P).astype(np.float64)
    return k[:, None, None], k[None, :, None], k[None, None, :]


def _check_compatible(ghat: SpectralField, hhat: SpectralField, tables: KernelTables):
    if ghat.grid != hhat.grid:
        raise ShapeMismatchError("operands live on different grids")
    g = ghat.grid
    if tables.P != g.P or tables.gamma != g.gamma or tables.L != g.L:
        raise ShapeMismatchError(
            f"kernel tables built for (gamma={tables.gamma}, L={tables.L}, P={tables.P}) "
            f"do not match grid (gamma={g.gamma}, L={g.L}, P={g.P})"
        )


def _term_pairs(gdata: np.ndarray, hdata: np.ndarray, tables: KernelTables):
    """The eight (first, second) coefficient products whose convolutions sum
    to (2L)^3 Qhat; off-diagonal tensor terms carry their symmetry factor 2."""
    P = gdata.shape[0]
    m1, m2, m3 = _m_broadcast(P)
    msq = m1 * m1 + m2 * m2 + m3 * m3
    yield tables.A * gdata, hdata
    yield tables.B * gdata, msq * hdata
    yield tables.C11 * gdata, (m1 * m1) * hdata
    yield tables.C22 * gdata, (m2 * m2) * hdata
    yield tables.C33 * gdata, (m3 * m3) * hdata
    yield tables.C12 * gdata, (2.0 * m1 * m2) * hdata
    yield tables.C13 * gdata, (2.0 * m1 * m3) * hdata
    yield tables.C23 * gdata, (2.0 * m2 * m3) * hdata


def q_periodic_fast(ghat: SpectralField, hhat: SpectralField, tables: KernelTables) -> SpectralField:
    """FFT evaluation of Qhat(g, h) on J_N.

    Works for arbitrary complex coefficients.  With the grid's "exact"
    padding every convolution is dealiased by factor-2 zero padding and
    the result matches the literal double sum to rounding.
    """
    _check_compatible(ghat, hhat, tables)
    grid = ghat.grid
    P = grid.P
    Q = 2 * P if grid.padding == "exact" else P
    acc = None
    for first, second in _term_pairs(ghat.data, hhat.data, tables):
        X = _ifftn(_embed_full(first, Q))
        Y = _ifftn(_embed_full(second, Q))
        acc = X * Y if acc is None else acc + X * Y
    zbig = _fftn(acc) * float(Q) ** 3
    out = _extract_full(zbig, P) / (2.0 * grid.L) ** 3
    return SpectralField(out, grid)


def _q_fast_hermitian(ghat: SpectralField, hhat: SpectralField, tables: KernelTables) -> SpectralField:
    """Same operator on real fields (Hermitian coefficients), via real FFTs."""
    _check_compatible(ghat, hhat, tables)
    grid = ghat.grid
    P = grid.P
    Q = 2 * P if grid.padding == "exact" else P
    out = convolve_hermitian_sum(_term_pairs(ghat.data, hhat.data, tables), P, Q)
    out /= (2.0 * grid.L) ** 3
    return SpectralField(out, grid)


def _beta_block(beta, lvec, mblock):
    """Evaluate beta(l, .) over an (..., 3) block, tolerating scalar-only betas."""
    try:
        vals = np.asarray(beta(lvec, mblock), dtype=np.float64)
        if vals.shape == mblock.shape[:-1]:
            return vals
    except Exception:
        pass
    flat = mblock.reshape(-1, 3)
    return np.array([beta(lvec, mv) for mv in flat], dtype=np.float64).reshape(
        mblock.shape[:-1]
    )


def q_periodic_direct(
    ghat: SpectralField,
    hhat: SpectralField,
    beta=None,
    *,
    force: bool = False,
) -> SpectralField:
    """Literal truncated double sum over l + m = k; the oracle for the fast path.

    O(P^6) work and therefore refused for P > 16 unless ``force=True``.
    ``beta`` is any callable beta(l, m) -> real; it defaults to the
    closed-form Coulomb coefficient.
    """
    if ghat.grid != hhat.grid:
        raise ShapeMismatchError("operands live on different grids")
    grid = ghat.grid
    P = grid.P
    if P > 16 and not force:
        raise CostGuardError(
            f"direct double sum scales as P^6; refusing P={P} > 16 (use force=True)"
        )
    if beta is None:
        beta = beta_coulomb
    N = grid.N
    gc = np.fft.fftshift(ghat.data)  # centered: index j <-> mode j - N
    hc = np.fft.fftshift(hhat.data)
    modes = np.arange(P) - N
    M = np.stack(
        np.broadcast_arrays(
            modes[:, None, None], modes[None, :, None], modes[None, None, :]
        ),
        axis=-1,
    )
    out = np.zeros((P, P, P), dtype=np.complex128)
    for j1 in range(P):
        lo1, hi1 = max(0, N - j1), min(P, P + N - j1)
        for j2 in range(P):
            lo2, hi2 = max(0, N - j2), min(P, P + N - j2)
            for j3 in range(P):
                gl = gc[j1, j2, j3]
                if gl == 0.0:
                    continue
                lo3, hi3 = max(0, N - j3), min(P, P + N - j3)
                lvec = np.array([j1 - N, j2 - N, j3 - N], dtype=np.int64)
                mblk = M[lo1:hi1, lo2:hi2, lo3:hi3]
                bet = _beta_block(beta, lvec, mblk)
                out[
                    j1 + lo1 - N : j1 + hi1 - N,
                    j2 + lo2 - N : j2 + hi2 - N,
                    j3 + lo3 - N : j3 + hi3 - N,
                ] += gl * bet * hc[lo1:hi1, lo2:hi2, lo3:hi3]
    out = np.fft.ifftshift(out) / (2.0 * grid.L) ** 3
    return SpectralField(out, grid)


def q_scheme_rhs(fhat: SpectralField, grid, tables: KernelTables) -> SpectralField:
    """Right-hand side of the truncated evolution: cutoff, collide, cutoff.

    Computes P_N( P_N(Qhat(F, F)) psi_R ) with F = P_N(f psi_R), i.e. the
    velocity cutoff is applied to the state before the collision and to
    the result after it, with a Galerkin projection at every stage.  The
    state is real by construction, so the Hermitian fast path is used.
    """
    if fhat.grid != grid:
        raise ShapeMismatchError("state grid differs from the requested grid")
    F = project(apply_cutoff(fhat))
    U = _q_fast_hermitian(F, F, tables)
    return project(apply_cutoff(project(U)))
