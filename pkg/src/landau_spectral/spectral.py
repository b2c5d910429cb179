"""Spectral fields on the periodized velocity box [-L, L]^3.

Modes live in J_N = [-N, N-1]^3 with N = P/2 and hat normalization

    fhat(k) = int_{[-L,L]^3} f(v) exp(-i pi k.v/L) dv,
    f(v)    = (2L)^(-3) sum_{k in J_N} fhat(k) exp(i pi k.v/L),

so fhat(0) is the total mass.  Coefficients are stored in FFT frequency
order (0, 1, ..., N-1, -N, ..., -1 per axis).  Real-valued fields have
Hermitian-symmetric coefficients; the Nyquist planes k_i = -N have no
conjugate partner inside J_N and are therefore kept identically zero
(see ``project``), which keeps every state exactly real-valued.

The collocation grid has n points per axis at v_j = -L + 2Lj/n.  The
midpoint/rectangle rule on that grid is exact for band-limited fields,
which is what makes the discrete transform pair below an exact inverse
pair.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _sfft

_PADDINGS = ("exact", "aliased")
_CUTOFF_SHAPES = ("paper", "smooth", "none")

# scipy.fft worker count used by every transform in the package.
_fft_workers = 1


def set_fft_workers(n: int) -> None:
    """Set the thread count for all FFT calls (1 = serial, deterministic default)."""
    global _fft_workers
    if n < 1:
        raise ValueError(f"fft worker count must be >= 1, got {n}")
    _fft_workers = int(n)


def get_fft_workers() -> int:
    return _fft_workers


class ShapeMismatchError(ValueError):
    """Array shape or grid incompatibility between operands."""


class HermitianSymmetryError(ValueError):
    """Coefficients of a supposedly real field violate Hermitian symmetry."""


class SnapshotFormatError(ValueError):
    """Malformed or mismatched binary snapshot file."""


@dataclass(frozen=True)
class GridSpec:
    """Static description of the velocity grid and scheme options.

    Parameters
    ----------
    L : float
        Half-width of the velocity box [-L, L]^3.
    P : int
        Even number of collocation points (and retained modes) per axis.
        The mode set is [-P/2, P/2-1]^3.
    gamma : float
        Collision kernel exponent, |z|^(gamma+2); -3 is the Coulomb case.
    R : float, optional
        Support radius of the velocity cutoff, 0 < R <= L.  Defaults to L.
    padding : {"exact", "aliased"}
        "exact" evaluates mode convolutions with factor-2 zero padding
        (no aliasing); "aliased" works at size P and folds the tails in.
    oversample : int
        Collocation refinement factor used when multiplying by the cutoff.
    cutoff_shape : {"paper", "smooth", "none"}
        Profile of the radial cutoff function psi_R.
    """

    L: float
    P: int
    gamma: float = -3.0
    R: float | None = None
    padding: str = "exact"
    oversample: int = 2
    cutoff_shape: str = "paper"

    def __post_init__(self):
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.R is None:
            object.__setattr__(self, "R", float(self.L))
        else:
            object.__setattr__(self, "R", float(self.R))
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.P < 4 or self.P % 2 != 0:
            raise ValueError(f"P must be even and >= 4, got {self.P}")
        if not -4.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [-4, 1], got {self.gamma}")
        if not 0.0 < self.R <= self.L:
            raise ValueError(f"R must satisfy 0 < R <= L, got R={self.R}, L={self.L}")
        if self.padding not in _PADDINGS:
            raise ValueError(f"padding must be one of {_PADDINGS}, got {self.padding!r}")
        if self.oversample < 1:
            raise ValueError(f"oversample must be >= 1, got {self.oversample}")
        if self.cutoff_shape not in _CUTOFF_SHAPES:
            raise ValueError(
                f"cutoff_shape must be one of {_CUTOFF_SHAPES}, got {self.cutoff_shape!r}"
            )

    @property
    def N(self) -> int:
        """Half-width of the retained mode set."""
        return self.P // 2


@dataclass
class SpectralField:
    """Truncated Fourier coefficients of a field, FFT order, shape (P, P, P)."""

    data: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        P = self.grid.P
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.shape != (P, P, P):
            raise ShapeMismatchError(
                f"coefficient array has shape {self.data.shape}, expected {(P, P, P)}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(np.zeros((grid.P,) * 3, dtype=np.complex128), grid)

    def copy(self) -> "SpectralField":
        return SpectralField(self.data.copy(), self.grid)

    def l2(self) -> float:
        """L^2(D_L) norm via Parseval: sqrt((2L)^-3 sum |fhat|^2)."""
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) / (2.0 * self.grid.L) ** 3))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if self.grid != other.grid:
            raise ShapeMismatchError("cannot combine fields on different grids")
        return SpectralField(self.data + other.data, self.grid)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if self.grid != other.grid:
            raise ShapeMismatchError("cannot combine fields on different grids")
        return SpectralField(self.data - other.data, self.grid)

    def __mul__(self, c) -> "SpectralField":
        return SpectralField(self.data * c, self.grid)

    __rmul__ = __mul__


@dataclass
class PhysicalField:
    """Real point values on the n^3 collocation grid (n a multiple of P)."""

    data: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or len(set(self.data.shape)) != 1:
            raise ShapeMismatchError(f"expected a cubic array, got shape {self.data.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def l2(self) -> float:
        """L^2(D_L) norm by the rectangle rule."""
        w = (2.0 * self.grid.L / self.n) ** 3
        return float(np.sqrt(np.sum(self.data**2) * w))


def velocity_axis(grid: GridSpec, n: int | None = None) -> np.ndarray:
    """1-D collocation coordinates v_j = -L + 2Lj/n (the +L endpoint is the
    periodic image of -L and is excluded)."""
    if n is None:
        n = grid.P
    return -grid.L + 2.0 * grid.L * np.arange(n) / n


@lru_cache(maxsize=32)
def _mode_ints(P: int) -> np.ndarray:
    """Integer mode numbers in FFT order: [0..N-1, -N..-1]."""
    return np.fft.fftfreq(P, d=1.0 / P).astype(np.int64)


@lru_cache(maxsize=32)
def _phase3(P: int) -> np.ndarray:
    """(-1)^(k1+k2+k3) over the mode set; relates samples on [-L, L) to DFT order."""
    s = 1.0 - 2.0 * (np.abs(_mode_ints(P)) % 2).astype(np.float64)
    return s[:, None, None] * s[None, :, None] * s[None, None, :]


def _embed_idx(P: int, n: int) -> np.ndarray:
    """Slot indices of the P-mode set inside an n-point FFT-order axis."""
    N = P // 2
    return np.concatenate([np.arange(N), np.arange(n - N, n)])


def _fftn(a):
    return _sfft.fftn(a, axes=(-3, -2, -1), workers=_fft_workers)


def _ifftn(a):
    return _sfft.ifftn(a, axes=(-3, -2, -1), workers=_fft_workers)


def _rfftn(a):
    return _sfft.rfftn(a, axes=(-3, -2, -1), workers=_fft_workers)


def _irfftn(a, n):
    return _sfft.irfftn(a, s=(n, n, n), axes=(-3, -2, -1), workers=_fft_workers)


def _half_to_modes(H: np.ndarray, n: int, P: int) -> np.ndarray:
    """Gather DFT values at modes J_N from an rfftn half-spectrum of size n.

    Negative k3 values are reconstructed from the Hermitian partner
    H(-k1,-k2,-k3) by conjugation, so the result is exactly Hermitian
    whenever the underlying samples are real.
    """
    N = P // 2
    idx = _embed_idx(P, n)
    k = _mode_ints(P)
    neg = (n - k) % n
    out = np.empty((P, P, P), dtype=np.complex128)
    out[:, :, :N] = H[np.ix_(idx, idx, np.arange(N))]
    out[:, :, N:] = np.conj(H[np.ix_(neg, neg, np.arange(N, 0, -1))])
    return out


def _modes_to_half(src: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad (P,P,P) Hermitian coefficients into an (n, n, n/2+1) half-spectrum.

    Only the k3 >= 0 half of ``src`` is read; the caller guarantees
    Hermitian symmetry and zeroed Nyquist planes.
    """
    P = src.shape[0]
    N = P // 2
    idx = _embed_idx(P, n)
    H = np.zeros((n, n, n // 2 + 1), dtype=np.complex128)
    H[np.ix_(idx, idx, np.arange(N))] = src[:, :, :N]
    return H


def _embed_full(src: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad (P,P,P) FFT-order coefficients into an (n,n,n) FFT-order array."""
    P = src.shape[-1]
    idx = _embed_idx(P, n)
    big = np.zeros(src.shape[:-3] + (n, n, n), dtype=np.complex128)
    big[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = src
    return big


def _extract_full(big: np.ndarray, P: int) -> np.ndarray:
    n = big.shape[-1]
    idx = _embed_idx(P, n)
    return big[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]


def _check_hermitian(fhat: SpectralField) -> None:
    """Raise unless coefficients describe a real field (relative tol 1e-12)."""
    data = fhat.data
    P = fhat.grid.P
    N = P // 2
    scale = np.max(np.abs(data))
    if scale == 0.0:
        return
    rev = (P - np.arange(P)) % P
    defect = np.max(np.abs(data - np.conj(data[np.ix_(rev, rev, rev)])))
    nyq = max(
        np.max(np.abs(data[N, :, :])),
        np.max(np.abs(data[:, N, :])),
        np.max(np.abs(data[:, :, N])),
    )
    if defect > 1e-12 * scale or nyq > 1e-12 * scale:
        raise HermitianSymmetryError(
            f"coefficients are not Hermitian-symmetric within 1e-12 "
            f"(symmetry defect {defect:.3e}, Nyquist magnitude {nyq:.3e}, "
            f"scale {scale:.3e})"
        )


def project(fhat: SpectralField) -> SpectralField:
    """Galerkin projection hygiene: zero the Nyquist planes k_i = -N.

    The mode set [-N, N-1]^3 is asymmetric; dropping the k_i = -N planes
    makes it conjugation-closed so that real fields stay real.  Idempotent.
    """
    N = fhat.grid.N
    out = fhat.data.copy()
    out[N, :, :] = 0.0
    out[:, N, :] = 0.0
    out[:, :, N] = 0.0
    return SpectralField(out, fhat.grid)


def to_spectral(field: PhysicalField) -> SpectralField:
    """Forward transform: rectangle-rule Fourier coefficients on J_N.

    The grid size must be a multiple of P; modes above N-1 are discarded
    (projection) and the Nyquist planes are zeroed.
    """
    grid = field.grid
    P = grid.P
    n = field.n
    if n % P != 0:
        raise ShapeMismatchError(f"grid size {n} is not a multiple of P={P}")
    H = _rfftn(field.data)
    out = _half_to_modes(H, n, P)
    out *= _phase3(P) * (2.0 * grid.L / n) ** 3
    return project(SpectralField(out, grid))


def to_physical(fhat: SpectralField, n: int | None = None) -> PhysicalField:
    """Inverse transform to point values on an n^3 grid (n >= P, multiple of P).

    The coefficients must describe a real field; violations of Hermitian
    symmetry beyond 1e-12 (relative) raise ``HermitianSymmetryError``.
    """
    grid = fhat.grid
    P = grid.P
    if n is None:
        n = P
    if n % P != 0 or n < P:
        raise ShapeMismatchError(f"output grid size {n} is not a multiple of P={P}")
    _check_hermitian(fhat)
    H = _modes_to_half(fhat.data * _phase3(P), n)
    vals = _irfftn(H, n) * (n**3 / (2.0 * grid.L) ** 3)
    return PhysicalField(vals, grid)


def psi_R(v, grid: GridSpec):
    """Radial velocity cutoff psi_R evaluated at v (a 3-vector or (..., 3) array).

    Shapes:
      paper  -- 1 on |v| < 0.9R, the linear ramp 10(1 - |v|/R) on
                0.9R <= |v| <= R, 0 outside.
      smooth -- C^1 cubic ramp on the same shell.
      none   -- identically 1.
    """
    r = np.linalg.norm(np.asarray(v, dtype=np.float64), axis=-1)
    out = _psi_profile(r, grid)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _psi_profile(r, grid: GridSpec):
    R = grid.R
    if grid.cutoff_shape == "none":
        return np.ones_like(np.asarray(r, dtype=np.float64))
    r = np.asarray(r, dtype=np.float64)
    if grid.cutoff_shape == "paper":
        ramp = 10.0 * (1.0 - r / R)
    else:  # smooth
        s = np.clip((r - 0.9 * R) / (0.1 * R), 0.0, 1.0)
        ramp = 1.0 - s * s * (3.0 - 2.0 * s)
    return np.where(r < 0.9 * R, 1.0, np.where(r <= R, np.clip(ramp, 0.0, 1.0), 0.0))


@lru_cache(maxsize=8)
def _psi_grid_values(grid: GridSpec, n: int) -> np.ndarray:
    v = velocity_axis(grid, n)
    r = np.sqrt(v[:, None, None] ** 2 + v[None, :, None] ** 2 + v[None, None, :] ** 2)
    return _psi_profile(r, grid)


def apply_cutoff(fhat: SpectralField) -> SpectralField:
    """P_N(u * psi_R): multiply by the cutoff in physical space and re-project.

    The product is collocated on an oversample*P grid so that the
    quadrature behind the projection sees the C^0 kink of the cutoff at
    sub-grid resolution.  With cutoff_shape == "none" the input is
    returned unchanged.
    """
    grid = fhat.grid
    if grid.cutoff_shape == "none":
        return fhat
    n = grid.oversample * grid.P
    phys = to_physical(fhat, n)
    prod = phys.data * _psi_grid_values(grid, n)
    return to_spectral(PhysicalField(prod, grid))


def truncated_convolution(
    xhat: SpectralField, yhat: SpectralField, padding: str | None = None
) -> SpectralField:
    """Mode-space convolution z(k) = sum_{l+m=k, l,m in J_N} x(l) y(m), k in J_N.

    With "exact" padding the sum is evaluated on a 2P-point circle, which
    is wide enough that no aliased image l+m = k +/- 2P contributes; the
    result equals the literal truncated double sum to rounding.  With
    "aliased" padding the product is formed at size P and images fold in
    (cheaper, classic pseudo-spectral tradeoff).
    """
    if xhat.grid != yhat.grid:
        raise ShapeMismatchError("operands live on different grids")
    grid = xhat.grid
    P = grid.P
    if padding is None:
        padding = grid.padding
    if padding not in _PADDINGS:
        raise ValueError(f"padding must be one of {_PADDINGS}, got {padding!r}")
    Q = 2 * P if padding == "exact" else P
    X = _ifftn(_embed_full(xhat.data, Q))
    Y = _ifftn(_embed_full(yhat.data, Q))
    zbig = _fftn(X * Y) * float(Q) ** 3
    return SpectralField(_extract_full(zbig, P), grid)


def convolve_hermitian_sum(pairs, P: int, Q: int) -> np.ndarray:
    """sum_t conv(x_t, y_t) truncated to J_N, for Hermitian-symmetric factors.

    All factor arrays must be (P,P,P) FFT-order coefficients of real
    fields (Hermitian, zero Nyquist planes), which lets every transform
    run in the real-FFT half-spectrum representation; roughly twice the
    throughput of the complex engine.
    """
    phys = None
    for xdat, ydat in pairs:
        xp = _irfftn(_modes_to_half(xdat, Q), Q)
        yp = _irfftn(_modes_to_half(ydat, Q), Q)
        if phys is None:
            phys = xp * yp
        else:
            phys += xp * yp
    zhalf = _rfftn(phys) * float(Q) ** 3
    return _half_to_modes(zhalf, Q, P)


def parseval_l2(fhat: SpectralField) -> float:
    """Alias of SpectralField.l2(), spelled out for call sites that compare norms."""
    return fhat.l2()


# ---------------------------------------------------------------------------
# binary field snapshots ("LSFD")
# ---------------------------------------------------------------------------

_LSFD_MAGIC = b"LSFD"
_LSFD_VERSION = 1
_LSFD_HEADER = struct.Struct("<4sIIddd")  # magic, version, P, L, gamma, t


def write_snapshot(path, field: PhysicalField, t: float) -> None:
    """Write point values on the native P^3 grid with a small binary header."""
    grid = field.grid
    if field.n != grid.P:
        raise ShapeMismatchError("snapshots store the native P^3 grid only")
    with open(path, "wb") as fh:
        fh.write(
            _LSFD_HEADER.pack(
                _LSFD_MAGIC, _LSFD_VERSION, grid.P, grid.L, grid.gamma, float(t)
            )
        )
        fh.write(np.ascontiguousarray(field.data, dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; returns (values, header_dict).

    header_dict has keys P, L, gamma, t.  The caller is responsible for
    checking P and L against its own grid.
    """
    with open(path, "rb") as fh:
        raw = fh.read(_LSFD_HEADER.size)
        if len(raw) != _LSFD_HEADER.size:
            raise SnapshotFormatError(f"{path}: truncated header")
        magic, version, P, L, gamma, t = _LSFD_HEADER.unpack(raw)
        if magic != _LSFD_MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        if version != _LSFD_VERSION:
            raise SnapshotFormatError(f"{path}: unsupported version {version}")
        buf = fh.read(8 * P**3)
        if len(buf) != 8 * P**3:
            raise SnapshotFormatError(f"{path}: truncated data section")
        vals = np.frombuffer(buf, dtype="<f8")
    return vals.reshape(P, P, P).copy(), {"P": P, "L": L, "gamma": gamma, "t": t}
