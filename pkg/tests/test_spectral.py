"""Transforms, projection, cutoff, convolution, snapshot I/O."""

import numpy as np
import pytest

from landau_spectral.spectral import (
    GridSpec,
    HermitianSymmetryError,
    PhysicalField,
    ShapeMismatchError,
    SnapshotFormatError,
    SpectralField,
    apply_cutoff,
    convolve_hermitian_sum,
    get_fft_workers,
    parseval_l2,
    project,
    psi_R,
    read_snapshot,
    set_fft_workers,
    to_physical,
    to_spectral,
    truncated_convolution,
    velocity_axis,
    write_snapshot,
)


def _grid(P=8, L=2.0, **kw):
    return GridSpec(L=L, P=P, gamma=-3.0, **kw)


# ---------------------------------------------------------------------------
# mode convention and transform pair
# ---------------------------------------------------------------------------

def test_constant_field_transforms_to_mass_at_zero():
    grid = _grid()
    c = 0.7
    vals = np.full((grid.P,) * 3, c)
    fhat = to_spectral(PhysicalField(vals, grid))
    # fhat(0) = integral of f = c (2L)^3, everything else zero
    assert fhat.data[0, 0, 0] == pytest.approx(c * (2 * grid.L) ** 3, rel=1e-14)
    rest = fhat.data.copy()
    rest[0, 0, 0] = 0.0
    assert np.max(np.abs(rest)) < 1e-12 * abs(fhat.data[0, 0, 0])


def test_trig_sum_recovers_known_coefficients():
    # f = 1 + cos(pi v1/L)/2 + sin(2 pi v2/L)/4 has four nonzero modes with
    # coefficients that follow from Euler's formula and fhat(k) = a_k (2L)^3
    grid = _grid(P=8, L=1.5)
    v = velocity_axis(grid)
    V1 = v[:, None, None]
    V2 = v[None, :, None]
    f = 1.0 + 0.5 * np.cos(np.pi * V1 / grid.L) + 0.25 * np.sin(2 * np.pi * V2 / grid.L)
    f = np.broadcast_to(f, (grid.P,) * 3).copy()
    fhat = to_spectral(PhysicalField(f, grid))
    vol = (2 * grid.L) ** 3
    assert fhat.data[0, 0, 0] == pytest.approx(vol, rel=1e-14)
    assert fhat.data[1, 0, 0] == pytest.approx(0.25 * vol, abs=1e-12 * vol)
    assert fhat.data[-1, 0, 0] == pytest.approx(0.25 * vol, abs=1e-12 * vol)
    assert fhat.data[0, 2, 0] == pytest.approx(-0.125j * vol, abs=1e-12 * vol)
    assert fhat.data[0, -2, 0] == pytest.approx(0.125j * vol, abs=1e-12 * vol)
    # nothing else
    mask = np.zeros_like(f, dtype=bool)
    for idx in [(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 2, 0), (0, -2, 0)]:
        mask[idx] = True
    assert np.max(np.abs(fhat.data[~mask])) < 1e-12 * vol


def test_single_mode_synthesis():
    # one Hermitian pair of unit coefficients synthesizes 2 cos/(2L)^3
    grid = _grid(P=8, L=2.0)
    fhat = SpectralField.zeros(grid)
    fhat.data[0, 1, 0] = 1.0
    fhat.data[0, -1, 0] = 1.0
    f = to_physical(fhat)
    v = velocity_axis(grid)
    expect = 2.0 * np.cos(np.pi * v / grid.L) / (2 * grid.L) ** 3
    assert np.allclose(f.data[0, :, 0], expect, atol=1e-15)


def test_round_trip_native_and_oversampled(rng):
    grid = _grid(P=10, L=3.0)
    vals = rng.standard_normal((grid.P,) * 3)
    fhat = to_spectral(PhysicalField(vals, grid))
    for n in (grid.P, 2 * grid.P, 3 * grid.P):
        back = to_spectral(to_physical(fhat, n))
        assert np.max(np.abs(back.data - fhat.data)) < 1e-12 * np.max(np.abs(fhat.data))


def test_parseval_ties_both_norms(rng):
    grid = _grid(P=8)
    vals = rng.standard_normal((grid.P,) * 3)
    fhat = to_spectral(PhysicalField(vals, grid))
    f = to_physical(fhat)
    # the projection removed the Nyquist content, so compare after synthesis
    assert f.l2() == pytest.approx(fhat.l2(), rel=1e-12)
    assert parseval_l2(fhat) == fhat.l2()


def test_to_spectral_rejects_bad_grid_size():
    grid = _grid(P=8)
    with pytest.raises(ShapeMismatchError):
        to_spectral(PhysicalField(np.zeros((12, 12, 12)), grid))


def test_to_physical_rejects_bad_sizes():
    grid = _grid(P=8)
    fhat = SpectralField.zeros(grid)
    with pytest.raises(ShapeMismatchError):
        to_physical(fhat, 12)
    with pytest.raises(ShapeMismatchError):
        to_physical(fhat, 4)


def test_to_physical_rejects_non_hermitian():
    grid = _grid(P=8)
    fhat = SpectralField.zeros(grid)
    fhat.data[1, 2, 3] = 1.0  # no conjugate partner
    with pytest.raises(HermitianSymmetryError):
        to_physical(fhat)


def test_velocity_axis():
    grid = _grid(P=8, L=2.0)
    v = velocity_axis(grid)
    assert v[0] == -2.0
    assert v[-1] == pytest.approx(2.0 - 0.5)  # +L itself is excluded
    assert np.allclose(np.diff(v), 0.5)
    assert velocity_axis(grid, 16).shape == (16,)


# ---------------------------------------------------------------------------
# projection hygiene
# ---------------------------------------------------------------------------

def test_project_zeros_nyquist_planes_and_is_idempotent(rng):
    grid = _grid(P=8)
    raw = SpectralField(
        rng.standard_normal((8, 8, 8)) + 1j * rng.standard_normal((8, 8, 8)), grid
    )
    p1 = project(raw)
    N = grid.N
    assert np.all(p1.data[N, :, :] == 0)
    assert np.all(p1.data[:, N, :] == 0)
    assert np.all(p1.data[:, :, N] == 0)
    # untouched away from the planes
    assert p1.data[1, 2, 3] == raw.data[1, 2, 3]
    p2 = project(p1)
    assert np.array_equal(p2.data, p1.data)


# ---------------------------------------------------------------------------
# velocity cutoff
# ---------------------------------------------------------------------------

def test_psi_values_paper_shape():
    grid = _grid(P=8, L=2.0)  # R defaults to L
    R = grid.R
    assert psi_R((0.0, 0.0, 0.0), grid) == 1.0
    assert psi_R((0.5 * R, 0.0, 0.0), grid) == 1.0
    assert psi_R((0.0, 0.95 * R, 0.0), grid) == pytest.approx(0.5, rel=1e-12)
    assert psi_R((0.0, 0.0, R), grid) == pytest.approx(0.0, abs=1e-12)
    assert psi_R((0.0, 0.0, 1.2 * R), grid) == 0.0
    # continuity at the inner edge of the ramp
    assert psi_R((0.9 * R - 1e-12, 0.0, 0.0), grid) == pytest.approx(1.0)
    assert psi_R((0.9 * R + 1e-12, 0.0, 0.0), grid) == pytest.approx(1.0, rel=1e-9)


def test_psi_values_smooth_shape():
    grid = _grid(P=8, L=2.0, cutoff_shape="smooth")
    R = grid.R
    assert psi_R((0.5 * R, 0.0, 0.0), grid) == 1.0
    assert psi_R((0.95 * R, 0.0, 0.0), grid) == pytest.approx(0.5, rel=1e-12)
    assert psi_R((R, 0.0, 0.0), grid) == pytest.approx(0.0, abs=1e-12)
    # C^1: slope vanishes at both ends of the ramp (defect is O(eps^2))
    eps = 1e-8 * R
    lo = psi_R((0.9 * R + eps, 0.0, 0.0), grid)
    hi = psi_R((R - eps, 0.0, 0.0), grid)
    assert 1.0 - lo < 1e-12
    assert hi < 1e-12


def test_psi_none_is_identity_and_apply_cutoff_passthrough(rng):
    grid = _grid(P=8, cutoff_shape="none")
    assert psi_R((0.0, 0.0, 10.0), grid) == 1.0
    vals = rng.standard_normal((8, 8, 8))
    fhat = to_spectral(PhysicalField(vals, grid))
    assert apply_cutoff(fhat) is fhat


def test_apply_cutoff_keeps_interior_gaussian():
    # a bump well inside 0.9R is (nearly) untouched by the cutoff.  At P=24
    # the truncation ringing (~7e-9) and the tail at 0.9R = 3.6 (~2e-7) both
    # sit far below the bound, so a break in the cutoff shape or its
    # collocation would stand out.
    grid = _grid(P=24, L=4.0)
    v = velocity_axis(grid)
    r2 = v[:, None, None] ** 2 + v[None, :, None] ** 2 + v[None, None, :] ** 2
    f = np.exp(-r2 / (2 * 0.65**2))
    fhat = to_spectral(PhysicalField(f, grid))
    cut = apply_cutoff(fhat)
    assert (cut - fhat).l2() < 1e-4 * fhat.l2()
    # result is a genuine real field (synthesis does not raise)
    to_physical(cut)


def test_apply_cutoff_removes_exterior_mass():
    # the constant state loses the corners outside |v| > R
    grid = _grid(P=16, L=2.0)
    vals = np.ones((grid.P,) * 3)
    fhat = to_spectral(PhysicalField(vals, grid))
    cut = apply_cutoff(fhat)
    # mass ratio ~ measure({psi=1}) + ramp contribution, well below the box
    ratio = cut.data[0, 0, 0].real / fhat.data[0, 0, 0].real
    ball = 4 * np.pi / 3 * grid.R**3 / (2 * grid.L) ** 3  # ~0.5236 for R=L
    assert 0.8 * ball < ratio < 1.2 * ball


# ---------------------------------------------------------------------------
# truncated convolution
# ---------------------------------------------------------------------------

def _brute_convolution(x, y, P, aliased=False):
    """Literal double sum over J_N; the exact reference for small P."""
    N = P // 2
    ks = np.fft.fftfreq(P, 1.0 / P).astype(int)
    out = np.zeros((P, P, P), dtype=np.complex128)
    modes = [(i, j, k) for i in ks for j in ks for k in ks]
    table = {m: x[m[0] % P, m[1] % P, m[2] % P] for m in modes}
    for l in modes:
        xl = table[l]
        if xl == 0.0:
            continue
        for m in modes:
            s = (l[0] + m[0], l[1] + m[1], l[2] + m[2])
            if aliased:
                s = tuple(((c + N) % P) - N for c in s)
            if all(-N <= c < N for c in s):
                out[s[0] % P, s[1] % P, s[2] % P] += xl * y[m[0] % P, m[1] % P, m[2] % P]
    return out


def test_truncated_convolution_matches_brute_force(rng):
    grid = _grid(P=4, L=1.0)
    x = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    y = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    want = _brute_convolution(x.data, y.data, 4)
    got = truncated_convolution(x, y, padding="exact")
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got.data - want)) < 1e-13 * scale


def test_aliased_convolution_folds_images(rng):
    grid = _grid(P=4, L=1.0, padding="aliased")
    x = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    y = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    want = _brute_convolution(x.data, y.data, 4, aliased=True)
    got = truncated_convolution(x, y)  # padding from the grid
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got.data - want)) < 1e-13 * scale
    # and it differs from the exact sum (the images are real for this input)
    exact = truncated_convolution(x, y, padding="exact")
    assert np.max(np.abs(got.data - exact.data)) > 1e-6 * scale


def test_convolution_delta_shift(rng):
    # convolving with a delta at mode e shifts coefficients by e
    grid = _grid(P=8, L=1.0)
    x = to_spectral(PhysicalField(rng.standard_normal((8, 8, 8)), grid))
    d = SpectralField.zeros(grid)
    d.data[0, 0, 1] = 1.0
    z = truncated_convolution(x, d, padding="exact")
    N = grid.N
    ks = np.fft.fftfreq(8, 1.0 / 8).astype(int)
    for k3 in ks:
        src = k3 - 1
        want = x.data[2, 3, src % 8] if -N <= src < N else 0.0
        assert z.data[2, 3, k3 % 8] == pytest.approx(want, abs=1e-14)


def test_convolution_grid_mismatch_raises(rng):
    a = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), _grid(P=4)))
    b = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), _grid(P=4, L=3.0)))
    with pytest.raises(ShapeMismatchError):
        truncated_convolution(a, b)


def test_hermitian_engine_matches_complex(rng):
    grid = _grid(P=8, L=2.0)
    x = to_spectral(PhysicalField(rng.standard_normal((8, 8, 8)), grid))
    y = to_spectral(PhysicalField(rng.standard_normal((8, 8, 8)), grid))
    want = truncated_convolution(x, y, padding="exact").data
    got = convolve_hermitian_sum([(x.data, y.data)], grid.P, 2 * grid.P)
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


def test_hermitian_engine_accumulates_pairs(rng):
    grid = _grid(P=8, L=2.0)
    fields = [
        to_spectral(PhysicalField(rng.standard_normal((8, 8, 8)), grid))
        for _ in range(4)
    ]
    pairs = [(fields[0].data, fields[1].data), (fields[2].data, fields[3].data)]
    got = convolve_hermitian_sum(pairs, grid.P, 2 * grid.P)
    want = (
        truncated_convolution(fields[0], fields[1], padding="exact").data
        + truncated_convolution(fields[2], fields[3], padding="exact").data
    )
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


# ---------------------------------------------------------------------------
# field containers
# ---------------------------------------------------------------------------

def test_spectral_field_arithmetic(rng):
    grid = _grid(P=4)
    a = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    b = to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), grid))
    s = a + b
    assert np.array_equal(s.data, a.data + b.data)
    d = a - b
    assert np.array_equal(d.data, a.data - b.data)
    assert np.array_equal((2.0 * a).data, 2.0 * a.data)
    assert np.array_equal((a * 2.0).data, 2.0 * a.data)
    with pytest.raises(ShapeMismatchError):
        a + to_spectral(PhysicalField(rng.standard_normal((4, 4, 4)), _grid(P=4, L=9.0)))


def test_field_shape_checks():
    grid = _grid(P=8)
    with pytest.raises(ShapeMismatchError):
        SpectralField(np.zeros((4, 4, 4)), grid)
    with pytest.raises(ShapeMismatchError):
        PhysicalField(np.zeros((4, 4, 2)), grid)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(L=0.0, P=8)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=7)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=2)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=8, gamma=2.0)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=8, R=1.5)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=8, padding="reflect")
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=8, oversample=0)
    with pytest.raises(ValueError):
        GridSpec(L=1.0, P=8, cutoff_shape="boxcar")
    g = GridSpec(L=2.0, P=8)
    assert g.R == 2.0 and g.N == 4


def test_fft_worker_setting():
    assert get_fft_workers() == 1
    set_fft_workers(2)
    try:
        assert get_fft_workers() == 2
        with pytest.raises(ValueError):
            set_fft_workers(0)
    finally:
        set_fft_workers(1)


# ---------------------------------------------------------------------------
# snapshot files
# ---------------------------------------------------------------------------

def test_snapshot_round_trip(tmp_path, rng):
    grid = _grid(P=8, L=2.5)
    vals = rng.standard_normal((8, 8, 8))
    path = tmp_path / "state.lsfd"
    write_snapshot(path, PhysicalField(vals, grid), t=1.25)
    back, hdr = read_snapshot(path)
    assert np.array_equal(back, vals)
    assert hdr == {"P": 8, "L": 2.5, "gamma": -3.0, "t": 1.25}


def test_snapshot_rejects_oversampled_grid(rng):
    grid = _grid(P=8)
    with pytest.raises(ShapeMismatchError):
        write_snapshot("unused", PhysicalField(np.zeros((16, 16, 16)), grid), 0.0)


def test_snapshot_rejects_bad_magic(tmp_path, rng):
    grid = _grid(P=4)
    path = tmp_path / "state.lsfd"
    write_snapshot(path, PhysicalField(rng.standard_normal((4, 4, 4)), grid), 0.0)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)


def test_snapshot_rejects_truncation(tmp_path, rng):
    grid = _grid(P=4)
    path = tmp_path / "state.lsfd"
    write_snapshot(path, PhysicalField(rng.standard_normal((4, 4, 4)), grid), 0.0)
    raw = path.read_bytes()
    for cut in (10, len(raw) - 5):  # inside header, mid-element in the data
        path.write_bytes(raw[:cut])
        with pytest.raises(SnapshotFormatError):
            read_snapshot(path)
