import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misr.image import bicubic_resize
from misr.operators import (BlurKernel, Displacement, blur_adjoint, build_sparse_operator,
                            warp_adjoint, zero_insert)
from misr.upscaler import (build_filter_bank, filter_support, shuffle, unshuffle, upscale_ete,
                           upscale_interp)
from oracles import ete_oracle, interior_mask, random_instance


@pytest.mark.parametrize("trial", range(90))
def test_ete_equals_sparse_oracle_on_interior(trial):
    r = np.random.default_rng(trial)
    hr, s, k, d = random_instance(r)
    bank = build_filter_bank(k, s, d)
    e = r.standard_normal((hr[0] // s, hr[1] // s))
    got = upscale_ete(e, bank)
    want = ete_oracle(e, hr, d, k, s)
    mask = interior_mask(bank, hr)
    assert mask.sum() > 0
    err = np.abs(got - want)[mask].max() / np.abs(want[mask]).max()
    assert err <= 1e-8


@pytest.mark.parametrize("trial", range(8))
def test_raw_filters_are_sparse_columns(trial):
    r = np.random.default_rng(500 + trial)
    s = 3
    H = W = 8 * s
    taps = r.uniform(0, 1, (5, 5))
    k = BlurKernel(taps / taps.sum())
    d = Displacement(*r.uniform(-5, 5, 2))
    bank = build_filter_bank(k, s, d)
    op = build_sparse_operator((H, W), d, k, s)
    diag = op.gram_diagonal()
    for sr in range(s):
        for sc in range(s):
            R, C = 4 * s + sr, 4 * s + sc
            col = op.column(R * W + C)
            P, Q = divmod(R, s)[0], divmod(C, s)[0]
            oy, ox = bank.origins[sr, sc]
            t = bank.support
            window = col[P + oy:P + oy + t, Q + ox:Q + ox + t]
            np.testing.assert_allclose(window, bank.raw(sr, sc), atol=1e-10)
            assert window.sum() == pytest.approx(col.sum(), abs=1e-12)
            assert bank.raw_norms[sr, sc] == pytest.approx(diag[R, C], abs=1e-12)


def test_delta_bank_trivial():
    bank = build_filter_bank(BlurKernel.delta(), 2, Displacement(0, 0))
    f = bank.filters
    assert np.count_nonzero(f[0, 0]) == 1 and f[0, 0].sum() == 1.0
    for sr, sc in [(0, 1), (1, 0), (1, 1)]:
        assert not f[sr, sc].any() and bank.raw_norms[sr, sc] == 0.0
    e = np.random.default_rng(0).standard_normal((5, 4))
    np.testing.assert_array_equal(upscale_ete(e, bank), zero_insert(e, 2))


def test_zero_guard_gives_exact_zeros():
    bank = build_filter_bank(BlurKernel.delta(), 3, Displacement(1.0, 2.0))
    out = upscale_ete(np.full((4, 4), 9.0), bank)
    for sr in range(3):
        for sc in range(3):
            if bank.raw_norms[sr, sc] == 0:
                assert np.all(out[sr::3, sc::3] == 0.0)
            else:
                assert np.all(out[sr::3, sc::3] != 0.0)


def test_support_a3_scale2():
    bank = build_filter_bank(BlurKernel.gaussian(3, 1.0), 2, Displacement(0.3, 0.6))
    assert bank.support == 3 == filter_support(3, 2)
    assert bank.filters.shape == (2, 2, 3, 3)


@pytest.mark.parametrize("a,s", [(a, s) for a in (1, 3, 5, 7) for s in (2, 3, 4)])
def test_support_bound(a, s):
    k = BlurKernel.delta() if a == 1 else BlurKernel.gaussian(a, 1.0)
    t = math.ceil((a + 1) / s + 1)
    for dy, dx in [(0, 0), (0.5, 0.25), (-3.7, 4.2)]:
        bank = build_filter_bank(k, s, Displacement(dy, dx))
        assert bank.support == t
        for sr in range(s):
            for sc in range(s):
                nz = np.argwhere(bank.filters[sr, sc])
                if nz.size:
                    assert np.ptp(nz[:, 0]) < t and np.ptp(nz[:, 1]) < t


def test_normalization_invertible(rng):
    bank = build_filter_bank(BlurKernel.gaussian(5, 1.2), 3, Displacement(*rng.uniform(-5, 5, 2)))
    for sr in range(3):
        for sc in range(3):
            T = bank.raw(sr, sc)
            assert np.sum(T * T) == pytest.approx(bank.raw_norms[sr, sc], rel=1e-12)
            np.testing.assert_allclose(bank.filters[sr, sc], T / np.sum(T * T), rtol=1e-12)


def test_bank_dump_lists_every_sub_location():
    bank = build_filter_bank(BlurKernel.gaussian(3, 1.0), 2, Displacement(0.5, -1.25))
    buf = io.StringIO()
    bank.dump(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# scale=2 support=3")
    assert sum(line.startswith("sub ") for line in lines) == 4
    assert len(lines) == 1 + 4 * (1 + 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, alpha, beta):
    r = np.random.default_rng(seed)
    s = int(r.choice([2, 3, 4]))
    bank = build_filter_bank(BlurKernel.gaussian(5, 1.2), s, Displacement(*r.uniform(-5, 5, 2)))
    e1, e2 = r.standard_normal((2, 6, 7))
    lhs = upscale_ete(alpha * e1 + beta * e2, bank)
    rhs = alpha * upscale_ete(e1, bank) + beta * upscale_ete(e2, bank)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_shuffle_bijection(s, h, w, seed):
    maps = np.random.default_rng(seed).standard_normal((s, s, h, w))
    img = shuffle(maps)
    assert img.shape == (s * h, s * w)
    np.testing.assert_array_equal(unshuffle(img, s), maps)
    np.testing.assert_array_equal(shuffle(unshuffle(img, s)), img)


def test_shuffle_layout():
    s = 3
    maps = np.zeros((s, s, 2, 2))
    for sr in range(s):
        for sc in range(s):
            maps[sr, sc] = 10 * sr + sc
    img = shuffle(maps)
    for R in range(6):
        for C in range(6):
            assert img[R, C] == 10 * (R % s) + C % s


def test_interp_identity(rng):
    e = rng.standard_normal((5, 6))
    np.testing.assert_allclose(upscale_interp(e, BlurKernel.delta(), Displacement(0, 0), 1), e,
                               atol=1e-12)


def test_interp_chain_and_constants(rng):
    e = rng.standard_normal((6, 6))
    k, d = BlurKernel.gaussian(5, 1.2), Displacement(1.4, -2.2)
    want = warp_adjoint(blur_adjoint(bicubic_resize(e, 3), k), d)
    np.testing.assert_array_equal(upscale_interp(e, k, d, 3), want)
    c = upscale_interp(np.full((8, 8), 3.0), k, Displacement(0.4, 0.7), 3)
    np.testing.assert_allclose(c[6:-6, 6:-6], 3.0, atol=1e-12)


def test_python_backend_matches(rng, monkeypatch):
    from misr import _kernels_py, kernels

    bank = build_filter_bank(BlurKernel.gaussian(5, 1.2), 3, Displacement(2.3, -4.1))
    e = rng.standard_normal((9, 10))
    a = upscale_ete(e, bank)
    monkeypatch.setattr(kernels, "_impl", _kernels_py)
    np.testing.assert_allclose(upscale_ete(e, bank), a, atol=1e-12)
