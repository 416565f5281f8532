import numpy as np
import pytest

from misr.regularizers import RegularizerSpec, reg_grad, reg_value

KINDS = ("tikhonov", "tv", "btv")


def btv_scalar(x, p, alpha):
    H, W = x.shape
    total = 0.0
    for l in range(-p, p + 1):
        for m in range(-p, p + 1):
            if l == 0 and m == 0:
                continue
            for r in range(H):
                for c in range(W):
                    rr, cc = min(max(r - l, 0), H - 1), min(max(c - m, 0), W - 1)
                    total += alpha ** (abs(l) + abs(m)) * abs(x[r, c] - x[rr, cc])
    return total


def laplacian_scalar(x):
    H, W = x.shape
    out = np.zeros_like(x)
    for r in range(H):
        for c in range(W):
            nb = [x[max(r - 1, 0), c], x[min(r + 1, H - 1), c], x[r, max(c - 1, 0)], x[r, min(c + 1, W - 1)]]
            out[r, c] = sum(nb) - 4 * x[r, c]
    return out


@pytest.mark.parametrize("kind", KINDS)
def test_constant_image(kind):
    x = np.full((7, 6), 88.0)
    spec = RegularizerSpec(kind)
    if kind == "tv":
        assert reg_value(x, spec) == pytest.approx(x.size * spec.tv_epsilon, rel=1e-12)
    else:
        assert reg_value(x, spec) == 0.0
    assert not np.any(reg_grad(x, spec))


def test_btv_hand_value():
    # offsets with m = 0 compare the row to itself; the six with m = +-1 each see |0 - 1| once
    x = np.array([[0.0, 1.0]])
    assert reg_value(x, RegularizerSpec("btv", btv_window=1, btv_decay=1.0)) == 6.0


@pytest.mark.parametrize("trial", range(5))
def test_btv_matches_scalar(trial):
    r = np.random.default_rng(trial)
    x = r.uniform(0, 255, tuple(r.integers(1, 7, 2)))
    p, a = int(r.integers(1, 4)), float(r.uniform(0.3, 1.0))
    assert reg_value(x, RegularizerSpec("btv", p, a)) == pytest.approx(btv_scalar(x, p, a), rel=1e-12)


def test_tikhonov_matches_scalar(rng):
    x = rng.uniform(0, 255, (6, 5))
    assert reg_value(x, RegularizerSpec("tikhonov")) == pytest.approx(np.sum(laplacian_scalar(x) ** 2), rel=1e-12)


def test_tikhonov_ramp_interior():
    r, c = np.mgrid[0:8, 0:8].astype(float)
    x = 2 * r + 3 * c + 1
    lap = laplacian_scalar(x)
    assert np.all(lap[1:-1, 1:-1] == 0)
    # only the replicate-padded border stencils see curvature
    from misr.regularizers import _laplacian

    np.testing.assert_array_equal(_laplacian(x), lap)


@pytest.mark.parametrize("trial", range(20))
def test_tikhonov_gradient_central_differences(trial):
    r = np.random.default_rng(trial)
    x = r.uniform(0, 255, (8, 8))
    spec = RegularizerSpec("tikhonov")
    g = reg_grad(x, spec)
    h = 1e-3
    fd = np.zeros_like(x)
    for i in range(8):
        for j in range(8):
            e = np.zeros_like(x)
            e[i, j] = h
            fd[i, j] = (reg_value(x + e, spec) - reg_value(x - e, spec)) / (2 * h)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-6 * np.abs(g).max())


def _safe_direction(x, r, p, h):
    # a direction for which no BTV/TV difference crosses zero within the step
    for _ in range(100):
        v = r.standard_normal(x.shape)
        ok = True
        for l in range(-p, p + 1):
            for m in range(-p, p + 1):
                if l == 0 and m == 0:
                    continue
                idx_r = np.clip(np.arange(x.shape[0]) - l, 0, x.shape[0] - 1)
                idx_c = np.clip(np.arange(x.shape[1]) - m, 0, x.shape[1] - 1)
                diff = x - x[np.ix_(idx_r, idx_c)]
                dv = v - v[np.ix_(idx_r, idx_c)]
                live = diff != 0
                if np.any(np.abs(diff[live]) < 10 * h * (1 + np.abs(dv[live]))):
                    ok = False
        if ok:
            return v
    raise RuntimeError("no safe direction found")


@pytest.mark.parametrize("kind", ["tv", "btv"])
@pytest.mark.parametrize("trial", range(20))
def test_directional_derivative(kind, trial):
    r = np.random.default_rng(100 + trial)
    x = r.uniform(0, 255, (8, 9))
    spec = RegularizerSpec(kind)
    h = 1e-4
    v = _safe_direction(x, r, 2, h)
    lhs = float(np.vdot(reg_grad(x, spec), v))
    rhs = (reg_value(x + h * v, spec) - reg_value(x - h * v, spec)) / (2 * h)
    assert lhs == pytest.approx(rhs, rel=1e-4, abs=1e-4)


def test_btv_sign_zero_on_plateaus():
    x = np.zeros((6, 6))
    x[:, 3:] = 10.0
    g = reg_grad(x, RegularizerSpec("btv", 1, 1.0))
    # rows are identical, so vertical offsets contribute exact zeros
    np.testing.assert_array_equal(g, np.tile(g[0], (6, 1)))


def test_btv_gradient_bound(rng):
    p, a = 2, 0.7
    bound = 2 * sum(a ** (abs(l) + abs(m)) for l in range(-p, p + 1) for m in range(-p, p + 1) if l or m)
    for _ in range(5):
        g = reg_grad(rng.uniform(0, 255, (12, 12)), RegularizerSpec("btv", p, a))
        assert np.abs(g).max() <= bound + 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_translation_equivariance(kind, rng):
    x = rng.uniform(0, 255, (20, 20))
    spec = RegularizerSpec(kind)
    g = reg_grad(x, spec)
    gs = reg_grad(np.roll(x, (2, 3), axis=(0, 1)), spec)
    np.testing.assert_allclose(gs[8:-6, 8:-6], g[6:-8, 5:-9], atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_nonnegative(kind, rng):
    assert reg_value(rng.uniform(-50, 300, (9, 9)), RegularizerSpec(kind)) >= 0


@pytest.mark.parametrize("bad", [{"kind": "l0"}, {"btv_window": 0}, {"btv_decay": 0.0},
                                 {"btv_decay": 1.5}, {"tv_epsilon": 0.0}])
def test_invalid_spec(bad):
    with pytest.raises(ValueError):
        RegularizerSpec(**bad)


def test_backends_agree(rng, monkeypatch):
    from misr import _kernels_py, kernels

    x = rng.uniform(0, 255, (13, 11))
    spec = RegularizerSpec("btv", 3, 0.6)
    v, g = reg_value(x, spec), reg_grad(x, spec)
    monkeypatch.setattr(kernels, "_impl", _kernels_py)
    assert reg_value(x, spec) == pytest.approx(v, rel=1e-12)
    np.testing.assert_allclose(reg_grad(x, spec), g, atol=1e-12)
