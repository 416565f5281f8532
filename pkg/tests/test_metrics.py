import math

import numpy as np
import pytest

from misr.metrics import C1, C2, evaluate, gaussian_window, mse, psnr, ssim


def ssim_scalar(a, b):
    # direct per-window SSIM with symmetric (half-sample) padding
    w = gaussian_window()
    k = w.shape[0] // 2
    ap = np.pad(a, k, mode="symmetric")
    bp = np.pad(b, k, mode="symmetric")
    total = 0.0
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            pa = ap[r:r + 2 * k + 1, c:c + 2 * k + 1]
            pb = bp[r:r + 2 * k + 1, c:c + 2 * k + 1]
            mu_a, mu_b = np.sum(w * pa), np.sum(w * pb)
            va = np.sum(w * (pa - mu_a) ** 2)
            vb = np.sum(w * (pb - mu_b) ** 2)
            cov = np.sum(w * (pa - mu_a) * (pb - mu_b))
            total += ((2 * mu_a * mu_b + C1) * (2 * cov + C2)) / \
                ((mu_a ** 2 + mu_b ** 2 + C1) * (va + vb + C2))
    return total / a.size


def test_psnr_identical_is_inf(rng):
    x = rng.uniform(0, 255, (5, 5))
    assert psnr(x, x) == math.inf


def test_psnr_constant_offset():
    assert psnr(np.full((4, 7), 100.0), np.full((4, 7), 116.0)) == pytest.approx(24.0487, abs=1e-3)


def test_psnr_tiny():
    assert psnr(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(37.162, abs=1e-3)


def test_psnr_formula_and_symmetry(rng):
    a, b = rng.uniform(0, 255, (2, 8, 8))
    m = np.mean((a - b) ** 2)
    assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2 / m), rel=1e-12)
    assert psnr(a, b) == psnr(b, a)


def test_psnr_decreases_with_mse(rng):
    a = rng.uniform(0, 255, (8, 8))
    n = rng.standard_normal((8, 8))
    vals = [psnr(a, a + s * n) for s in (0.5, 1, 2, 4)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(ValueError):
        ssim(np.zeros((11, 11)), np.zeros((11, 12)))


def test_ssim_too_small():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_ssim_identity(rng):
    x = rng.uniform(0, 255, (16, 13))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constants():
    expected = (2 * 100 * 150 + 6.5025) / (100 ** 2 + 150 ** 2 + 6.5025)
    assert expected == pytest.approx(0.92309, abs=1e-4)
    assert ssim(np.full((12, 12), 100.0), np.full((12, 12), 150.0)) == pytest.approx(0.92309, abs=1e-4)


def test_ssim_noise_11x11_matches_oracle(rng):
    a = rng.uniform(0, 255, (11, 11))
    b = a + rng.uniform(-20, 20, (11, 11))
    assert ssim(a, b) == pytest.approx(ssim_scalar(a, b), abs=1e-9)


@pytest.mark.parametrize("trial", range(20))
def test_metrics_match_scalar_oracles(trial):
    r = np.random.default_rng(trial)
    h, w = r.integers(11, 17, size=2)
    a = r.uniform(0, 255, (h, w))
    b = np.clip(a + r.normal(0, r.uniform(1, 40), (h, w)), 0, 255)
    assert ssim(a, b) == pytest.approx(ssim_scalar(a, b), abs=1e-9)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 <= ssim(a, b) <= 1.0
    m = sum((a[i, j] - b[i, j]) ** 2 for i in range(h) for j in range(w)) / (h * w)
    assert mse(a, b) == pytest.approx(m, rel=1e-9)
    assert psnr(a, b) == pytest.approx(10 * math.log10(65025 / m), abs=1e-9)


def test_evaluate_clamps():
    ref = np.full((12, 12), 255.0)
    rep = evaluate(ref, np.full((12, 12), 300.0))
    assert rep.mse == 0.0 and rep.psnr == math.inf and rep.ssim == pytest.approx(1.0)
    assert evaluate(ref, np.full((12, 12), 300.0), clamp=False).mse == 45.0 ** 2
