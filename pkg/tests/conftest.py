import numpy as np
import pytest

from skeldiff.tensor import Tensor


def fd_gradcheck(build, arrays, n_points=12, h=1e-5, tol=1e-5, seed=0):
    """Compare analytic gradients against central finite differences.

    `build` maps a list of Tensors to a scalar-loss Tensor and must be a
    pure function of its inputs (fresh state each call).
    """
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build(tensors)
    loss.backward()
    picker = np.random.default_rng(seed)
    worst = 0.0
    for ti, tensor in enumerate(tensors):
        assert tensor.grad is not None, f"input {ti} got no gradient"
        n = tensor.size
        idxs = picker.choice(n, size=min(n_points, n), replace=False)
        for idx in idxs:
            def value(delta, _ti=ti, _idx=idx):
                mod = [a.copy() for a in arrays]
                mod[_ti].flat[_idx] += delta
                return build([Tensor(m) for m in mod]).item()

            num = (value(h) - value(-h)) / (2.0 * h)
            ana = tensor.grad.flat[idx]
            err = abs(num - ana) / max(abs(num), abs(ana), 1e-6)
            worst = max(worst, err)
            assert err < tol, (
                f"input {ti} flat[{idx}]: analytic {ana:.8g} vs "
                f"numeric {num:.8g} (rel err {err:.2e})")
    return worst


def away_from_kinks(x, margin=0.05):
    """Nudge values away from zero so relu/abs subgradients are stable."""
    x = np.asarray(x, dtype=np.float64).copy()
    small = np.abs(x) < margin
    x[small] += np.sign(x[small] + 0.5) * (2 * margin)
    return x


@pytest.fixture
def nprng():
    return np.random.default_rng(1234)
