"""Adam with bias correction, updating parameters in place."""

import numpy as np

from .errors import ShapeError
from .tensor import Tensor


class Adam:
    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Tensor] = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def set_lr(self, lr: float):
        self.lr = float(lr)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        """One bias-corrected update; parameters without a grad are skipped."""
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            g = p.grad
            if g.shape != p.data.shape:
                raise ShapeError(
                    f"grad shape {g.shape} != param shape {p.data.shape}")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def decayed_lr(base_lr: float, epoch: int, total_epochs: int,
               hold_frac: float = 0.4, final_fraction: float = 0.01) -> float:
    """Hold the base rate, then decay exponentially to its final fraction.

    Adam keeps producing fixed-size update jitter on absolute-error losses
    at a constant rate; the shrinking tail quenches that jitter so the loss
    curve settles monotonically, while the hold phase keeps early progress
    at full speed.
    """
    hold = int(hold_frac * total_epochs)
    if total_epochs <= 1 or epoch < hold:
        return float(base_lr)
    span = max(total_epochs - 1 - hold, 1)
    return float(base_lr) * final_fraction ** ((epoch - hold) / span)
