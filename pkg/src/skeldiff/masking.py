"""Frame masking: training-time random spans, the interval evaluation
protocol, and linear-interpolation fill of the masked runs.

The first and last frame are never masked so every masked run has observed
anchors on both sides.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MaskError
from .rng import Rng

SPAN_RANGE = (5, 20)  # typical gap duration in frames


@dataclass(frozen=True)
class MaskSpec:
    total_frames: int
    masked: tuple  # sorted frame indices

    def __post_init__(self):
        t = self.total_frames
        if t < 2:
            raise MaskError(f"need at least two frames, got {t}")
        prev = -1
        for idx in self.masked:
            if not 0 < idx < t - 1:
                raise MaskError(f"frame {idx} cannot be masked (T={t})")
            if idx <= prev:
                raise MaskError("masked indices must be strictly increasing")
            prev = idx

    @property
    def observed(self) -> tuple:
        m = set(self.masked)
        return tuple(i for i in range(self.total_frames) if i not in m)

    def bool_array(self) -> np.ndarray:
        """True on masked frames."""
        out = np.zeros(self.total_frames, dtype=bool)
        out[list(self.masked)] = True
        return out

    def runs(self):
        """Contiguous masked runs as (start, end) inclusive pairs."""
        runs = []
        start = prev = None
        for idx in self.masked:
            if start is None:
                start = prev = idx
            elif idx == prev + 1:
                prev = idx
            else:
                runs.append((start, prev))
                start = prev = idx
        if start is not None:
            runs.append((start, prev))
        return runs


def random_mask(t: int, ratio: float, rng: Rng,
                span_range=SPAN_RANGE) -> MaskSpec:
    """Mask random contiguous spans until ceil(ratio * (t - 2)) interior
    frames are covered; the last span is clipped to hit the count exactly."""
    if t < 4:
        raise MaskError(f"need at least 4 frames to mask, got {t}")
    if not 0.0 < ratio < 1.0:
        raise MaskError(f"mask ratio must be in (0, 1), got {ratio}")
    lo, hi = span_range
    if not 1 <= lo <= hi:
        raise MaskError(f"bad span range {span_range}")
    target = int(np.ceil(ratio * (t - 2)))
    masked: set = set()
    while len(masked) < target:
        length = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(1, t - 1))
        span = set(range(start, min(start + length, t - 1)))
        added = sorted(span - masked)
        room = target - len(masked)
        masked.update(added[:room] if len(added) > room else added)
    return MaskSpec(t, tuple(sorted(masked)))


def interval_mask(t: int, every: int, remove: int) -> MaskSpec:
    """Remove the last `remove` frames of every `every`-frame block.

    The final partial block is masked by the same within-block rule and the
    last frame always stays observed.  An empty result is an error.
    """
    if not 0 < remove < every <= t:
        raise MaskError(
            f"need 0 < remove < every <= frames, got remove={remove} "
            f"every={every} frames={t}")
    masked = tuple(i for i in range(t)
                   if i % every >= every - remove and i != t - 1)
    if not masked:
        raise MaskError("interval mask selects no frames")
    return MaskSpec(t, masked)


def interp_fill(x: np.ndarray, mask: MaskSpec) -> np.ndarray:
    """Fill each masked run by linear interpolation between its observed
    anchor frames; observed frames are returned untouched."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] != mask.total_frames:
        raise MaskError(
            f"expected (C, {mask.total_frames}, V) sequence, got {x.shape}")
    out = x.copy()
    for start, end in mask.runs():
        a, b = start - 1, end + 1
        span = b - a
        w = (np.arange(1, end - start + 2) / span)[None, :, None]
        out[:, start:end + 1, :] = x[:, a:a + 1, :] + w * (
            x[:, b:b + 1, :] - x[:, a:a + 1, :])
    return out


def zero_fill(x: np.ndarray, mask: MaskSpec) -> np.ndarray:
    """Alternative fill: masked frames set to zero."""
    out = np.asarray(x, dtype=np.float64).copy()
    out[:, list(mask.masked), :] = 0.0
    return out


def fill(x: np.ndarray, mask: MaskSpec, mode: str = "interp") -> np.ndarray:
    if mode == "interp":
        return interp_fill(x, mask)
    if mode == "zero":
        return zero_fill(x, mask)
    raise MaskError(f"unknown fill mode {mode!r}")
