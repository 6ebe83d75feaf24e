"""Minimal reverse-mode autodiff over dense float64 arrays.

A Tensor wraps a numpy array plus an optional gradient buffer and, for
non-leaf nodes, a closure that maps the output gradient to per-parent
gradients.  ``backward`` walks the graph once in reverse topological order
and accumulates additively into ``grad`` of every tensor that tracks
gradients; calling it again without zeroing keeps accumulating.

Every tensor is checked for NaN/inf on creation, so a non-finite value
raises at the op that produced it instead of propagating.
"""

from contextlib import contextmanager

import numpy as np

from .errors import NonFiniteError, ShapeError

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block (for eval/sampling)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_grad_fn")

    def __init__(self, data, requires_grad=False, _parents=(), _grad_fn=None):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:  # 0-d stays 0-d (always contiguous)
            arr = np.ascontiguousarray(arr)
        # summing is one cheap pass; any NaN/inf poisons the total
        if arr.size:
            with np.errstate(invalid="ignore", over="ignore"):
                total = arr.sum()
            if not np.isfinite(total):
                raise NonFiniteError(
                    f"non-finite values in tensor of shape {arr.shape}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._grad_fn = _grad_fn

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """A detached copy of the values."""
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate gradients of this scalar into the graph's tensors."""
        if self.data.size != 1:
            raise ShapeError(
                f"backward() needs a scalar loss, got shape {self.shape}")
        topo = _toposort(self)
        grads = {id(self): np.ones_like(self.data)}
        for node in topo:
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._grad_fn is None:
                continue
            for parent, pg in zip(node._parents, node._grad_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    def __repr__(self):
        flags = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flags})"


def _toposort(root: Tensor):
    """Reverse topological order (root first), iterative to spare the stack."""
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    order.reverse()
    return order


def make_result(data, parents, grad_fn) -> Tensor:
    """Wrap an op result, attaching the graph only when gradients flow."""
    if _grad_enabled and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=tuple(parents),
                      _grad_fn=grad_fn)
    return Tensor(data)
