"""Shared value types: the block layout of the system and sampled potentials."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class SignatureLayout:
    """Block sizes of the system; ``j = diag(I_m1, -I_m2)``."""

    m1: int
    m2: int

    def __post_init__(self):
        if int(self.m1) < 1 or int(self.m2) < 1:
            raise DimensionMismatch(f"need m1, m2 >= 1, got ({self.m1}, {self.m2})")

    @property
    def m(self):
        return self.m1 + self.m2

    @cached_property
    def j(self):
        return np.diag(np.r_[np.ones(self.m1), -np.ones(self.m2)]).astype(np.complex128)

    def big_v(self, v):
        """The m x m matrix [[0, v], [v^*, 0]] built from the m1 x m2 block."""
        v = np.asarray(v, dtype=np.complex128)
        out = np.zeros((self.m, self.m), dtype=np.complex128)
        out[: self.m1, self.m1:] = v
        out[self.m1:, : self.m1] = v.conj().T
        return out

    def blocks(self, M):
        """Split an m x m matrix into (M11, M12, M21, M22)."""
        p = self.m1
        return M[:p, :p], M[:p, p:], M[p:, :p], M[p:, p:]


@dataclass(frozen=True, eq=False)
class SampledPotential:
    """Samples of the m1 x m2 potential block on an ascending grid from 0."""

    layout: SignatureLayout
    xs: np.ndarray
    vs: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs = np.ascontiguousarray(np.asarray(self.xs, dtype=np.float64))
        vs = np.ascontiguousarray(np.asarray(self.vs, dtype=np.complex128))
        if xs.ndim != 1 or xs.size == 0:
            raise DimensionMismatch("grid must be a nonempty 1-D array")
        if xs[0] != 0.0:
            raise ValueError("grid must start at x = 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("grid must be strictly increasing")
        if vs.shape != (xs.size, self.layout.m1, self.layout.m2):
            raise DimensionMismatch(
                f"samples have shape {vs.shape}, expected "
                f"{(xs.size, self.layout.m1, self.layout.m2)}")
        if not np.all(np.isfinite(vs)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vs", vs)

    def __len__(self):
        return self.xs.size

    @classmethod
    def zero(cls, layout, x_max, step):
        xs = uniform_grid(x_max, step)
        return cls(layout, xs, np.zeros((xs.size, layout.m1, layout.m2)))

    @classmethod
    def from_function(cls, layout, func, x_max, step):
        xs = uniform_grid(x_max, step)
        return cls(layout, xs, np.array([func(x) for x in xs]).reshape(
            xs.size, layout.m1, layout.m2))

    def truncate(self, x_max):
        """Samples with x <= x_max (relative slack 1e-12 on the endpoint)."""
        k = int(np.searchsorted(self.xs, x_max * (1 + 1e-12) + 1e-300, side="right"))
        return SampledPotential(self.layout, self.xs[:k], self.vs[:k])

    def sup_norm(self):
        """max over the grid of ||v(x)||_2 (which equals ||V(x)||_2)."""
        return float(max(np.linalg.norm(v, 2) for v in self.vs))


def uniform_grid(x_max, step):
    if x_max <= 0 or step <= 0:
        raise ValueError("x_max and step must be positive")
    count = int(np.floor(x_max / step + 1e-9)) + 1
    return np.arange(count, dtype=np.float64) * step
