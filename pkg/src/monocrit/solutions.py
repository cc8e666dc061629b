"""Deduplicated collections of solution points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = ["Solution", "SolutionSet"]


@dataclass(frozen=True)
class Solution:
    """One point: the full unknown vector plus its residual.

    ``num_x`` marks where the model coordinates end; the rest of ``z`` holds
    Lagrange multipliers (and, for trace curves, the parameter coordinates).
    """

    z: np.ndarray
    residual: float
    num_x: int

    @property
    def x(self) -> np.ndarray:
        return self.z[: self.num_x]

    @property
    def lam(self) -> np.ndarray:
        return self.z[self.num_x:]

    def is_real(self, tol: float = 1e-6) -> bool:
        return bool(np.max(np.abs(self.z.imag), initial=0.0) <= tol)


def _close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(a - b) <= tol * (1.0 + np.abs(b))))


@dataclass
class SolutionSet:
    """Points that are pairwise distinct up to ``dedup_tol``.

    Two points coincide when every coordinate agrees to
    ``dedup_tol * (1 + |z_i|)``; multipliers can reach 1e4 and more, where an
    absolute test would split one point into several.
    """

    num_x: int
    dedup_tol: float = 1e-6
    points: list[Solution] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Solution]:
        return iter(self.points)

    def __getitem__(self, i: int) -> Solution:
        return self.points[i]

    def find(self, z) -> int | None:
        """Index of a stored point within ``dedup_tol`` of ``z``, if any."""
        z = np.asarray(z, dtype=complex)
        for i, p in enumerate(self.points):
            if _close(p.z, z, self.dedup_tol):
                return i
        return None

    def add(self, z, residual: float = 0.0) -> bool:
        """Insert ``z`` unless it duplicates a stored point; return True if added."""
        z = np.array(z, dtype=complex).ravel()
        if self.find(z) is not None:
            return False
        self.points.append(Solution(z, float(residual), self.num_x))
        return True

    def copy(self) -> "SolutionSet":
        return SolutionSet(self.num_x, self.dedup_tol, list(self.points))

    def without(self, index: int) -> "SolutionSet":
        out = self.copy()
        del out.points[index]
        return out

    def subset(self, indices) -> "SolutionSet":
        return SolutionSet(self.num_x, self.dedup_tol, [self.points[i] for i in indices])

    def array(self) -> np.ndarray:
        """Points stacked as rows."""
        if not self.points:
            return np.zeros((0, self.num_x), dtype=complex)
        return np.vstack([p.z for p in self.points])

    @property
    def xs(self) -> np.ndarray:
        return self.array()[:, : self.num_x]

    def same_as(self, other: "SolutionSet", tol: float | None = None) -> bool:
        """Set equality up to ``tol`` (defaults to ``dedup_tol``)."""
        tol = self.dedup_tol if tol is None else tol
        if len(self) != len(other):
            return False
        unmatched = list(other.points)
        for p in self.points:
            for j, q in enumerate(unmatched):
                if _close(p.z, q.z, tol):
                    del unmatched[j]
                    break
            else:
                return False
        return True
