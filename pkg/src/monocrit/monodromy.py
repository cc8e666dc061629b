"""Populating a fiber by transporting known solutions around random loops."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .critsys import CriticalSystem
from .pathtrack import Homotopy, PathSegment, TrackerConfig, as_rng, newton_polish, track_many
from .polycore import PolySystem
from .seed import SeedResult
from .solutions import SolutionSet

__all__ = [
    "MonodromyConfig",
    "FiberResult",
    "triangular_loop",
    "run_loop",
    "monodromy_collect",
    "collect_fiber",
]

log = logging.getLogger(__name__)

COLLISION_TOL = 1e-9
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class MonodromyConfig:
    max_loops: int = 100
    solution_bound: int | None = None
    stall_limit: int = 15
    rng_seed: int = 0
    dedup_tol: float = 1e-6
    threads: int = 1

    def __post_init__(self) -> None:
        if self.max_loops < 1 or self.stall_limit < 1:
            raise ValueError("max_loops and stall_limit must be at least 1")
        if self.solution_bound is not None and self.solution_bound < 1:
            raise ValueError("solution_bound must be positive")


@dataclass
class FiberResult:
    solutions: SolutionSet
    loops: int
    history: list[int] = field(default_factory=list)
    new_per_loop: list[int] = field(default_factory=list)
    path_failures: int = 0
    termination: str = ""

    def to_dict(self) -> dict:
        return {
            "loops_run": self.loops,
            "set_size_history": list(self.history),
            "new_points_per_loop": list(self.new_per_loop),
            "path_failures": self.path_failures,
            "termination_reason": self.termination,
        }


def triangular_loop(u0, rng=None, scale: float | None = None) -> list[PathSegment]:
    """Segments ``u0 -> u' -> u'' -> u0`` with complex Gaussian corners.

    Corners have standard deviation ``scale`` (default ``1 + |u0|``).
    """
    rng = as_rng(rng)
    u0 = np.asarray(u0, dtype=complex).ravel()
    if not np.all(np.isfinite(u0)):
        raise ValueError("base point must be finite")
    if scale is None:
        scale = 1.0 + np.linalg.norm(u0)
    corners = [
        scale * (rng.normal(size=u0.shape) + 1j * rng.normal(size=u0.shape)) / np.sqrt(2)
        for _ in range(2)
    ]
    return [PathSegment(u0, corners[0]), PathSegment(corners[0], corners[1]), PathSegment(corners[1], u0)]


def _merge(
    current: SolutionSet,
    results,
    base_h: Homotopy,
    base,
    accept: Callable[[np.ndarray], bool] | None,
) -> tuple[SolutionSet, int, int]:
    out = current.copy()
    added = failures = 0
    for res in results:
        if not res.ok:
            failures += 1
            continue
        z = res.endpoint
        if not res.residual <= MEMBERSHIP_TOL * (1 + np.linalg.norm(z)):
            failures += 1
            continue
        if accept is not None and not accept(z):
            continue
        hit = out.find(z)
        if hit is not None:
            gap = np.max(np.abs(out[hit].z - z))
            scale = 1.0 + np.max(np.abs(z))
            if gap > COLLISION_TOL * scale:
                polished, _, _ = newton_polish(base_h, z, base)
                if np.max(np.abs(out[hit].z - polished)) > COLLISION_TOL * scale:
                    log.warning("near-collision at distance %.2e treated as duplicate", gap)
            continue
        out.add(z, res.residual)
        added += 1
    return out, added, failures


def _run_loop(system: PolySystem, base, current: SolutionSet, rng, cfg, threads=1, accept=None, scale=None):
    base = np.asarray(base, dtype=complex).ravel()
    h = Homotopy(system, triangular_loop(base, rng, scale))
    results = track_many(h, [p.z for p in current], cfg, threads=threads)
    return _merge(current, results, Homotopy(system, [base, base]), base, accept)


def run_loop(
    cs: CriticalSystem,
    u0,
    current: SolutionSet,
    rng=None,
    cfg: TrackerConfig | None = None,
    threads: int = 1,
) -> SolutionSet:
    """Transport every point of ``current`` around one random triangle and merge.

    ``info["new"]`` and ``info["failures"]`` on the result describe the loop.
    """
    if not len(current):
        raise ValueError("need at least one known point")
    out, added, failures = _run_loop(
        cs.system, u0, current, as_rng(rng), cfg or TrackerConfig(), threads, _accept_for(cs)
    )
    out.info = {"new": added, "failures": failures}
    return out


def _accept_for(cs: CriticalSystem):
    if cs.objective.kind.value != "likelihood":
        return None
    n = cs.n
    return lambda z: not cs.objective.on_forbidden_locus(z[:n])


def monodromy_collect(
    system: PolySystem,
    base,
    starts: SolutionSet,
    mcfg: MonodromyConfig | None = None,
    tcfg: TrackerConfig | None = None,
    rng=None,
    accept: Callable[[np.ndarray], bool] | None = None,
    done: Callable[[SolutionSet], bool] | None = None,
    loop_scale: float | Callable[[np.random.Generator], float] | None = None,
) -> FiberResult:
    """Loop until the bound is met, ``stall_limit`` loops add nothing, or ``max_loops`` run out.

    ``done`` is an extra stopping test checked after every loop that adds
    points (used by the trace-guided curve collection).  ``loop_scale`` may
    be a callable drawing a fresh corner spread from ``rng`` for each loop.
    """
    mcfg = mcfg or MonodromyConfig()
    tcfg = tcfg or TrackerConfig()
    rng = as_rng(mcfg.rng_seed if rng is None else rng)
    current = starts.copy()
    result = FiberResult(current, 0, [len(current)])
    if mcfg.solution_bound is not None and len(current) >= mcfg.solution_bound:
        result.termination = "solution_bound"
        return result
    stall = 0
    while result.loops < mcfg.max_loops:
        scale = loop_scale(rng) if callable(loop_scale) else loop_scale
        current, added, failures = _run_loop(system, base, current, rng, tcfg, mcfg.threads, accept, scale)
        result.loops += 1
        result.path_failures += failures
        result.history.append(len(current))
        result.new_per_loop.append(added)
        result.solutions = current
        log.debug("loop %d: %d points (+%d), %d failures", result.loops, len(current), added, failures)
        if mcfg.solution_bound is not None and len(current) >= mcfg.solution_bound:
            result.termination = "solution_bound"
            return result
        if added and done is not None and done(current):
            result.termination = "certified"
            return result
        stall = 0 if added else stall + 1
        if stall >= mcfg.stall_limit:
            result.termination = "stalled"
            return result
    result.termination = "max_loops"
    return result


def collect_fiber(
    cs: CriticalSystem,
    seed: SeedResult,
    mcfg: MonodromyConfig | None = None,
    tcfg: TrackerConfig | None = None,
    rng=None,
) -> FiberResult:
    """Grow the fiber over ``seed.u`` starting from the single seed point."""
    mcfg = mcfg or MonodromyConfig()
    starts = SolutionSet(cs.n, mcfg.dedup_tol)
    starts.add(seed.z, seed.residual)
    return monodromy_collect(cs.system, seed.u, starts, mcfg, tcfg, rng=rng, accept=_accept_for(cs))
