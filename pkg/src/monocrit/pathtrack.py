"""Predictor-corrector continuation of homotopy solution paths.

Every homotopy here is a parameter homotopy: a square :class:`PolySystem`
whose parameter slots move along a piecewise-linear path.  Straight-line
and cheater homotopies are expressed the same way by adding a path
parameter to the system.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .polycore import Polynomial, PolySystem
from .solutions import SolutionSet

__all__ = [
    "PathStatus",
    "TrackerConfig",
    "PathResult",
    "PathSegment",
    "Homotopy",
    "TrackerPreconditionError",
    "track",
    "track_many",
    "newton_polish",
    "total_degree_solve",
    "as_rng",
]

log = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e12
SINGULAR_COND = 1e12
MAX_STEPS_PER_SEGMENT = 50_000


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class PathStatus(str, Enum):
    SUCCESS = "success"
    DIVERGED = "diverged"
    STEP_TOO_SMALL = "step_too_small"
    SINGULAR_ENDPOINT = "singular_endpoint"
    REJECTED = "rejected"


class TrackerPreconditionError(ValueError):
    """The start point is not a regular solution of the homotopy at t=0."""


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-7
    max_step: float = 0.1
    newton_tol: float = 1e-10
    max_newton_iters: int = 3
    step_increase_factor: float = 2.0
    step_cut_factor: float = 0.5
    successes_before_increase: int = 5
    endpoint_tol: float = 1e-11

    def __post_init__(self) -> None:
        if not 0 < self.min_step <= self.initial_step <= self.max_step < 1:
            raise ValueError("need 0 < min_step <= initial_step <= max_step < 1")
        if self.newton_tol <= 0 or self.endpoint_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_newton_iters < 1 or self.successes_before_increase < 1:
            raise ValueError("iteration counts must be at least 1")
        if not 0 < self.step_cut_factor < 1 < self.step_increase_factor:
            raise ValueError("need step_cut_factor < 1 < step_increase_factor")


@dataclass(frozen=True)
class PathResult:
    status: PathStatus
    endpoint: np.ndarray
    residual: float
    steps_taken: int
    condition_estimate: float
    t_final: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is PathStatus.SUCCESS


@dataclass(frozen=True)
class PathSegment:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.start, dtype=complex).ravel()
        b = np.array(self.end, dtype=complex).ravel()
        if a.shape != b.shape:
            raise ValueError("segment endpoints differ in length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("segment endpoints must be finite")
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "end", b)


class Homotopy:
    """A square system whose parameters follow a piecewise-linear path.

    Parameters
    ----------
    system:
        Square in its unknown slots.
    path:
        Either a list of :class:`PathSegment` (consecutive ends must match)
        or a list of parameter vectors visited in order.
    """

    def __init__(self, system: PolySystem, path: Sequence):
        if not system.is_square:
            raise ValueError(
                f"homotopy must be square: {len(system)} polynomials, "
                f"{len(system.unknown_slots)} unknowns"
            )
        if path and isinstance(path[0], PathSegment):
            segments = list(path)
        else:
            pts = [np.array(p, dtype=complex).ravel() for p in path]
            if len(pts) < 2:
                raise ValueError("a parameter path needs at least two points")
            segments = [PathSegment(a, b) for a, b in zip(pts, pts[1:])]
        for s in segments:
            if s.start.shape[0] != len(system.parameter_slots):
                raise ValueError("parameter vectors must match the system's parameter slots")
        self.system = system
        self.segments = segments
        self._kernel = system.compiled
        self._unknowns = np.array(system.unknown_slots, dtype=np.intp)
        self._params = np.array(system.parameter_slots, dtype=np.intp)

    @property
    def num_unknowns(self) -> int:
        return len(self._unknowns)

    def params_at(self, segment: int, t: float) -> np.ndarray:
        s = self.segments[segment]
        return s.start + t * (s.end - s.start)

    def evaluate(self, z: np.ndarray, params: np.ndarray) -> np.ndarray:
        w = np.empty(self.system.num_vars, dtype=complex)
        w[self._unknowns] = z
        w[self._params] = params
        return self._kernel.evaluate(w)

    def evaluate_full(self, z: np.ndarray, params: np.ndarray, direction: np.ndarray | None = None):
        """Return ``H``, ``dH/dz`` and ``dH/dt`` along ``direction`` in parameter space."""
        w = np.empty(self.system.num_vars, dtype=complex)
        w[self._unknowns] = z
        w[self._params] = params
        values, jac = self._kernel.evaluate_with_jacobian(w)
        jz = jac[:, self._unknowns]
        ht = jac[:, self._params] @ direction if direction is not None else None
        return values, jz, ht

    def residual(self, z, segment: int = 0, t: float = 0.0) -> float:
        return float(np.linalg.norm(self.evaluate(np.asarray(z, dtype=complex), self.params_at(segment, t))))


def _newton(h: Homotopy, z: np.ndarray, params: np.ndarray, tol: float, max_iters: int):
    """Fixed-parameter Newton; None unless the correction norms contract below ``tol``."""
    prev = None
    for _ in range(max_iters):
        values, jz, _ = h.evaluate_full(z, params)
        try:
            dz = np.linalg.solve(jz, -values)
        except np.linalg.LinAlgError:
            return None
        z = z + dz
        size = np.linalg.norm(dz)
        if not np.isfinite(size):
            return None
        if size <= tol * (1.0 + np.linalg.norm(z)):
            return z
        if prev is not None and size > 0.5 * prev:
            return None
        prev = size
    return None


def newton_polish(h: Homotopy, z, params, tol: float = 1e-13, max_iters: int = 8):
    """Refine ``z`` at fixed parameters; returns (z, residual, condition)."""
    z = np.array(z, dtype=complex)
    params = np.asarray(params, dtype=complex)
    for _ in range(max_iters):
        values, jz, _ = h.evaluate_full(z, params)
        try:
            dz = np.linalg.solve(jz, -values)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dz)):
            break
        z = z + dz
        if np.linalg.norm(dz) <= tol * (1.0 + np.linalg.norm(z)):
            break
    values, jz, _ = h.evaluate_full(z, params)
    return z, float(np.linalg.norm(values)), _cond(jz)


def _equilibrate(jz: np.ndarray, sweeps: int = 4) -> np.ndarray:
    """Alternately scale rows and columns to unit max-norm."""
    a = jz
    for _ in range(sweeps):
        r = np.abs(a).max(axis=1)
        a = a / np.where(r > 0, r, 1.0)[:, None]
        c = np.abs(a).max(axis=0)
        a = a / np.where(c > 0, c, 1.0)[None, :]
    return a


def _cond(jz: np.ndarray) -> float:
    """2-norm condition number after row/column equilibration.

    Multipliers can be orders of magnitude larger than the coordinates, which
    inflates the raw condition number of a perfectly regular point.
    """
    if jz.size == 0:
        return 1.0
    if not np.all(np.isfinite(jz)):
        return np.inf
    with np.errstate(all="ignore"):
        c = np.linalg.cond(_equilibrate(jz))
    return float(c) if np.isfinite(c) else np.inf


def _track_segment(h: Homotopy, seg: int, z: np.ndarray, cfg: TrackerConfig):
    """Track one segment from t=0 to t=1. Returns (status, z, steps, t)."""
    direction = h.segments[seg].end - h.segments[seg].start
    t = 0.0
    step = cfg.initial_step
    streak = 0
    steps = 0
    while t < 1.0:
        if steps >= MAX_STEPS_PER_SEGMENT:
            return PathStatus.STEP_TOO_SMALL, z, steps, t
        step = min(step, 1.0 - t)
        _, jz, ht = h.evaluate_full(z, h.params_at(seg, t), direction)
        try:
            dz = np.linalg.solve(jz, -ht)
        except np.linalg.LinAlgError:
            dz = None
        corrected = None
        if dz is not None and np.all(np.isfinite(dz)):
            t_new = 1.0 if step >= 1.0 - t else t + step
            corrected = _newton(h, z + step * dz, h.params_at(seg, t_new), cfg.newton_tol, cfg.max_newton_iters)
        steps += 1
        if corrected is None:
            streak = 0
            step *= cfg.step_cut_factor
            if step < cfg.min_step:
                return PathStatus.STEP_TOO_SMALL, z, steps, t
            continue
        z, t = corrected, t_new
        if np.linalg.norm(z) > DIVERGENCE_NORM:
            return PathStatus.DIVERGED, z, steps, t
        streak += 1
        if streak >= cfg.successes_before_increase:
            step = min(step * cfg.step_increase_factor, cfg.max_step)
            streak = 0
    return PathStatus.SUCCESS, z, steps, 1.0


def track(h: Homotopy, start, cfg: TrackerConfig | None = None) -> PathResult:
    """Follow the solution through ``start`` along every segment of ``h``.

    Explicit Euler predictor on the Davidenko equation, Newton corrector at
    the new ``t``, step halving on corrector failure and doubling after a
    run of successes.  Raises :class:`TrackerPreconditionError` if ``start``
    is not a regular solution at the beginning of the path.
    """
    cfg = cfg or TrackerConfig()
    z = np.array(start, dtype=complex).ravel()
    if z.shape[0] != h.num_unknowns:
        raise TrackerPreconditionError(f"start has {z.shape[0]} coordinates, expected {h.num_unknowns}")
    p0 = h.params_at(0, 0.0)
    values, jz, _ = h.evaluate_full(z, p0)
    res0 = float(np.linalg.norm(values))
    if not res0 <= cfg.newton_tol * (1.0 + np.linalg.norm(z)):
        raise TrackerPreconditionError(f"start residual {res0:.3e} exceeds tolerance")
    if _cond(jz) > SINGULAR_COND:
        raise TrackerPreconditionError("start point is singular")

    total_steps = 0
    for seg in range(len(h.segments)):
        status, z, steps, t = _track_segment(h, seg, z, cfg)
        total_steps += steps
        if status is not PathStatus.SUCCESS:
            values, jz, _ = h.evaluate_full(z, h.params_at(seg, t))
            return PathResult(status, z, float(np.linalg.norm(values)), total_steps, _cond(jz), seg + t)

    end_params = h.params_at(len(h.segments) - 1, 1.0)
    z, res, cond = newton_polish(h, z, end_params, tol=cfg.endpoint_tol * 1e-2)
    t_end = float(len(h.segments))
    if cond > SINGULAR_COND:
        return PathResult(PathStatus.SINGULAR_ENDPOINT, z, res, total_steps, cond, t_end)
    if not res <= cfg.endpoint_tol * (1.0 + np.linalg.norm(z)):
        return PathResult(PathStatus.SINGULAR_ENDPOINT, z, res, total_steps, cond, t_end,
                          "endpoint residual not reached")
    return PathResult(PathStatus.SUCCESS, z, res, total_steps, cond, t_end)


def _track_or_reject(h: Homotopy, start, cfg: TrackerConfig) -> PathResult:
    try:
        return track(h, start, cfg)
    except TrackerPreconditionError as exc:
        z = np.array(start, dtype=complex).ravel()
        return PathResult(PathStatus.REJECTED, z, np.nan, 0, np.nan, 0.0, str(exc))


def track_many(h: Homotopy, starts, cfg: TrackerConfig | None = None, threads: int = 1) -> list[PathResult]:
    """Track each start independently; results come back in input order."""
    cfg = cfg or TrackerConfig()
    starts = list(starts)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda s: _track_or_reject(h, s, cfg), starts))
    return [_track_or_reject(h, s, cfg) for s in starts]


# ---------------------------------------------------------------------------
# total-degree oracle
# ---------------------------------------------------------------------------


def _homogenize(p: Polynomial, slot_map: Sequence[int], hom_slot: int, num_vars: int, degree: int) -> Polynomial:
    terms = []
    for exps, c in p.terms:
        new = [0] * num_vars
        for i, k in enumerate(exps):
            new[slot_map[i]] += k
        new[hom_slot] += degree - sum(exps)
        terms.append((tuple(new), c))
    return Polynomial(num_vars, tuple(terms))


def total_degree_solve(
    system: PolySystem,
    rng=None,
    cfg: TrackerConfig | None = None,
    dedup_tol: float = 1e-6,
    max_unknowns: int = 6,
    max_paths: int = 200,
) -> SolutionSet:
    """All finite nonsingular solutions of a square, parameter-free system.

    Tracks the ``prod(deg f_i)`` paths of ``z_i^d_i - r_i`` with the gamma
    trick, working in homogeneous coordinates on a random affine patch so
    paths heading to infinity stay bounded.  Intended as an independent
    check on small systems only.

    ``info`` on the returned set records path counts; ``info["flagged"]``
    is True when more than 20% of the paths stopped before reaching the end.
    """
    if system.parameter_slots:
        raise ValueError("bind the parameters first")
    if not system.is_square:
        raise ValueError("total_degree_solve needs a square system")
    n = len(system.unknown_slots)
    if n > max_unknowns:
        raise ValueError(f"{n} unknowns exceeds the oracle limit of {max_unknowns}")
    degrees = [p.degree for p in system.polynomials]
    bezout = int(np.prod(degrees)) if degrees else 1
    if bezout > max_paths:
        raise ValueError(f"Bezout number {bezout} exceeds the oracle limit of {max_paths}")
    if any(d == 0 for d in degrees):
        raise ValueError("constant polynomial in the system")

    rng = as_rng(rng)
    cfg = cfg or TrackerConfig()
    # slots: 0 = homogenizing variable, 1..n = unknowns, n+1 = path parameter s
    nv = n + 2
    s_slot = n + 1
    slot_map = [0] * system.num_vars
    for j, slot in enumerate(system.unknown_slots):
        slot_map[slot] = j + 1
    gamma = np.exp(2j * np.pi * rng.random())
    r = np.exp(2j * np.pi * rng.random(n)) * (0.5 + rng.random(n))
    patch_coeffs = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    s = Polynomial.variable(nv, s_slot)
    polys = []
    for i, (p, d) in enumerate(zip(system.polynomials, degrees)):
        target = _homogenize(p, slot_map, 0, nv, d)
        zi = Polynomial.variable(nv, i + 1)
        z0 = Polynomial.variable(nv, 0)
        start = (zi ** d - r[i] * z0 ** d) * gamma
        polys.append(start + s * (target - start))
    patch = sum((patch_coeffs[j] * Polynomial.variable(nv, j) for j in range(n + 1)),
                Polynomial.constant(nv, 0.0)) - 1.0
    polys.append(patch)
    names = ["_z0"] + [system.variable_names[s_] for s_ in system.unknown_slots] + ["_s"]
    hsys = PolySystem(tuple(polys), tuple(names), tuple(range(n + 1)), (s_slot,))
    h = Homotopy(hsys, [[0.0], [1.0]])

    roots = [r[i] ** (1.0 / d) * np.exp(2j * np.pi * np.arange(d) / d) for i, d in enumerate(degrees)]
    starts = []
    for combo in itertools.product(*roots):
        w = np.concatenate([[1.0], combo]).astype(complex)
        starts.append(w / (patch_coeffs @ w))

    results = track_many(h, starts, cfg)
    out = SolutionSet(n, dedup_tol)
    target_h = _FixedSystem(system)
    stopped_early = 0
    for res in results:
        if res.status in (PathStatus.STEP_TOO_SMALL, PathStatus.DIVERGED) and res.t_final < 0.9:
            stopped_early += 1
        if res.status not in (PathStatus.SUCCESS, PathStatus.SINGULAR_ENDPOINT, PathStatus.STEP_TOO_SMALL):
            continue
        w = res.endpoint
        if abs(w[0]) <= 1e-8 * np.linalg.norm(w):
            continue
        x = w[1:] / w[0]
        x, resid, cond = target_h.polish(x)
        if cond > SINGULAR_COND or not resid <= cfg.endpoint_tol * (1 + np.linalg.norm(x)):
            continue
        out.add(x, resid)
    out.info = {
        "paths": len(starts),
        "statuses": [r.status.value for r in results],
        "stopped_early": stopped_early,
        "flagged": stopped_early > 0.2 * len(starts),
    }
    if out.info["flagged"]:
        log.warning("total_degree_solve: %d of %d paths stopped early", stopped_early, len(starts))
    return out


class _FixedSystem:
    """Newton refinement on a parameter-free square system."""

    def __init__(self, system: PolySystem):
        self.system = system
        self._unknowns = np.array(system.unknown_slots, dtype=np.intp)

    def _full(self, x: np.ndarray) -> np.ndarray:
        w = np.empty(self.system.num_vars, dtype=complex)
        w[self._unknowns] = x
        return w

    def polish(self, x, iters: int = 10):
        x = np.array(x, dtype=complex)
        kernel = self.system.compiled
        for _ in range(iters):
            values, jac = kernel.evaluate_with_jacobian(self._full(x))
            jz = jac[:, self._unknowns]
            try:
                dx = np.linalg.solve(jz, -values)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(dx)):
                break
            x = x + dx
            if np.linalg.norm(dx) <= 1e-15 * (1 + np.linalg.norm(x)):
                break
        values, jac = kernel.evaluate_with_jacobian(self._full(x))
        return x, float(np.linalg.norm(values)), _cond(jac[:, self._unknowns])
