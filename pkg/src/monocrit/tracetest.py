"""Completeness check for a computed fiber via the trace of a sliced curve.

The critical variety is cut down to a curve by ``n - 1`` linear conditions on
``u``; the family ``l1(x) * l2(u) + t = 0`` then meets the curve in finitely
many points whose coordinate sum is affine-linear in ``t`` exactly when no
point is missing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .critsys import CriticalSystem
from .monodromy import FiberResult, MonodromyConfig, monodromy_collect
from .pathtrack import Homotopy, TrackerConfig, as_rng, track_many
from .polycore import Polynomial, PolySystem
from .solutions import SolutionSet

__all__ = [
    "TraceSetup",
    "TraceCurve",
    "TraceReport",
    "CertifyResult",
    "build_trace_curve",
    "curve_starts",
    "collect_curve_points",
    "t_loop_scale",
    "trace_test",
    "certify",
]

log = logging.getLogger(__name__)

L2_TOL = 1e-8
L1_TOL = 1e-4
TRACE_RTOL = 1e-8


def _complex_normal(rng, size) -> np.ndarray:
    return (rng.normal(size=size) + 1j * rng.normal(size=size)) / np.sqrt(2)


@dataclass(frozen=True)
class TraceSetup:
    """Slicing data around a base parameter ``u0``.

    ``slice_u(u) = slice_matrix @ (u - u0)`` (``n - 1`` rows),
    ``l1(x) = l1_coeffs @ x + l1_const`` and ``l2(u) = l2_coeffs @ (u - u0)``.
    """

    u0: np.ndarray
    slice_matrix: np.ndarray
    l1_coeffs: np.ndarray
    l1_const: complex
    l2_coeffs: np.ndarray
    t_values: tuple = (0.0, 0.1, 0.2)

    def __post_init__(self) -> None:
        u0 = np.array(self.u0, dtype=complex).ravel()
        n = u0.shape[0]
        a = np.array(self.slice_matrix, dtype=complex).reshape(max(n - 1, 0), n)
        l1 = np.array(self.l1_coeffs, dtype=complex).ravel()
        l2 = np.array(self.l2_coeffs, dtype=complex).ravel()
        if l1.shape[0] != n or l2.shape[0] != n:
            raise ValueError(f"l1 and l2 need {n} coefficients")
        t = tuple(complex(v) for v in self.t_values)
        if len(t) != 3:
            raise ValueError("need exactly three t values")
        step = t[1] - t[0]
        if step == 0 or abs((t[2] - t[1]) - step) > 1e-12 * (1 + abs(step)):
            raise ValueError("t values must be distinct and equally spaced")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "slice_matrix", a)
        object.__setattr__(self, "l1_coeffs", l1)
        object.__setattr__(self, "l1_const", complex(self.l1_const))
        object.__setattr__(self, "l2_coeffs", l2)
        object.__setattr__(self, "t_values", t)

    @property
    def n(self) -> int:
        return self.u0.shape[0]

    @classmethod
    def random(cls, u0, rng=None, spacing: float = 0.1) -> "TraceSetup":
        """Gaussian slices; ``t`` steps of ``spacing`` in a random complex direction."""
        rng = as_rng(rng)
        u0 = np.asarray(u0, dtype=complex).ravel()
        n = u0.shape[0]
        s = spacing * np.exp(2j * np.pi * rng.random())
        return cls(
            u0,
            _complex_normal(rng, (n - 1, n)),
            _complex_normal(rng, n),
            complex(_complex_normal(rng, 1)[0]),
            _complex_normal(rng, n),
            (0.0, s, 2 * s),
        )

    def l1(self, x) -> complex:
        return complex(self.l1_coeffs @ np.asarray(x, dtype=complex) + self.l1_const)

    def l2(self, u) -> complex:
        return complex(self.l2_coeffs @ (np.asarray(u, dtype=complex) - self.u0))

    def slice_u(self, u) -> np.ndarray:
        return self.slice_matrix @ (np.asarray(u, dtype=complex) - self.u0)


@dataclass(frozen=True)
class TraceCurve:
    """Square system in ``(x, lam, u)`` with ``t`` as its only parameter."""

    system: PolySystem
    setup: TraceSetup
    n: int
    k: int

    @property
    def keep(self) -> np.ndarray:
        """Indices of the ``x`` and ``u`` coordinates (multipliers are left out of traces)."""
        return np.r_[np.arange(self.n), np.arange(self.n + self.k, 2 * self.n + self.k)]

    def x_of(self, z) -> np.ndarray:
        return np.asarray(z)[: self.n]

    def lam_of(self, z) -> np.ndarray:
        return np.asarray(z)[self.n: self.n + self.k]

    def u_of(self, z) -> np.ndarray:
        return np.asarray(z)[self.n + self.k:]

    def on_l2(self, z) -> bool:
        """True for curve points over ``u0``, i.e. genuine fiber points."""
        return abs(self.setup.l2(self.u_of(z))) <= L2_TOL and abs(self.setup.l1(self.x_of(z))) > L1_TOL


@dataclass
class TraceReport:
    traces: np.ndarray
    second_difference: np.ndarray
    max_abs: float
    tol: float
    passed: bool
    status: str
    curve_point_count: int
    on_l2_count: int
    failures: int = 0

    def to_dict(self) -> dict:
        pair = lambda v: [[float(c.real), float(c.imag)] for c in np.ravel(v)]  # noqa: E731
        return {
            "traces": [pair(row) for row in self.traces],
            "second_difference": pair(self.second_difference),
            "max_abs": self.max_abs,
            "tol": self.tol,
            "passed": self.passed,
            "status": self.status,
            "curve_point_count": self.curve_point_count,
            "on_l2_count": self.on_l2_count,
        }


def _affine(nv: int, coeffs, slots, const: complex = 0.0) -> Polynomial:
    p = Polynomial.constant(nv, const)
    for c, s in zip(coeffs, slots):
        if c != 0:
            p = p + Polynomial.variable(nv, s) * complex(c)
    return p


def build_trace_curve(cs: CriticalSystem, u0, setup: TraceSetup | None = None, rng=None) -> TraceCurve:
    """Promote ``u`` to unknowns and add ``slice_u`` and ``l1(x) l2(u) + t``."""
    u0 = np.asarray(u0, dtype=complex).ravel()
    n, k = cs.n, cs.k
    if u0.shape[0] != n:
        raise ValueError(f"u0 must have {n} coordinates")
    setup = setup or TraceSetup.random(u0, rng)
    if setup.n != n or not np.allclose(setup.u0, u0, rtol=0, atol=1e-12 * (1 + np.linalg.norm(u0))):
        raise ValueError("trace setup was built for a different base point")
    stacked = np.vstack([setup.slice_matrix, setup.l2_coeffs[None, :]])
    if np.linalg.matrix_rank(stacked) < n:
        raise ValueError("degenerate slice: slice_u and l2 do not cut u down to a point")
    if not np.any(setup.l1_coeffs):
        raise ValueError("degenerate slice: l1 is constant")

    nv = 2 * n + k + 1
    t_slot = nv - 1
    polys = [p.embed(nv, list(range(cs.system.num_vars))) for p in cs.system.polynomials]
    x_slots = range(n)
    u_slots = range(n + k, 2 * n + k)
    for row in setup.slice_matrix:
        polys.append(_affine(nv, row, u_slots, -complex(row @ setup.u0)))
    l1 = _affine(nv, setup.l1_coeffs, x_slots, setup.l1_const)
    l2 = _affine(nv, setup.l2_coeffs, u_slots, -complex(setup.l2_coeffs @ setup.u0))
    polys.append(l1 * l2 + Polynomial.variable(nv, t_slot))
    names = tuple(cs.system.variable_names) + ("_t",)
    system = PolySystem(tuple(polys), names, tuple(range(2 * n + k)), (t_slot,))
    return TraceCurve(system, setup, n, k)


def curve_starts(curve: TraceCurve, fiber: SolutionSet) -> SolutionSet:
    """Fiber points ``(x, lam)`` extended by ``u0``; they lie on the curve at ``t = 0``."""
    out = SolutionSet(curve.n, fiber.dedup_tol)
    u0 = curve.setup.u0
    h = Homotopy(curve.system, [[0.0], [0.0]])
    for p in fiber:
        z = np.concatenate([p.z, u0])
        out.add(z, h.residual(z))
    return out


def t_loop_scale(curve: TraceCurve, points: SolutionSet) -> float:
    """Rough size of ``t = -l1(x) l2(u)`` as ``u`` moves by ``1 + |u0|``."""
    setup = curve.setup
    l1_max = max((abs(setup.l1(curve.x_of(p.z))) for p in points), default=1.0)
    return 3.0 * (1.0 + l1_max) * np.linalg.norm(setup.l2_coeffs) * (1.0 + np.linalg.norm(setup.u0))


def collect_curve_points(
    curve: TraceCurve,
    starts: SolutionSet,
    mcfg: MonodromyConfig | None = None,
    tcfg: TrackerConfig | None = None,
    rng=None,
    accept=None,
    done=None,
    loop_scale: float | None = None,
) -> FiberResult:
    """Monodromy in the complex ``t``-plane around ``t = 0``.

    Loop corners default to a spread matched to the size of ``l1(x) l2(u)``
    near the known points, redrawn per loop within a factor of 10 either way
    so that both nearby and distant branch points get encircled.
    """
    if curve.setup.t_values[0] != 0:
        raise ValueError("curve points are collected at t = 0")
    if loop_scale is None:
        base = t_loop_scale(curve, starts)
        loop_scale = lambda rng: base * 10.0 ** rng.uniform(-1.0, 1.0)  # noqa: E731
    return monodromy_collect(
        curve.system, np.zeros(1), starts, mcfg, tcfg, rng=rng, accept=accept, done=done, loop_scale=loop_scale
    )


def trace_test(
    curve,
    points: SolutionSet,
    t_values=None,
    tcfg: TrackerConfig | None = None,
    keep=None,
    threads: int = 1,
) -> TraceReport:
    """Track ``points`` from ``t0`` to ``t1`` and ``t2`` and check the traces are collinear.

    ``curve`` is a :class:`TraceCurve` or any square :class:`PolySystem`
    with a single parameter; for the latter all coordinates enter the trace
    unless ``keep`` selects some.  Any failed path makes the report
    inconclusive.
    """
    if isinstance(curve, TraceCurve):
        system = curve.system
        t_values = curve.setup.t_values if t_values is None else t_values
        keep = curve.keep if keep is None else keep
        on_l2 = sum(curve.on_l2(p.z) for p in points)
    else:
        system = curve
        if t_values is None:
            raise ValueError("t_values are required for a bare system")
        on_l2 = 0
    if len(system.parameter_slots) != 1:
        raise ValueError("the curve system must have exactly one parameter")
    t = [complex(v) for v in t_values]
    if len(t) != 3 or abs((t[2] - t[1]) - (t[1] - t[0])) > 1e-12 * (1 + abs(t[1] - t[0])):
        raise ValueError("need three equally spaced t values")
    keep = np.arange(len(system.unknown_slots)) if keep is None else np.asarray(keep)

    zs = [p.z for p in points]
    width = len(keep)
    traces = np.zeros((3, width), dtype=complex)
    failures = 0
    if zs:
        traces[0] = np.sum([z[keep] for z in zs], axis=0)
        r1 = track_many(Homotopy(system, [[t[0]], [t[1]]]), zs, tcfg, threads)
        r2 = track_many(Homotopy(system, [[t[1]], [t[2]]]), [r.endpoint for r in r1], tcfg, threads)
        failures = sum(not a.ok or not b.ok for a, b in zip(r1, r2))
        traces[1] = np.sum([r.endpoint[keep] for r in r1], axis=0)
        traces[2] = np.sum([r.endpoint[keep] for r in r2], axis=0)
    second = (traces[0] - traces[1]) - (traces[1] - traces[2])
    max_abs = float(np.max(np.abs(second), initial=0.0))
    tol = TRACE_RTOL * (1.0 + float(np.max(np.abs(traces), initial=0.0)))
    passed = failures == 0 and bool(zs) and max_abs <= tol
    if failures:
        status = "inconclusive"
    else:
        status = "passed" if passed else "failed"
    return TraceReport(traces, second, max_abs, tol, passed, status, len(zs), int(on_l2), failures)


@dataclass
class CertifyResult:
    report: TraceReport
    curve: TraceCurve
    curve_points: SolutionSet
    fiber: SolutionSet
    collection: FiberResult
    extra: dict = field(default_factory=dict)


def certify(
    cs: CriticalSystem,
    fiber: SolutionSet,
    u0,
    mcfg: MonodromyConfig | None = None,
    tcfg: TrackerConfig | None = None,
    rng=None,
    setup: TraceSetup | None = None,
    threads: int = 1,
) -> CertifyResult:
    """Grow the curve point set until the trace test passes, then read off the fiber.

    The returned ``fiber`` is made of the curve points on ``l2``; if the
    input fiber was incomplete it comes back larger.
    """
    rng = as_rng(rng)
    mcfg = mcfg or MonodromyConfig()
    tcfg = tcfg or TrackerConfig()
    curve = build_trace_curve(cs, u0, setup, rng)
    starts = curve_starts(curve, fiber)
    n = cs.n

    accept = None
    if cs.objective.kind.value == "likelihood":
        accept = lambda z: not cs.objective.on_forbidden_locus(z[:n])  # noqa: E731

    def done(points: SolutionSet) -> bool:
        return trace_test(curve, points, tcfg=tcfg, threads=threads).passed

    # no bound here: the trace test is the stopping rule
    curve_cfg = MonodromyConfig(
        max_loops=mcfg.max_loops, stall_limit=mcfg.stall_limit, rng_seed=mcfg.rng_seed,
        dedup_tol=mcfg.dedup_tol, threads=threads,
    )
    if done(starts):
        collection = FiberResult(starts, 0, [len(starts)], termination="certified")
    else:
        collection = collect_curve_points(curve, starts, curve_cfg, tcfg, rng, accept, done)
    points = collection.solutions
    report = trace_test(curve, points, tcfg=tcfg, threads=threads)
    if not report.passed and report.status == "failed" and collection.termination in ("stalled", "max_loops"):
        report.status = "inconclusive"

    out = SolutionSet(fiber.num_x, fiber.dedup_tol)
    for p in fiber:
        out.add(p.z, p.residual)
    for p in points:
        if curve.on_l2(p.z):
            out.add(p.z[: n + cs.k], p.residual)
    if len(out) > len(fiber):
        log.info("trace curve exposed %d fiber points missed by monodromy", len(out) - len(fiber))
    return CertifyResult(report, curve, points, out, collection)
