"""Finding a first critical point.

A random point is pulled onto the model by a cheater's homotopy, then a
gradient-descent homotopy deforms the Lagrange residual at that point to zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .critsys import CriticalSystem, Model, ObjectiveKind, critical_conditions_residual, on_original_model
from .pathtrack import Homotopy, TrackerConfig, as_rng, newton_polish, track
from .polycore import Polynomial, PolySystem, differentiate

__all__ = [
    "SeedResult",
    "SeedingError",
    "point_on_model",
    "gradient_descent_start",
    "pullback_start",
    "find_seed",
]

log = logging.getLogger(__name__)

RETRY_BUDGET = 5
U_PERTURBATION = 1e-3


class SeedingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeedResult:
    x_star: np.ndarray
    lambda_patch: np.ndarray
    lambda_chart: np.ndarray
    u: np.ndarray
    residual: float
    attempts: int = 1

    @property
    def z(self) -> np.ndarray:
        """Start vector ``(x, lam)`` for the critical system."""
        return np.concatenate([self.x_star, self.lambda_chart])


def _complex_normal(rng, size) -> np.ndarray:
    return (rng.normal(size=size) + 1j * rng.normal(size=size)) / np.sqrt(2)


def _cheater_system(model: Model) -> PolySystem:
    """Slots: ``x`` (n), then parameters ``alpha`` (k), slice matrix (d*n), slice offsets (d)."""
    n, k = model.dimension, model.codim
    d = n - k
    nv = n + k + d * n + d
    slot_map = [0] * model.original.num_vars
    for i, s in enumerate(model.original.unknown_slots):
        slot_map[s] = i
    polys = []
    for j, f in enumerate(model.normalized):
        polys.append(f.embed(nv, slot_map) - Polynomial.variable(nv, n + j))
    for r in range(d):
        row = -Polynomial.variable(nv, n + k + d * n + r)
        for i in range(n):
            row = row + Polynomial.variable(nv, n + k + r * n + i) * Polynomial.variable(nv, i)
        polys.append(row)
    names = [f"x{i}" for i in range(n)] + [f"p{i}" for i in range(nv - n)]
    return PolySystem(tuple(polys), tuple(names), tuple(range(n)), tuple(range(n, nv)))


def point_on_model(model: Model, rng=None, x_hat=None, cfg: TrackerConfig | None = None) -> np.ndarray:
    """Track a random point onto the model with ``F(x) - (1 - t) F(x_hat)``.

    The system is squared up by an affine slice through ``x_hat`` of
    dimension ``n - k``, which moves to a fresh random slice along the way.
    """
    rng = as_rng(rng)
    n, k = model.dimension, model.codim
    d = n - k
    system = _cheater_system(model)
    equations = model.normalized
    for attempt in range(RETRY_BUDGET):
        if x_hat is not None and attempt == 0:
            start = np.asarray(x_hat, dtype=complex).ravel()
            if start.shape[0] != n:
                raise ValueError(f"x_hat must have {n} coordinates")
        else:
            start = _complex_normal(rng, n)
        alpha = np.array([f(start) for f in equations], dtype=complex)
        a1, a2 = _complex_normal(rng, (d, n)), _complex_normal(rng, (d, n))
        c2 = _complex_normal(rng, d)
        p0 = np.concatenate([alpha, a1.ravel(), a1 @ start])
        p1 = np.concatenate([np.zeros(k), a2.ravel(), c2])
        try:
            result = track(Homotopy(system, [p0, p1]), start, cfg)
        except ValueError as exc:
            log.debug("cheater homotopy rejected its start: %s", exc)
            continue
        x = result.endpoint
        if result.ok and model.residual(x) <= 1e-10 * (1 + np.linalg.norm(x)):
            return x
        log.debug("cheater homotopy attempt %d: %s", attempt, result.status.value)
    raise SeedingError(f"could not reach the model after {RETRY_BUDGET} attempts")


def _descent_system(cs: CriticalSystem, u: np.ndarray, a: np.ndarray, gradient_k: np.ndarray) -> PolySystem:
    """``H^a_K``: unknowns ``x`` (n) and ``lam_0..lam_k``; parameter ``c`` scales ``K``.

    Likelihood rows are multiplied by ``x_i`` like the critical system's.
    """
    n, k = cs.n, cs.k
    nv = n + k + 2
    c_slot = n + k + 1
    slot_map = [0] * cs.model.original.num_vars
    for i, s in enumerate(cs.model.original.unknown_slots):
        slot_map[s] = i
    fs = [f.embed(nv, slot_map) for f in cs.model.normalized]
    x = [Polynomial.variable(nv, i) for i in range(n)]
    lam = [Polynomial.variable(nv, n + j) for j in range(k + 1)]
    c = Polynomial.variable(nv, c_slot)
    polys = list(fs)
    for i in range(n):
        combo = Polynomial.constant(nv, 0.0)
        for j in range(k):
            combo = combo + lam[j + 1] * differentiate(fs[j], i)
        if cs.objective.kind is ObjectiveKind.EUCLIDEAN:
            polys.append(lam[0] * (x[i] - u[i]) + combo - c * gradient_k[i])
        else:
            polys.append(lam[0] * u[i] + x[i] * combo - c * x[i] * gradient_k[i])
    patch = lam[0] - a[0]
    for j in range(k):
        patch = patch + a[j + 1] * lam[j + 1]
    polys.append(patch)
    names = [f"x{i}" for i in range(n)] + [f"l{j}" for j in range(k + 1)] + ["c"]
    return PolySystem(tuple(polys), tuple(names), tuple(range(n + k + 1)), (c_slot,))


def _random_patch(rng, k: int) -> np.ndarray:
    return rng.uniform(0.5, 1.5, size=k + 1) * rng.choice([-1.0, 1.0], size=k + 1)


def gradient_descent_start(
    cs: CriticalSystem,
    x0,
    u,
    rng=None,
    cfg: TrackerConfig | None = None,
) -> SeedResult:
    """Deform ``lam_0 grad Psi + sum lam_j grad f_j = (1 - t) K`` from ``t = 0`` to ``1``.

    ``K = a_0 grad Psi(x0)`` so that ``(x0, a_0, 0, ..., 0)`` solves the
    patched system at the start.  Raises :class:`SeedingError` if the path
    fails or ends with ``lam_0`` numerically zero.
    """
    rng = as_rng(rng)
    x0 = np.asarray(x0, dtype=complex).ravel()
    u = np.asarray(u, dtype=complex).ravel()
    if cs.model.residual(x0) > 1e-10 * (1 + np.linalg.norm(x0)):
        raise ValueError("x0 is not on the model")
    a = _random_patch(rng, cs.k)
    gradient_k = a[0] * cs.objective.gradient(x0, u)
    system = _descent_system(cs, u, a, gradient_k)
    start = np.concatenate([x0, [a[0]], np.zeros(cs.k)])
    result = track(Homotopy(system, [[1.0], [0.0]]), start, cfg)
    if not result.ok:
        raise SeedingError(f"gradient-descent path failed: {result.status.value}")
    x_star = result.endpoint[: cs.n]
    lam_patch = result.endpoint[cs.n:]
    if abs(lam_patch[0]) <= 1e-8 * (1 + np.linalg.norm(lam_patch)):
        raise SeedingError("lam_0 vanished at the end of the gradient-descent path")
    return _finish(cs, x_star, lam_patch, u)


def _finish(cs: CriticalSystem, x_star, lam_patch, u, attempts: int = 1) -> SeedResult:
    lam_chart = lam_patch[1:] / lam_patch[0]
    z = np.concatenate([x_star, lam_chart])
    # polish in the lam_0 = 1 chart the monodromy works in
    h = Homotopy(cs.system, [u, u])
    z, res, _ = newton_polish(h, z, u)
    if not res <= 1e-10 * (1 + np.linalg.norm(z) + np.linalg.norm(u)):
        raise SeedingError(f"seed residual {res:.2e} too large")
    return SeedResult(z[: cs.n], lam_patch, z[cs.n:], u, res, attempts)


def pullback_start(cs: CriticalSystem, x0, u, rng=None, cfg: TrackerConfig | None = None) -> SeedResult:
    """Make ``x0`` critical for a parameter ``u0`` and track ``u0 -> u``.

    Random multipliers ``lam`` fix ``u0`` through the (affine or linear)
    dependence of the critical rows on ``u``.
    """
    rng = as_rng(rng)
    x0 = np.asarray(x0, dtype=complex).ravel()
    u = np.asarray(u, dtype=complex).ravel()
    lam = _complex_normal(rng, cs.k) * (1 + np.linalg.norm(u))
    normal = cs.model.jacobian(x0).T @ lam
    if cs.objective.kind is ObjectiveKind.EUCLIDEAN:
        u0 = x0 + normal
    else:
        u0 = -x0 * normal
    z0 = np.concatenate([x0, lam])
    result = track(Homotopy(cs.system, [u0, u]), z0, cfg)
    if not result.ok:
        raise SeedingError(f"parameter path from the pulled-back start failed: {result.status.value}")
    lam_patch = np.concatenate([[1.0], result.endpoint[cs.n:]])
    return _finish(cs, result.endpoint[: cs.n], lam_patch, u)


def _validated(cs: CriticalSystem, seed: SeedResult, u, attempt: int) -> SeedResult:
    if cs.objective.on_forbidden_locus(seed.x_star):
        raise SeedingError("critical point on the forbidden locus")
    if not on_original_model(cs.model, seed.x_star):
        # randomizing an overdetermined model can add junk components
        raise SeedingError("critical point lies on a junk component")
    if critical_conditions_residual(cs.model, cs.objective, seed.x_star, u) > 1e-8:
        raise SeedingError("seed fails the rank condition")
    return SeedResult(seed.x_star, seed.lambda_patch, seed.lambda_chart, u, seed.residual, attempt)


def find_seed(cs: CriticalSystem, u, rng=None, x_hat=None, cfg: TrackerConfig | None = None) -> SeedResult:
    """One verified critical point over ``u``, with retries.

    The gradient-descent homotopy is tried first; after two failures it is
    run at a slightly complex-perturbed ``u`` and the result tracked back.
    If all of those fail, :func:`pullback_start` gets its own retry budget.
    """
    rng = as_rng(rng)
    u = np.asarray(u, dtype=complex).ravel()
    if u.shape[0] != cs.n:
        raise ValueError(f"u must have {cs.n} coordinates")
    last: Exception | None = None
    for attempt in range(1, 2 * RETRY_BUDGET + 1):
        try:
            x0 = point_on_model(cs.model, rng, x_hat if attempt == 1 else None, cfg)
            if cs.objective.on_forbidden_locus(x0):
                raise SeedingError("model point lies on the forbidden locus")
            if not on_original_model(cs.model, x0):
                raise SeedingError("model point lies on a junk component")
            if attempt <= 2:
                seed = gradient_descent_start(cs, x0, u, rng, cfg)
            elif attempt <= RETRY_BUDGET:
                u_pert = u + U_PERTURBATION * _complex_normal(rng, cs.n)
                near = gradient_descent_start(cs, x0, u_pert, rng, cfg)
                back = track(Homotopy(cs.system, [u_pert, u]), near.z, cfg)
                if not back.ok:
                    raise SeedingError("could not return from the perturbed parameters")
                lam_patch = np.concatenate([[1.0], back.endpoint[cs.n:]])
                seed = _finish(cs, back.endpoint[: cs.n], lam_patch, u)
            else:
                seed = pullback_start(cs, x0, u, rng, cfg)
            return _validated(cs, seed, u, attempt)
        except (SeedingError, ValueError) as exc:
            last = exc
            log.debug("seeding attempt %d failed: %s", attempt, exc)
    raise SeedingError(f"seeding failed after {2 * RETRY_BUDGET} attempts: {last}")
