"""Lagrange critical systems for Euclidean-distance and likelihood objectives."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .pathtrack import as_rng
from .polycore import Polynomial, PolySystem, differentiate, evaluate
from .solutions import SolutionSet

__all__ = [
    "ObjectiveKind",
    "Objective",
    "Model",
    "CriticalSystem",
    "randomize_square",
    "build_critical_system",
    "critical_conditions_residual",
    "classify_by_component",
    "on_original_model",
    "tangent_orthogonality",
    "is_singular_point",
    "random_disk_coeffs",
]

log = logging.getLogger(__name__)

FORBIDDEN_TOL = 1e-8


class ObjectiveKind(str, Enum):
    EUCLIDEAN = "euclidean"
    LIKELIHOOD = "likelihood"


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    dimension: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))

    def gradient(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        u = np.asarray(u, dtype=complex)
        if self.kind is ObjectiveKind.EUCLIDEAN:
            return x - u
        if self.on_forbidden_locus(x):
            raise ValueError("x lies on a coordinate hyperplane where the likelihood gradient is undefined")
        return u / x

    def on_forbidden_locus(self, x, tol: float = FORBIDDEN_TOL) -> bool:
        """True when some coordinate of ``x`` is within ``tol`` of zero (likelihood only)."""
        if self.kind is ObjectiveKind.EUCLIDEAN:
            return False
        return bool(np.min(np.abs(np.asarray(x, dtype=complex)), initial=np.inf) <= tol)

    def value(self, x, u) -> complex:
        """Squared distance, or the log-likelihood ``sum u_i log x_i``."""
        x = np.asarray(x, dtype=complex)
        u = np.asarray(u, dtype=complex)
        if self.kind is ObjectiveKind.EUCLIDEAN:
            return complex(np.sum((x - u) ** 2))
        return complex(np.sum(u * np.log(x)))


@dataclass(frozen=True)
class Model:
    """The model equations, their square randomization and normalization scales.

    ``squared[i] = sum_j randomizer[i, j] * original[j]``; ``scales[i]`` is
    the max coefficient magnitude of ``squared[i]``.
    """

    original: PolySystem
    codim: int
    squared: PolySystem
    randomizer: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.original.unknown_slots)

    @property
    def scales(self) -> np.ndarray:
        return np.array([p.max_coeff() or 1.0 for p in self.squared.polynomials])

    @property
    def normalized(self) -> tuple[Polynomial, ...]:
        return tuple(p.scale(1.0 / s) for p, s in zip(self.squared.polynomials, self.scales))

    def residual(self, x) -> float:
        """Max-norm of the squared system at ``x``."""
        vals = [evaluate(p, x) for p in self.normalized]
        return float(max(map(abs, vals), default=0.0))

    def jacobian(self, x, normalized: bool = True) -> np.ndarray:
        """k x n Jacobian of the squared equations at ``x``."""
        polys = self.normalized if normalized else self.squared.polynomials
        return np.array(
            [[evaluate(differentiate(p, i), x) for i in range(self.dimension)] for p in polys],
            dtype=complex,
        ).reshape(len(polys), self.dimension)


def random_disk_coeffs(rng, shape, inner: float = 0.1) -> np.ndarray:
    """Uniform samples from the complex unit disk minus the disk of radius ``inner``."""
    radius = np.sqrt(rng.uniform(inner ** 2, 1.0, size=shape))
    angle = rng.uniform(0.0, 2 * np.pi, size=shape)
    return radius * np.exp(1j * angle)


def _check_model_system(original: PolySystem) -> None:
    if original.parameter_slots:
        raise ValueError("model equations must not involve parameters")


def randomize_square(original: PolySystem, codim: int | None = None, coeffs=None, rng=None) -> Model:
    """Replace ``m`` model equations by ``codim`` random linear combinations.

    With ``codim == m`` and no ``coeffs`` the equations are kept as they are.
    """
    _check_model_system(original)
    m = len(original)
    codim = m if codim is None else int(codim)
    if not 1 <= codim <= m:
        raise ValueError(f"codim {codim} must be between 1 and the number of equations {m}")
    if coeffs is None:
        if codim == m:
            coeffs = np.eye(m, dtype=complex)
        else:
            coeffs = random_disk_coeffs(as_rng(rng), (codim, m))
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (codim, m):
        raise ValueError(f"randomizer must be {codim}x{m}, got {coeffs.shape}")
    if np.linalg.matrix_rank(coeffs) < codim:
        raise ValueError("randomizer matrix is rank deficient")
    nv = original.num_vars
    squared = []
    for row in coeffs:
        acc = Polynomial.constant(nv, 0.0)
        for c, p in zip(row, original.polynomials):
            if c != 0:
                acc = acc + p.scale(c)
        squared.append(acc)
    sq = PolySystem(tuple(squared), original.variable_names, original.unknown_slots, ())
    return Model(original, codim, sq, coeffs)


@dataclass(frozen=True)
class CriticalSystem:
    """Square Lagrange system in ``(x, lam)`` with parameters ``u``.

    Slot layout: ``x`` in ``0..n-1``, ``lam`` in ``n..n+k-1``, ``u`` in
    ``n+k..2n+k-1``.  Multipliers refer to the normalized squared equations;
    :meth:`user_lambda` rescales them to the equations as written.
    """

    model: Model
    objective: Objective
    system: PolySystem
    patch: np.ndarray | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.objective.dimension

    @property
    def k(self) -> int:
        return self.model.codim

    @property
    def num_unknowns(self) -> int:
        return self.n + self.k

    @property
    def x_slots(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def lambda_slots(self) -> tuple[int, ...]:
        return tuple(range(self.n, self.n + self.k))

    @property
    def u_slots(self) -> tuple[int, ...]:
        return tuple(range(self.n + self.k, 2 * self.n + self.k))

    def evaluate(self, z, u) -> np.ndarray:
        w = np.concatenate([np.asarray(z, dtype=complex), np.asarray(u, dtype=complex)])
        return self.system.compiled.evaluate(w)

    def residual(self, z, u) -> float:
        return float(np.linalg.norm(self.evaluate(z, u)))

    def user_lambda(self, lam) -> np.ndarray:
        """Multipliers for the squared equations before normalization."""
        return np.asarray(lam, dtype=complex) / self.model.scales

    def internal_lambda(self, lam) -> np.ndarray:
        return np.asarray(lam, dtype=complex) * self.model.scales

    def bound(self, u) -> PolySystem:
        """The parameter-free system at ``u``."""
        return self.system.bind(np.asarray(u, dtype=complex))


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name = "_" + name
    taken.add(name)
    return name


def build_critical_system(model: Model, objective: Objective) -> CriticalSystem:
    """Assemble ``F(x) = 0`` and the multiplier rows in the chart ``lam0 = 1``.

    Euclidean rows are ``x_i - u_i + sum_j lam_j df_j/dx_i``; likelihood rows
    are multiplied through by ``x_i``: ``u_i + x_i sum_j lam_j df_j/dx_i``.
    """
    n, k = model.dimension, model.codim
    if objective.dimension != n:
        raise ValueError(f"objective dimension {objective.dimension} != model dimension {n}")
    nv = 2 * n + k
    x_names = [model.original.variable_names[s] for s in model.original.unknown_slots]
    taken = set(x_names)
    lam_names = [_fresh_name(f"lam{j + 1}", taken) for j in range(k)]
    u_names = [_fresh_name(f"u{i + 1}", taken) for i in range(n)]

    slot_map = [0] * model.original.num_vars
    for i, s in enumerate(model.original.unknown_slots):
        slot_map[s] = i
    fs = [p.embed(nv, slot_map) for p in model.normalized]
    x = [Polynomial.variable(nv, i) for i in range(n)]
    lam = [Polynomial.variable(nv, n + j) for j in range(k)]
    u = [Polynomial.variable(nv, n + k + i) for i in range(n)]

    rows = list(fs)
    for i in range(n):
        combo = Polynomial.constant(nv, 0.0)
        for j in range(k):
            combo = combo + lam[j] * differentiate(fs[j], i)
        if objective.kind is ObjectiveKind.EUCLIDEAN:
            rows.append(x[i] - u[i] + combo)
        else:
            rows.append(u[i] + x[i] * combo)
    system = PolySystem(
        tuple(rows), tuple(x_names + lam_names + u_names), tuple(range(n + k)), tuple(range(n + k, nv))
    )
    return CriticalSystem(model, objective, system)


def critical_conditions_residual(model: Model, objective: Objective, x, u) -> float:
    """``max(|F(x)|, sigma_{k+1}[grad Psi, grad f_1, ..., grad f_k])``.

    A small value certifies that ``x`` is on the model and that the extended
    Jacobian has rank at most ``k``.
    """
    x = np.asarray(x, dtype=complex)
    if objective.on_forbidden_locus(x):
        raise ValueError("x lies on the forbidden locus of the likelihood objective")
    grad = objective.gradient(x, u)
    ext = np.column_stack([grad, model.jacobian(x).T])
    sv = np.linalg.svd(ext, compute_uv=False)
    k = model.codim
    sigma = sv[k] if len(sv) > k else 0.0
    return float(max(model.residual(x), sigma))


def classify_by_component(points: SolutionSet, model: Model, tol: float = 1e-8) -> tuple[SolutionSet, SolutionSet]:
    """Split points into those whose ``x`` satisfies every original equation and the rest."""
    on_model = SolutionSet(points.num_x, points.dedup_tol)
    junk = SolutionSet(points.num_x, points.dedup_tol)
    for pt in points:
        target = on_model if on_original_model(model, pt.z[: model.dimension], tol) else junk
        target.points.append(pt)
    return on_model, junk


def on_original_model(model: Model, x, tol: float = 1e-8) -> bool:
    """Whether every unrandomized (normalized) model equation vanishes at ``x``."""
    x = np.asarray(x, dtype=complex)
    bound = tol * (1 + np.linalg.norm(x))
    return all(
        abs(evaluate(p, x)) <= bound * (p.max_coeff() or 1.0) for p in model.original.polynomials
    )


def is_singular_point(model: Model, x, tol: float = 1e-8) -> bool:
    """True when the squared Jacobian at ``x`` has numerical rank below ``codim``."""
    sv = np.linalg.svd(model.jacobian(x), compute_uv=False)
    return bool(sv.size < model.codim or sv[-1] <= tol * max(sv[0], 1.0))


def tangent_orthogonality(model: Model, x, u) -> float:
    """Largest ``|<x - u, v>| / (|x - u| |v|)`` over a basis ``v`` of the tangent space.

    Uses the bilinear pairing, which is the one the Lagrange conditions give
    over the complex numbers.
    """
    x = np.asarray(x, dtype=complex)
    d = x - np.asarray(u, dtype=complex)
    jac = model.jacobian(x)
    _, sv, vh = np.linalg.svd(jac)
    rank = int(np.sum(sv > 1e-8 * max(sv.max(initial=0.0), 1.0)))
    kernel = vh[rank:].conj().T
    if kernel.size == 0:
        return 0.0
    dn = np.linalg.norm(d)
    if dn == 0:
        return 0.0
    return float(max(abs(d @ v) / (dn * np.linalg.norm(v)) for v in kernel.T))
