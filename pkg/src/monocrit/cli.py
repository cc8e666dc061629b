"""Command-line front end: ``monocrit solve|degree|trace-check PROBLEM``.

Exit codes: 0 ok, 1 unreadable or malformed input, 2 seeding failed,
3 trace test inconclusive or failed, 4 loop budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .critsys import CriticalSystem, Objective, ObjectiveKind, build_critical_system, randomize_square
from .monodromy import MonodromyConfig, collect_fiber
from .pathtrack import Homotopy, TrackerConfig, newton_polish
from .polycore import ParseError, parse_problem
from .seed import SeedingError, find_seed
from .solutions import SolutionSet
from .tracetest import TraceReport, certify

__all__ = ["RunRequest", "RunReport", "RunError", "run", "main", "REPORT_SCHEMA", "build_parser"]

log = logging.getLogger(__name__)

DEFAULT_SEED = 1
REAL_TOL = 1e-6

EXIT_OK, EXIT_PARSE, EXIT_SEED, EXIT_TRACE, EXIT_BUDGET = 0, 1, 2, 3, 4


class RunError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunRequest:
    problem_path: str
    command: str = "solve"
    u_point: np.ndarray | None = None
    rng_seed: int = DEFAULT_SEED
    solution_bound: int | None = None
    output: str = "text"
    certify: bool = False
    threads: int = 1
    tol_endpoint: float | None = None
    tol_dedup: float | None = None
    fiber_path: str | None = None
    max_loops: int = 100


@dataclass
class PointReport:
    x: np.ndarray
    lam: np.ndarray
    residual: float
    real: bool
    psi: complex

    def to_dict(self) -> dict:
        return {
            "x": _pairs(self.x),
            "lambda": _pairs(self.lam),
            "residual": float(self.residual),
            "real": self.real,
            "psi": [float(self.psi.real), float(self.psi.imag)],
        }


@dataclass
class RunReport:
    command: str
    degree: int
    points: list[PointReport]
    loops_used: int
    trace: TraceReport | None
    seed_used: int
    u: np.ndarray
    termination_reason: str
    objective: str
    monodromy: dict = field(default_factory=dict)
    wall_time: float = 0.0
    exit_code: int = EXIT_OK

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "objective": self.objective,
            "degree": self.degree,
            "points": [p.to_dict() for p in self.points],
            "loops_used": self.loops_used,
            "trace": self.trace.to_dict() if self.trace is not None else None,
            "seed": self.seed_used,
            "u": _pairs(self.u),
            "termination_reason": self.termination_reason,
            "monodromy": self.monodromy,
            "wall_time": self.wall_time,
        }

    def to_text(self) -> str:
        name = "ED" if self.objective == ObjectiveKind.EUCLIDEAN.value else "ML"
        lines = [f"{name} degree: {self.degree}"]
        if self.command == "degree":
            return lines[0]
        lines.append(f"u = ({', '.join(_fmt(c) for c in self.u)})")
        lines.append(f"loops: {self.loops_used} ({self.termination_reason}), seed {self.seed_used}")
        real = [p for p in self.points if p.real]
        lines.append(f"real critical points: {len(real)}")
        for p in self.points:
            tag = "real" if p.real else "    "
            lines.append(f"  {tag} x = ({', '.join(_fmt(c) for c in p.x)})  psi = {_fmt(p.psi)}")
        if self.trace is not None:
            t = self.trace
            lines.append(
                f"trace test: {t.status} (max |second difference| = {t.max_abs:.3g}, tol {t.tol:.3g}, "
                f"{t.curve_point_count} curve points, {t.on_l2_count} over u)"
            )
        return "\n".join(lines)


def _pairs(v) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in np.ravel(np.asarray(v, dtype=complex))]


def _fmt(c: complex) -> str:
    c = complex(c)
    if abs(c.imag) <= REAL_TOL * max(1.0, abs(c.real)):
        return f"{c.real:.6g}"
    return f"{c.real:.6g}{c.imag:+.6g}i"


_PAIR_LIST = {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": [
        "command", "objective", "degree", "points", "loops_used", "trace", "seed", "u",
        "termination_reason", "monodromy", "wall_time",
    ],
    "properties": {
        "command": {"enum": ["solve", "degree", "trace-check"]},
        "objective": {"enum": ["euclidean", "likelihood"]},
        "degree": {"type": "integer", "minimum": 0},
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "lambda", "residual", "real", "psi"],
                "properties": {
                    "x": _PAIR_LIST,
                    "lambda": _PAIR_LIST,
                    "residual": {"type": "number", "minimum": 0},
                    "real": {"type": "boolean"},
                    "psi": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "loops_used": {"type": "integer", "minimum": 0},
        "trace": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": [
                        "traces", "second_difference", "max_abs", "tol", "passed", "status",
                        "curve_point_count", "on_l2_count",
                    ],
                    "properties": {
                        "traces": {"type": "array", "items": _PAIR_LIST, "minItems": 3, "maxItems": 3},
                        "second_difference": _PAIR_LIST,
                        "max_abs": {"type": "number"},
                        "tol": {"type": "number"},
                        "passed": {"type": "boolean"},
                        "status": {"enum": ["passed", "failed", "inconclusive"]},
                        "curve_point_count": {"type": "integer", "minimum": 0},
                        "on_l2_count": {"type": "integer", "minimum": 0},
                    },
                },
            ]
        },
        "seed": {"type": "integer"},
        "u": _PAIR_LIST,
        "termination_reason": {"type": "string"},
        "monodromy": {
            "type": "object",
            "additionalProperties": False,
            "required": ["loops_run", "set_size_history", "new_points_per_loop", "path_failures", "termination_reason"],
            "properties": {
                "loops_run": {"type": "integer"},
                "set_size_history": {"type": "array", "items": {"type": "integer"}},
                "new_points_per_loop": {"type": "array", "items": {"type": "integer"}},
                "path_failures": {"type": "integer"},
                "termination_reason": {"type": "string"},
            },
        },
        "wall_time": {"type": "number", "minimum": 0},
    },
}


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise RunError(f"{path}: {exc.strerror or exc}", EXIT_PARSE) from None
    try:
        problem = parse_problem(text)
    except ParseError as exc:
        raise RunError(f"{path}:{exc.line}:{exc.column}: {exc.message}", EXIT_PARSE) from None
    if problem.objective is None:
        raise RunError(f"{path}: no 'objective' declared", EXIT_PARSE)
    if problem.system.parameter_slots:
        raise RunError(f"{path}: model equations must not use parameters", EXIT_PARSE)
    return problem


def _critical_system(problem, rng) -> CriticalSystem:
    try:
        model = randomize_square(problem.system, problem.codim, rng=rng)
    except ValueError as exc:
        raise RunError(str(exc), EXIT_PARSE) from None
    return build_critical_system(model, Objective(problem.objective, model.dimension))


def _default_u(cs: CriticalSystem, rng) -> np.ndarray:
    scale = 1.0 + max((p.max_coeff() for p in cs.model.original.polynomials), default=0.0)
    return rng.normal(size=cs.n) * scale


def parse_vector(text: str) -> np.ndarray:
    """``"1,2.5,3-1j"`` -> complex array."""
    try:
        return np.array([complex(s.strip().replace(" ", "").replace("i", "j")) for s in text.split(",")])
    except ValueError:
        raise RunError(f"cannot parse vector {text!r}", EXIT_PARSE) from None


def _real_polish(cs: CriticalSystem, z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Snap a numerically real point to the real system; keeps ``z`` if that fails."""
    if np.max(np.abs(u.imag), initial=0.0) > 0:
        return z
    h = Homotopy(cs.system, [u, u])
    polished, res, _ = newton_polish(h, z.real.astype(complex), u.real.astype(complex))
    if res <= 1e-8 * (1 + np.linalg.norm(polished)) and np.max(np.abs(polished - z)) <= 1e-6:
        return polished.real.astype(complex)
    return z


def _point_reports(cs: CriticalSystem, fiber: SolutionSet, u: np.ndarray) -> list[PointReport]:
    h = Homotopy(cs.system, [u, u])
    reports = []
    for p in fiber:
        z = p.z
        real = bool(np.max(np.abs(p.x.imag), initial=0.0) <= REAL_TOL)
        if real:
            z = _real_polish(cs, z, u)
        x, lam = z[: cs.n], z[cs.n:]
        res = h.residual(z)
        psi = cs.objective.value(x, u) if not cs.objective.on_forbidden_locus(x) else complex(np.nan)
        reports.append(PointReport(x, cs.user_lambda(lam), res, real, psi))

    # real points first, best objective value first; then the rest in a fixed order
    sign = 1.0 if cs.objective.kind is ObjectiveKind.EUCLIDEAN else -1.0
    real = sorted((r for r in reports if r.real), key=lambda r: sign * r.psi.real)
    rest = sorted((r for r in reports if not r.real), key=lambda r: tuple(np.r_[r.x.real, r.x.imag].round(8)))
    return real + rest


def _fiber_from_json(cs: CriticalSystem, path: str, u: np.ndarray | None):
    """Rebuild ``(x, lam)`` points from a ``solve --json`` report.

    Multipliers are recomputed from ``x`` because they depend on the random
    squaring of the model, which may differ from the run that wrote the file.
    """
    try:
        data = json.loads(Path(path).read_text())
        xs = [np.array([complex(a, b) for a, b in pt["x"]]) for pt in data["points"]]
        file_u = np.array([complex(a, b) for a, b in data["u"]])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise RunError(f"{path}: not a usable fiber file ({exc})", EXIT_PARSE) from None
    u = file_u if u is None else u
    if u.shape[0] != cs.n or any(x.shape[0] != cs.n for x in xs):
        raise RunError(f"{path}: dimensions do not match the problem", EXIT_PARSE)
    h = Homotopy(cs.system, [u, u])
    fiber = SolutionSet(cs.n)
    for x in xs:
        jac = cs.model.jacobian(x)
        grad = cs.objective.gradient(x, u) if cs.objective.kind is ObjectiveKind.EUCLIDEAN else u / x
        lam, *_ = np.linalg.lstsq(jac.T, -grad, rcond=None)
        z, res, _ = newton_polish(h, np.concatenate([x, lam]), u)
        if not res <= 1e-8 * (1 + np.linalg.norm(z)):
            raise RunError(f"{path}: point {np.round(x, 6)} is not critical for this u", EXIT_PARSE)
        fiber.add(z, res)
    return fiber, u


def run(req: RunRequest) -> RunReport:
    """Execute one request; raises :class:`RunError` for exit codes 1 and 2."""
    start = time.perf_counter()
    if req.command not in ("solve", "degree", "trace-check"):
        raise RunError(f"unknown command {req.command!r}", EXIT_PARSE)
    problem = _load(req.problem_path)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(req.rng_seed).spawn(5)]
    cs = _critical_system(problem, streams[0])

    tcfg = TrackerConfig() if req.tol_endpoint is None else TrackerConfig(endpoint_tol=req.tol_endpoint)
    mcfg = MonodromyConfig(
        max_loops=req.max_loops,
        solution_bound=req.solution_bound,
        rng_seed=req.rng_seed,
        dedup_tol=1e-6 if req.tol_dedup is None else req.tol_dedup,
        threads=req.threads,
    )

    u = None if req.u_point is None else np.asarray(req.u_point, dtype=complex).ravel()
    if u is not None and u.shape[0] != cs.n:
        raise RunError(f"--u has {u.shape[0]} entries, the model has {cs.n} variables", EXIT_PARSE)

    trace = None
    if req.command == "trace-check":
        if req.fiber_path is None:
            raise RunError("trace-check needs --fiber", EXIT_PARSE)
        fiber, u = _fiber_from_json(cs, req.fiber_path, u)
        result = certify(cs, fiber, u, mcfg, tcfg, streams[3], threads=req.threads)
        trace, fiber = result.report, result.fiber
        loops, termination, diag = result.collection.loops, result.collection.termination, result.collection.to_dict()
    else:
        if u is None:
            u = _default_u(cs, streams[1]).astype(complex)
        try:
            seed = find_seed(cs, u, rng=streams[2], cfg=tcfg)
        except SeedingError as exc:
            raise RunError(f"seeding failed: {exc}", EXIT_SEED) from None
        fr = collect_fiber(cs, seed, mcfg, tcfg, rng=streams[3])
        fiber, loops, termination, diag = fr.solutions, fr.loops, fr.termination, fr.to_dict()
        if req.certify:
            result = certify(cs, fiber, u, mcfg, tcfg, streams[4], threads=req.threads)
            trace, fiber = result.report, result.fiber

    points = _point_reports(cs, fiber, u)
    code = EXIT_OK
    if trace is not None and not trace.passed:
        code = EXIT_TRACE
    elif termination == "max_loops" and trace is None:
        code = EXIT_BUDGET
    return RunReport(
        command=req.command,
        degree=len(points),
        points=points,
        loops_used=loops,
        trace=trace,
        seed_used=req.rng_seed,
        u=u,
        termination_reason=termination,
        objective=cs.objective.kind.value,
        monodromy=diag,
        wall_time=time.perf_counter() - start,
        exit_code=code,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monocrit", description="Critical points of ED and likelihood objectives.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "compute all critical points over u"),
        ("degree", "report only the number of critical points"),
        ("trace-check", "run the trace test on a fiber written by 'solve --json'"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("problem", help="problem file")
        p.add_argument("--u", help="comma-separated parameter vector (complex entries like 1+2j allowed)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--bound", type=int, default=None, help="stop once this many points are known")
        p.add_argument("--certify", action="store_true", help="run the trace test on the result")
        p.add_argument("--json", action="store_true", help="print a JSON report")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--tol-endpoint", type=float, default=None)
        p.add_argument("--tol-dedup", type=float, default=None)
        p.add_argument("--max-loops", type=int, default=100)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "trace-check":
            p.add_argument("--fiber", required=True, help="JSON report from 'solve --json'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        req = RunRequest(
            problem_path=args.problem,
            command=args.command,
            u_point=None if args.u is None else parse_vector(args.u),
            rng_seed=args.seed,
            solution_bound=args.bound,
            output="json" if args.json else "text",
            certify=args.certify or args.command == "trace-check",
            threads=max(1, args.threads),
            tol_endpoint=args.tol_endpoint,
            tol_dedup=args.tol_dedup,
            fiber_path=getattr(args, "fiber", None),
            max_loops=args.max_loops,
        )
        report = run(req)
    except RunError as exc:
        print(f"monocrit: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"monocrit: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if req.output == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text())
    if report.exit_code == EXIT_TRACE:
        print("monocrit: trace test did not pass; the point set may be incomplete", file=sys.stderr)
    elif report.exit_code == EXIT_BUDGET:
        print("monocrit: loop budget exhausted before the point set settled", file=sys.stderr)
    return report.exit_code
