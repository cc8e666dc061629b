"""Sparse multivariate polynomials over the complex numbers.

A :class:`Polynomial` is an immutable, canonical list of ``(exponents,
coefficient)`` terms.  A :class:`PolySystem` groups polynomials that share one
slot space and marks which slots are unknowns and which are parameters.
:class:`CompiledSystem` is the numeric kernel used by the path tracker: it
evaluates all polynomials and all first partials at a point in one pass.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "PolySystem",
    "CompiledSystem",
    "Problem",
    "ParseError",
    "parse_problem",
    "parse_system",
    "parse_polynomial",
    "evaluate",
    "differentiate",
    "jacobian_eval",
    "format_problem",
]

Exponents = tuple[int, ...]


def _grlex_key(exps: Exponents) -> tuple[int, Exponents]:
    return (sum(exps), exps)


@dataclass(frozen=True)
class Polynomial:
    """Canonical sparse polynomial in ``num_vars`` slots.

    Terms are sorted by decreasing graded-lexicographic order of their
    exponent vectors, duplicates are merged and zero coefficients dropped,
    so two polynomials are equal iff their term tuples are equal.
    """

    num_vars: int
    terms: tuple[tuple[Exponents, complex], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[Exponents, complex] = {}
        for exps, coeff in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.num_vars:
                raise ValueError(
                    f"exponent vector {exps} has length {len(exps)}, expected {self.num_vars}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            merged[exps] = merged.get(exps, 0j) + complex(coeff)
        terms = tuple(
            (e, c) for e, c in sorted(merged.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)
            if c != 0
        )
        object.__setattr__(self, "terms", terms)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, num_vars: int, value: complex) -> "Polynomial":
        return cls(num_vars, (((0,) * num_vars, value),))

    @classmethod
    def variable(cls, num_vars: int, slot: int) -> "Polynomial":
        if not 0 <= slot < num_vars:
            raise IndexError(f"slot {slot} out of range for {num_vars} variables")
        exps = [0] * num_vars
        exps[slot] = 1
        return cls(num_vars, ((tuple(exps), 1.0),))

    @classmethod
    def from_dict(cls, num_vars: int, terms: Mapping[Exponents, complex]) -> "Polynomial":
        return cls(num_vars, tuple(terms.items()))

    # -- inspection -------------------------------------------------------

    def as_dict(self) -> dict[Exponents, complex]:
        return dict(self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def max_coeff(self) -> float:
        return max((abs(c) for _, c in self.terms), default=0.0)

    def support(self) -> set[int]:
        """Slots that appear with a positive exponent."""
        return {i for e, _ in self.terms for i, k in enumerate(e) if k > 0}

    # -- algebra ----------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise ValueError("polynomials live in different slot spaces")
            return other
        if isinstance(other, (int, float, complex, np.number, Fraction)):
            return Polynomial.constant(self.num_vars, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.num_vars, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.num_vars, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exponents, complex] = {}
        for ea, ca in self.terms:
            for eb, cb in other.terms:
                e = tuple(a + b for a, b in zip(ea, eb))
                out[e] = out.get(e, 0j) + ca * cb
        return Polynomial.from_dict(self.num_vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.num_vars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, factor: complex) -> "Polynomial":
        return Polynomial(self.num_vars, tuple((e, c * factor) for e, c in self.terms))

    def embed(self, num_vars: int, slot_map: Sequence[int]) -> "Polynomial":
        """Move slot ``i`` to slot ``slot_map[i]`` in a space of ``num_vars`` slots."""
        if len(slot_map) != self.num_vars:
            raise ValueError("slot_map must have one entry per slot")
        terms = []
        for exps, c in self.terms:
            new = [0] * num_vars
            for i, k in enumerate(exps):
                new[slot_map[i]] += k
            terms.append((tuple(new), c))
        return Polynomial(num_vars, tuple(terms))

    def substitute(self, values: Mapping[int, complex]) -> "Polynomial":
        """Bind the slots in ``values`` to numbers; the slot space is unchanged."""
        terms = []
        for exps, c in self.terms:
            new = list(exps)
            for slot, v in values.items():
                if new[slot]:
                    c = c * complex(v) ** new[slot]
                    new[slot] = 0
            terms.append((tuple(new), c))
        return Polynomial(self.num_vars, tuple(terms))

    def drop_slots(self, slots: Iterable[int]) -> "Polynomial":
        """Remove slots that no term uses (call :meth:`substitute` first)."""
        slots = set(slots)
        keep = [i for i in range(self.num_vars) if i not in slots]
        terms = []
        for exps, c in self.terms:
            if any(exps[s] for s in slots):
                raise ValueError("cannot drop a slot that still appears in the polynomial")
            terms.append((tuple(exps[i] for i in keep), c))
        return Polynomial(len(keep), tuple(terms))

    def __call__(self, point) -> complex:
        return evaluate(self, point)

    def to_string(self, names: Sequence[str]) -> str:
        if len(names) != self.num_vars:
            raise ValueError("need one name per slot")
        if not self.terms:
            return "0"
        pieces = []
        for exps, c in self.terms:
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(exps) if k
            )
            coeff = _format_coeff(c)
            sign = "+"
            if coeff.startswith("-"):
                sign, coeff = "-", coeff[1:]
            if mono and coeff == "1":
                body = mono
            elif mono:
                body = f"{coeff}*{mono}"
            else:
                body = coeff
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text


def _format_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return _format_real(c.real)
    if c.real == 0:
        return f"{_format_real(c.imag)}j" if c.imag >= 0 else f"-{_format_real(-c.imag)}j"
    return f"({c.real!r}{c.imag:+}j)"


def evaluate(p: Polynomial, point) -> complex:
    """Evaluate ``p`` at ``point`` with per-call memoized variable powers."""
    x = np.asarray(point, dtype=complex).ravel()
    if x.shape[0] != p.num_vars:
        raise ValueError(f"point has {x.shape[0]} coordinates, polynomial has {p.num_vars} slots")
    powers: dict[tuple[int, int], complex] = {}
    total = 0j
    for exps, c in p.terms:
        term = c
        for i, k in enumerate(exps):
            if k:
                key = (i, k)
                if key not in powers:
                    powers[key] = complex(x[i]) ** k
                term *= powers[key]
        total += term
    return total


def differentiate(p: Polynomial, slot: int) -> Polynomial:
    if not 0 <= slot < p.num_vars:
        raise IndexError(f"slot {slot} out of range for {p.num_vars} variables")
    terms = []
    for exps, c in p.terms:
        k = exps[slot]
        if k:
            new = list(exps)
            new[slot] -= 1
            terms.append((tuple(new), c * k))
    return Polynomial(p.num_vars, tuple(terms))


@dataclass(frozen=True)
class PolySystem:
    """Polynomials sharing one slot space, split into unknowns and parameters."""

    polynomials: tuple[Polynomial, ...]
    variable_names: tuple[str, ...]
    unknown_slots: tuple[int, ...]
    parameter_slots: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "polynomials", tuple(self.polynomials))
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "unknown_slots", tuple(int(s) for s in self.unknown_slots))
        object.__setattr__(self, "parameter_slots", tuple(int(s) for s in self.parameter_slots))
        nv = len(self.variable_names)
        if len(set(self.variable_names)) != nv:
            raise ValueError("variable names must be distinct")
        for p in self.polynomials:
            if p.num_vars != nv:
                raise ValueError("all polynomials must share the system's slot space")
        u, q = set(self.unknown_slots), set(self.parameter_slots)
        if u & q:
            raise ValueError("unknown and parameter slots overlap")
        if any(not 0 <= s < nv for s in u | q):
            raise ValueError("slot index out of range")
        used = set().union(*(p.support() for p in self.polynomials)) if self.polynomials else set()
        if not used <= (u | q):
            names = [self.variable_names[s] for s in sorted(used - u - q)]
            raise ValueError(f"slots {names} are neither unknowns nor parameters")

    @property
    def num_vars(self) -> int:
        return len(self.variable_names)

    def __len__(self) -> int:
        return len(self.polynomials)

    def __iter__(self):
        return iter(self.polynomials)

    def __getitem__(self, i: int) -> Polynomial:
        return self.polynomials[i]

    @property
    def is_square(self) -> bool:
        return len(self.polynomials) == len(self.unknown_slots)

    def slot(self, name: str) -> int:
        return self.variable_names.index(name)

    def bind(self, values: Mapping[int, complex] | Sequence[complex]) -> "PolySystem":
        """Fix parameter slots to numbers and drop them from the slot space.

        ``values`` is either a mapping ``slot -> value`` or a sequence aligned
        with ``parameter_slots``.
        """
        if not isinstance(values, Mapping):
            values = np.asarray(values, dtype=complex).ravel()
            if len(values) != len(self.parameter_slots):
                raise ValueError("need one value per parameter slot")
            values = dict(zip(self.parameter_slots, values))
        gone = set(values)
        keep = [i for i in range(self.num_vars) if i not in gone]
        new_index = {old: new for new, old in enumerate(keep)}
        polys = tuple(p.substitute(values).drop_slots(gone) for p in self.polynomials)
        return PolySystem(
            polys,
            tuple(self.variable_names[i] for i in keep),
            tuple(new_index[s] for s in self.unknown_slots if s not in gone),
            tuple(new_index[s] for s in self.parameter_slots if s not in gone),
        )

    def with_unknowns(self, slots: Sequence[int]) -> "PolySystem":
        """Same polynomials, with ``slots`` promoted from parameters to unknowns."""
        slots = tuple(slots)
        return PolySystem(
            self.polynomials,
            self.variable_names,
            self.unknown_slots + slots,
            tuple(s for s in self.parameter_slots if s not in slots),
        )

    def evaluate(self, point) -> np.ndarray:
        return self.compiled.evaluate(point)

    @cached_property
    def compiled(self) -> "CompiledSystem":
        return CompiledSystem(self.polynomials, self.num_vars)

    def to_string(self) -> str:
        return "\n".join(p.to_string(self.variable_names) for p in self.polynomials)


def jacobian_eval(system: PolySystem, point) -> np.ndarray:
    """Jacobian with rows indexed by unknowns and columns by polynomials.

    ``point`` is either a full slot vector or, for systems without parameter
    slots, the vector of unknowns.
    """
    x = np.asarray(point, dtype=complex).ravel()
    if x.shape[0] != system.num_vars:
        raise ValueError(f"point has {x.shape[0]} coordinates, system has {system.num_vars} slots")
    if not system.polynomials:
        return np.zeros((len(system.unknown_slots), 0), dtype=complex)
    _, jac = system.compiled.evaluate_with_jacobian(x)
    return jac[:, list(system.unknown_slots)].T


class CompiledSystem:
    """Vectorised evaluator for a list of polynomials and their gradients.

    All terms are stacked into one exponent matrix; a per-call table of
    variable powers turns every monomial into a gather plus a product.
    """

    def __init__(self, polynomials: Sequence[Polynomial], num_vars: int):
        self.num_polys = len(polynomials)
        self.num_vars = num_vars
        exps, coeffs, owner = [], [], []
        dexps, dcoeffs, downer = [], [], []
        for j, p in enumerate(polynomials):
            for e, c in p.terms:
                exps.append(e)
                coeffs.append(c)
                owner.append(j)
                for v, k in enumerate(e):
                    if k:
                        de = list(e)
                        de[v] -= 1
                        dexps.append(de)
                        dcoeffs.append(c * k)
                        downer.append(j * num_vars + v)
        self._exps = np.array(exps, dtype=np.intp).reshape(-1, num_vars)
        self._coeffs = np.array(coeffs, dtype=complex)
        self._owner = np.array(owner, dtype=np.intp)
        self._dexps = np.array(dexps, dtype=np.intp).reshape(-1, num_vars)
        self._dcoeffs = np.array(dcoeffs, dtype=complex)
        self._downer = np.array(downer, dtype=np.intp)
        self._max_deg = int(self._exps.max()) if self._exps.size else 0
        self._stride = self._max_deg + 1
        self._gather = self._sparse_index(self._exps)
        self._dgather = self._sparse_index(self._dexps)

    def _sparse_index(self, exps: np.ndarray) -> np.ndarray:
        """Flat power-table indices of each monomial's nonzero factors.

        Rows are padded with index 0, which always holds ``x_0 ** 0 = 1``.
        """
        width = max(1, int((exps > 0).sum(axis=1).max())) if exps.size else 1
        idx = np.zeros((exps.shape[0], width), dtype=np.intp)
        for r, row in enumerate(exps):
            nz = np.flatnonzero(row)
            idx[r, : nz.size] = nz * self._stride + row[nz]
        return idx

    def _power_table(self, x: np.ndarray) -> np.ndarray:
        """Flattened ``table[v * stride + d] = x_v ** d``."""
        table = np.empty((self.num_vars, self._stride), dtype=complex)
        table[:, 0] = 1.0
        for d in range(1, self._stride):
            table[:, d] = table[:, d - 1] * x
        return table.ravel()

    @staticmethod
    def _scatter(values: np.ndarray, owner: np.ndarray, size: int) -> np.ndarray:
        re = np.bincount(owner, weights=values.real, minlength=size)
        im = np.bincount(owner, weights=values.imag, minlength=size)
        return re + 1j * im

    def _check(self, point) -> np.ndarray:
        x = np.asarray(point, dtype=complex).ravel()
        if x.shape[0] != self.num_vars:
            raise ValueError(f"point has {x.shape[0]} coordinates, expected {self.num_vars}")
        return x

    def evaluate(self, point) -> np.ndarray:
        x = self._check(point)
        table = self._power_table(x)
        mono = table[self._gather].prod(axis=1)
        return self._scatter(self._coeffs * mono, self._owner, self.num_polys)

    def evaluate_with_jacobian(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Values (m,) and full Jacobian (m, num_vars) with respect to every slot."""
        x = self._check(point)
        table = self._power_table(x)
        mono = table[self._gather].prod(axis=1)
        values = self._scatter(self._coeffs * mono, self._owner, self.num_polys)
        if self._dexps.shape[0]:
            dmono = table[self._dgather].prod(axis=1)
            flat = self._scatter(self._dcoeffs * dmono, self._downer, self.num_polys * self.num_vars)
        else:
            flat = np.zeros(self.num_polys * self.num_vars, dtype=complex)
        return values, flat.reshape(self.num_polys, self.num_vars)


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    """Problem-file error carrying a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Problem:
    """Parsed problem file: the model system plus its declared metadata."""

    system: PolySystem
    objective: str | None = None
    codim: int | None = None
    source_lines: tuple[int, ...] = field(default=(), compare=False)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_HEADERS = ("vars", "params", "objective", "codim", "model")


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


class _ExprBuilder:
    def __init__(self, names: Sequence[str], line: int, text: str, colmap: list[int]):
        self.index = {n: i for i, n in enumerate(names)}
        self.nv = len(names)
        self.line = line
        self.text = text
        self.colmap = colmap

    def fail(self, msg: str, node: ast.AST | None) -> ParseError:
        col = getattr(node, "col_offset", 0) if node is not None else 0
        col = self.colmap[min(col, len(self.colmap) - 1)] if self.colmap else 0
        return ParseError(msg, self.line, col + 1)

    def const(self, node: ast.AST):
        """Exact value of a constant subexpression, or None if it has variables."""
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
                and not isinstance(node.value, bool):
            v = node.value
            if isinstance(v, float):
                # keep decimal literals exact until the final conversion
                seg = ast.get_source_segment(self.text, node)
                try:
                    return Fraction(seg) if seg else Fraction(v)
                except ValueError:
                    return Fraction(v)
            return v if isinstance(v, complex) else Fraction(v)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self.const(node.operand)
            if v is None:
                return None
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            a, b = self.const(node.left), self.const(node.right)
            if a is None or b is None:
                return None
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if b == 0:
                    raise self.fail("division by zero", node)
                if isinstance(a, Fraction) and isinstance(b, Fraction):
                    return a / b
                return complex(a) / complex(b)
            if not (isinstance(b, Fraction) and b.denominator == 1 and b >= 0):
                raise self.fail("exponents must be non-negative integers", node.right)
            return a ** int(b)
        return None

    def build(self, node: ast.AST) -> Polynomial:
        c = self.const(node)
        if c is not None:
            return Polynomial.constant(self.nv, complex(c))
        if isinstance(node, ast.Name):
            if node.id not in self.index:
                raise self.fail(f"undeclared identifier '{node.id}'", node)
            return Polynomial.variable(self.nv, self.index[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            p = self.build(node.operand)
            return -p if isinstance(node.op, ast.USub) else p
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Add):
                return self.build(node.left) + self.build(node.right)
            if isinstance(node.op, ast.Sub):
                return self.build(node.left) - self.build(node.right)
            if isinstance(node.op, ast.Mult):
                return self.build(node.left) * self.build(node.right)
            if isinstance(node.op, ast.Div):
                d = self.const(node.right)
                if d is None:
                    raise self.fail("only division by constants is allowed", node.right)
                if d == 0:
                    raise self.fail("division by zero", node.right)
                return self.build(node.left).scale(1 / complex(d))
            if isinstance(node.op, ast.Pow):
                k = self.const(node.right)
                if not (isinstance(k, Fraction) and k.denominator == 1 and k >= 0):
                    raise self.fail("exponents must be non-negative integers", node.right)
                return self.build(node.left) ** int(k)
        raise self.fail("unsupported syntax", node)


def parse_polynomial(expr: str, names: Sequence[str], line: int = 1, column: int = 1) -> Polynomial:
    """Parse one polynomial expression over the slot names ``names``."""
    # '^' becomes '**'; colmap sends columns of the rewritten text back
    text, colmap = "", []
    for i, ch in enumerate(expr):
        if ch == "^":
            text += "**"
            colmap += [i, i]
        else:
            text += ch
            colmap.append(i)
    colmap.append(len(expr))
    colmap = [c + column - 1 for c in colmap]
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        off = (exc.offset or 1) - 1
        col = colmap[min(off, len(colmap) - 1)]
        raise ParseError(f"syntax error: {exc.msg}", line, col + 1) from None
    return _ExprBuilder(names, line, text, colmap).build(tree.body)


def parse_problem(text: str) -> Problem:
    """Parse a problem file.

    Grammar: ``vars: <id>+``, ``params: <id>*``,
    ``objective: euclidean|likelihood``, optional ``codim: <int>`` and
    ``model:`` followed by one polynomial per line.  ``#`` starts a comment.
    """
    var_names: list[str] = []
    par_names: list[str] = []
    objective = None
    codim = None
    exprs: list[tuple[int, int, str]] = []
    in_model = False
    seen: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower()
        if sep and key in _HEADERS:
            if key in seen:
                raise ParseError(f"duplicate '{key}' section", lineno, raw.find(head.strip()) + 1)
            seen.add(key)
            in_model = False
            col0 = len(head) + 2
            if key in ("vars", "params"):
                target = var_names if key == "vars" else par_names
                for m in re.finditer(r"\S+", rest):
                    ident = m.group(0).rstrip(",")
                    col = col0 + m.start()
                    if not _IDENT.match(ident):
                        raise ParseError(f"invalid identifier '{ident}'", lineno, col)
                    if ident in var_names or ident in par_names:
                        raise ParseError(f"duplicate declaration of '{ident}'", lineno, col)
                    target.append(ident)
                if key == "vars" and not target:
                    raise ParseError("'vars' needs at least one identifier", lineno, col0)
            elif key == "objective":
                objective = rest.strip().lower()
                if objective not in ("euclidean", "likelihood"):
                    raise ParseError(f"unknown objective '{rest.strip()}'", lineno, col0)
            elif key == "codim":
                try:
                    codim = int(rest.strip())
                except ValueError:
                    raise ParseError("codim must be an integer", lineno, col0) from None
            else:
                in_model = True
                if rest.strip():
                    exprs.append((lineno, col0, rest))
            continue
        if in_model:
            exprs.append((lineno, 1, line))
        else:
            raise ParseError("expected a section header", lineno, len(line) - len(line.lstrip()) + 1)

    if not var_names:
        raise ParseError("missing 'vars' declaration", 1, 1)
    if "model" not in seen:
        raise ParseError("missing 'model' section", max(1, len(text.splitlines())), 1)
    names = var_names + par_names
    polys = []
    for lineno, col, expr in exprs:
        lead = len(expr) - len(expr.lstrip())
        polys.append(parse_polynomial(expr.strip(), names, lineno, col + lead))
    nv = len(var_names)
    system = PolySystem(tuple(polys), tuple(names), tuple(range(nv)), tuple(range(nv, len(names))))
    return Problem(system, objective, codim, tuple(l for l, _, _ in exprs))


def parse_system(text: str) -> PolySystem:
    return parse_problem(text).system


def format_problem(system: PolySystem, objective: str | None = None, codim: int | None = None) -> str:
    """Inverse of :func:`parse_problem` (up to whitespace and comments)."""
    names = system.variable_names
    lines = ["vars: " + " ".join(names[i] for i in system.unknown_slots)]
    if system.parameter_slots:
        lines.append("params: " + " ".join(names[i] for i in system.parameter_slots))
    if objective:
        lines.append(f"objective: {objective}")
    if codim is not None:
        lines.append(f"codim: {codim}")
    lines.append("model:")
    order = list(system.unknown_slots) + list(system.parameter_slots)
    if order != list(range(system.num_vars)):
        # problem files always list unknowns before parameters
        slot_map = [order.index(i) for i in range(system.num_vars)]
        polys = [p.embed(system.num_vars, slot_map) for p in system.polynomials]
        names = [names[i] for i in order]
    else:
        polys = list(system.polynomials)
    lines += [p.to_string(names) for p in polys]
    return "\n".join(lines) + "\n"
