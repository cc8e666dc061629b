"""Reference values computed without the solver, frozen into ``tests/data/oracles.json``.

Every number here comes from a closed form or from a univariate polynomial
solved with ``numpy.roots``; none of it touches the homotopy code.

    python3 tests/oracles/build_oracles.py          # rewrite the JSON
    python3 tests/oracles/build_oracles.py --check  # compare against it
"""

from __future__ import annotations

import json
import sys
from functools import reduce
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

OUT = Path(__file__).resolve().parent.parent / "data" / "oracles.json"

# ellipse written as x^T Q x + b.x + c = 0 (the 1/3000 factor is irrelevant to the zero set)
ELLIPSE_Q = np.array([[1744.0, -1008.0], [-1008.0, 1156.0]]) / 3000
ELLIPSE_B = np.array([-2800.0, 2100.0]) / 3000
ELLIPSE_C = 1125.0 / 3000
ELLIPSE_U = np.array([0.75, -0.29])

HANKEL_U = np.array([2 / 5, -2 / 7, 5 / 6, 3 / 7])


def _pairs(v):
    return [[float(c.real), float(c.imag)] for c in np.ravel(v)]


def ellipse_critical_points(u=ELLIPSE_U):
    """Critical points of |x - u|^2 on the ellipse via ``x = c + A (cos th, sin th)``.

    With ``z = exp(i th)`` the condition ``(x - u) . dx/dth = 0`` becomes a
    quartic in ``z``; every root gives one (possibly complex) critical point.
    The multiplier follows from ``x - u + lam grad f = 0``.
    """
    center = -0.5 * np.linalg.solve(ELLIPSE_Q, ELLIPSE_B)
    k = center @ ELLIPSE_Q @ center - ELLIPSE_C  # x^T Q x = k after centering
    w, v = np.linalg.eigh(ELLIPSE_Q)
    a = v * np.sqrt(k / w)  # columns: semi-axes
    d = center - u
    # x - u = d + a0 cos + a1 sin;  dx/dth = -a0 sin + a1 cos
    # cos = (z + 1/z)/2, sin = (z - 1/z)/(2i); multiply through by z^2
    cos = np.array([0.5, 0, 0.5])  # coefficients of z^0..z^2 after multiplying by z
    sin = np.array([-0.5 / 1j, 0, 0.5 / 1j])
    one = np.array([0, 1.0, 0])
    diff = [d[i] * one + a[i, 0] * cos + a[i, 1] * sin for i in range(2)]
    tang = [-a[i, 0] * sin + a[i, 1] * cos for i in range(2)]
    quartic = P.polyadd(P.polymul(diff[0], tang[0]), P.polymul(diff[1], tang[1]))
    roots = np.roots(quartic[::-1])
    pts = []
    for z in roots:
        c, s = (z + 1 / z) / 2, (z - 1 / z) / 2j
        x = center + a[:, 0] * c + a[:, 1] * s
        grad = 2 * ELLIPSE_Q @ x + ELLIPSE_B
        lam = -((x - u) @ grad) / (grad @ grad)
        pts.append(np.r_[x, lam])
    return sorted(pts, key=lambda p: (round(p[0].real, 8), round(p[0].imag, 8)))


def twisted_cubic_critical_points(u=HANKEL_U):
    """ED critical points on the cone ``x = w (s^3, s^2, s, 1)``.

    Eliminating ``w`` leaves ``(v'.u)(v.v) - (v.u)(v.v') = 0`` in ``s``, a
    degree-7 polynomial once the leading terms cancel.
    """
    v = [np.array([0, 0, 0, 1.0]), np.array([0, 0, 1.0]), np.array([0, 1.0]), np.array([1.0])]
    dv = [P.polyder(c) if len(c) > 1 else np.array([0.0]) for c in v]
    def total(polys):
        return reduce(P.polyadd, polys, np.zeros(1))

    def dot(p, q):
        return total(P.polymul(a, b) for a, b in zip(p, q))

    vu = total(c * ui for c, ui in zip(v, u))
    dvu = total(c * ui for c, ui in zip(dv, u))
    poly = P.polysub(P.polymul(dvu, dot(v, v)), P.polymul(vu, dot(v, dv)))
    poly = P.polytrim(poly, tol=1e-14)
    roots = np.roots(poly[::-1])
    pts = []
    for s in roots:
        vec = np.array([s ** 3, s ** 2, s, 1.0])
        w = (vec @ u) / (vec @ vec)
        x = w * vec
        pts.append(x)
    return len(poly) - 1, sorted(pts, key=lambda p: (round(p[0].real, 8), round(p[0].imag, 8)))


def parabola_traces(ts=(0.0, 0.3, 0.6)):
    """Coordinate sums of ``{x2 = x1^2, 2 x1 + 4 x2 - 1 + t = 0}`` from the quadratic formula."""
    out = []
    for t in ts:
        r = np.roots([4.0, 2.0, t - 1.0])
        out.append([float(np.sum(r).real), float(np.sum(r ** 2).real)])
    return out


def build() -> dict:
    ell = ellipse_critical_points()
    deg, cubic = twisted_cubic_critical_points()
    real = [x.real for x in cubic if np.max(np.abs(x.imag)) < 1e-9]
    psi = [float(np.sum((x - HANKEL_U) ** 2)) for x in real]
    order = np.argsort(psi)
    return {
        "ellipse": {"u": ELLIPSE_U.tolist(), "points_x_lambda": [_pairs(p) for p in ell]},
        "twisted_cubic": {
            "u": HANKEL_U.tolist(),
            "ed_degree": deg,
            "points_x": [_pairs(p) for p in cubic],
            "real_x": [real[i].tolist() for i in order],
            "real_psi": [psi[i] for i in order],
        },
        "parabola": {"t": [0.0, 0.3, 0.6], "traces": parabola_traces()},
        "sqrt_branch": {"start": 1.0, "end": 2.0},
    }


def main(argv) -> int:
    data = build()
    if "--check" in argv:
        frozen = json.loads(OUT.read_text())
        ok = json.dumps(frozen, sort_keys=True) == json.dumps(json.loads(json.dumps(data)), sort_keys=True)
        print("oracles match" if ok else "oracles differ")
        return 0 if ok else 1
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
