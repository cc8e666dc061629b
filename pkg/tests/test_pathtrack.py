import numpy as np
import pytest

from monocrit.pathtrack import (
    Homotopy,
    PathSegment,
    PathStatus,
    TrackerConfig,
    TrackerPreconditionError,
    total_degree_solve,
    track,
    track_many,
)
from monocrit.polycore import Polynomial, PolySystem, parse_problem, parse_system

from conftest import ELLIPSE_U, as_complex, circle_system


def homotopy(text: str, path=([0.0], [1.0])) -> Homotopy:
    return Homotopy(parse_system(text), list(path))


def test_linear_homotopy_reaches_zero():
    h = homotopy("vars: z\nparams: t\nmodel:\nz - (1 - t)")
    res = track(h, [1.0])
    assert res.status is PathStatus.SUCCESS
    assert abs(res.endpoint[0]) < 1e-12


def test_square_root_branch(oracles):
    h = homotopy("vars: z\nparams: t\nmodel:\nz^2 - (1 + 3*t)")
    res = track(h, [oracles["sqrt_branch"]["start"]])
    assert res.ok
    assert res.endpoint[0] == pytest.approx(oracles["sqrt_branch"]["end"], abs=1e-12)


def test_success_endpoint_meets_endpoint_tol():
    cfg = TrackerConfig()
    h = homotopy("vars: x y\nparams: t\nmodel:\nx^2 + y^2 - 1 - t\nx - y*(1 + 2*t)", ([0.0], [1.0]))
    start = np.array([1, 1]) / np.sqrt(2)
    res = track(h, start, cfg)
    assert res.ok
    assert res.residual <= cfg.endpoint_tol * (1 + np.linalg.norm(res.endpoint))
    assert res.steps_taken > 0


def test_cheater_homotopy_ellipse():
    # F(x) - (1 - t) F(x_hat), squared up by a line through x_hat that turns into a complex one
    text = (
        "vars: x1 x2\nparams: t\nmodel:\n"
        "1/3000*(1744*x1^2 - 2016*x1*x2 - 2800*x1 + 1156*x2^2 + 2100*x2 + 1125) - (1 - t)*0.803\n"
        "(1 - t)*(.0857144*x1 + .506099*x2 - .5489562) + t*((.3+.2j)*x1 + (-.7+.1j)*x2 + .1 - .4j)"
    )
    res = track(homotopy(text), [0.5, 1.0])
    assert res.ok
    ell = parse_problem(
        "vars: x1 x2\nmodel:\n1/3000*(1744*x1^2 - 2016*x1*x2 - 2800*x1 + 1156*x2^2 + 2100*x2 + 1125)"
    ).system
    assert abs(ell.evaluate(res.endpoint)[0]) < 1e-10


def test_divergence_is_reported():
    # the root 1/(1-t) escapes to infinity at t = 1
    h = homotopy("vars: z\nparams: t\nmodel:\n(1 - t)*z - 1")
    res = track(h, [1.0])
    assert res.status in (PathStatus.DIVERGED, PathStatus.STEP_TOO_SMALL)
    assert not res.ok


def test_singular_endpoint_is_reported():
    h = homotopy("vars: z\nparams: t\nmodel:\nz^2 - (1 - t)")
    res = track(h, [1.0])
    assert res.status in (PathStatus.SINGULAR_ENDPOINT, PathStatus.STEP_TOO_SMALL)


def test_precondition_violations():
    h = homotopy("vars: z\nparams: t\nmodel:\nz^2 - (1 + 3*t)")
    with pytest.raises(TrackerPreconditionError):
        track(h, [1.5])
    with pytest.raises(TrackerPreconditionError):
        track(h, [1.0, 2.0])


def test_homotopy_must_be_square():
    with pytest.raises(ValueError):
        homotopy("vars: x y\nparams: t\nmodel:\nx - t")


def test_segments_must_be_finite():
    with pytest.raises(ValueError):
        PathSegment([0.0], [np.inf])


def test_track_many_contract():
    h = homotopy("vars: z\nparams: t\nmodel:\nz^2 - (1 + 3*t)")
    assert track_many(h, []) == []
    good, bad = track_many(h, [[1.0], [7.0]])
    assert good.ok and good.endpoint[0] == pytest.approx(2.0)
    assert bad.status is PathStatus.REJECTED
    assert "residual" in bad.message


def test_track_many_matches_track_and_is_deterministic():
    sys_ = parse_system("vars: x y\nparams: a b\nmodel:\nx^2 + y^2 - a\nx*y - b")
    p0, p1 = np.array([1.0 + 0.2j, 0.3]), np.array([2 + 1j, -0.5j])
    starts = [s.z for s in total_degree_solve(sys_.bind(p0), rng=0)]
    assert len(starts) == 4
    h = Homotopy(sys_, [p0, p1])
    a = track_many(h, starts)
    b = track_many(h, starts, threads=2)
    c = [track(h, s) for s in starts]
    for r1, r2, r3 in zip(a, b, c):
        assert r1.status == r2.status == r3.status
        assert np.array_equal(r1.endpoint, r2.endpoint)
        assert np.array_equal(r1.endpoint, r3.endpoint)


def test_reversibility_on_random_loops():
    rng = np.random.default_rng(7)
    sys_ = parse_system("vars: x y\nparams: a b c\nmodel:\nx^2 + a*y - 1\ny^3 + b*x*y - c")
    for _ in range(5):
        p0 = rng.normal(size=3) + 1j * rng.normal(size=3)
        p1 = rng.normal(size=3) + 1j * rng.normal(size=3)
        sols = total_degree_solve(sys_.bind(p0), rng=1)
        assert len(sols) > 0
        fwd = track_many(Homotopy(sys_, [p0, p1]), [s.z for s in sols])
        for start, r in zip(sols, fwd):
            if not r.ok:
                continue
            back = track(Homotopy(sys_, [p1, p0]), r.endpoint)
            assert back.ok
            assert np.max(np.abs(back.endpoint - start.z)) < 1e-6


def test_total_degree_examples(oracles):
    sols = total_degree_solve(parse_system("vars: z\nmodel:\nz^2 - 1"), rng=0)
    assert sorted(s.z[0].real for s in sols) == pytest.approx([-1.0, 1.0])

    circle = circle_system()
    sols = total_degree_solve(circle.bound([2.0, 0.0]), rng=0)
    assert sorted(np.round(s.z[:2].real, 10).tolist() for s in sols) == [[-1.0, 0.0], [1.0, 0.0]]


def test_total_degree_ellipse_matches_oracle(ellipse_cs, oracles):
    sols = total_degree_solve(ellipse_cs.bound(ELLIPSE_U), rng=0)
    assert len(sols) == 4
    want = [as_complex(p)[:2] for p in oracles["ellipse"]["points_x_lambda"]]
    for x in want:
        assert min(np.max(np.abs(s.z[:2] - x)) for s in sols) < 1e-4


@pytest.mark.parametrize("degrees", [(1, 1), (2, 1), (2, 2), (3, 2), (2, 2, 2)])
def test_total_degree_finds_bezout_count_for_products_of_linears(degrees):
    rng = np.random.default_rng(sum(degrees))
    n = len(degrees)
    polys = []
    for d in degrees:
        p = Polynomial.constant(n, 1.0)
        for _ in range(d):
            coeffs = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
            lin = Polynomial.constant(n, coeffs[0])
            for i in range(n):
                lin = lin + Polynomial.variable(n, i) * coeffs[i + 1]
            p = p * lin
        polys.append(p)
    sys_ = PolySystem(tuple(polys), tuple(f"x{i}" for i in range(n)), tuple(range(n)))
    sols = total_degree_solve(sys_, rng=3)
    assert len(sols) == int(np.prod(degrees))
    assert not sols.info["flagged"]


def test_total_degree_limits():
    big = parse_system("vars: a b c d e f g\nmodel:\na\nb\nc\nd\ne\nf\ng")
    with pytest.raises(ValueError):
        total_degree_solve(big)
    with pytest.raises(ValueError):
        total_degree_solve(parse_system("vars: x\nparams: a\nmodel:\nx - a"))


def test_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(min_step=0.2)
    with pytest.raises(ValueError):
        TrackerConfig(newton_tol=0)
