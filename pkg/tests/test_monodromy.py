import numpy as np
import pytest

from monocrit.monodromy import MonodromyConfig, collect_fiber, monodromy_collect, run_loop, triangular_loop
from monocrit.pathtrack import Homotopy, track_many
from monocrit.seed import find_seed
from monocrit.solutions import SolutionSet

from conftest import ELLIPSE_U, HANKEL_U, ML_U, as_complex, fiber, line_system


def test_triangular_loop_shape_and_determinism():
    a = triangular_loop(ELLIPSE_U, rng=5)
    b = triangular_loop(ELLIPSE_U, rng=5)
    c = triangular_loop(ELLIPSE_U, rng=6)
    assert len(a) == 3
    assert np.allclose(a[0].start, ELLIPSE_U) and np.allclose(a[-1].end, ELLIPSE_U)
    for s, t in zip(a, a[1:]):
        assert np.array_equal(s.end, t.start)
    assert all(np.array_equal(s.end, t.end) for s, t in zip(a, b))
    assert not np.array_equal(a[0].end, c[0].end)


def test_triangular_loop_rejects_non_finite_base():
    with pytest.raises(ValueError):
        triangular_loop([1.0, np.nan])


def test_degenerate_loop_is_identity(ellipse_cs, ellipse_fiber):
    u = ELLIPSE_U.astype(complex)
    h = Homotopy(ellipse_cs.system, [u, u])
    for p, r in zip(ellipse_fiber.solutions, track_many(h, [p.z for p in ellipse_fiber.solutions])):
        assert r.ok
        assert np.max(np.abs(r.endpoint - p.z)) < 1e-10


def test_loop_permutes_a_complete_fiber(ellipse_cs, ellipse_fiber):
    full = ellipse_fiber.solutions
    for seed in range(5):
        h = Homotopy(ellipse_cs.system, triangular_loop(ELLIPSE_U, rng=seed))
        ends = [r.endpoint for r in track_many(h, [p.z for p in full]) if r.ok]
        hits = [full.find(z) for z in ends]
        assert None not in hits
        assert len(set(hits)) == len(hits)


def test_run_loop_keeps_known_points(ellipse_cs):
    sd = find_seed(ellipse_cs, ELLIPSE_U, rng=0)
    cur = SolutionSet(ellipse_cs.n)
    cur.add(sd.z)
    for seed in range(4):
        nxt = run_loop(ellipse_cs, ELLIPSE_U, cur, rng=seed)
        assert len(nxt) >= len(cur)
        assert all(nxt.find(p.z) is not None for p in cur)
        assert nxt.info["new"] == len(nxt) - len(cur)
        cur = nxt
    with pytest.raises(ValueError):
        run_loop(ellipse_cs, ELLIPSE_U, SolutionSet(ellipse_cs.n))


def test_ellipse_fiber_against_oracle(ellipse_cs, oracles):
    fr = fiber(ellipse_cs, ELLIPSE_U, seed=0, solution_bound=4)
    assert len(fr.solutions) == 4
    assert fr.loops <= 100
    assert fr.termination == "solution_bound"
    want = [as_complex(p) for p in oracles["ellipse"]["points_x_lambda"]]
    for w in want:
        got = min(
            np.max(np.abs(np.r_[p.x, ellipse_cs.user_lambda(p.lam)] - w)) for p in fr.solutions
        )
        assert got < 1e-8


def test_ellipse_without_bound_stalls_at_four(ellipse_fiber):
    assert len(ellipse_fiber.solutions) == 4
    assert ellipse_fiber.termination == "stalled"


def test_history_is_monotone(ellipse_fiber, hankel_fiber):
    for fr in (ellipse_fiber, hankel_fiber):
        h = fr.history
        assert h[0] == 1
        assert all(a <= b for a, b in zip(h, h[1:]))
        assert len(h) == fr.loops + 1
        assert sum(fr.new_per_loop) == h[-1] - 1


def test_fiber_membership(ellipse_cs, ellipse_fiber, hankel_cs, hankel_fiber):
    for cs, fr, u in ((ellipse_cs, ellipse_fiber, ELLIPSE_U), (hankel_cs, hankel_fiber, HANKEL_U)):
        for p in fr.solutions:
            assert cs.residual(p.z, u) <= 1e-8 * (1 + np.linalg.norm(p.z))


def test_hankel_fiber_matches_parametrization_oracle(hankel_cs, hankel_fiber, oracles):
    sols = hankel_fiber.solutions
    assert len(sols) == oracles["twisted_cubic"]["ed_degree"]
    want = [as_complex(p) for p in oracles["twisted_cubic"]["points_x"]]
    for w in want:
        assert min(np.max(np.abs(p.x - w)) for p in sols) < 1e-8


def test_line_fiber_is_a_single_point():
    cs = line_system()
    fr = fiber(cs, [3.0, 5.0], seed=0)
    assert len(fr.solutions) == 1
    assert fr.solutions[0].x == pytest.approx([3 / 8, 5 / 8])
    assert fr.termination == "stalled"


def test_bound_already_met():
    cs = line_system()
    fr = fiber(cs, [3.0, 5.0], seed=0, solution_bound=1)
    assert fr.loops == 0 and fr.termination == "solution_bound"


def test_max_loops_termination(hankel_cs):
    fr = fiber(hankel_cs, HANKEL_U, seed=1, max_loops=1)
    assert fr.loops == 1 and fr.termination == "max_loops"


def test_collection_is_deterministic(ellipse_cs):
    a = fiber(ellipse_cs, ELLIPSE_U, seed=7)
    b = fiber(ellipse_cs, ELLIPSE_U, seed=7)
    assert a.history == b.history
    assert np.array_equal(a.solutions.array(), b.solutions.array())


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cardinality_does_not_depend_on_seed(ellipse_cs, hankel_cs, seed):
    assert len(fiber(ellipse_cs, ELLIPSE_U, seed=seed).solutions) == 4
    assert len(fiber(hankel_cs, HANKEL_U, seed=seed).solutions) == 7


def test_cardinality_does_not_depend_on_u(ellipse_cs):
    rng = np.random.default_rng(12)
    for _ in range(2):
        u = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert len(fiber(ellipse_cs, u, seed=0).solutions) == 4


def test_monodromy_collect_on_a_bare_system():
    from monocrit.polycore import parse_system

    sys_ = parse_system("vars: z\nparams: a\nmodel:\nz^3 - a")
    starts = SolutionSet(1)
    starts.add([1.0])
    fr = monodromy_collect(sys_, [1.0], starts, MonodromyConfig(rng_seed=0, stall_limit=5))
    assert sorted(np.angle(p.z[0]) for p in fr.solutions) == pytest.approx([-2 * np.pi / 3, 0, 2 * np.pi / 3])


def test_config_validation():
    with pytest.raises(ValueError):
        MonodromyConfig(max_loops=0)
    with pytest.raises(ValueError):
        MonodromyConfig(stall_limit=0)
    with pytest.raises(ValueError):
        MonodromyConfig(solution_bound=0)


@pytest.mark.slow
def test_ml_fiber_has_ten_points(ml_cs, ml_fiber):
    assert len(ml_fiber.solutions) == 10
    for p in ml_fiber.solutions:
        assert not ml_cs.objective.on_forbidden_locus(p.x)
        assert ml_cs.residual(p.z, ML_U) <= 1e-8 * (1 + np.linalg.norm(p.z))


def test_dedup_is_relative_per_coordinate():
    s = SolutionSet(2)
    s.add([0.3, 0.1, 5e4 + 1e-3j])
    # same point, multiplier agrees to 2e-8 relative
    assert not s.add([0.3, 0.1, 5e4 + 1e-3j + 1e-3])
    # a large multiplier does not widen the tolerance on x
    assert s.add([0.3 + 1e-5, 0.1, 5e4 + 1e-3j])
    assert len(s) == 2
