import math

import numpy as np
from hypothesis import given, strategies as st

from mdz.corespace import ClassBounds, Correspondence, distortion, greedy_net, hausdorff_distance, validate_metric
from mdz.distances import gh_bijective, gh_exact, hl_closeness, lipschitz_exact
from mdz.harness import certified_close_pair, gen_metric, make_rng, random_polytopal
from mdz.normed import NormSpec, glue_norm_eval, norm_eval, pnm_ball_member, pnm_member
from mdz.reductions import renorm_build, suspend

seeds = st.integers(0, 2 ** 32 - 1)
bounds = st.tuples(st.floats(0.1, 3), st.floats(1.01, 3.0)).map(lambda t: ClassBounds(t[0], t[0] * t[1]))


@given(bounds, st.integers(2, 8), seeds)
def test_generated_metrics_are_valid(b, n, seed):
    m = gen_metric(b, n, seed)
    assert validate_metric(m, b).ok


@given(st.integers(3, 9), seeds)
def test_hausdorff_is_a_pseudometric(n, seed):
    rng = make_rng(seed)
    m = gen_metric(ClassBounds(0.2, 2), n, rng)
    A, B, C = (sorted(set(rng.choice(n, int(rng.integers(1, n + 1))).tolist())) for _ in range(3))
    assert hausdorff_distance(m, A, A) == 0
    assert hausdorff_distance(m, A, B) == hausdorff_distance(m, B, A)
    assert hausdorff_distance(m, A, C) <= hausdorff_distance(m, A, B) + hausdorff_distance(m, B, C) + 1e-12


@given(st.integers(2, 12), st.floats(0.05, 3), seeds)
def test_greedy_net_separates_and_covers(n, eps, seed):
    m = gen_metric(ClassBounds(0.1, 2), n, seed)
    net = greedy_net(m, eps)
    D = m.dist
    assert all(D[i, j] >= eps for i in net for j in net if i != j)
    assert all(D[i, net].min() < eps for i in range(n))


@given(st.integers(2, 5), st.integers(2, 5), seeds)
def test_distortion_is_symmetric(na, nb, seed):
    rng = make_rng(seed)
    a = gen_metric(ClassBounds(0.5, 2), na, rng)
    b = gen_metric(ClassBounds(0.5, 2), nb, rng)
    pairs = {(i, int(rng.integers(nb))) for i in range(na)} | {(int(rng.integers(na)), j) for j in range(nb)}
    r = Correspondence(pairs)
    assert distortion(a, b, r) == distortion(b, a, r.inverse())


@given(seeds)
def test_gh_triangle_and_symmetry(seed):
    rng = make_rng(seed)
    a, b, c = (gen_metric(ClassBounds(0.5, 2), int(rng.integers(2, 4)), rng) for _ in range(3))
    ab, bc, ac = gh_exact(a, b)[0], gh_exact(b, c)[0], gh_exact(a, c)[0]
    assert ab == gh_exact(b, a)[0]
    assert ac <= ab + bc + 1e-12


@given(st.integers(2, 5), seeds)
def test_gh_at_most_bijective(n, seed):
    rng = make_rng(seed)
    a, b = gen_metric(ClassBounds(1, 2), n, rng), gen_metric(ClassBounds(1, 2), n, rng)
    assert gh_exact(a, b)[0] <= gh_bijective(a, b)[0] + 1e-12


@given(st.integers(2, 5), seeds)
def test_lipschitz_variant_relations(n, seed):
    rng = make_rng(seed)
    a, b = gen_metric(ClassBounds(0.5, 2), n, rng), gen_metric(ClassBounds(0.5, 2), n, rng)
    bbi, gro, dk = (lipschitz_exact(a, b, v)[0] for v in ("BBI", "GROMOV", "DK"))
    assert bbi <= gro + 1e-12 <= 2 * bbi + 2e-12
    assert dk <= gro + 1e-12


@given(st.integers(2, 4), seeds)
def test_hl_closeness_is_symmetric(n, seed):
    rng = make_rng(seed)
    a, b = gen_metric(ClassBounds(0.3, 3), n, rng), gen_metric(ClassBounds(0.3, 3), 3, rng)
    assert math.isclose(hl_closeness(a, b)[0], hl_closeness(b, a)[0], abs_tol=1e-12)


def specs(rng, dim):
    f = gen_metric(ClassBounds(0.5, 1), dim, rng)
    return [NormSpec.lp(float(rng.uniform(1, 5)), dim), NormSpec.lp(math.inf, dim),
            random_polytopal(rng, dim, dim + 2), renorm_build(f)]


@given(st.integers(2, 5), seeds)
def test_norm_axioms(dim, seed):
    rng = make_rng(seed)
    x, y = rng.standard_normal((2, dim))
    t = float(rng.uniform(-5, 5))
    for s in specs(rng, dim):
        nx, ny = norm_eval(s, x), norm_eval(s, y)
        assert nx > 0
        assert math.isclose(norm_eval(s, t * x), abs(t) * nx, rel_tol=1e-9)
        assert norm_eval(s, x + y) <= nx + ny + 1e-12


@given(st.integers(3, 6), seeds, st.floats(0.0, 0.2))
def test_pnm_criteria_agree(dim, seed, noise):
    rng = make_rng(seed)
    spec = renorm_build(gen_metric(ClassBounds(0.5, 1), dim, rng))
    a, b = sorted(rng.choice(dim, 2, replace=False).tolist())
    x = np.zeros(dim)
    x[a] = x[b] = 1.0
    x += noise * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    assert pnm_member(spec, a, b, x) == pnm_ball_member(spec, a, b, x)


@given(st.integers(1, 3), seeds)
def test_glue_norm_restricts_to_x(dim, seed):
    rng = make_rng(seed)
    X, Y, cert = certified_close_pair(rng, dim)
    x = rng.standard_normal(dim)
    assert math.isclose(glue_norm_eval(cert, X, Y, x, np.zeros(dim)), norm_eval(X, x), abs_tol=1e-6)


@given(st.integers(2, 5), seeds, st.integers(-4, 0), st.integers(0, 3))
def test_suspension_is_a_metric(n, seed, k_min, k_max):
    d = gen_metric(ClassBounds(0.5, 1), n, seed)
    assert validate_metric(suspend(d, k_min, k_max)).ok
