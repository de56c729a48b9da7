import numpy as np
import pytest

from heatkern import (
    build_space,
    connected_components,
    degree_vector,
    energy_inner,
    generator,
    graph_distances,
    is_connected,
    laplacian_apply,
    laplacian_matrix,
    markov_apply,
    markov_matrix,
    normalized_laplacian_matrix,
    nu_measure,
    transfer_matrix,
)
from heatkern.errors import (
    AsymmetricConductance,
    DimensionMismatch,
    DisconnectedSpace,
    DuplicatePoint,
    NonpositiveMeasure,
    ZeroDegreePoint,
)

from _graphs import random_connected_graph


def test_build_space_counting_default(two_point):
    space, cond, deg = two_point
    assert space.points == ("a", "b")
    assert np.array_equal(space.lam, np.ones(2))
    assert cond.weight(0, 1) == 1.0
    assert cond.weight(1, 0) == 1.0
    assert np.array_equal(deg.c, np.array([1.0, 1.0]))


def test_build_space_measure_forms():
    edges = [("a", "b", 1.0)]
    sp, _, _ = build_space(["a", "b"], 2.0, edges)
    assert np.array_equal(sp.lam, np.array([2.0, 2.0]))
    sp, _, _ = build_space(["a", "b"], {"b": 3.0}, edges)
    assert np.array_equal(sp.lam, np.array([1.0, 3.0]))
    sp, _, _ = build_space(["a", "b"], [2.0, 5.0], edges)
    assert np.array_equal(sp.lam, np.array([2.0, 5.0]))


def test_build_space_rejects_duplicates():
    with pytest.raises(DuplicatePoint):
        build_space(["a", "a"], None, [("a", "a", 1.0)])


def test_build_space_rejects_nonpositive_measure():
    with pytest.raises(NonpositiveMeasure):
        build_space(["a", "b"], [1.0, 0.0], [("a", "b", 1.0)])


def test_build_space_rejects_conflicting_orientations():
    with pytest.raises(AsymmetricConductance):
        build_space(["a", "b"], None, [("a", "b", 1.0), ("b", "a", 2.0)])


def test_build_space_accepts_agreeing_orientations():
    _, cond, _ = build_space(["a", "b"], None, [("a", "b", 1.0), ("b", "a", 1.0)])
    assert cond.weight(0, 1) == 1.0


def test_build_space_rejects_isolated_point():
    with pytest.raises(ZeroDegreePoint):
        build_space(["a", "b", "c"], None, [("a", "b", 1.0)])


def test_build_space_rejects_wrong_length_measure():
    with pytest.raises(DimensionMismatch):
        build_space(["a", "b"], [1.0, 2.0, 3.0], [("a", "b", 1.0)])


def test_self_loop_contributes_to_degree():
    _, cond, deg = build_space(["a"], None, [("a", "a", 1.0)])
    assert deg.c[0] == 1.0


def test_degree_k3(k3):
    _, cond, deg = k3
    assert np.array_equal(deg.c, np.array([2.0, 2.0, 2.0]))
    assert np.array_equal(degree_vector(cond), deg.c)


def test_nu_measure_two_point():
    sp, cond, deg = build_space(["a", "b"], [2.0, 1.0], [("a", "b", 3.0)])
    assert np.array_equal(nu_measure(sp, deg), np.array([6.0, 3.0]))


def test_laplacian_apply_k3(k3):
    sp, cond, _ = k3
    out = laplacian_apply(sp, cond, [1.0, 0.0, 0.0])
    assert np.allclose(out, [2.0, -1.0, -1.0], atol=0, rtol=0)


def test_laplacian_kills_constants(rng):
    sp, cond, _ = random_connected_graph(rng)
    out = laplacian_apply(sp, cond, np.ones(sp.n))
    assert np.max(np.abs(out)) < 1e-12


def test_markov_apply_path(path3):
    sp, cond, _ = path3
    out = markov_apply(sp, cond, [1.0, 0.0, 0.0])
    assert np.allclose(out, [0.0, 0.5, 0.0], atol=0, rtol=0)


def test_markov_preserves_constants(rng):
    sp, cond, _ = random_connected_graph(rng)
    out = markov_apply(sp, cond, np.ones(sp.n))
    assert np.max(np.abs(out - 1.0)) < 1e-12


def test_energy_inner_k3(k3):
    sp, cond, _ = k3
    f = np.array([1.0, 0.0, 0.0])
    assert energy_inner(sp, cond, f, f) == pytest.approx(2.0, abs=0)


def test_energy_is_greens_identity(rng):
    # <Delta f, g>_lam with counting lam equals the energy form
    sp, cond, _ = random_connected_graph(rng)
    f = rng.standard_normal(sp.n)
    g = rng.standard_normal(sp.n)
    lhs = float(laplacian_apply(sp, cond, f) @ g)
    assert energy_inner(sp, cond, f, g) == pytest.approx(lhs, abs=1e-10)


def test_operator_matrices_consistent(k3):
    sp, cond, _ = k3
    L = laplacian_matrix(sp, cond).entries
    P = markov_matrix(sp, cond).entries
    W = transfer_matrix(sp, cond).entries
    c = degree_vector(cond)
    assert np.allclose(L, np.diag(c) - W)
    assert np.allclose(P, W / c[:, None])
    Lt = normalized_laplacian_matrix(sp, cond).entries
    assert np.allclose(Lt, np.eye(3) - P)


@pytest.mark.parametrize("kind", ["combinatorial", "normalized"])
def test_generator_self_adjoint_in_mu(rng, kind):
    for _ in range(5):
        sp, cond, _ = random_connected_graph(rng, random_measure=True)
        A, mu = generator(sp, cond, kind)
        S = mu[:, None] * A
        assert np.max(np.abs(S - S.T)) < 1e-12 * max(1.0, np.max(np.abs(S)))


def test_generator_counting_measure_matches_matrices(k3):
    sp, cond, _ = k3
    A, mu = generator(sp, cond, "combinatorial")
    assert np.allclose(A, laplacian_matrix(sp, cond).entries)
    assert np.array_equal(mu, sp.lam)
    At, nu = generator(sp, cond, "normalized")
    assert np.allclose(At, normalized_laplacian_matrix(sp, cond).entries)
    assert np.array_equal(nu, degree_vector(cond) * sp.lam)


def test_generator_rejects_unknown_kind(k3):
    sp, cond, _ = k3
    with pytest.raises(Exception):
        generator(sp, cond, "fancy")


def test_connected_components_counts():
    pts = ["a", "b", "c", "d"]
    edges = [("a", "b", 1.0), ("c", "d", 1.0)]
    sp, cond, _ = build_space(pts, None, edges)
    comps = connected_components(sp, cond)
    assert len(comps) == 2
    assert not is_connected(sp, cond)


def test_graph_distances_inverse_weight():
    sp, cond, _ = build_space(["a", "b", "c"], None,
                              [("a", "b", 2.0), ("b", "c", 4.0)])
    d = graph_distances(sp, cond)
    i, j, k = sp.index("a"), sp.index("b"), sp.index("c")
    assert d[i, j] == pytest.approx(0.5)
    assert d[j, k] == pytest.approx(0.25)
    assert d[i, k] == pytest.approx(0.75)
    assert np.array_equal(d, d.T)


def test_graph_distances_disconnected_raises():
    sp, cond, _ = build_space(["a", "b", "c", "d"], None,
                              [("a", "b", 1.0), ("c", "d", 1.0)])
    with pytest.raises(DisconnectedSpace):
        graph_distances(sp, cond)
