import numpy as np
import pytest

from rgnn.gso import (
    ConstraintSet,
    Gso,
    gso_distance_l1,
    load_edge_list,
    project_gso,
    save_edge_list,
    sparsity_penalty,
)

from conftest import random_gso


class TestGsoInvariants:
    def test_valid_construction(self):
        g = Gso(np.array([[0.0, 0.5], [0.5, 0.0]]))
        assert g.n == 2
        assert g.num_edges() == 1

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            Gso(np.zeros((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            Gso(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="diagonal"):
            Gso(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_rejects_out_of_box(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            Gso(np.array([[0.0, 2.0], [2.0, 0.0]]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            Gso(np.array([[0.0, np.nan], [np.nan, 0.0]]))

    def test_immutable(self):
        g = Gso(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            g.entries[0, 1] = 1.0


class TestProjection:
    def test_fixed_point_on_feasible_input(self, rng):
        g = random_gso(rng, 12)
        assert project_gso(g.entries) == g

    def test_closed_form_average(self):
        out = project_gso(np.array([[0.0, 2.0], [-1.0, 0.0]]))
        assert np.array_equal(out.entries, np.array([[0.0, 0.5], [0.5, 0.0]]))

    def test_closed_form_clamp_and_diagonal(self):
        out = project_gso(np.array([[3.0, 1.4], [1.4, 3.0]]))
        assert np.array_equal(out.entries, np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_idempotent_exactly(self, rng):
        for _ in range(100):
            raw = rng.normal(scale=2.0, size=(7, 7))
            once = project_gso(raw)
            twice = project_gso(once.entries)
            assert np.array_equal(once.entries, twice.entries)

    def test_contraction_toward_feasible_points(self, rng):
        # ||P(x) - y||_F <= ||x - y||_F for any feasible y
        for _ in range(100):
            raw = rng.normal(scale=2.0, size=(6, 6))
            feasible = random_gso(rng, 6, density=rng.random())
            proj = project_gso(raw)
            assert (np.linalg.norm(proj.entries - feasible.entries)
                    <= np.linalg.norm(raw - feasible.entries) + 1e-12)

    def test_custom_box(self):
        c = ConstraintSet(lower=0.0, upper=0.25)
        out = project_gso(np.full((3, 3), 0.9), c)
        off = ~np.eye(3, dtype=bool)
        assert np.all(out.entries[off] == 0.25)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            project_gso(np.array([[0.0, np.inf], [np.inf, 0.0]]))

    def test_invalid_constraint(self):
        with pytest.raises(ValueError, match="lower"):
            ConstraintSet(lower=1.0, upper=0.0)


def _distance_loop_oracle(a, b):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            total += abs(a[i, j] - b[i, j])
    return total


class TestDistanceAndPenalty:
    def test_distance_zero_iff_equal(self, rng):
        g = random_gso(rng, 8)
        assert gso_distance_l1(g, g) == 0.0

    def test_distance_two_entry_example(self):
        a = Gso(np.zeros((2, 2)))
        b = Gso(np.array([[0.0, 0.5], [0.5, 0.0]]))
        assert gso_distance_l1(a, b) == 1.0

    def test_distance_matches_loop_oracle(self, rng):
        a, b = random_gso(rng, 9), random_gso(rng, 9)
        assert gso_distance_l1(a, b) == pytest.approx(
            _distance_loop_oracle(a.entries, b.entries), abs=1e-12)

    def test_distance_metric_properties(self, rng):
        for _ in range(50):
            a, b, c = (random_gso(rng, 6, density=rng.random()) for _ in range(3))
            dab = gso_distance_l1(a, b)
            assert dab == gso_distance_l1(b, a)
            assert (dab == 0.0) == (a == b)
            assert dab <= gso_distance_l1(a, c) + gso_distance_l1(c, b) + 1e-12

    def test_distance_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            gso_distance_l1(Gso(np.zeros((2, 2))), Gso(np.zeros((3, 3))))

    def test_penalty_zero_matrix(self):
        assert sparsity_penalty(Gso(np.zeros((4, 4)))) == 0.0

    def test_penalty_unweighted_graph_is_twice_edges(self, rng):
        g = random_gso(rng, 10)
        assert sparsity_penalty(g) == 2.0 * g.num_edges()

    def test_penalty_matches_loop_oracle(self, rng):
        g = random_gso(rng, 7)
        assert sparsity_penalty(g) == pytest.approx(
            _distance_loop_oracle(g.entries, np.zeros_like(g.entries)), abs=1e-12)


class TestEdgeListIO:
    def test_round_trip_preserves_isolated_nodes(self, tmp_path, rng):
        mat = np.zeros((5, 5))
        mat[0, 1] = mat[1, 0] = 0.5
        g = Gso(mat)  # nodes 2..4 isolated
        path = tmp_path / "g.edges"
        save_edge_list(g, path)
        assert load_edge_list(path) == g

    def test_round_trip_random(self, tmp_path, rng):
        g = random_gso(rng, 14)
        path = tmp_path / "g.edges"
        save_edge_list(g, path)
        assert load_edge_list(path) == g

    def test_load_plain_file_symmetrizes(self, tmp_path):
        path = tmp_path / "plain.edges"
        path.write_text("0 1 1.0\n2 0 0.25\n")
        g = load_edge_list(path)
        assert g.n == 3
        assert g.entries[0, 2] == g.entries[2, 0] == 0.25

    def test_load_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "bad.edges"
        path.write_text("0 1 1.0\n0 1 2 3 4\n")
        with pytest.raises(ValueError, match="bad.edges:2"):
            load_edge_list(path)

    def test_explicit_node_count(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("0 1\n")
        assert load_edge_list(path, n=6).n == 6
