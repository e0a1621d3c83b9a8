import numpy as np
import pytest

from schurfit.basis import TimeGrid, make_exponent_set
from schurfit.cluster import (
    KMeansConfig,
    apply_membership_moves,
    assign_signals,
    kmeans_curves,
    state_from_assignments,
)
from schurfit.lsq import (
    Prototype,
    SignalSet,
    fit_prototype,
    group_objective,
    precompute_solver,
    prototype_on_grid,
)


def two_level_signals(rng, n_per=6, n_points=15, sigma=0.1):
    g = TimeGrid(np.linspace(0, 1, n_points))
    low = rng.normal(0.0, sigma, size=(n_points, n_per))
    high = rng.normal(10.0, sigma, size=(n_points, n_per))
    samples = np.column_stack([low, high])
    truth = np.array([0] * n_per + [1] * n_per)
    return SignalSet(samples, g), truth


def random_curves(rng, l=12, n_points=10, n_groups=3):
    g = TimeGrid(np.linspace(-1, 1, n_points))
    centers = rng.normal(scale=3, size=(n_points, n_groups))
    labels = rng.integers(0, n_groups, size=l)
    return SignalSet(centers[:, labels] + rng.normal(size=(n_points, l)), g)


def assert_states_close(a, b, rtol):
    np.testing.assert_array_equal(a.assignments, b.assignments)
    for pa, pb in zip(a.prototypes, b.prototypes):
        np.testing.assert_allclose(pa.coefficients, pb.coefficients, rtol=rtol, atol=rtol)
    for ca, cb in zip(a.centroids, b.centroids):
        np.testing.assert_allclose(ca.values, cb.values, rtol=rtol, atol=rtol)
        assert ca.weight == cb.weight
    assert a.objective == pytest.approx(b.objective, rel=rtol)


class TestAssign:
    def test_single_cluster(self):
        rng = np.random.default_rng(0)
        sig = random_curves(rng)
        p = Prototype([0.0, 1.0], make_exponent_set({0, 1}))
        np.testing.assert_array_equal(assign_signals(sig, [p]), 0)

    def test_exact_match(self):
        g = TimeGrid([0.0, 1.0, 2.0])
        basis = make_exponent_set({0, 1})
        protos = [Prototype([0.0, 0.0], basis), Prototype([1.0, 2.0], basis), Prototype([5.0, 5.0], basis)]
        sig = SignalSet(prototype_on_grid(protos[1], g), g)
        assert assign_signals(sig, protos).tolist() == [1]

    def test_ties_to_lowest_index(self):
        g = TimeGrid([0.0])
        basis = make_exponent_set({0})
        protos = [Prototype([-1.0], basis), Prototype([1.0], basis)]
        assert assign_signals(SignalSet([[0.0]], g), protos).tolist() == [0]

    def test_against_distance_table(self):
        rng = np.random.default_rng(1)
        sig = random_curves(rng, l=20)
        basis = make_exponent_set({0, 1, 2})
        protos = [Prototype(rng.normal(size=3), basis) for _ in range(3)]
        expected = []
        for j in range(len(sig)):
            d = [sum((sig.samples[i, j] - prototype_on_grid(p, sig.grid)[i]) ** 2
                     for i in range(len(sig.grid))) for p in protos]
            expected.append(int(np.argmin(d)))
        assert assign_signals(sig, protos).tolist() == expected


class TestKMeans:
    def test_single_cluster_is_plain_fit(self):
        rng = np.random.default_rng(2)
        sig = random_curves(rng)
        basis = make_exponent_set({0, 1, 2})
        state = kmeans_curves(sig, basis, 1)
        np.testing.assert_allclose(state.prototypes[0].coefficients,
                                   fit_prototype(basis, sig).coefficients, rtol=1e-12, atol=1e-14)

    def test_two_levels(self):
        rng = np.random.default_rng(3)
        sig, truth = two_level_signals(rng)
        state = kmeans_curves(sig, make_exponent_set({0}), 2, KMeansConfig(seed=4))
        labels = state.assignments
        assert len(set(labels[truth == 0])) == 1 and len(set(labels[truth == 1])) == 1
        levels = sorted(p.coefficients[0] for p in state.prototypes)
        assert levels[0] == pytest.approx(0.0, abs=0.1) and levels[1] == pytest.approx(10.0, abs=0.1)

    def test_too_many_clusters(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            kmeans_curves(random_curves(rng, l=3), make_exponent_set({0}), 4)

    def test_monotone_objective(self):
        for seed in range(15):
            rng = np.random.default_rng(seed)
            sig = random_curves(rng, l=int(rng.integers(6, 25)))
            state = kmeans_curves(sig, make_exponent_set({0, 1, 2}), int(rng.integers(2, 5)),
                                  KMeansConfig(seed=seed))
            h = np.array(state.history)
            assert np.all(np.diff(h) <= 0)

    def test_objective_invariant(self):
        rng = np.random.default_rng(5)
        sig = random_curves(rng)
        basis = make_exponent_set({0, 1})
        state = kmeans_curves(sig, basis, 3)
        total = sum(group_objective(state.prototypes[c], sig.subset(state.members(c)))
                    for c in range(3))
        assert state.objective == pytest.approx(total, rel=1e-9)

    def test_fixed_point(self):
        rng = np.random.default_rng(6)
        sig = random_curves(rng, l=18)
        basis = make_exponent_set({0, 1, 2})
        state = kmeans_curves(sig, basis, 3, KMeansConfig(seed=1))
        assert state.stop_reason == "assignments"
        again = kmeans_curves(sig, basis, 3, init=state)
        assert again.reassignments == (0,)
        np.testing.assert_array_equal(again.assignments, state.assignments)

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(7)
        sig = random_curves(rng, l=16)
        basis = make_exponent_set({0, 1})
        a = kmeans_curves(sig, basis, 3, KMeansConfig(seed=11))
        b = kmeans_curves(sig, basis, 3, KMeansConfig(seed=11))
        assert_states_close(a, b, 0.0)

    def test_workers_match_serial(self):
        rng = np.random.default_rng(8)
        sig = random_curves(rng, l=16)
        basis = make_exponent_set({0, 1})
        a = kmeans_curves(sig, basis, 3, KMeansConfig(seed=2))
        b = kmeans_curves(sig, basis, 3, KMeansConfig(seed=2, workers=4))
        assert_states_close(a, b, 0.0)

    def test_permutation_equivariance(self):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            sig = random_curves(rng, l=15)
            perm = rng.permutation(15)
            basis = make_exponent_set({0, 1, 2})
            a = kmeans_curves(sig, basis, 3, KMeansConfig(seed=seed))
            b = kmeans_curves(sig.subset(perm), basis, 3, KMeansConfig(seed=seed))
            np.testing.assert_array_equal(b.assignments, a.assignments[perm])

    def test_empty_cluster_repair(self):
        g = TimeGrid([0.0, 1.0])
        basis = make_exponent_set({0})
        sig = SignalSet(np.array([[0.0, 0.1, 5.0, 5.0], [0.0, 0.1, 5.0, 5.0]]), g)
        # two identical initial prototypes leave cluster 1 empty at first
        same = Prototype([5.0], basis)
        state = kmeans_curves(sig, basis, 2, init=[same, same])
        assert sorted(np.bincount(state.assignments).tolist()) == [2, 2]
        assert np.all(np.diff(state.history) <= 0)

    def test_singular_basis_still_clusters(self):
        rng = np.random.default_rng(9)
        g = TimeGrid([-1.0, 1.0, -2.0, 2.0])
        sig = SignalSet(rng.normal(size=(4, 8)), g)
        state = kmeans_curves(sig, make_exponent_set({0, 2, 4}), 2)
        assert np.all(np.diff(state.history) <= 0)


class TestMoves:
    def setup_state(self, seed=10, l=14):
        rng = np.random.default_rng(seed)
        sig = random_curves(rng, l=l)
        basis = make_exponent_set({0, 1, 2})
        handle = precompute_solver(basis, sig.grid)
        state = kmeans_curves(sig, basis, 3, KMeansConfig(seed=seed), handle=handle)
        return rng, sig, handle, state

    def test_no_moves(self):
        _, sig, handle, state = self.setup_state()
        assert apply_membership_moves(state, sig, [], handle) is state

    def test_move_and_back(self):
        _, sig, handle, state = self.setup_state()
        j = int(np.flatnonzero(np.bincount(state.assignments)[state.assignments] >= 2)[0])
        src = int(state.assignments[j])
        dst = (src + 1) % 3
        there = apply_membership_moves(state, sig, [(j, src, dst)], handle)
        back = apply_membership_moves(there, sig, [(j, dst, src)], handle)
        assert_states_close(back, state, 1e-12)

    def test_untouched_clusters_identical(self):
        _, sig, handle, state = self.setup_state()
        j = int(np.flatnonzero(np.bincount(state.assignments)[state.assignments] >= 2)[0])
        src = int(state.assignments[j])
        dst = (src + 1) % 3
        new = apply_membership_moves(state, sig, [(j, src, dst)], handle)
        other = 3 - src - dst
        assert new.prototypes[other] is state.prototypes[other]
        assert new.centroids[other] is state.centroids[other]

    def test_random_sequence_matches_rebuild(self):
        rng, sig, handle, state = self.setup_state(l=20)
        moves = []
        assign = state.assignments.copy()
        while len(moves) < 20:
            j = int(rng.integers(0, 20))
            counts = np.bincount(assign, minlength=3)
            if counts[assign[j]] < 2:
                continue
            dst = int(rng.choice([c for c in range(3) if c != assign[j]]))
            moves.append((j, int(assign[j]), dst))
            assign[j] = dst
        new = apply_membership_moves(state, sig, moves, [handle] * 3)
        rebuilt = state_from_assignments(sig, assign, 3, handle)
        assert_states_close(new, rebuilt, 1e-9)

    def test_cluster_emptied(self):
        g = TimeGrid([0.0, 1.0])
        sig = SignalSet(np.array([[0.0, 1.0, 5.0], [0.0, 1.0, 5.0]]), g)
        basis = make_exponent_set({0})
        handle = precompute_solver(basis, g)
        state = state_from_assignments(sig, [0, 0, 1], 2, handle)
        with pytest.raises(ValueError, match="cluster emptied"):
            apply_membership_moves(state, sig, [(2, 1, 0)], handle)
        np.testing.assert_array_equal(state.assignments, [0, 0, 1])

    @pytest.mark.parametrize("move", [(0, 2, 1), (99, 0, 1), (0, 0, 0), (0, 0, 7)])
    def test_invalid_moves(self, move):
        g = TimeGrid([0.0, 1.0])
        sig = SignalSet(np.array([[0.0, 1.0, 5.0], [0.0, 1.0, 5.0]]), g)
        handle = precompute_solver(make_exponent_set({0}), g)
        state = state_from_assignments(sig, [0, 0, 1], 2, handle)
        with pytest.raises(ValueError):
            apply_membership_moves(state, sig, [move], handle)
