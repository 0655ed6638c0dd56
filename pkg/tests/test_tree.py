import numpy as np
import pytest

from emtree import _kernels
from emtree.scorer import PairScorer
from emtree.tree import (EigenMemoryTree, Memory, Node, TreeConfig,
                         oja_top_eigenvector, route_side)


def make_internal(router, boundary):
    node = Node(len(router))
    node.router = np.asarray(router, dtype=np.float64)
    node.boundary = float(boundary)
    node.left = Node(len(router))
    node.right = Node(len(router))
    return node


def fresh_tree(dim, capacity=4, budget=None, seed=0):
    return EigenMemoryTree(dim, TreeConfig(leaf_capacity=capacity,
                                           memory_budget=budget, rng_seed=seed))


class TestRoute:
    def test_boundary_equality_goes_left(self):
        node = make_internal([1.0, 0.0], 0.5)
        assert route_side(node, np.array([0.5, 9.0])) == "left"

    def test_above_boundary_goes_right(self):
        node = make_internal([1.0, 0.0], 0.5)
        assert route_side(node, np.array([0.6, -3.0])) == "right"

    def test_dot_product_routing(self):
        node = make_internal([0.6, 0.8], 1.0)
        assert route_side(node, np.array([1.0, 1.0])) == "right"  # 1.4 > 1.0

    def test_dimension_mismatch(self):
        node = make_internal([1.0, 0.0], 0.5)
        with pytest.raises(ValueError):
            route_side(node, np.array([1.0, 2.0, 3.0]))

    def test_leaf_rejected(self):
        with pytest.raises(ValueError):
            route_side(Node(2), np.array([1.0, 2.0]))


class TestQuery:
    def test_empty_tree_absent(self):
        t = fresh_tree(3)
        assert t.query(np.zeros(3)) is None

    def test_returns_previously_inserted_value(self):
        t = fresh_tree(3)
        x = np.array([0.1, 0.2, 0.3])
        t.learn(x, 0.7)
        key, value = t.query(x)
        np.testing.assert_array_equal(key, x)
        assert value == 0.7

    def test_thousand_random_learns_all_retrievable(self):
        rng = np.random.default_rng(10)
        t = fresh_tree(10, capacity=16)
        keys = rng.random((1000, 10))
        values = rng.random(1000)
        for k, v in zip(keys, values):
            t.learn(k, v)
        # brute-force oracle: descend with the route contract, confirm the key
        # sits in the reached leaf, then confirm query returns its stored value
        hits = 0
        for k, v in zip(keys, values):
            node = t.root
            while not node.is_leaf:
                node = node.left if route_side(node, k) == "left" else node.right
            assert any(np.array_equal(node.keys[i], k) for i in range(node.n))
            if t.query(k)[1] == v:
                hits += 1
        assert hits == 1000

    def test_dimension_mismatch(self):
        t = fresh_tree(3)
        with pytest.raises(ValueError):
            t.query(np.zeros(4))

    def test_query_refreshes_last_access(self):
        t = fresh_tree(2)
        x = np.array([0.5, 0.5])
        t.learn(x, 1.0)          # tick 1
        t.learn(np.array([0.0, 0.0]), 0.0)  # tick 2
        t.query(x)               # tick 3 onto x
        ticks = {m.value: m.last_access for m in t.memories()}
        assert ticks[1.0] == 3 and ticks[0.0] == 2


class TestLearn:
    def test_first_insert(self):
        t = fresh_tree(2)
        t.learn(np.array([1.0, 2.0]), 3.0)
        assert t.count == 1
        assert t.root.is_leaf and t.root.n == 1

    def test_capacity_split_partitions_by_projection_order(self):
        t = fresh_tree(2, capacity=4, seed=0)
        for v in [1.0, 2.0, 3.0, 4.0]:
            t.learn(np.array([v, 0.0]), v)
        root = t.root
        assert not root.is_leaf
        # order-statistic oracle on the actual router's projections
        keys = np.array([[v, 0.0] for v in [1.0, 2.0, 3.0, 4.0]])
        proj = keys @ root.router
        assert root.boundary == np.sort(proj)[1]  # lower median of 4
        assert sorted(root.left.values[: root.left.n]) == [1.0, 2.0]
        assert sorted(root.right.values[: root.right.n]) == [3.0, 4.0]
        t.check_invariants()

    def test_split_sizes_balanced_for_distinct_projections(self):
        for capacity in (4, 5):
            t = fresh_tree(3, capacity=capacity, seed=1)
            rng = np.random.default_rng(2)
            for _ in range(capacity):
                t.learn(rng.random(3), rng.random())
            assert not t.root.is_leaf
            left, right = t.root.left.n, t.root.right.n
            assert left + right == capacity
            assert abs(left - right) <= 1
            assert left > 0 and right > 0

    def test_budget_evicts_least_recently_accessed(self):
        t = fresh_tree(2, budget=2)
        t.learn(np.array([1.0, 0.0]), 1.0)
        t.learn(np.array([2.0, 0.0]), 2.0)
        t.learn(np.array([3.0, 0.0]), 3.0)
        assert t.count == 2
        assert sorted(m.value for m in t.memories()) == [2.0, 3.0]

    def test_rejects_bad_inputs(self):
        t = fresh_tree(2)
        with pytest.raises(ValueError):
            t.learn(np.zeros(3), 1.0)
        with pytest.raises(ValueError):
            t.learn(np.array([np.nan, 0.0]), 1.0)
        with pytest.raises(ValueError):
            t.learn(np.zeros(2), float("inf"))


class TestSplitDegenerate:
    def test_lopsided_tie_split(self):
        t = fresh_tree(2, capacity=4, seed=0)
        for v in [1.0, 1.0, 1.0, 5.0]:
            t.learn(np.array([v, 0.0]), v)
        root = t.root
        assert not root.is_leaf
        assert root.left.n == 3 and root.right.n == 1
        assert root.right.values[0] == 5.0
        t.check_invariants()

    def test_all_equal_projections_defer(self):
        t = fresh_tree(2, capacity=4)
        for _ in range(4):
            t.learn(np.array([1.0, 1.0]), 0.5)
        assert t.root.is_leaf and t.root.deferred
        assert t.root.n == 4  # exceeds nothing yet, retains everything
        t.learn(np.array([1.0, 1.0]), 0.5)
        assert t.root.is_leaf and t.root.n == 5  # may exceed capacity
        t.check_invariants()

    def test_deferred_leaf_splits_once_distinguishable(self):
        t = fresh_tree(2, capacity=4, seed=0)
        for _ in range(4):
            t.learn(np.array([1.0, 1.0]), 0.5)
        assert t.root.deferred
        for i in range(12):  # retried on every insert; random init resamples
            t.learn(np.array([1.0 + 0.5 * (i + 1), 1.0]), 1.0)
            if not t.root.is_leaf:
                break
        assert not t.root.is_leaf
        t.check_invariants()


class TestTopEigen:
    def test_matches_exact_oracle_on_axis_data(self):
        keys = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        cov = np.cov(keys, rowvar=False)
        exact = np.linalg.eigh(cov)[1][:, -1]
        v = oja_top_eigenvector(keys, np.random.default_rng(4))
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        # one pass from a random init: direction agreement, not 1e-6 equality
        assert abs(np.dot(v, exact)) >= 0.95

    def test_matches_exact_oracle_on_diagonal_pair(self):
        keys = np.array([[0.0, 0.0], [2.0, 2.0]])
        exact = np.array([1.0, 1.0]) / np.sqrt(2.0)
        v = oja_top_eigenvector(keys, np.random.default_rng(5))
        assert abs(np.dot(v, exact)) >= 0.95

    def test_identical_keys_return_the_random_init(self):
        keys = np.ones((6, 3))
        rng_a = np.random.default_rng(6)
        rng_b = np.random.default_rng(6)
        v = oja_top_eigenvector(keys, rng_a)
        v0 = rng_b.standard_normal(3)
        v0 /= np.linalg.norm(v0)
        np.testing.assert_allclose(v, v0, rtol=1e-12)

    def test_needs_two_keys(self):
        with pytest.raises(ValueError):
            oja_top_eigenvector(np.ones((1, 3)), np.random.default_rng(0))

    def test_well_separated_spectrum_statistics(self):
        # 8-d data, top eigenvalue 100x the rest: 20 quick trials
        good = 0
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
            lam = np.array([100.0] + [1.0] * 7)
            X = rng.standard_normal((512, 8)) * np.sqrt(lam) @ q.T
            v = oja_top_eigenvector(X, rng)
            exact = np.linalg.eigh(np.cov(X, rowvar=False))[1][:, -1]
            if abs(np.dot(v, exact)) >= 0.95:
                good += 1
        assert good >= 19


class TestEvictLru:
    def test_evicts_minimum_tick(self):
        t = fresh_tree(2)
        for v in (1.0, 2.0, 3.0):
            t.learn(np.array([v, 0.0]), v)
        evicted = t.evict_lru()
        assert isinstance(evicted, Memory)
        assert evicted.value == 1.0 and evicted.last_access == 1

    def test_query_refresh_changes_victim(self):
        t = fresh_tree(2)
        keys = [np.array([v, 0.0]) for v in (1.0, 2.0, 3.0)]
        for k, v in zip(keys, (1.0, 2.0, 3.0)):
            t.learn(k, v)
        t.query(keys[0])  # tick-1 memory refreshed to tick 4
        # brute-force oracle over the replayed access sequence
        assert min(m.last_access for m in t.memories()) == 2
        assert t.evict_lru().value == 2.0

    def test_emptied_leaf_returns_absent(self):
        t = fresh_tree(2, capacity=4, seed=0)
        for v in [1.0, 1.0, 1.0, 5.0]:
            t.learn(np.array([v, 0.0]), v)
        lone = t.root.right
        assert lone.n == 1
        t.query(np.array([5.0, 0.0]))  # make the lone memory most recent
        for _ in range(3):
            t.evict_lru()
        assert t.count == 1 and lone.n == 1
        assert t.evict_lru().value == 5.0
        assert lone.n == 0 and not t.root.is_leaf  # structure not collapsed
        assert t.query(np.array([5.0, 0.0])) is None
        t.check_invariants()

    def test_empty_tree_raises(self):
        with pytest.raises(ValueError):
            fresh_tree(2).evict_lru()


class TestBudget:
    def test_budget_holds_after_every_learn_with_shadow_oracle(self):
        rng = np.random.default_rng(11)
        t = fresh_tree(4, capacity=8, budget=50)
        shadow = {}  # seq -> last_access tick
        tick = 0
        seq = 0
        for step in range(400):
            tick += 1
            t.learn(rng.random(4), rng.random())
            shadow[seq] = tick
            seq += 1
            while len(shadow) > 50:
                shadow.pop(min(shadow, key=shadow.__getitem__))
            assert t.count <= 50
            if step % 50 == 0:
                assert {m.seq for m in t.memories()} == set(shadow)
        assert {m.seq for m in t.memories()} == set(shadow)
        t.check_invariants()


class TestInvariantsUnderStress:
    def test_interleaved_operations_keep_structure_consistent(self):
        rng = np.random.default_rng(12)
        t = fresh_tree(5, capacity=6, seed=3)
        stored = []
        for step in range(600):
            op = rng.random()
            if op < 0.6 or not stored:
                k = rng.random(5)
                t.learn(k, rng.random())
                stored.append(k)
            elif op < 0.9:
                t.query(stored[rng.integers(len(stored))])
            elif t.count > 0:
                t.evict_lru()
            if step % 40 == 0:
                t.check_invariants()
        t.check_invariants()

    def test_routers_unit_norm(self):
        rng = np.random.default_rng(13)
        t = fresh_tree(6, capacity=5)
        for _ in range(300):
            t.learn(rng.random(6), rng.random())

        def walk(node):
            if node.is_leaf:
                return
            assert abs(np.linalg.norm(node.router) - 1.0) <= 1e-9
            walk(node.left)
            walk(node.right)

        walk(t.root)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TreeConfig(leaf_capacity=1)
        with pytest.raises(ValueError):
            TreeConfig(memory_budget=0)
        with pytest.raises(ValueError):
            EigenMemoryTree(0)

    def test_scorer_dimension_checked(self):
        with pytest.raises(ValueError):
            EigenMemoryTree(3, scorer=PairScorer(2))


GOLDEN_SNAPSHOT = (
    "I 0.9996499545222941 0.02645691636557624 1.9992999090445882\n"
    "L 2\n"
    "1.0 0.0 0.1 5\n"
    "2.0 0.0 0.2 2\n"
    "L 2\n"
    "3.0 0.0 0.3 3\n"
    "4.0 0.0 0.4 4\n"
)


def test_snapshot_golden():
    t = fresh_tree(2, capacity=4, seed=0)
    for v in [1.0, 2.0, 3.0, 4.0]:
        t.learn(np.array([v, 0.0]), v / 10.0)
    t.query(np.array([1.0, 0.0]))
    assert t.snapshot() == GOLDEN_SNAPSHOT


def test_snapshot_roundtrip_values():
    rng = np.random.default_rng(14)
    t = fresh_tree(3, capacity=4)
    for _ in range(25):
        t.learn(rng.random(3), rng.random())
    lines = t.snapshot().strip().split("\n")
    leaf_counts = [int(line.split()[1]) for line in lines if line.startswith("L ")]
    assert sum(leaf_counts) == t.count
    internal = [line for line in lines if line.startswith("I ")]
    assert all(len(line.split()) == 1 + 3 + 1 for line in internal)  # I, router, boundary


def test_depth_and_query_cost_at_scale():
    rng = np.random.default_rng(15)
    t = fresh_tree(8, capacity=32)
    for _ in range(4096):
        t.learn(rng.random(8), rng.random())
    bound = 2 * np.log2(4096 / 32) + 4
    assert t.max_leaf_depth() <= bound
    assert max(leaf.n for leaf in t.leaves()) <= 32
