"""Binary episodic memory tree with eigenvector routing.

Internal nodes hold a unit router vector (the top principal component of the
memories present at split time, estimated by a single streaming Oja pass) and
a scalar boundary (the lower median of the projected memories). Keys route
left when their projection is <= the boundary. Leaves hold memories in
insertion order; a global :class:`~emtree.scorer.PairScorer` picks which leaf
memory a query returns.

A leaf that reaches capacity is split in place. If every projection falls on
one side (all-equal keys, typically) the split is deferred and the leaf
flagged, to be retried on the next insertion. An optional memory budget is
enforced after each insertion by evicting the least-recently-accessed memory
anywhere in the tree; structure is never collapsed, so empty leaves persist.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import _kernels
from .scorer import PairScorer, argmin_score


@dataclass
class TreeConfig:
    leaf_capacity: int = 100
    memory_budget: Optional[int] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.leaf_capacity < 2:
            raise ValueError("leaf_capacity must be >= 2")
        if self.memory_budget is not None and self.memory_budget < 1:
            raise ValueError("memory_budget must be >= 1 when set")


@dataclass
class Memory:
    """A stored (key, value) observation with access bookkeeping."""

    key: np.ndarray
    value: float
    last_access: int
    seq: int


class Node:
    """Tree node; a leaf until :meth:`EigenMemoryTree._split` succeeds on it.

    Leaves keep parallel arrays (keys/values/ticks/seqs) in insertion order
    with doubling capacity. Internal nodes clear those and carry the router,
    boundary and two children instead.
    """

    __slots__ = ("router", "boundary", "left", "right",
                 "keys", "values", "ticks", "seqs", "n", "deferred")

    def __init__(self, dim: int, capacity: int = 8):
        self.router: Optional[np.ndarray] = None
        self.boundary = 0.0
        self.left: Optional[Node] = None
        self.right: Optional[Node] = None
        self.keys = np.empty((capacity, dim))
        self.values = np.empty(capacity)
        self.ticks = np.empty(capacity, dtype=np.int64)
        self.seqs = np.empty(capacity, dtype=np.int64)
        self.n = 0
        self.deferred = False

    @property
    def is_leaf(self) -> bool:
        return self.router is None

    def memory_at(self, i: int) -> Memory:
        return Memory(self.keys[i].copy(), float(self.values[i]),
                      int(self.ticks[i]), int(self.seqs[i]))

    def _grow(self) -> None:
        cap = max(8, 2 * self.keys.shape[0])
        for name in ("keys", "values", "ticks", "seqs"):
            old = getattr(self, name)
            shape = (cap,) + old.shape[1:]
            new = np.empty(shape, dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def append(self, key, value, tick, seq) -> None:
        if self.n == self.keys.shape[0]:
            self._grow()
        i = self.n
        self.keys[i] = key
        self.values[i] = value
        self.ticks[i] = tick
        self.seqs[i] = seq
        self.n = i + 1

    def remove(self, i: int) -> None:
        """Delete row i, preserving insertion order of the rest."""
        n = self.n
        for name in ("keys", "values", "ticks", "seqs"):
            arr = getattr(self, name)
            arr[i : n - 1] = arr[i + 1 : n]
        self.n = n - 1


def route_side(node: Node, key: np.ndarray) -> str:
    """'left' iff <router, key> <= boundary, else 'right'. Pure."""
    if node.is_leaf:
        raise ValueError("cannot route at a leaf node")
    if key.shape != (node.router.shape[0],):
        raise ValueError(f"key length {key.shape} does not match router length {node.router.shape}")
    return "left" if _kernels.project(node.router, key) <= node.boundary else "right"


def oja_top_eigenvector(keys: np.ndarray, rng) -> np.ndarray:
    """Streaming estimate of the top eigenvector of the keys' covariance.

    Mean-centers per dimension, starts from a seeded random unit vector and
    makes one Oja pass in row order with step 1/n. If all keys are identical
    the centered pass moves nothing and the random init comes back; callers
    treat that case as degenerate.
    """
    if keys.shape[0] < 2:
        raise ValueError("need at least two keys")
    centered = np.ascontiguousarray(keys - keys.mean(axis=0))
    d = keys.shape[1]
    v0 = rng.standard_normal(d)
    norm = np.sqrt(np.dot(v0, v0))
    while norm == 0.0:  # vanishing draw is virtually impossible; retry keeps the contract
        v0 = rng.standard_normal(d)
        norm = np.sqrt(np.dot(v0, v0))
    v0 /= norm
    return _kernels.oja_pass(centered, v0)


class EigenMemoryTree:
    """Online memory store: learn (key, value) pairs, query the most similar.

    Single-writer: learn/query/evict must not run concurrently on one
    instance (queries mutate access ticks). Run one tree per worker instead.
    """

    def __init__(self, dim: int, config: Optional[TreeConfig] = None,
                 scorer: Optional[PairScorer] = None, rng=None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.config = config if config is not None else TreeConfig()
        self._rng = np.random.default_rng(self.config.rng_seed if rng is None else rng)
        self.scorer = scorer if scorer is not None else PairScorer(dim, rng=self._rng)
        if self.scorer.dim != self.dim:
            raise ValueError("scorer dimension does not match tree dimension")
        self.root = Node(dim)
        self._leaves = [self.root]
        self._tick = 0
        self._count = 0
        self._seq = 0

    @property
    def count(self) -> int:
        return self._count

    def leaves(self) -> Iterator[Node]:
        return iter(self._leaves)

    def _next_tick(self) -> int:
        self._tick += 1
        return self._tick

    def _check_key(self, key) -> np.ndarray:
        key = np.ascontiguousarray(key, dtype=np.float64)
        if key.shape != (self.dim,):
            raise ValueError(f"key shape {key.shape} does not match tree dimension {self.dim}")
        if not np.isfinite(key).all():
            raise ValueError("key components must be finite")
        return key

    def _descend(self, key: np.ndarray) -> Node:
        node = self.root
        while not node.is_leaf:
            if _kernels.project(node.router, key) <= node.boundary:
                node = node.left
            else:
                node = node.right
        return node

    def query(self, key) -> Optional[tuple[np.ndarray, float]]:
        """Return (stored key, value) of the best-scoring memory in the
        routed leaf, or None when that leaf (or the tree) is empty.

        The winner's last-access tick is refreshed.
        """
        key = self._check_key(key)
        tick = self._next_tick()
        if self._count == 0:
            return None
        leaf = self._descend(key)
        if leaf.n == 0:
            return None
        keys = leaf.keys[: leaf.n]
        scores = self.scorer.score_rows(keys, key)
        i = argmin_score(scores, keys, key)
        leaf.ticks[i] = tick
        return keys[i].copy(), float(leaf.values[i])

    def learn(self, key, value: float) -> None:
        """Insert a (key, value) memory, updating the scorer on the way in.

        Splits the target leaf when it reaches capacity and then enforces
        the memory budget, if any.
        """
        key = self._check_key(key)
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("value must be finite")
        tick = self._next_tick()
        leaf = self._descend(key)
        if leaf.n >= 2:
            self.scorer.update(leaf.keys[: leaf.n], leaf.values[: leaf.n], key, value)
        leaf.append(key, value, tick, self._seq)
        self._seq += 1
        self._count += 1
        if leaf.n >= self.config.leaf_capacity:
            self._split(leaf)
        budget = self.config.memory_budget
        if budget is not None:
            while self._count > budget:
                self.evict_lru()

    def _split(self, node: Node) -> None:
        n = node.n
        keys = np.ascontiguousarray(node.keys[:n])
        router = oja_top_eigenvector(keys, self._rng)
        proj = _kernels.project_rows(router, keys)
        boundary = float(np.partition(proj, (n - 1) // 2)[(n - 1) // 2])
        go_left = proj <= boundary
        if go_left.all():
            # One side would be empty: defer, retry on the next insertion.
            node.deferred = True
            return
        left = Node(self.dim, capacity=max(8, int(go_left.sum())))
        right = Node(self.dim, capacity=max(8, int(n - go_left.sum())))
        for child, mask in ((left, go_left), (right, ~go_left)):
            m = int(mask.sum())
            child.keys[:m] = node.keys[:n][mask]
            child.values[:m] = node.values[:n][mask]
            child.ticks[:m] = node.ticks[:n][mask]
            child.seqs[:m] = node.seqs[:n][mask]
            child.n = m
        node.router = router
        node.boundary = boundary
        node.left = left
        node.right = right
        node.keys = np.empty((0, self.dim))
        node.values = np.empty(0)
        node.ticks = np.empty(0, dtype=np.int64)
        node.seqs = np.empty(0, dtype=np.int64)
        node.n = 0
        node.deferred = False
        self._leaves.remove(node)
        self._leaves.extend((left, right))
        # A child can inherit >= capacity rows only after a deferred split
        # finally separates; re-attempt so oversized leaves stay flagged.
        for child in (left, right):
            if child.n >= self.config.leaf_capacity:
                self._split(child)

    def evict_lru(self) -> Memory:
        """Remove and return the globally least-recently-accessed memory."""
        if self._count == 0:
            raise ValueError("cannot evict from an empty tree")
        best_leaf = None
        best_i = -1
        best_tick = None
        for leaf in self._leaves:
            if leaf.n == 0:
                continue
            i = int(np.argmin(leaf.ticks[: leaf.n]))
            t = int(leaf.ticks[i])
            if best_tick is None or t < best_tick:
                best_leaf, best_i, best_tick = leaf, i, t
        evicted = best_leaf.memory_at(best_i)
        best_leaf.remove(best_i)
        self._count -= 1
        return evicted

    def memories(self) -> Iterator[Memory]:
        """All resident memories, leaf by leaf."""
        for leaf in self._leaves:
            for i in range(leaf.n):
                yield leaf.memory_at(i)

    def snapshot(self) -> str:
        """Line-oriented pre-order dump for debugging and golden tests.

        Internal nodes print as ``I <router components> <boundary>``, leaves
        as ``L <n>`` followed by one ``<key components> <value> <tick>`` line
        per memory. Not a stability-guaranteed format.
        """
        lines = []

        def visit(node: Node) -> None:
            if node.is_leaf:
                lines.append(f"L {node.n}")
                for i in range(node.n):
                    parts = [repr(float(c)) for c in node.keys[i]]
                    parts.append(repr(float(node.values[i])))
                    parts.append(str(int(node.ticks[i])))
                    lines.append(" ".join(parts))
            else:
                parts = ["I"] + [repr(float(c)) for c in node.router]
                parts.append(repr(node.boundary))
                lines.append(" ".join(parts))
                visit(node.left)
                visit(node.right)

        visit(self.root)
        return "\n".join(lines) + "\n"

    def max_leaf_depth(self) -> int:
        def depth(node: Node, d: int) -> int:
            if node.is_leaf:
                return d
            return max(depth(node.left, d + 1), depth(node.right, d + 1))

        return depth(self.root, 0)

    def check_invariants(self) -> None:
        """Raise AssertionError when any structural invariant is broken.

        Meant for tests and debugging: verifies the memory count, router
        normalization, leaf sizes against capacity/deferral flags, budget,
        and that every stored key routes from the root back to its leaf.
        """
        total = 0
        seen_leaves = []

        def visit(node: Node) -> None:
            nonlocal total
            if node.is_leaf:
                seen_leaves.append(node)
                total += node.n
                assert node.n < self.config.leaf_capacity or node.deferred, \
                    "unflagged leaf at or above capacity"
                return
            norm = float(np.linalg.norm(node.router))
            assert abs(norm - 1.0) <= 1e-9, f"router norm {norm} not unit"
            visit(node.left)
            visit(node.right)

        visit(self.root)
        assert total == self._count, "count does not match leaf contents"
        assert sorted(map(id, seen_leaves)) == sorted(map(id, self._leaves)), \
            "leaf registry out of sync"
        if self.config.memory_budget is not None:
            assert self._count <= self.config.memory_budget, "budget exceeded"
        for leaf in self._leaves:
            for i in range(leaf.n):
                assert self._descend(leaf.keys[i]) is leaf, "memory not routable to its leaf"
