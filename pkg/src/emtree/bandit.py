"""Contextual-bandit learners built on the memory tree.

Three learners share a predict/learn interface and epsilon-greedy
exploration:

* ``TreeBandit`` queries the memory tree once per action on the
  context+one-hot-action key and acts on the returned reward estimates.
* ``ParametricBandit`` is a hashed linear regressor over bias, linear and
  pairwise-quadratic context features, one weight block per action, trained
  by squared-loss SGD with per-weight adaptive steps.
* ``StackedBandit`` feeds the tree's per-action reward estimate to the
  parametric model as one extra feature, learning from the decision-time
  estimate before the tree itself updates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .scorer import PairScorer
from .tree import EigenMemoryTree, TreeConfig

LEARNER_SPECS = ("emt", "emt-noself", "parametric", "pemt")

_MASK64 = (1 << 64) - 1


def _splitmix64(v: int) -> int:
    """Deterministic 64-bit mixer (process-independent, unlike hash())."""
    v = (v + 0x9E3779B97F4A7C15) & _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return v ^ (v >> 31)


def _child_rngs(seed, n: int) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


class KeyEncoder:
    """Encodes (context, action) pairs as tree keys: [x ; one-hot(action)]."""

    def __init__(self, context_dim: int, n_actions: int):
        if n_actions < 2:
            raise ValueError("need at least 2 actions")
        self.context_dim = int(context_dim)
        self.n_actions = int(n_actions)
        self.dim = self.context_dim + self.n_actions

    def encode(self, x: np.ndarray, a: int) -> np.ndarray:
        if not 0 <= a < self.n_actions:
            raise ValueError(f"action {a} out of range [0, {self.n_actions})")
        out = np.zeros(self.dim)
        out[: self.context_dim] = x
        out[self.context_dim + a] = 1.0
        return out


class EpsilonGreedy:
    """Uniform-random action with probability epsilon, else lowest-index argmax."""

    def __init__(self, epsilon: float, rng=None):
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)
        self._rng = np.random.default_rng(rng)
        self.select_count = 0
        self.explore_count = 0

    def select(self, estimates: np.ndarray) -> int:
        estimates = np.asarray(estimates, dtype=np.float64)
        if not np.isfinite(estimates).all():
            raise ValueError("estimates must be finite")
        self.select_count += 1
        k = len(estimates)
        if self._rng.random() < self.epsilon:
            self.explore_count += 1
            return int(self._rng.integers(k))
        return int(np.argmax(estimates))


class TreeBandit:
    """Epsilon-greedy learner acting on per-action memory-tree estimates."""

    def __init__(self, context_dim: int, n_actions: int, epsilon: float = 0.1,
                 leaf_capacity: int = 100, eta: float = 0.01,
                 scorer_variant: str = "abs_diff",
                 memory_budget: Optional[int] = None, seed=0):
        policy_rng, tree_rng, scorer_rng = _child_rngs(seed, 3)
        self.encoder = KeyEncoder(context_dim, n_actions)
        config = TreeConfig(leaf_capacity=leaf_capacity, memory_budget=memory_budget)
        scorer = PairScorer(self.encoder.dim, eta=eta, variant=scorer_variant, rng=scorer_rng)
        self.tree = EigenMemoryTree(self.encoder.dim, config, scorer, rng=tree_rng)
        self.policy = EpsilonGreedy(epsilon, rng=policy_rng)

    def action_estimates(self, x: np.ndarray) -> np.ndarray:
        """Queried reward per action; an empty query counts as 0."""
        est = np.zeros(self.encoder.n_actions)
        for a in range(self.encoder.n_actions):
            hit = self.tree.query(self.encoder.encode(x, a))
            if hit is not None:
                est[a] = hit[1]
        return est

    def predict(self, x: np.ndarray) -> int:
        return self.policy.select(self.action_estimates(x))

    def learn(self, x: np.ndarray, a: int, y: float) -> None:
        self.tree.learn(self.encoder.encode(x, a), y)


class HashedRegressor:
    """Per-action hashed linear model with AdaGrad-style steps.

    Features are positionally identified (bias, each linear term, each
    pairwise product x_i*x_j for i <= j, optionally one stacking slot) and
    hashed through splitmix64 into a 2**hash_bits block per action.
    """

    def __init__(self, context_dim: int, n_actions: int, hash_bits: int = 18,
                 base_lr: float = 0.5, stacking: bool = False):
        if n_actions < 2:
            raise ValueError("need at least 2 actions")
        if hash_bits < 1:
            raise ValueError("hash_bits must be >= 1")
        if base_lr <= 0:
            raise ValueError("base_lr must be positive")
        self.context_dim = int(context_dim)
        self.n_actions = int(n_actions)
        self.base_lr = float(base_lr)
        self.stacking = bool(stacking)
        d = self.context_dim
        self._iu, self._ju = np.triu_indices(d)
        n_feat = 1 + d + len(self._iu) + (1 if stacking else 0)
        size = 1 << hash_bits
        self._slots = np.array([_splitmix64(i) & (size - 1) for i in range(n_feat)],
                               dtype=np.int64)
        self.weights = np.zeros((self.n_actions, size))
        self.accumulators = np.zeros((self.n_actions, size))

    def features(self, x: np.ndarray, extra: Optional[float] = None) -> np.ndarray:
        d = self.context_dim
        phi = np.empty(len(self._slots))
        phi[0] = 1.0
        phi[1 : d + 1] = x
        phi[d + 1 : d + 1 + len(self._iu)] = x[self._iu] * x[self._ju]
        if self.stacking:
            if extra is None:
                raise ValueError("stacking regressor needs the extra feature value")
            phi[-1] = extra
        elif extra is not None:
            raise ValueError("extra feature passed to a non-stacking regressor")
        return phi

    def predict(self, x: np.ndarray, a: int, extra: Optional[float] = None) -> float:
        return _kernels.hashed_dot(self.weights[a], self._slots, self.features(x, extra))

    def learn(self, x: np.ndarray, a: int, y: float, extra: Optional[float] = None) -> None:
        phi = self.features(x, extra)
        pred = _kernels.hashed_dot(self.weights[a], self._slots, phi)
        err_scale = 2.0 * (pred - y)
        _kernels.hashed_adagrad_update(self.weights[a], self.accumulators[a],
                                       self._slots, phi, err_scale, self.base_lr)


class ParametricBandit:
    """Epsilon-greedy learner over the hashed linear model alone."""

    def __init__(self, context_dim: int, n_actions: int, epsilon: float = 0.1,
                 hash_bits: int = 18, base_lr: float = 0.5, seed=0):
        policy_rng = _child_rngs(seed, 3)[0]
        self.model = HashedRegressor(context_dim, n_actions, hash_bits, base_lr)
        self.n_actions = int(n_actions)
        self.policy = EpsilonGreedy(epsilon, rng=policy_rng)

    def action_estimates(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.model.predict(x, a) for a in range(self.n_actions)])

    def predict(self, x: np.ndarray) -> int:
        return self.policy.select(self.action_estimates(x))

    def learn(self, x: np.ndarray, a: int, y: float) -> None:
        self.model.learn(x, a, y)


class StackedBandit:
    """Parametric learner fed the tree's per-action estimate as one feature.

    The parametric update reuses the estimate cached at decision time, then
    the tree learns; the parametric model never sees post-update estimates
    it could not have acted on.
    """

    def __init__(self, context_dim: int, n_actions: int, epsilon: float = 0.1,
                 leaf_capacity: int = 100, eta: float = 0.01,
                 scorer_variant: str = "abs_diff",
                 memory_budget: Optional[int] = None,
                 hash_bits: int = 18, base_lr: float = 0.5, seed=0):
        policy_rng, tree_rng, scorer_rng = _child_rngs(seed, 3)
        self.encoder = KeyEncoder(context_dim, n_actions)
        config = TreeConfig(leaf_capacity=leaf_capacity, memory_budget=memory_budget)
        scorer = PairScorer(self.encoder.dim, eta=eta, variant=scorer_variant, rng=scorer_rng)
        self.tree = EigenMemoryTree(self.encoder.dim, config, scorer, rng=tree_rng)
        self.model = HashedRegressor(context_dim, n_actions, hash_bits, base_lr, stacking=True)
        self.n_actions = int(n_actions)
        self.policy = EpsilonGreedy(epsilon, rng=policy_rng)
        self._cached: Optional[tuple[np.ndarray, np.ndarray]] = None

    def tree_estimates(self, x: np.ndarray) -> np.ndarray:
        est = np.zeros(self.n_actions)
        for a in range(self.n_actions):
            hit = self.tree.query(self.encoder.encode(x, a))
            if hit is not None:
                est[a] = hit[1]
        return est

    def action_estimates(self, x: np.ndarray) -> np.ndarray:
        stack = self.tree_estimates(x)
        est = np.array([self.model.predict(x, a, extra=stack[a])
                        for a in range(self.n_actions)])
        self._cached = (np.array(x, dtype=np.float64, copy=True), stack)
        return est

    def predict(self, x: np.ndarray) -> int:
        return self.policy.select(self.action_estimates(x))

    def learn(self, x: np.ndarray, a: int, y: float) -> None:
        if self._cached is not None and np.array_equal(self._cached[0], x):
            stack = self._cached[1]
        else:
            warnings.warn("learn() without a matching predict(); recomputing the "
                          "stacking features from the current tree", RuntimeWarning)
            stack = self.tree_estimates(x)
        self._cached = None
        self.model.learn(x, a, y, extra=float(stack[a]))
        self.tree.learn(self.encoder.encode(x, a), y)


@dataclass
class LearnerParams:
    """Hyperparameters shared by the learner factory and the CLI."""

    epsilon: float = 0.1
    leaf_capacity: int = 100
    eta: float = 0.01
    memory_budget: Optional[int] = None
    hash_bits: int = 18
    base_lr: float = 0.5


def make_learner(spec: str, context_dim: int, n_actions: int,
                 params: LearnerParams, seed):
    if spec == "emt" or spec == "emt-noself":
        variant = "abs_diff" if spec == "emt" else "interaction"
        return TreeBandit(context_dim, n_actions, epsilon=params.epsilon,
                          leaf_capacity=params.leaf_capacity, eta=params.eta,
                          scorer_variant=variant,
                          memory_budget=params.memory_budget, seed=seed)
    if spec == "parametric":
        return ParametricBandit(context_dim, n_actions, epsilon=params.epsilon,
                                hash_bits=params.hash_bits,
                                base_lr=params.base_lr, seed=seed)
    if spec == "pemt":
        return StackedBandit(context_dim, n_actions, epsilon=params.epsilon,
                             leaf_capacity=params.leaf_capacity, eta=params.eta,
                             memory_budget=params.memory_budget,
                             hash_bits=params.hash_bits,
                             base_lr=params.base_lr, seed=seed)
    raise ValueError(f"unknown learner {spec!r}, expected one of {LEARNER_SPECS}")
