"""Eigen-routed episodic memory tree and contextual-bandit harness."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .bandit import (EpsilonGreedy, HashedRegressor, KeyEncoder, LearnerParams,
                     ParametricBandit, StackedBandit, TreeBandit, make_learner)
from .datasets import (BanditEnv, DatasetError, ScalingTransform,
                       SupervisedDataset, apply_scaling, fit_scaling, load_csv,
                       subsample, top_eigen_explained_variance)
from .evaluation import (Aggregate, RunConfig, RunResult, SignificanceOutcome,
                         aggregate, run, welch_test)
from .scorer import PairScorer, featurize_pair
from .tree import (EigenMemoryTree, Memory, Node, TreeConfig,
                   oja_top_eigenvector, route_side)

__all__ = [
    "BACKEND",
    "Aggregate",
    "BanditEnv",
    "DatasetError",
    "EigenMemoryTree",
    "EpsilonGreedy",
    "HashedRegressor",
    "KeyEncoder",
    "LearnerParams",
    "Memory",
    "Node",
    "PairScorer",
    "ParametricBandit",
    "RunConfig",
    "RunResult",
    "ScalingTransform",
    "SignificanceOutcome",
    "StackedBandit",
    "SupervisedDataset",
    "TreeBandit",
    "TreeConfig",
    "aggregate",
    "apply_scaling",
    "featurize_pair",
    "fit_scaling",
    "load_csv",
    "make_learner",
    "oja_top_eigenvector",
    "route_side",
    "run",
    "subsample",
    "top_eigen_explained_variance",
    "welch_test",
]
