"""Progressive-validation runner, multi-seed aggregation and significance.

A run streams T environment rounds through a learner's predict/learn loop
and records the running mean reward (the progressive reward) at checkpoint
strides. Seeds aggregate into per-checkpoint mean and standard error, and
learner pairs are compared with Welch's unequal-variance t-test over their
per-seed final progressive rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import stdtr


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    seed: int
    stride: Optional[int] = None  # None -> horizon // 100, at least 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.horizon // 100)


@dataclass
class RunResult:
    seed: int
    checkpoints: list[tuple[int, float]]
    final: float
    truncated: bool = False


def run(learner, env, cfg: RunConfig) -> RunResult:
    """Progressive validation: predict, reveal the chosen reward, learn.

    The trace holds (t, mean reward up to t) at each stride and at the
    horizon. If the environment runs dry early the result is flagged
    truncated and ends at the last completed round.
    """
    stride = cfg.effective_stride
    total = 0.0
    checkpoints: list[tuple[int, float]] = []
    truncated = False
    t = 0
    while t < cfg.horizon:
        try:
            x, reveal = env.step()
        except StopIteration:
            truncated = True
            break
        t += 1
        a = learner.predict(x)
        y = reveal(a)
        learner.learn(x, a, y)
        total += y
        if t % stride == 0 or t == cfg.horizon:
            checkpoints.append((t, total / t))
    if truncated and t > 0 and (not checkpoints or checkpoints[-1][0] != t):
        checkpoints.append((t, total / t))
    final = checkpoints[-1][1] if checkpoints else 0.0
    return RunResult(seed=cfg.seed, checkpoints=checkpoints, final=final,
                     truncated=truncated)


@dataclass
class Aggregate:
    ts: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    n_seeds: int


def aggregate(results: Sequence[RunResult]) -> Aggregate:
    """Per-checkpoint mean and standard error across seeds.

    All results must share the same checkpoint grid; at least two are
    needed for a standard error.
    """
    if len(results) < 2:
        raise ValueError("need at least 2 results to aggregate")
    grid = [t for t, _ in results[0].checkpoints]
    for r in results[1:]:
        if [t for t, _ in r.checkpoints] != grid:
            raise ValueError("results have mismatched checkpoint grids")
    values = np.array([[v for _, v in r.checkpoints] for r in results])
    means = values.mean(axis=0)
    stderrs = values.std(axis=0, ddof=1) / math.sqrt(len(results))
    return Aggregate(ts=np.array(grid), means=means, stderrs=stderrs,
                     n_seeds=len(results))


@dataclass
class SignificanceOutcome:
    pair: tuple[str, str]
    t_stat: float
    df: float
    p_value: float
    winner: str        # one of the pair labels, or "tie"
    alpha: float


def welch_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05,
               labels: tuple[str, str] = ("a", "b")) -> SignificanceOutcome:
    """Welch's two-sided unequal-variance t-test on two samples of finals.

    The winner is the larger-mean side iff p < alpha. Two zero-variance
    samples compare by mean alone (p of 1 or 0).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 observations per sample")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    sa, sb = va / na, vb / nb
    if sa + sb == 0.0:
        df = float(na + nb - 2)
        if ma == mb:
            t_stat, p = 0.0, 1.0
        else:
            t_stat = math.inf if ma > mb else -math.inf
            p = 0.0
    else:
        t_stat = float((ma - mb) / math.sqrt(sa + sb))
        df = float((sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1)))
        p = float(2.0 * stdtr(df, -abs(t_stat)))
    if p < alpha and ma != mb:
        winner = labels[0] if ma > mb else labels[1]
    else:
        winner = "tie"
    return SignificanceOutcome(pair=labels, t_stat=t_stat, df=df, p_value=p,
                               winner=winner, alpha=alpha)


def run_records(result: RunResult, dataset: str, learner: str) -> list[dict]:
    """JSON-ready records: one per checkpoint plus a summary line."""
    records = [
        {"record": "checkpoint", "dataset": dataset, "learner": learner,
         "seed": result.seed, "t": t, "progressive_reward": value}
        for t, value in result.checkpoints
    ]
    last_t = result.checkpoints[-1][0] if result.checkpoints else 0
    summary = {"record": "summary", "dataset": dataset, "learner": learner,
               "seed": result.seed, "t": last_t,
               "progressive_reward": result.final}
    if result.truncated:
        summary["truncated"] = True
    records.append(summary)
    return records


def comparison_record(dataset: str, outcome: SignificanceOutcome) -> dict:
    return {"record": "comparison", "dataset": dataset,
            "learner_a": outcome.pair[0], "learner_b": outcome.pair[1],
            "t_stat": outcome.t_stat, "df": outcome.df,
            "p_value": outcome.p_value, "winner": outcome.winner,
            "alpha": outcome.alpha}
