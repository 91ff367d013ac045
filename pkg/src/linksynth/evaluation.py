"""Synthesis quality metrics: condition-matching errors, diversity, spread.

Target conditions go in, generated linkages come out, actual conditions are
recomputed with exact kinematics (never the surrogate, which would hide its
own error) and compared against the targets in raw units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from linksynth import conditions as cond_mod
from linksynth.kinematics import FIELD_NAMES, _valid_mask


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mae(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.mean(np.abs(a - b)))


def r_squared(targets, actuals) -> float:
    """1 - SS_res/SS_tot with SS_tot about the target mean. Raises on a
    constant target set, where the score is undefined."""
    t = np.asarray(targets, dtype=float)
    a = np.asarray(actuals, dtype=float)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R^2 is undefined when all targets are identical")
    ss_res = float(np.sum((a - t) ** 2))
    return 1.0 - ss_res / ss_tot


def similarity_metric(rows_norm: np.ndarray) -> float:
    """Negative mean nearest-distinct-neighbor Euclidean distance; 0 means
    total collapse, more negative means more diverse."""
    x = np.atleast_2d(np.asarray(rows_norm, dtype=float))
    n = len(x)
    if n < 2:
        return 0.0
    if n <= 2000:
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, np.inf)
        return -float(np.mean(dist.min(axis=1)))
    d, _ = cKDTree(x).query(x, k=2)
    return -float(np.mean(d[:, 1]))


def field_stddev(rows: np.ndarray) -> np.ndarray:
    """Population standard deviation per linkage field (raw units)."""
    return np.std(np.atleast_2d(np.asarray(rows, dtype=float)), axis=0)


@dataclass(frozen=True)
class KnnSampled:
    """Evaluate against n fake conditions drawn by the k-NN sampler."""

    n: int
    sampler: object  # ConditionSampler; duck-typed to avoid a module cycle


@dataclass(frozen=True)
class Fixed:
    """Evaluate n samples against one repeated condition pair (diversity
    probe; R^2 is meaningless here and reported as None)."""

    d_t: float
    eta_t: float
    n: int


@dataclass
class EvaluationRecord:
    mode: str
    targets: np.ndarray  # [n, 2] raw (d_t, eta_t)
    linkage_rows: np.ndarray  # [n, 5] raw
    actuals: np.ndarray  # [n, 2] raw, NaN rows where invalid
    valid_mask: np.ndarray
    metrics: dict
    field_std: np.ndarray
    similarity: float
    invalid_rate: float
    seed: int

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "n": len(self.targets),
            "invalid_rate": self.invalid_rate,
            "similarity": self.similarity,
            "field_std": {k: float(v) for k, v in zip(FIELD_NAMES, self.field_std)},
            "seed": self.seed,
        }
        out.update(self.metrics)
        return out


def evaluate_model(generator, source, seed: int = 0, n_steps: int = 360) -> EvaluationRecord:
    """Sample or repeat target conditions, synthesize, recompute exact
    conditions, and score. Invalid generated linkages (range-valid is not
    Grashof-valid) are excluded from the error metrics and reported as a
    rate."""
    rng = np.random.default_rng(seed)
    if isinstance(source, KnnSampled):
        mode = "multi"
        cond_norm = source.sampler.sample(source.n, rng=rng)
        targets = generator.normalizer.denormalize_conditions(cond_norm)
    elif isinstance(source, Fixed):
        mode = "single"
        targets = np.tile([source.d_t, source.eta_t], (source.n, 1))
    else:
        raise TypeError(f"unsupported condition source {source!r}")

    rows = generator.synthesize_rows(targets, seed=int(rng.integers(2**63)))
    valid = _valid_mask(rows)
    actuals = np.full_like(targets, np.nan)
    if valid.any():
        actuals[valid] = cond_mod.evaluate_rows(rows[valid], n_steps=n_steps)

    metrics: dict = {}
    t_val, a_val = targets[valid], actuals[valid]
    for col, tag in ((0, "d"), (1, "eta")):
        t, a = t_val[:, col], a_val[:, col]
        metrics[f"rmse_{tag}"] = rmse(t, a) if len(t) else float("nan")
        metrics[f"mae_{tag}"] = mae(t, a) if len(t) else float("nan")
        constant = len(t) == 0 or np.all(t == t[0])
        metrics[f"r2_{tag}"] = None if constant else r_squared(t, a)
        if len(t) and metrics[f"rmse_{tag}"] < metrics[f"mae_{tag}"]:
            raise RuntimeError(f"RMSE < MAE for {tag}: metric implementation bug")

    record = EvaluationRecord(
        mode=mode,
        targets=targets,
        linkage_rows=rows,
        actuals=actuals,
        valid_mask=valid,
        metrics=metrics,
        field_std=field_stddev(rows),
        similarity=similarity_metric(generator.normalizer.normalize_linkage(rows)),
        invalid_rate=float(1.0 - valid.mean()),
        seed=seed,
    )
    return record
