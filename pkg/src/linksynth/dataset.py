"""Training-corpus generation, persistence and normalization.

The corpus is Latin-hypercube sampled inside the configured length ranges,
filtered to valid crank-rockers, and labeled with exact conditions. The
canonical on-disk format is a CSV (inspectable, ~8 MB at 100k rows) plus a
JSON metadata sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FilePath

import numpy as np

from linksynth import conditions
from linksynth.kinematics import FIELD_NAMES, LengthRanges, Linkage, _valid_mask

SCHEMA_VERSION = 1
CSV_HEADER = "l2,l3,l4,ee_x,ee_y,d_max,eta_min"


class FormatError(ValueError):
    """Malformed dataset file."""


class VersionError(FormatError):
    """Dataset or checkpoint schema version mismatch."""


@dataclass(frozen=True)
class MechanismSample:
    linkage: Linkage
    conditions: conditions.ConditionPair


@dataclass
class DatasetMeta:
    seed: int
    ranges: LengthRanges
    n_steps: int
    rejected_count: int
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ranges": self.ranges.to_dict(),
            "n_steps": self.n_steps,
            "rejected_count": self.rejected_count,
            "schema_version": self.schema_version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise VersionError(
                f"dataset schema_version {d.get('schema_version')!r}, expected {SCHEMA_VERSION}"
            )
        return cls(
            seed=d["seed"],
            ranges=LengthRanges.from_dict(d["ranges"]),
            n_steps=d["n_steps"],
            rejected_count=d["rejected_count"],
        )


@dataclass
class Dataset:
    """Labeled corpus backed by arrays: linkages [M, 5], conditions [M, 2]."""

    linkages: np.ndarray
    conditions: np.ndarray
    meta: DatasetMeta | None = None

    def __len__(self) -> int:
        return len(self.linkages)

    def __getitem__(self, i: int) -> MechanismSample:
        row = self.linkages[i]
        d, eta = self.conditions[i]
        return MechanismSample(Linkage(*row), conditions.ConditionPair(float(d), float(eta)))


def lhs_sample(
    n: int,
    ranges: LengthRanges | None = None,
    seed: int | None = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Latin hypercube sample of n linkage rows [n, 5].

    Each dimension is stratified into n equal bins with exactly one point
    per bin; bin order is permuted independently per dimension and the
    point jitters uniformly within its bin.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ranges = ranges or LengthRanges()
    rng = np.random.default_rng(seed) if rng is None else rng
    lo, hi = ranges.as_arrays()
    cols = []
    for d in range(len(FIELD_NAMES)):
        perm = rng.permutation(n)
        u = (perm + rng.random(n)) / n
        cols.append(lo[d] + u * (hi[d] - lo[d]))
    return np.stack(cols, axis=1)


def generate(
    n_valid_target: int,
    ranges: LengthRanges | None = None,
    n_steps: int = 360,
    seed: int = 0,
    progress: bool = False,
) -> Dataset:
    """LHS-sample batches, drop invalid linkages, label survivors with exact
    conditions, until n_valid_target valid samples accumulate."""
    if n_valid_target < 1:
        raise ValueError("n_valid_target must be >= 1")
    ranges = ranges or LengthRanges()
    rng = np.random.default_rng(seed)
    kept: list[np.ndarray] = []
    n_kept = 0
    rejected = 0
    batch = n_valid_target
    while n_kept < n_valid_target:
        rows = lhs_sample(batch, ranges, rng=rng)
        mask = _valid_mask(rows)
        valid = rows[mask]
        need = n_valid_target - n_kept
        if len(valid) > need:
            # count rejections only up to the cutoff draw, in draw order
            cut = int(np.nonzero(mask)[0][need - 1]) + 1
            rejected += cut - need
            valid = valid[:need]
        else:
            rejected += len(rows) - len(valid)
        kept.append(valid)
        n_kept += len(valid)
        if progress:
            print(f"  sampled batch of {batch}: {n_kept}/{n_valid_target} valid so far")
        rate = max(n_kept / max(rejected + n_kept, 1), 0.01)
        batch = max(int((n_valid_target - n_kept) / rate * 1.2) + 1, 64)
    linkages = np.concatenate(kept, axis=0)
    labels = conditions.evaluate_rows(linkages, n_steps=n_steps)
    meta = DatasetMeta(seed=seed, ranges=ranges, n_steps=n_steps, rejected_count=rejected)
    return Dataset(linkages=linkages, conditions=labels, meta=meta)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def save(dataset: Dataset, path: str | FilePath) -> None:
    """Write the CSV and its metadata sidecar <stem>.meta.json."""
    path = FilePath(path)
    lines = [CSV_HEADER]
    for row, cond in zip(dataset.linkages, dataset.conditions):
        lines.append(",".join(_fmt(v) for v in (*row, *cond)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if dataset.meta is not None:
        meta_path = path.with_suffix(".meta.json")
        meta_path.write_text(
            json.dumps(dataset.meta.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def load(path: str | FilePath) -> Dataset:
    """Read a dataset CSV (and sidecar metadata when present)."""
    path = FilePath(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != CSV_HEADER:
        raise FormatError(f"expected header '{CSV_HEADER}' in {path}")
    rows = np.empty((len(lines) - 1, 7))
    for i, ln in enumerate(lines[1:]):
        parts = ln.split(",")
        if len(parts) != 7:
            raise FormatError(f"row {i + 1} has {len(parts)} fields, expected 7")
        try:
            rows[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"row {i + 1}: {exc}") from exc
    meta = None
    meta_path = path.with_suffix(".meta.json")
    if meta_path.exists():
        try:
            meta = DatasetMeta.from_dict(json.loads(meta_path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError) as exc:
            raise FormatError(f"bad metadata sidecar {meta_path}: {exc}") from exc
    return Dataset(linkages=rows[:, :5], conditions=rows[:, 5:], meta=meta)


@dataclass
class Normalizer:
    """Per-field affine transforms mapping raw values onto [0, 1].

    Linkage fields scale by the configured ranges; condition fields by the
    observed dataset min/max (no a-priori bounds exist for conditions).
    norm = (x - offset) / scale.
    """

    linkage_offset: np.ndarray
    linkage_scale: np.ndarray
    cond_offset: np.ndarray
    cond_scale: np.ndarray

    def normalize_linkage(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.linkage_offset) / self.linkage_scale

    def denormalize_linkage(self, rows: np.ndarray) -> np.ndarray:
        return rows * self.linkage_scale + self.linkage_offset

    def normalize_conditions(self, pairs: np.ndarray) -> np.ndarray:
        return (pairs - self.cond_offset) / self.cond_scale

    def denormalize_conditions(self, pairs: np.ndarray) -> np.ndarray:
        return pairs * self.cond_scale + self.cond_offset

    def to_dict(self) -> dict:
        return {
            "linkage_offset": self.linkage_offset.tolist(),
            "linkage_scale": self.linkage_scale.tolist(),
            "cond_offset": self.cond_offset.tolist(),
            "cond_scale": self.cond_scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(
            linkage_offset=np.array(d["linkage_offset"], dtype=float),
            linkage_scale=np.array(d["linkage_scale"], dtype=float),
            cond_offset=np.array(d["cond_offset"], dtype=float),
            cond_scale=np.array(d["cond_scale"], dtype=float),
        )


def fit_normalizer(dataset: Dataset, ranges: LengthRanges | None = None) -> Normalizer:
    """Ranges (from metadata unless given) for linkage fields; observed
    min/max for condition fields."""
    if ranges is None:
        ranges = dataset.meta.ranges if dataset.meta is not None else LengthRanges()
    lo, hi = ranges.as_arrays()
    cond_lo = dataset.conditions.min(axis=0)
    cond_hi = dataset.conditions.max(axis=0)
    cond_scale = np.where(cond_hi > cond_lo, cond_hi - cond_lo, 1.0)
    return Normalizer(
        linkage_offset=lo,
        linkage_scale=hi - lo,
        cond_offset=cond_lo,
        cond_scale=cond_scale,
    )
