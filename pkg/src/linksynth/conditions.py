"""Kinematic and quasi-static conditions of a mechanism.

d_max is the maximum pairwise distance between end-effector path points.
eta measures torque transmission: by work conservation
|tau_in * dtheta_in| = |F_out * dS_out|, so eta = |dtheta_in / dS_out| is
the output force the mechanism can exert per unit input torque at each
point of the path. eta_min is the larger of the two per-arc minima after
cutting the closed path at the two d_max-realizing points: the mechanism
only ever needs to traverse one of the two arcs, so the better arc's
worst-case force capacity is what bounds the payload.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from linksynth.kinematics import Linkage, Path, grashof_failure, sweep_path

# Row-block size for the O(N^2) pairwise scan; keeps the two scratch
# slabs cache-resident without changing the per-pair arithmetic.
_BLOCK_ROWS = 64


class InvalidLinkage(ValueError):
    """The linkage is not a valid crank-rocker."""


@dataclass(frozen=True)
class ConditionPair:
    """The two performance values of a mechanism.

    d_max in frame-length units; eta_min in radians per length (force per
    unit torque).
    """

    d_max: float
    eta_min: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d_max, self.eta_min])


@dataclass(frozen=True)
class EtaProfile:
    """Per-segment eta values plus the d_max split bookkeeping.

    eta[i] belongs to the segment from path point i to point (i+1) mod N;
    it spikes (to inf at an exact cusp sample) where the end-effector
    stalls, and dips where the end-effector sweeps fastest. The two arcs
    share the four segments incident to the split points; that can only
    lower each arc minimum, never inflate eta_min.
    """

    eta: np.ndarray
    split: tuple[int, int]
    eta_min_a: float
    eta_min_b: float


def compute_dmax(points: np.ndarray | Path) -> tuple[float, tuple[int, int]]:
    """Maximum pairwise Euclidean distance over path points, with the
    realizing index pair. Exact O(N^2) scan; the arithmetic per pair is
    identical to the naive double loop so it doubles as its own oracle."""
    if isinstance(points, Path):
        points = points.ee
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise ValueError("d_max needs at least two path points")
    x = np.ascontiguousarray(pts[:, 0])
    y = np.ascontiguousarray(pts[:, 1])
    best = -1.0
    best_ij = (0, 0)
    dx = np.empty((_BLOCK_ROWS, n))
    dy = np.empty((_BLOCK_ROWS, n))
    for r0 in range(0, n, _BLOCK_ROWS):
        r1 = min(r0 + _BLOCK_ROWS, n)
        rows = r1 - r0
        # columns start at r0: every i<j pair is covered by the slab whose
        # rows contain i, and argmax's row-major first-occurrence rule then
        # matches the ascending (i, j) double loop exactly
        w = n - r0
        a = dx[:rows, :w]
        b = dy[:rows, :w]
        np.subtract(x[r0:r1, None], x[None, r0:], out=a)
        np.subtract(y[r0:r1, None], y[None, r0:], out=b)
        np.multiply(a, a, out=a)
        np.multiply(b, b, out=b)
        np.add(a, b, out=a)
        k = int(np.argmax(a))
        m = float(a.flat[k])
        if m > best:
            best = m
            i, j = divmod(k, w)
            best_ij = (r0 + i, r0 + j)
    i, j = best_ij
    if i > j:
        i, j = j, i
    elif i == j:
        i, j = 0, 1  # all points coincide; any distinct pair realizes 0
    return float(np.sqrt(best)), (i, j)


def compute_eta_profile(path: Path, split: tuple[int, int] | None = None) -> EtaProfile:
    """Forward-difference eta per segment and the per-arc minima around the
    d_max split points (recomputed unless passed in)."""
    ee = path.ee
    n = len(ee)
    dtheta = 2.0 * np.pi / n
    step = np.linalg.norm(np.roll(ee, -1, axis=0) - ee, axis=1)
    with np.errstate(divide="ignore"):
        eta = dtheta / step
    p, q = compute_dmax(ee)[1] if split is None else split
    arc_a = _cyclic_range((p - 1) % n, q, n)
    arc_b = _cyclic_range((q - 1) % n, p, n)
    eta_min_a = float(eta[arc_a].min()) if len(arc_a) else float("inf")
    eta_min_b = float(eta[arc_b].min()) if len(arc_b) else float("inf")
    return EtaProfile(eta=eta, split=(p, q), eta_min_a=eta_min_a, eta_min_b=eta_min_b)


def _cyclic_range(start: int, stop: int, n: int) -> np.ndarray:
    """Segment indices start..stop inclusive, wrapping modulo n."""
    if stop >= start:
        return np.arange(start, stop + 1)
    return np.concatenate([np.arange(start, n), np.arange(0, stop + 1)])


def compute_eta_min(profile: EtaProfile) -> float:
    """The larger of the two arc minima (the usable arc is chosen by the
    designer, so the better one counts). Falls back to the surviving arc if
    a degenerate split left the other without segments."""
    a, b = profile.eta_min_a, profile.eta_min_b
    if not np.isfinite(a):
        return b
    if not np.isfinite(b):
        return a
    return max(a, b)


def evaluate(linkage: Linkage, n_steps: int = 360, branch: str = "open") -> ConditionPair:
    """Exact conditions of a linkage: sweep, d_max, eta profile, eta_min."""
    failure = grashof_failure(linkage)
    if failure is not None:
        raise InvalidLinkage(failure)
    path = sweep_path(linkage, n_steps, branch)
    d_max, split = compute_dmax(path.ee)
    profile = compute_eta_profile(path, split=split)
    return ConditionPair(d_max=d_max, eta_min=compute_eta_min(profile))


def evaluate_rows(rows: np.ndarray, n_steps: int = 360) -> np.ndarray:
    """Exact conditions for an array of linkage rows [M, 5] (all assumed
    valid); returns [M, 2] columns (d_max, eta_min). Pure per-row loop, safe
    to split across threads or processes."""
    out = np.empty((len(rows), 2))
    for i, row in enumerate(rows):
        pair = evaluate(Linkage(*row), n_steps=n_steps)
        out[i, 0] = pair.d_max
        out[i, 1] = pair.eta_min
    return out
