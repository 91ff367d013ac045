"""Crank-rocker four-bar geometry: validity, position analysis, path sweeps.

Conventions: the frame link A-D lies on the x-axis with A = (0, 0) and
D = (1, 0); the frame length is always 1.0 and the other links are ratios
to it. The crank A-B has length l2, the coupler B-C length l3, the rocker
C-D length l4. The end-effector rides on the coupler at offset
(ee_x, ee_y) in the frame whose origin is B and whose x-axis points at C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FRAME_LENGTH = 1.0

# Clamp tolerance on the squared half-chord of the circle-circle
# intersection; keeps toggle-adjacent geometry from raising NoAssembly.
_DISC_EPS = 1e-12


class NoAssembly(RuntimeError):
    """The coupler/rocker circles fail to intersect at some crank angle.

    Cannot happen for a valid crank-rocker; raised only on numerical or
    validity bugs upstream.
    """


class BranchDiscontinuity(RuntimeError):
    """Consecutive sweep samples jumped further than the continuity bound."""


@dataclass(frozen=True)
class Linkage:
    """Five free design parameters of a crank-rocker (frame fixed at 1.0)."""

    l2: float
    l3: float
    l4: float
    ee_x: float = 0.0
    ee_y: float = 0.0

    def __post_init__(self):
        if not (self.l2 > 0 and self.l3 > 0 and self.l4 > 0):
            raise ValueError(f"link lengths must be positive, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.l2, self.l3, self.l4, self.ee_x, self.ee_y])


FIELD_NAMES = ("l2", "l3", "l4", "ee_x", "ee_y")


@dataclass(frozen=True)
class LengthRanges:
    """Closed sampling intervals for the five linkage fields."""

    l2: tuple[float, float] = (0.05, 0.95)
    l3: tuple[float, float] = (0.05, 2.00)
    l4: tuple[float, float] = (0.05, 3.00)
    ee_x: tuple[float, float] = (-0.50, 2.50)
    ee_y: tuple[float, float] = (-1.50, 1.50)

    def __post_init__(self):
        for name in FIELD_NAMES:
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"range for {name} must satisfy min < max, got ({lo}, {hi})")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([getattr(self, n)[0] for n in FIELD_NAMES])
        hi = np.array([getattr(self, n)[1] for n in FIELD_NAMES])
        return lo, hi

    def contains(self, linkage: Linkage) -> bool:
        lo, hi = self.as_arrays()
        x = linkage.as_array()
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def to_dict(self) -> dict:
        return {n: list(getattr(self, n)) for n in FIELD_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "LengthRanges":
        return cls(**{n: tuple(d[n]) for n in FIELD_NAMES})


@dataclass(frozen=True)
class JointState:
    """Joint positions at one crank angle."""

    theta2: float
    b: np.ndarray
    c: np.ndarray
    ee: np.ndarray


@dataclass(frozen=True)
class Path:
    """Full-revolution sweep at uniform crank spacing; cyclic in theta."""

    theta: np.ndarray  # (N,) angles 2*pi*i/N
    b: np.ndarray  # (N, 2) crank tip
    c: np.ndarray  # (N, 2) coupler-rocker joint
    ee: np.ndarray  # (N, 2) end-effector

    def __len__(self) -> int:
        return len(self.theta)


def is_valid_crank_rocker(linkage: Linkage) -> bool:
    """True iff the crank l2 is strictly shortest and the strict Grashof
    crank-rocker inequality holds (shortest + longest < sum of the other two).

    The end-effector offsets never affect validity.
    """
    return bool(_valid_mask(linkage.as_array()[None, :])[0])


def _valid_mask(rows: np.ndarray) -> np.ndarray:
    """Vectorized validity over rows [M, 5] (columns l2, l3, l4, *, *)."""
    l2, l3, l4 = rows[:, 0], rows[:, 1], rows[:, 2]
    others = np.stack([np.full_like(l2, FRAME_LENGTH), l3, l4], axis=1)
    longest = others.max(axis=1)
    rest = others.sum(axis=1) - longest
    shortest_ok = (l2 < others.min(axis=1)) & (l2 > 0) & (l3 > 0) & (l4 > 0)
    return shortest_ok & (l2 + longest < rest)


def _solve_c(l2: float, l3: float, l4: float, theta: np.ndarray, branch: str):
    """Circle-circle intersection for the coupler-rocker joint C, vectorized
    over crank angles. Returns (b, c) arrays of shape (N, 2)."""
    bx = l2 * np.cos(theta)
    by = l2 * np.sin(theta)
    dx = FRAME_LENGTH - bx
    dy = -by
    d2 = dx * dx + dy * dy
    d = np.sqrt(d2)
    a = (d2 + l3 * l3 - l4 * l4) / (2.0 * d)
    h2 = l3 * l3 - a * a
    if np.any(h2 < -_DISC_EPS):
        worst = float(np.min(h2))
        raise NoAssembly(f"coupler/rocker circles do not intersect (h^2 = {worst:.3e})")
    h = np.sqrt(np.maximum(h2, 0.0))
    if branch == "crossed":
        h = -h
    elif branch != "open":
        raise ValueError(f"branch must be 'open' or 'crossed', got {branch!r}")
    ux = dx / d
    uy = dy / d
    cx = bx + a * ux - h * uy
    cy = by + a * uy + h * ux
    return np.stack([bx, by], axis=-1), np.stack([cx, cy], axis=-1)


def _ee_from_bc(b: np.ndarray, c: np.ndarray, l3: float, ee_x: float, ee_y: float) -> np.ndarray:
    u = (c - b) / l3
    # v = u rotated +90 degrees
    ee0 = b[..., 0] + ee_x * u[..., 0] - ee_y * u[..., 1]
    ee1 = b[..., 1] + ee_x * u[..., 1] + ee_y * u[..., 0]
    return np.stack([ee0, ee1], axis=-1)


def solve_position(linkage: Linkage, theta2: float, branch: str = "open") -> JointState:
    """Solve the loop closure at one crank angle.

    Open branch puts C on the positive-cross-product side of B->D.
    """
    theta = np.array([theta2], dtype=float)
    b, c = _solve_c(linkage.l2, linkage.l3, linkage.l4, theta, branch)
    ee = _ee_from_bc(b, c, linkage.l3, linkage.ee_x, linkage.ee_y)
    return JointState(theta2=float(theta2), b=b[0], c=c[0], ee=ee[0])


def sweep_path(linkage: Linkage, n_steps: int = 360, branch: str = "open") -> Path:
    """Sweep one full crank revolution at uniform spacing 2*pi/n_steps.

    Asserts branch continuity: a branch flip would reflect C across the
    B-D line (a jump of ~2h), so consecutive C samples must stay below a
    bound that tolerates fast-but-continuous rocker swings.
    """
    if n_steps < 8:
        raise ValueError(f"n_steps must be >= 8, got {n_steps}")
    theta = 2.0 * np.pi * np.arange(n_steps) / n_steps
    b, c = _solve_c(linkage.l2, linkage.l3, linkage.l4, theta, branch)
    gaps = np.linalg.norm(np.diff(c, axis=0, append=c[:1]), axis=1)
    bound = 0.5 * (linkage.l3 + linkage.l4) + 16.0 * np.pi * (
        linkage.l2 + linkage.l3 + linkage.l4 + FRAME_LENGTH
    ) / n_steps
    worst = float(gaps.max())
    if worst >= bound:
        raise BranchDiscontinuity(
            f"consecutive C samples jumped {worst:.4f} (bound {bound:.4f}); "
            "branch flip or numerical failure"
        )
    ee = _ee_from_bc(b, c, linkage.l3, linkage.ee_x, linkage.ee_y)
    return Path(theta=theta, b=b, c=c, ee=ee)


def grashof_failure(linkage: Linkage) -> str | None:
    """Name of the violated crank-rocker condition, or None if valid."""
    l2, l3, l4 = linkage.l2, linkage.l3, linkage.l4
    others = [FRAME_LENGTH, l3, l4]
    if not l2 < min(others):
        return "crank not shortest: l2 must be strictly shorter than l1=1, l3 and l4"
    longest = max(others)
    rest = sum(others) - longest
    if not l2 + longest < rest:
        return (
            f"Grashof sum failed: l2 + longest = {l2 + longest:.6g} "
            f"must be < sum of the other two = {rest:.6g}"
        )
    return None


def loop_closure_residuals(linkage: Linkage, state: JointState) -> tuple[float, float]:
    """Signed residuals |C-B| - l3 and |C-D| - l4 (zero when the loop closes)."""
    r3 = math.hypot(state.c[0] - state.b[0], state.c[1] - state.b[1]) - linkage.l3
    r4 = math.hypot(state.c[0] - FRAME_LENGTH, state.c[1]) - linkage.l4
    return r3, r4
