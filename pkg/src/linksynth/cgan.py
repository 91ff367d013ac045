"""Conditional adversarial linkage synthesis.

The generator maps [noise z, target conditions] to the five linkage fields
(sigmoid head, so denormalized outputs always land inside the configured
length ranges). The discriminator scores (linkage, conditions) pairs. A
surrogate predictor, trained beforehand on the labeled corpus and frozen
throughout adversarial training, supplies the condition-matching loss; a
nearest-neighbor batch term rewards diversity. Fake target conditions are
interpolated between a real condition and one of its k nearest neighbors
so the discriminator never wins on unrealistic conditions alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from linksynth.dataset import Dataset, Normalizer, fit_normalizer
from linksynth.kinematics import Linkage
from linksynth import neuralnet as nn
from linksynth.neuralnet import (
    AdamState,
    MlpModel,
    TrainingConfig,
    adam_step,
    backward,
    bce_loss,
    forward,
    forward_cached,
    mlp_for,
    mse_loss,
    parameter_hash,
)


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass
class Predictor:
    """Frozen surrogate mapping normalized linkage fields to normalized
    (d_max, eta_min) estimates."""

    model: MlpModel
    normalizer: Normalizer
    frozen: bool = True

    def predict_normalized(self, rows_norm: np.ndarray) -> np.ndarray:
        return forward(self.model, rows_norm)

    def predict(self, rows_raw: np.ndarray) -> np.ndarray:
        x = self.normalizer.normalize_linkage(np.asarray(rows_raw, dtype=float))
        return self.normalizer.denormalize_conditions(forward(self.model, x))


@dataclass
class Generator:
    model: MlpModel
    normalizer: Normalizer
    noise_dim: int

    def synthesize_rows(self, conditions_raw: np.ndarray, seed: int = 0) -> np.ndarray:
        """Raw linkage rows [n, 5], one per condition pair, z ~ N(0, I)."""
        cond = np.atleast_2d(np.asarray(conditions_raw, dtype=float))
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((len(cond), self.noise_dim))
        c_norm = self.normalizer.normalize_conditions(cond)
        out = forward(self.model, np.concatenate([z, c_norm], axis=1))
        return self.normalizer.denormalize_linkage(out)


@dataclass
class Discriminator:
    model: MlpModel


@dataclass
class PredictorReport:
    rmse_d: float
    rmse_eta: float
    r2_d: float
    r2_eta: float
    n_train: int
    n_val: int

    def to_dict(self) -> dict:
        return {
            "rmse_d": self.rmse_d,
            "rmse_eta": self.rmse_eta,
            "r2_d": self.r2_d,
            "r2_eta": self.r2_eta,
            "n_train": self.n_train,
            "n_val": self.n_val,
        }


def train_predictor(
    dataset: Dataset,
    config: TrainingConfig | None = None,
    hidden_layers: int = 5,
    hidden_width: int = 20,
    val_fraction: float = 0.1,
) -> tuple[Predictor, PredictorReport]:
    """MSE-train the surrogate on a seeded 90/10 split; report held-out
    RMSE (raw units) and R^2 per condition."""
    config = config or TrainingConfig(learning_rate=1e-3, steps=200000)
    norm = fit_normalizer(dataset)
    x = norm.normalize_linkage(dataset.linkages)
    y = norm.normalize_conditions(dataset.conditions)
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(x))
    n_val = max(int(len(x) * val_fraction), 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    xt, yt = x[train_idx], y[train_idx]
    xv, yv = x[val_idx], y[val_idx]

    model = mlp_for(5, 2, hidden_layers, hidden_width, "identity", rng)
    state = AdamState.for_model(model, config.beta1, config.beta2, config.eps)
    for step in range(config.steps):
        idx = rng.integers(0, len(xt), config.batch_size)
        pred, caches = forward_cached(model, xt[idx])
        loss, grad = mse_loss(pred, yt[idx])
        if not np.isfinite(loss):
            raise DivergenceError("predictor training loss is non-finite", step)
        grads, _ = backward(model, caches, grad)
        # step decay keeps late training from bouncing around the optimum
        lr = config.learning_rate * (0.1 if step >= int(config.steps * 0.8) else 1.0)
        adam_step(model, grads, state, lr)

    pv = forward(model, xv)
    if not np.all(np.isfinite(pv)):
        raise DivergenceError("predictor validation output is non-finite", config.steps)
    err_raw = (pv - yv) * norm.cond_scale
    rmse = np.sqrt(np.mean(err_raw**2, axis=0))
    ss_res = np.sum((pv - yv) ** 2, axis=0)
    ss_tot = np.sum((yv - yv.mean(axis=0)) ** 2, axis=0)
    r2 = 1.0 - ss_res / ss_tot
    report = PredictorReport(
        rmse_d=float(rmse[0]),
        rmse_eta=float(rmse[1]),
        r2_d=float(r2[0]),
        r2_eta=float(r2[1]),
        n_train=len(xt),
        n_val=len(xv),
    )
    return Predictor(model=model, normalizer=norm), report


class ConditionSampler:
    """SMOTE-style fake-condition source: a real condition pair interpolated
    toward one of its k nearest neighbors (normalized condition space)."""

    def __init__(self, conditions_norm: np.ndarray, k: int = 5, seed: int = 0):
        self.ref = np.asarray(conditions_norm, dtype=float)
        if self.ref.ndim != 2 or len(self.ref) < 1:
            raise ValueError("reference condition set must be a nonempty [M, 2] array")
        self.k = min(k, len(self.ref) - 1)
        if self.k >= 1:
            _, idx = cKDTree(self.ref).query(self.ref, k=self.k + 1)
            self.neighbors = np.atleast_2d(idx)[:, 1:]
        else:
            self.neighbors = np.zeros((len(self.ref), 0), dtype=int)
        self.rng = np.random.default_rng(seed)

    def sample(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        rng = self.rng if rng is None else rng
        i = rng.integers(0, len(self.ref), n)
        if self.k < 1:
            return self.ref[i].copy()
        col = rng.integers(0, self.k, n)
        j = self.neighbors[i, col]
        lam = rng.random((n, 1))
        ci = self.ref[i]
        return ci + lam * (self.ref[j] - ci)


def sample_fake_conditions(sampler: ConditionSampler, n: int) -> np.ndarray:
    """Normalized fake condition pairs [n, 2] from the sampler's own stream."""
    return sampler.sample(n)


@dataclass
class GanTrainingConfig:
    # defaults are the flagship recipe: the faster discriminator rate keeps
    # the conditional spread honest (it is what pins per-field diversity to
    # the data posterior), and the loss weights sit above the ablation grid
    lr_g: float = 1e-3
    lr_d: float = 3e-3
    w_p: float = 1.0
    w_s: float = 0.05
    batch_size: int = 100
    steps: int = 20000
    noise_dim: int = 5
    k_neighbors: int = 5
    hidden_layers: int = 5
    hidden_width: int = 20
    use_predictor_loss: bool = True
    use_similarity_loss: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (similarity loss needs pairs)")
        if self.w_p < 0 or self.w_s < 0:
            raise ValueError("loss weights must be >= 0")

    @property
    def effective_w_p(self) -> float:
        return self.w_p if self.use_predictor_loss else 0.0

    @property
    def effective_w_s(self) -> float:
        return self.w_s if self.use_similarity_loss else 0.0


@dataclass
class GanHistory:
    """Per-step loss traces; l_gps is exactly l_g + w_p*l_p + w_s*l_s."""

    l_d: np.ndarray
    l_g: np.ndarray
    l_p: np.ndarray
    l_s: np.ndarray
    l_gps: np.ndarray
    w_p: float
    w_s: float


def _similarity_loss(xf: np.ndarray, want_grad: bool) -> tuple[float, np.ndarray | None]:
    """Negative mean nearest-distinct-neighbor distance over the batch, and
    its gradient w.r.t. the batch. Coincident pairs contribute zero gradient
    (any subgradient is valid at the kink)."""
    n = len(xf)
    diff = xf[:, None, :] - xf[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, np.inf)
    j = np.argmin(dist, axis=1)
    dmin = dist[np.arange(n), j]
    loss = -float(np.mean(dmin))
    if not want_grad:
        return loss, None
    safe = np.where(dmin > 0, dmin, 1.0)
    u = (xf - xf[j]) / safe[:, None]
    u[dmin == 0] = 0.0
    grad = -u / n
    np.add.at(grad, j, u / n)
    return loss, grad


def train_cgan(
    dataset: Dataset,
    predictor: Predictor,
    config: GanTrainingConfig | None = None,
) -> tuple[Generator, Discriminator, GanHistory]:
    """Alternating 1:1 discriminator/generator steps with fresh fake
    conditions each step; the predictor is never updated."""
    config = config or GanTrainingConfig()
    norm = predictor.normalizer
    x = norm.normalize_linkage(dataset.linkages)
    c = norm.normalize_conditions(dataset.conditions)
    m = len(x)
    b = config.batch_size
    nz = config.noise_dim
    w_p = config.effective_w_p
    w_s = config.effective_w_s

    rng = np.random.default_rng(config.seed)
    g_model = mlp_for(nz + 2, 5, config.hidden_layers, config.hidden_width, "sigmoid", rng)
    d_model = mlp_for(5 + 2, 1, config.hidden_layers, config.hidden_width, "sigmoid", rng)
    sampler = ConditionSampler(c, k=config.k_neighbors, seed=int(rng.integers(2**63)))
    g_state = AdamState.for_model(g_model)
    d_state = AdamState.for_model(d_model)

    hist = {k: np.empty(config.steps) for k in ("l_d", "l_g", "l_p", "l_s", "l_gps")}
    labels = np.concatenate([np.ones((b, 1)), np.zeros((b, 1))])

    for step in range(config.steps):
        # discriminator: real (linkage, true conditions) vs fake (G output,
        # sampled fake conditions)
        idx = rng.integers(0, m, b)
        cf = sampler.sample(b, rng=rng)
        z = rng.standard_normal((b, nz))
        xf = forward(g_model, np.concatenate([z, cf], axis=1))
        d_in = np.concatenate(
            [
                np.concatenate([x[idx], c[idx]], axis=1),
                np.concatenate([xf, cf], axis=1),
            ]
        )
        p, caches = forward_cached(d_model, d_in)
        l_d, grad_p = bce_loss(p, labels)
        d_grads, _ = backward(d_model, caches, grad_p)
        adam_step(d_model, d_grads, d_state, config.lr_d)

        # generator: non-saturating adversarial term plus weighted predictor
        # and similarity terms, all through fresh fake conditions
        cf = sampler.sample(b, rng=rng)
        z = rng.standard_normal((b, nz))
        xf, g_caches = forward_cached(g_model, np.concatenate([z, cf], axis=1))

        pd, d_caches = forward_cached(d_model, np.concatenate([xf, cf], axis=1))
        pc = np.clip(pd, 1e-7, 1.0 - 1e-7)
        l_g = -float(np.mean(np.log(pc)))
        _, d_in_grad = backward(d_model, d_caches, -1.0 / (b * pc))
        grad_x = d_in_grad[:, :5].copy()

        ph, p_caches = forward_cached(predictor.model, xf)
        l_p, p_grad = mse_loss(ph, cf)
        if w_p > 0:
            _, p_in_grad = backward(predictor.model, p_caches, p_grad)
            grad_x += w_p * p_in_grad

        l_s, s_grad = _similarity_loss(xf, want_grad=w_s > 0)
        if w_s > 0:
            grad_x += w_s * s_grad

        g_grads, _ = backward(g_model, g_caches, grad_x)
        adam_step(g_model, g_grads, g_state, config.lr_g)

        l_gps = l_g + w_p * l_p + w_s * l_s
        hist["l_d"][step] = l_d
        hist["l_g"][step] = l_g
        hist["l_p"][step] = l_p
        hist["l_s"][step] = l_s
        hist["l_gps"][step] = l_gps
        if not np.isfinite(l_gps) or not np.isfinite(l_d):
            raise DivergenceError("cGAN training loss is non-finite", step)

    history = GanHistory(w_p=w_p, w_s=w_s, **hist)
    generator = Generator(model=g_model, normalizer=norm, noise_dim=nz)
    return generator, Discriminator(model=d_model), history


def synthesize(generator: Generator, conditions, seed: int = 0) -> list[Linkage]:
    """One linkage per (d_t, eta_t) pair, deterministic for a fixed seed."""
    rows = generator.synthesize_rows(np.asarray(conditions, dtype=float), seed=seed)
    return [Linkage(*row) for row in rows]


MODEL_FLAGS = {
    "A": (False, False),
    "B": (True, False),
    "C": (False, True),
    "D": (True, True),
}

PAPER_GRID = (0.1, 0.01, 0.001, 0.0001)


@dataclass
class GridCell:
    lr_g: float
    lr_d: float
    w_p: float
    w_s: float
    l_p: float
    l_s: float
    diverged: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class GridSearchResult:
    model_label: str
    cells: list[GridCell]
    best_index: int

    @property
    def best(self) -> GridCell:
        return self.cells[self.best_index]

    def to_dict(self) -> dict:
        return {
            "model": self.model_label,
            "cells": [c.to_dict() for c in self.cells],
            "best_index": self.best_index,
        }


def evaluate_losses_through_predictor(
    generator: Generator,
    predictor: Predictor,
    sampler: ConditionSampler,
    n_eval: int = 1000,
    seed: int = 12345,
) -> tuple[float, float]:
    """Held-out (L_P, L_s) of a generator: fresh fake conditions, fresh noise,
    losses through the frozen predictor in normalized space."""
    rng = np.random.default_rng(seed)
    cf = sampler.sample(n_eval, rng=rng)
    z = rng.standard_normal((n_eval, generator.noise_dim))
    xf = forward(generator.model, np.concatenate([z, cf], axis=1))
    l_p, _ = mse_loss(forward(predictor.model, xf), cf)
    l_s, _ = _similarity_loss(xf, want_grad=False)
    return float(l_p), float(l_s)


def hyperparameter_grid_search(
    dataset: Dataset,
    predictor: Predictor,
    model_label: str = "D",
    lr_grid=PAPER_GRID,
    w_grid=PAPER_GRID,
    base_config: GanTrainingConfig | None = None,
    n_eval: int = 1000,
    eval_seed: int = 12345,
    progress: bool = False,
) -> GridSearchResult:
    """Train one model per grid cell and keep the one with the lowest
    held-out L_P; L_s is reported but never selected on (it is trivially
    gamed by spreading outputs)."""
    use_p, use_s = MODEL_FLAGS[model_label]
    base = base_config or GanTrainingConfig()
    wp_values = tuple(w_grid) if use_p else (0.0,)
    ws_values = tuple(w_grid) if use_s else (0.0,)
    eval_sampler = ConditionSampler(
        predictor.normalizer.normalize_conditions(dataset.conditions),
        k=base.k_neighbors,
        seed=eval_seed,
    )
    cells: list[GridCell] = []
    for lr_g, lr_d, w_p, w_s in itertools.product(lr_grid, lr_grid, wp_values, ws_values):
        config = replace(
            base,
            lr_g=lr_g,
            lr_d=lr_d,
            w_p=w_p,
            w_s=w_s,
            use_predictor_loss=use_p,
            use_similarity_loss=use_s,
        )
        try:
            generator, _, _ = train_cgan(dataset, predictor, config)
            l_p, l_s = evaluate_losses_through_predictor(
                generator, predictor, eval_sampler, n_eval=n_eval, seed=eval_seed
            )
            diverged = not (np.isfinite(l_p) and np.isfinite(l_s))
        except DivergenceError:
            l_p, l_s, diverged = float("inf"), float("inf"), True
        cells.append(GridCell(lr_g, lr_d, w_p, w_s, l_p, l_s, diverged))
        if progress:
            print(
                f"  [{model_label}] lr_g={lr_g:g} lr_d={lr_d:g} w_p={w_p:g} w_s={w_s:g}"
                f" -> L_P={l_p:.5f} L_s={l_s:.5f}{' (diverged)' if diverged else ''}"
            )
    finite = [c.l_p if not c.diverged else float("inf") for c in cells]
    best_index = int(np.argmin(finite))
    return GridSearchResult(model_label=model_label, cells=cells, best_index=best_index)


def save_generator(generator: Generator, path, metadata: dict | None = None) -> None:
    meta = {"kind": "generator", "noise_dim": generator.noise_dim}
    meta.update(metadata or {})
    nn.save_checkpoint(generator.model, generator.normalizer, meta, path)


def load_generator(path) -> Generator:
    model, norm, meta = nn.load_checkpoint(path)
    if meta.get("kind") != "generator" or norm is None:
        raise nn.VersionError(f"{path} is not a generator checkpoint")
    return Generator(model=model, normalizer=norm, noise_dim=int(meta["noise_dim"]))


def save_predictor(predictor: Predictor, path, metadata: dict | None = None) -> None:
    meta = {"kind": "predictor"}
    meta.update(metadata or {})
    nn.save_checkpoint(predictor.model, predictor.normalizer, meta, path)


def load_predictor(path) -> Predictor:
    model, norm, meta = nn.load_checkpoint(path)
    if meta.get("kind") != "predictor" or norm is None:
        raise nn.VersionError(f"{path} is not a predictor checkpoint")
    return Predictor(model=model, normalizer=norm)
