"""Single entry point for the whole pipeline: data generation, predictor
and cGAN training, grid search, synthesis, the NSGA-II baseline,
evaluation, the HTTP service, and an end-to-end reproduction run.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FilePath

import numpy as np

from linksynth import cgan, conditions, dataset as ds, evaluation, nsga2
from linksynth.kinematics import LengthRanges, _valid_mask
from linksynth.neuralnet import TrainingConfig

SAMPLE_CSV_HEADER = "l2,l3,l4,ee_x,ee_y,d_t,eta_t,d_r,eta_r"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _say(args, *msg) -> None:
    if not getattr(args, "quiet", False):
        print(*msg)


def _cfg(args, key, fallback):
    """Flag value if given, else config-file value, else fallback."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    return args._config.get(key.replace("_", "-"), args._config.get(key, fallback))


def _load_ranges(args) -> LengthRanges:
    path = _cfg(args, "ranges", None)
    if path is None:
        return LengthRanges()
    return LengthRanges.from_dict(json.loads(FilePath(path).read_text(encoding="utf-8")))


def _write_sample_csv(path, rows, targets, actuals, valid, extra_header="", extra_rows=None):
    lines = [SAMPLE_CSV_HEADER + extra_header]
    for i in range(len(rows)):
        cells = [_fmt(v) for v in rows[i]] + [_fmt(v) for v in targets[i]]
        if valid[i]:
            cells += [_fmt(actuals[i][0]), _fmt(actuals[i][1])]
        else:
            cells += ["", ""]
        if extra_rows is not None:
            cells += extra_rows[i]
        lines.append(",".join(cells))
    FilePath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_gen_data(args) -> int:
    n = int(_cfg(args, "n", 100000))
    seed = int(_cfg(args, "seed", 42))
    steps = int(_cfg(args, "steps", 360))
    ranges = _load_ranges(args)
    _say(args, f"generating {n} valid samples (seed {seed}, {steps} sweep steps)")
    data = ds.generate(n, ranges=ranges, n_steps=steps, seed=seed, progress=not args.quiet)
    ds.save(data, args.out)
    _say(args, f"wrote {len(data)} rows to {args.out} "
               f"({data.meta.rejected_count} rejected draws)")
    return 0


def cmd_train_predictor(args) -> int:
    data = ds.load(_cfg(args, "data", "train.csv"))
    config = TrainingConfig(
        learning_rate=float(_cfg(args, "lr", 1e-3)),
        batch_size=int(_cfg(args, "batch", 100)),
        steps=int(_cfg(args, "train_steps", 200000)),
        seed=int(_cfg(args, "seed", 0)),
    )
    predictor, report = cgan.train_predictor(data, config)
    meta = {
        "seed": config.seed,
        "config": {"learning_rate": config.learning_rate, "batch_size": config.batch_size,
                   "steps": config.steps},
        "validation": report.to_dict(),
    }
    cgan.save_predictor(predictor, args.out, meta)
    _say(args, f"predictor: R2_d={report.r2_d:.4f} R2_eta={report.r2_eta:.4f} -> {args.out}")
    return 0


def _gan_config(args) -> cgan.GanTrainingConfig:
    return cgan.GanTrainingConfig(
        lr_g=float(_cfg(args, "lr_g", 1e-3)),
        lr_d=float(_cfg(args, "lr_d", 1e-3)),
        w_p=float(_cfg(args, "wp", 1.0)),
        w_s=float(_cfg(args, "ws", 0.1)),
        batch_size=int(_cfg(args, "batch", 100)),
        steps=int(_cfg(args, "train_steps", 20000)),
        seed=int(_cfg(args, "seed", 0)),
        use_predictor_loss=not args.no_predictor_loss,
        use_similarity_loss=not args.no_similarity_loss,
    )


def cmd_train_cgan(args) -> int:
    data = ds.load(_cfg(args, "data", "train.csv"))
    predictor = cgan.load_predictor(args.predictor)
    config = _gan_config(args)
    generator, _, history = cgan.train_cgan(data, predictor, config)
    meta = {
        "seed": config.seed,
        "config": {
            "lr_g": config.lr_g, "lr_d": config.lr_d,
            "w_p": config.w_p, "w_s": config.w_s,
            "batch_size": config.batch_size, "steps": config.steps,
            "use_predictor_loss": config.use_predictor_loss,
            "use_similarity_loss": config.use_similarity_loss,
        },
        "final_losses": {
            "l_d": history.l_d[-1], "l_g": history.l_g[-1],
            "l_p": history.l_p[-1], "l_s": history.l_s[-1],
            "l_gps": history.l_gps[-1],
        },
    }
    cgan.save_generator(generator, args.out, meta)
    _say(args, f"cGAN trained {config.steps} steps: "
               f"L_P={history.l_p[-1]:.5f} L_s={history.l_s[-1]:.5f} -> {args.out}")
    return 0


def cmd_grid_search(args) -> int:
    data = ds.load(_cfg(args, "data", "train.csv"))
    predictor = cgan.load_predictor(args.predictor)
    lr_grid = tuple(float(v) for v in _cfg(args, "lrs", list(cgan.PAPER_GRID)))
    w_grid = tuple(float(v) for v in _cfg(args, "weights", list(cgan.PAPER_GRID)))
    base = cgan.GanTrainingConfig(
        steps=int(_cfg(args, "train_steps", 2000)),
        batch_size=int(_cfg(args, "batch", 100)),
        seed=int(_cfg(args, "seed", 0)),
    )
    result = cgan.hyperparameter_grid_search(
        data, predictor, model_label=args.model,
        lr_grid=lr_grid, w_grid=w_grid, base_config=base,
        progress=not args.quiet,
    )
    FilePath(args.out).write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    best = result.best
    _say(args, f"model {args.model}: best cell lr_g={best.lr_g:g} lr_d={best.lr_d:g} "
               f"w_p={best.w_p:g} w_s={best.w_s:g} (L_P={best.l_p:.5f})")
    return 0


def cmd_synthesize(args) -> int:
    generator = cgan.load_generator(args.model)
    n = int(_cfg(args, "n", 100))
    seed = int(_cfg(args, "seed", 0))
    steps = int(_cfg(args, "steps", 360))
    targets = np.tile([float(args.dmax), float(args.eta)], (n, 1))
    rows = generator.synthesize_rows(targets, seed=seed)
    valid = _valid_mask(rows)
    actuals = np.full((n, 2), np.nan)
    if valid.any():
        actuals[valid] = conditions.evaluate_rows(rows[valid], n_steps=steps)
    _write_sample_csv(args.out, rows, targets, actuals, valid)
    _say(args, f"wrote {n} samples ({int(valid.sum())} valid) to {args.out}")
    return 0


def cmd_nsga2(args) -> int:
    predictor = cgan.load_predictor(args.predictor)
    pop = nsga2.optimize(
        (float(args.dmax), float(args.eta)),
        predictor,
        pop_size=int(_cfg(args, "pop", 100)),
        generations=int(_cfg(args, "gens", 200)),
        seed=int(_cfg(args, "seed", 0)),
        n_steps=int(_cfg(args, "steps", 360)),
    )
    rows = predictor.normalizer.denormalize_linkage(pop.genes_array())
    n = len(rows)
    targets = np.tile(pop.target, (n, 1))
    actuals = np.full((n, 2), np.nan)
    valid = np.zeros(n, dtype=bool)
    extra = []
    for i, ind in enumerate(pop.individuals):
        valid[i] = bool(ind.valid)
        if ind.conditions is not None:
            actuals[i] = ind.conditions
        extra.append([str(int(ind.valid)), str(ind.rank)])
    _write_sample_csv(args.out, rows, targets, actuals, valid,
                      extra_header=",valid,rank", extra_rows=extra)
    _say(args, f"NSGA-II: {pop.invalid_count} invalid, {pop.duplicate_count} duplicates "
               f"-> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    generator = cgan.load_generator(args.model)
    n = int(_cfg(args, "n", 100))
    seed = int(_cfg(args, "seed", 0))
    steps = int(_cfg(args, "steps", 360))
    if args.mode == "multi":
        if args.data is None:
            raise ValueError("--data is required in multi mode (k-NN condition source)")
        data = ds.load(args.data)
        sampler = cgan.ConditionSampler(
            generator.normalizer.normalize_conditions(data.conditions), seed=seed
        )
        source = evaluation.KnnSampled(n=n, sampler=sampler)
    else:
        source = evaluation.Fixed(d_t=float(args.dmax), eta_t=float(args.eta), n=n)
    record = evaluation.evaluate_model(generator, source, seed=seed, n_steps=steps)
    FilePath(args.report).write_text(
        json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _say(args, json.dumps(record.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from linksynth.service import create_app_from_paths

    app = create_app_from_paths(args.model, args.dataset, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=int(args.port), log_level="warning")
    return 0


def cmd_repro(args) -> int:
    scale = float(_cfg(args, "scale", 1.0))
    seed = int(_cfg(args, "seed", 42))
    out_dir = FilePath(_cfg(args, "out_dir", "repro"))
    out_dir.mkdir(parents=True, exist_ok=True)
    n_data = max(int(100000 * scale), 500)
    pred_steps = max(int(200000 * scale), 3000)
    gan_steps = max(int(20000 * scale), 1500)
    n_multi = max(int(100000 * scale), 200)
    gens = max(int(200 * scale), 20)

    _say(args, f"[1/5] dataset: {n_data} samples")
    data = ds.generate(n_data, n_steps=360, seed=seed)
    ds.save(data, out_dir / "train.csv")

    _say(args, f"[2/5] predictor: {pred_steps} steps")
    predictor, pred_report = cgan.train_predictor(
        data, TrainingConfig(steps=pred_steps, seed=seed)
    )
    cgan.save_predictor(predictor, out_dir / "predictor.json", {"seed": seed})

    _say(args, f"[3/5] cGAN: {gan_steps} steps")
    config = cgan.GanTrainingConfig(steps=gan_steps, seed=seed)
    generator, _, history = cgan.train_cgan(data, predictor, config)
    cgan.save_generator(generator, out_dir / "generator.json", {"seed": seed})

    _say(args, f"[4/5] evaluation: {n_multi} k-NN conditions + fixed (1.0, 2.0)")
    sampler = cgan.ConditionSampler(
        predictor.normalizer.normalize_conditions(data.conditions), seed=seed
    )
    multi = evaluation.evaluate_model(
        generator, evaluation.KnnSampled(n=n_multi, sampler=sampler), seed=seed
    )
    single = evaluation.evaluate_model(
        generator, evaluation.Fixed(d_t=1.0, eta_t=2.0, n=100), seed=seed
    )

    _say(args, f"[5/5] NSGA-II baseline: 4 targets, pop 100, {gens} generations")
    nsga_rows = []
    for d_t, eta_t in ((0.4, 5.0), (1.0, 2.0), (2.0, 1.5), (2.5, 1.0)):
        pop = nsga2.optimize((d_t, eta_t), predictor, pop_size=100,
                             generations=gens, seed=seed)
        errs = [
            (abs(c[0] - d_t) + abs(c[1] - eta_t)) / 2.0
            for ind in pop.individuals
            if (c := ind.conditions) is not None
        ]
        nsga_rows.append({
            "d_t": d_t, "eta_t": eta_t,
            "mae": float(np.mean(errs)) if errs else None,
            "invalid_pct": 100.0 * pop.invalid_count / len(pop.individuals),
            "duplicate_pct": 100.0 * pop.duplicate_count / len(pop.individuals),
            "similarity": evaluation.similarity_metric(pop.genes_array()),
        })

    report = {
        "scale": scale,
        "seed": seed,
        "dataset": {"n": len(data), "rejected": data.meta.rejected_count},
        "predictor": pred_report.to_dict(),
        "cgan_final_losses": {"l_p": history.l_p[-1], "l_s": history.l_s[-1]},
        "eval_multi": multi.to_dict(),
        "eval_single": single.to_dict(),
        "nsga2": nsga_rows,
    }
    path = out_dir / "repro-report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _say(args, f"wrote {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="linksynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", type=str, default=None, help="JSON config file; flags win")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("gen-data", help="generate the labeled training corpus")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--ranges", type=str, default=None, help="JSON length-ranges file")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-predictor", help="train the condition surrogate")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--train-steps", type=int, default=None, dest="train_steps")
    common(p)
    p.set_defaults(func=cmd_train_predictor)

    p = sub.add_parser("train-cgan", help="adversarial training with frozen predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--predictor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wp", type=float, default=None)
    p.add_argument("--ws", type=float, default=None)
    p.add_argument("--lr-g", type=float, default=None, dest="lr_g")
    p.add_argument("--lr-d", type=float, default=None, dest="lr_d")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--train-steps", type=int, default=None, dest="train_steps")
    p.add_argument("--no-predictor-loss", action="store_true")
    p.add_argument("--no-similarity-loss", action="store_true")
    common(p)
    p.set_defaults(func=cmd_train_cgan)

    p = sub.add_parser("grid-search", help="hyperparameter grid over one ablation model")
    p.add_argument("--data", required=True)
    p.add_argument("--predictor", required=True)
    p.add_argument("--model", choices=sorted(cgan.MODEL_FLAGS), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lrs", type=float, nargs="+", default=None)
    p.add_argument("--weights", type=float, nargs="+", default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--train-steps", type=int, default=None, dest="train_steps")
    common(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("synthesize", help="generate linkages for one condition pair")
    p.add_argument("--model", required=True)
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("nsga2", help="NSGA-II baseline toward one condition pair")
    p.add_argument("--predictor", required=True)
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--pop", type=int, default=None)
    p.add_argument("--gens", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_nsga2)

    p = sub.add_parser("evaluate", help="score a trained generator")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("multi", "single"), required=True)
    p.add_argument("--data", default=None, help="dataset CSV (multi mode)")
    p.add_argument("--dmax", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--report", required=True)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="HTTP facade for the explorer UI")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default=None, dest="ui_dir")
    common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("repro", help="end-to-end pipeline at configurable scale")
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--out-dir", default=None, dest="out_dir")
    common(p)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    config = {}
    if getattr(args, "config", None):
        config = json.loads(FilePath(args.config).read_text(encoding="utf-8"))
    args._config = config
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
