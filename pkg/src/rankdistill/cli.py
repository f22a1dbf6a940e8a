"""Command-line entry point wiring the library into reproducible runs.

Subcommands: gen-data, train, distill, eval, export-scores, gradcheck,
theorem1, noisy-sweep. Every output path is an explicit flag; commands
taking --seed are bit-reproducible. Exit codes: 0 success, 1 data/config
error (diagnostic names the originating error), 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import data as dmod
from . import distill as kd
from . import gradcheck as gc
from . import metrics as mmod
from . import model as nnmod
from . import theory
from . import training as tmod
from .errors import InvalidConfig, RankDistillError
from .losses import LossKind


def parse_transform_flag(text: str) -> kd.AffineTransform | kd.SoftmaxTransform:
    """`a,b` selects the affine transform; `softmax:T` the temperature one."""
    if text.startswith("softmax:"):
        return kd.SoftmaxTransform(temperature=float(text.split(":", 1)[1]))
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidConfig(
            f"bad --transform {text!r}; expected 'a,b' or 'softmax:T'")
    return kd.AffineTransform(a=float(parts[0]), b=float(parts[1]))


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rankdistill",
        description="learning-to-rank training, evaluation, and "
                    "self-distillation")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write synthetic SVMLight data")
    g.add_argument("--config", required=True,
                   help="JSON file with SyntheticConfig fields")
    g.add_argument("--seed", type=int, help="override the config's rng_seed")
    g.add_argument("--out", help="single output file")
    g.add_argument("--split", help="train,valid,test fractions, e.g. 0.8,0.1,0.1")
    g.add_argument("--out-train")
    g.add_argument("--out-valid")
    g.add_argument("--out-test")

    t = sub.add_parser("train", help="train a ranker")
    t.add_argument("--data", required=True, help="training SVMLight file")
    t.add_argument("--valid", required=True, help="validation SVMLight file")
    t.add_argument("--config", required=True,
                   help="JSON file with TrainConfig fields")
    t.add_argument("--loss", choices=[k.value for k in LossKind])
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="model checkpoint path")
    t.add_argument("--history", help="training-history CSV path")

    d = sub.add_parser("distill", help="train a student against teacher scores")
    d.add_argument("--data", required=True)
    d.add_argument("--valid", required=True)
    d.add_argument("--config", required=True)
    d.add_argument("--teacher-scores", required=True)
    d.add_argument("--alpha", type=float)
    d.add_argument("--transform", help="'a,b' or 'softmax:T'")
    d.add_argument("--loss", choices=[k.value for k in LossKind],
                   help="base loss override")
    d.add_argument("--distill-loss", choices=[k.value for k in LossKind])
    d.add_argument("--seed", type=int)
    d.add_argument("--out", required=True)
    d.add_argument("--history")

    e = sub.add_parser("eval", help="evaluate a model, write NDCG TSV")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)

    x = sub.add_parser("export-scores", help="write teacher scores for a dataset")
    x.add_argument("--data", required=True)
    x.add_argument("--model", required=True)
    x.add_argument("--out", required=True)

    c = sub.add_parser("gradcheck",
                       help="finite-difference check of analytic gradients")
    c.add_argument("--loss", choices=[k.value for k in LossKind],
                   help="check one loss (default: all)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--trials", type=int, default=100)

    sub.add_parser("theorem1", help="print the toy self-distillation example")

    n = sub.add_parser("noisy-sweep",
                       help="alpha sweep with corrupted labels")
    n.add_argument("--n", type=int, required=True, help="training points")
    n.add_argument("--m", type=int, required=True, help="corrupted points")
    n.add_argument("--alphas", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1",
                   help="comma-separated alpha grid")
    n.add_argument("--trials", type=int, default=50)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--fitter", choices=["gradient", "toy"], default="gradient",
                   help="gradient: fixed-budget neural fit (slower, shows "
                        "the blend-weight effect); toy: single-parameter "
                        "descent")
    n.add_argument("--out", required=True, help="sweep CSV path")

    return p


def _read_dataset(path: str, name: str = "") -> dmod.Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return dmod.parse_svmlight(fh, name=name or path)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _cmd_gen_data(args) -> int:
    cfg = dmod.load_synthetic_config(args.config)
    if args.seed is not None:
        cfg.rng_seed = args.seed
    ds = dmod.generate_synthetic(cfg)
    if args.split:
        fractions = tuple(float(v) for v in args.split.split(","))
        targets = (args.out_train, args.out_valid, args.out_test)
        if any(t is None for t in targets):
            raise InvalidConfig(
                "--split needs --out-train, --out-valid and --out-test")
        parts = dmod.split(ds, fractions, seed=cfg.rng_seed)
        for part, path in zip(parts, targets):
            _write_text(path, dmod.write_svmlight(part))
            print(f"wrote {part.n_queries} queries to {path}")
    else:
        if args.out is None:
            raise InvalidConfig("gen-data needs --out (or --split with "
                                "--out-train/--out-valid/--out-test)")
        _write_text(args.out, dmod.write_svmlight(ds))
        print(f"wrote {ds.n_queries} queries to {args.out}")
    return 0


def _apply_common_overrides(cfg: tmod.TrainConfig, args) -> tmod.TrainConfig:
    if getattr(args, "loss", None):
        cfg = replace(cfg, loss=LossKind.from_name(args.loss))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _cmd_train(args) -> int:
    cfg = _apply_common_overrides(tmod.load_train_config(args.config), args)
    if cfg.distill is not None:
        raise InvalidConfig("config sets distillation; use the distill command")
    train_ds = _read_dataset(args.data)
    valid_ds = _read_dataset(args.valid)
    model, hist = tmod.train(cfg, train_ds, valid_ds)
    nnmod.save_model(model, args.out)
    if args.history:
        _write_text(args.history, hist.to_csv())
    print(f"best epoch {hist.best_epoch}: valid ndcg@5 "
          f"{hist.best_valid_ndcg5():.6f}; model -> {args.out}")
    return 0


def _cmd_distill(args) -> int:
    cfg = _apply_common_overrides(tmod.load_train_config(args.config), args)
    spec = cfg.distill or kd.DistillSpec(alpha=0.5)
    if args.alpha is not None:
        spec = replace(spec, alpha=args.alpha)
    if args.transform:
        spec = replace(spec, transform=parse_transform_flag(args.transform))
    if args.distill_loss:
        spec = replace(spec, distill_loss=LossKind.from_name(args.distill_loss))
    if args.loss:
        spec = replace(spec, base_loss=LossKind.from_name(args.loss))
    cfg = replace(cfg, distill=spec)

    train_ds = _read_dataset(args.data)
    valid_ds = _read_dataset(args.valid)
    # alignment is validated while loading, before any training starts
    with open(args.teacher_scores, "r", encoding="utf-8") as fh:
        scores = kd.load_teacher_scores(fh, train_ds)

    model, hist = tmod.train(cfg, train_ds, valid_ds, teacher_scores=scores)
    nnmod.save_model(model, args.out)
    if args.history:
        _write_text(args.history, hist.to_csv())
    print(f"alpha={spec.alpha}: best epoch {hist.best_epoch}, valid ndcg@5 "
          f"{hist.best_valid_ndcg5():.6f}; model -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    ds = _read_dataset(args.data)
    model = nnmod.load_model(args.model)
    report = mmod.evaluate_dataset(model, ds)
    _write_text(args.out, report.to_tsv())
    means = "\t".join(f"ndcg@{k}={v:.6f}" for k, v in
                      zip(report.ks, report.means))
    print(f"{report.query_count} queries\t{means}")
    return 0


def _cmd_export_scores(args) -> int:
    ds = _read_dataset(args.data)
    model = nnmod.load_model(args.model)
    ts = kd.export_teacher_scores(model, ds)
    _write_text(args.out, kd.write_teacher_scores(ts, ds))
    print(f"wrote scores for {ds.n_docs} documents to {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    kinds = ([LossKind.from_name(args.loss)] if args.loss else list(LossKind))
    ok = True
    for kind in kinds:
        score_err = gc.max_score_grad_error(kind, trials=args.trials,
                                            seed=args.seed)
        param_err = gc.max_param_grad_error(kind, trials=max(args.trials // 4, 5),
                                            seed=args.seed)
        good = score_err < 1e-6 and param_err < 1e-4
        ok = ok and good
        print(f"{kind.value}: score-grad max rel err {score_err:.3e}, "
              f"param-grad max rel err {param_err:.3e} "
              f"{'OK' if good else 'FAIL'}")
    return 0 if ok else 1


def _cmd_theorem1(args) -> int:
    print(theory.run_theorem1_demo().to_text(), end="")
    return 0


def _cmd_noisy_sweep(args) -> int:
    alphas = tuple(float(v) for v in args.alphas.split(","))
    cfg = theory.NoisySimConfig(n=args.n, m=args.m, alphas=alphas,
                                trials=args.trials, rng_seed=args.seed)
    fitter = (theory.toy_fitter if args.fitter == "toy"
              else theory.gradient_descent_fitter())
    report = theory.noisy_label_simulation(cfg, fitter=fitter)
    _write_text(args.out, report.to_csv())
    print(report.to_text(), end="")
    print(f"csv -> {args.out}")
    return 0


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "distill": _cmd_distill,
    "eval": _cmd_eval,
    "export-scores": _cmd_export_scores,
    "gradcheck": _cmd_gradcheck,
    "theorem1": _cmd_theorem1,
    "noisy-sweep": _cmd_noisy_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except RankDistillError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
