"""Command-line entry point: train, sweep, traverse, hsic.

Exit codes: 0 success, 1 data/format/runtime errors, 2 usage errors. Every
command is deterministic given its flags; rerunning a command overwrites its
artefacts with bit-identical bytes.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .dataio import DataSpec, IdxFormatError, ImageDataset, load_dataset
from .evaluation import traversal_grid, write_pgm
from .hsic import HsicConfig, hsic_biased, median_heuristic
from .latents import LatentSpec, Rng
from .networks import Generator
from .sweep import (LAMBDA_GRID_DEFAULT, SHORT_RUN_EPOCHS_DEFAULT,
                    SIGMA_GRID_DEFAULT, SweepPlan, run_sweep, write_sweep_csv)
from .training import LossReport, TrainConfig, Trainer, TrainingDiverged


class UsageError(ValueError):
    """Invalid flag combination; maps to exit code 2."""


# ---------------------------------------------------------------------------
# shared helpers

def write_losses_csv(history: list[LossReport], path: str) -> None:
    """Exact column set (step, d_loss, g_adv_loss, hsic_value, aux_loss,
    magnitude_ratio); non-applicable fields stay empty."""

    def cell(v) -> str:
        return "" if v is None else repr(v)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,d_loss,g_adv_loss,hsic_value,aux_loss,magnitude_ratio\n")
        for r in history:
            fh.write(f"{r.step},{cell(r.d_loss)},{cell(r.g_adv_loss)},"
                     f"{cell(r.hsic_value)},{cell(r.aux_loss)},{cell(r.magnitude_ratio)}\n")


def config_echo(cfg: TrainConfig, dataset: ImageDataset, latent: LatentSpec) -> dict[str, str]:
    echo = {f.name: str(getattr(cfg, f.name)) for f in fields(cfg)}
    echo["image_height"] = str(dataset.image_height)
    echo["image_width"] = str(dataset.image_width)
    echo["z_dim"] = str(latent.z_dim)
    echo["cat_classes"] = str(latent.cat_classes)
    echo["cont_dim"] = str(latent.cont_dim)
    return echo


def generator_from_checkpoint(path: str) -> tuple[Generator, LatentSpec, int, int]:
    """Rebuild the generator of a saved run and validate tensor shapes."""
    params, echo = load_checkpoint(path)
    try:
        latent = LatentSpec(z_dim=int(echo["z_dim"]), cat_classes=int(echo["cat_classes"]),
                            cont_dim=int(echo["cont_dim"]), z_prior=echo.get("z_prior", "uniform"))
        height, width = int(echo["image_height"]), int(echo["image_width"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"config echo is missing or malformed: {exc}") from exc
    g = Generator(latent, height * width, Rng(0))
    stored = {p.name: p for p in params}
    for p in g.parameters():
        if p.name not in stored:
            raise CheckpointError(f"checkpoint lacks tensor {p.name!r}")
        value = stored[p.name].value.data
        if value.shape != p.value.shape:
            raise CheckpointError(f"tensor {p.name!r} has shape {value.shape}, "
                                  f"model expects {p.value.shape}")
        p.value.data[...] = value
    return g, latent, height, width


def _data_spec(args, cfg_seed: int) -> DataSpec:
    if args.dataset == "mnist" and not (args.mnist_images and args.mnist_labels):
        raise UsageError("--dataset mnist requires --mnist-images and --mnist-labels")
    return DataSpec(tag=args.dataset, subset=args.subset, seed=cfg_seed,
                    mnist_images=args.mnist_images, mnist_labels=args.mnist_labels)


def _check_model_flags(args) -> None:
    """Flags tied to one model kind are rejected for the others."""
    hsic_only = [("--lambda", args.lam), ("--sigma", args.sigma), ("--sigma-c", args.sigma_c)]
    if args.model != "hsic-infogan":
        for flag, value in hsic_only:
            if value is not None:
                raise UsageError(f"{flag} only applies to --model hsic-infogan")
    if args.model != "infogan" and args.lambda_info is not None:
        raise UsageError("--lambda-info only applies to --model infogan")


def _train_config(args) -> TrainConfig:
    _check_model_flags(args)
    defaults = TrainConfig()
    return TrainConfig(
        model_kind=args.model,
        lam=defaults.lam if args.lam is None else args.lam,
        lambda_info=defaults.lambda_info if args.lambda_info is None else args.lambda_info,
        sigma_x=defaults.sigma_x if args.sigma is None else args.sigma,
        sigma_c=args.sigma_c,
        epochs=args.epochs,
        batch=args.batch,
        seed=args.seed,
        dataset=args.dataset,
    )


def _echo_line(cfg: TrainConfig, args) -> str:
    return ("config: model={model_kind} dataset={dataset} batch={batch} lr_d={lr_d} "
            "lr_g={lr_g} epochs={epochs} lambda={lam} sigma={sigma_x} sigma_c={sigma_c} "
            "lambda_info={lambda_info} seed={seed}").format(
                **{f.name: getattr(cfg, f.name) for f in fields(cfg)}
            ) + f" subset={args.subset} out={args.out}"


# ---------------------------------------------------------------------------
# commands

def cmd_train(args) -> int:
    cfg = _train_config(args)
    print(_echo_line(cfg, args))
    dataset = load_dataset(_data_spec(args, cfg.seed))
    os.makedirs(args.out, exist_ok=True)

    trainer = Trainer(cfg, dataset)
    echo = config_echo(cfg, dataset, trainer.latent)

    def on_epoch(t: Trainer, epoch: int) -> None:
        save_checkpoint(t.all_parameters(), echo,
                        os.path.join(args.out, f"epoch_{epoch + 1:04d}.ckpt"))

    history = trainer.run(dataset, on_epoch)
    write_losses_csv(history, os.path.join(args.out, "losses.csv"))
    save_checkpoint(trainer.all_parameters(), echo, os.path.join(args.out, "final.ckpt"))
    for j in range(trainer.latent.cont_dim):
        grid = traversal_grid(trainer.g, trainer.latent, j, args.steps, Rng(cfg.seed),
                              dataset.image_height, dataset.image_width)
        write_pgm(grid, os.path.join(args.out, f"traversal_c{j}.pgm"))
    print(f"trained {len(history)} steps; artefacts in {args.out}")
    return 0


def _parse_grid(text: str, flag: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise UsageError(f"{flag} expects a comma-separated list of numbers: {exc}") from exc
    if not grid:
        raise UsageError(f"{flag} must name at least one value")
    return grid


def cmd_sweep(args) -> int:
    if args.model != "hsic-infogan":
        raise UsageError("sweep only applies to --model hsic-infogan")
    base = TrainConfig(model_kind="hsic-infogan",
                       lam=1.0 if args.lam is None else args.lam,
                       batch=args.batch, seed=args.seed, dataset=args.dataset)
    plan = SweepPlan(base=base,
                     sigma_grid=_parse_grid(args.sigma_grid, "--sigma-grid"),
                     lambda_grid=_parse_grid(args.lambda_grid, "--lambda-grid"),
                     epochs=args.sweep_epochs)
    data = _data_spec(args, base.seed)
    os.makedirs(args.out, exist_ok=True)
    result = run_sweep(plan, data, jobs=args.jobs)
    write_sweep_csv(result.rows, os.path.join(args.out, "sweep.csv"))
    for row in result.rows:
        print(f"phase{row.phase} sigma={row.sigma:g} lambda={row.lam:g} "
              f"median_ratio={row.median_ratio:.6g} final_hsic={row.final_hsic:.6g} "
              f"distinctness={row.distinctness:.3f}")
    print("bandwidth trend (rough heuristic exp(-1/sigma^2) vs measured):")
    for row in result.rows:
        if row.phase == 1:
            print(f"  sigma={row.sigma:g} exp(-1/sigma^2)={math.exp(-1.0 / row.sigma ** 2):.4f} "
                  f"final_hsic={row.final_hsic:.6g}")
    print(f"recommended: sigma={result.best_sigma:g} lambda={result.best_lambda:g}")
    return 0


def cmd_traverse(args) -> int:
    g, latent, height, width = generator_from_checkpoint(args.ckpt)
    grid = traversal_grid(g, latent, args.code, args.steps, Rng(args.seed), height, width)
    write_pgm(grid, args.out)
    print(f"wrote {grid.pixels.shape[1]}x{grid.pixels.shape[0]} traversal grid to {args.out}")
    return 0


def _load_csv_matrix(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"malformed CSV {path}: {exc}") from exc


def cmd_hsic(args) -> int:
    x = _load_csv_matrix(args.x)
    z = _load_csv_matrix(args.z)
    if x.shape[0] != z.shape[0]:
        raise ValueError(f"row counts differ: {x.shape[0]} vs {z.shape[0]}")
    if args.median_heuristic:
        sigma_x, sigma_z = median_heuristic(x), median_heuristic(z)
        print(f"sigma_x = {sigma_x:.12g}")
        print(f"sigma_z = {sigma_z:.12g}")
    else:
        sigma_x, sigma_z = args.sigma_x, args.sigma_z
    value = hsic_biased(x, z, HsicConfig(sigma_x, sigma_z)).item()
    print(f"hsic = {value:.12g}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", choices=("mnist", "squares", "gauss2d"), default="mnist")
    p.add_argument("--mnist-images", metavar="PATH")
    p.add_argument("--mnist-labels", metavar="PATH")
    p.add_argument("--subset", type=int, metavar="N",
                   help="first N mnist images / generated count for synthetic data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, default=TrainConfig.batch)
    p.add_argument("--out", default="out", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsicgan",
        description="Adversarial training with a kernel dependence penalty "
                    "in place of a recognition network.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one model and emit artefacts")
    t.add_argument("--model", choices=("gan", "infogan", "hsic-infogan"),
                   default="hsic-infogan")
    _add_dataset_flags(t)
    t.add_argument("--lambda", dest="lam", type=float, metavar="F",
                   help="dependence penalty weight (hsic-infogan only)")
    t.add_argument("--sigma", type=float, metavar="F",
                   help="image-side kernel bandwidth (hsic-infogan only)")
    t.add_argument("--sigma-c", type=float, metavar="F",
                   help="code-side kernel bandwidth (hsic-infogan only)")
    t.add_argument("--lambda-info", type=float, metavar="F",
                   help="latent-regression weight (infogan only)")
    t.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    t.add_argument("--steps", type=int, default=10, help="traversal grid columns")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="two-phase bandwidth/weight search")
    s.add_argument("--model", choices=("gan", "infogan", "hsic-infogan"),
                   default="hsic-infogan")
    _add_dataset_flags(s)
    s.add_argument("--lambda", dest="lam", type=float, metavar="F",
                   help="base penalty weight during the bandwidth phase")
    s.add_argument("--sigma-grid", default=",".join(str(v) for v in SIGMA_GRID_DEFAULT))
    s.add_argument("--lambda-grid", default=",".join(str(v) for v in LAMBDA_GRID_DEFAULT))
    s.add_argument("--sweep-epochs", type=int, default=SHORT_RUN_EPOCHS_DEFAULT)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("traverse", help="render a traversal grid from a checkpoint")
    v.add_argument("--ckpt", required=True, metavar="PATH")
    v.add_argument("--code", type=int, choices=(0, 1), required=True)
    v.add_argument("--steps", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", required=True, metavar="PATH")
    v.set_defaults(func=cmd_traverse)

    h = sub.add_parser("hsic", help="dependence value between two CSV matrices")
    h.add_argument("--x", required=True, metavar="PATH")
    h.add_argument("--z", required=True, metavar="PATH")
    h.add_argument("--sigma-x", type=float, default=1.0)
    h.add_argument("--sigma-z", type=float, default=1.0)
    h.add_argument("--median-heuristic", action="store_true",
                   help="derive both bandwidths from the data")
    h.set_defaults(func=cmd_hsic)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles its own usage reporting
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IdxFormatError, CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
