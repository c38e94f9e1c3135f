"""Command line front end.

Commands:

* ``verify``       -- run the structural verification suites, emit a JSON report
* ``bases``        -- export twisted invariant bases (JSON + text grids + figure)
* ``train-vierer`` -- train the flip-CNN or its baseline on the flip task
* ``train-spinor`` -- train one point-cloud variant on the spinor regression task

Flags may also be supplied through a config file of ``key = value`` lines
(arrays in brackets); explicit flags win over file values, file values win
over defaults.  Unknown keys are rejected.  Exit codes: 0 success, 1 check
or training failure, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from projeq import data, figures, groups, invariants, serialize, train, verify
from projeq import reps as reps_mod
from projeq import spinornet, vierernet
from projeq.linalg import COMPLEX, REAL

USAGE_ERROR = 2
DATA_ERROR = 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config file


def parse_config_file(path) -> dict:
    """Plain key = value pairs; arrays in brackets; # starts a comment."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = _parse_scalar_or_array(value.strip())
    return values


def _parse_scalar_or_array(text: str):
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(v.strip()) for v in inner.split(",")]
    return _parse_scalar(text)


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text.strip("\"'")


def merge_config(defaults: dict, file_values: dict, cli_values: dict) -> dict:
    merged = dict(defaults)
    for key, value in file_values.items():
        if key not in defaults:
            raise UsageError(f"unknown config key {key!r}")
        merged[key] = value
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    return merged


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    result = verify.run_suites(args.scope or "all")
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.write_text(out_dir / "verify_report.json", serialize.dump_json(result))
    for suite, checks in result["suites"].items():
        for c in checks:
            flag = "PASS" if c["passed"] else "FAIL"
            print(f"[{flag}] {suite}/{c['name']} (dev {c['max_deviation']:.3e})")
    print(f"report: {out_dir / 'verify_report.json'}")
    return 0 if result["passed"] else 1


# ---------------------------------------------------------------------------
# bases


def _resolve_group_rep(group_spec: str, rep_spec: str):
    if group_spec == "vierer":
        if rep_spec == "filter3x3":
            return reps_mod.rep_flip_image(3, 3, field=REAL)
        if rep_spec.startswith("flip"):
            h, w = rep_spec.removeprefix("flip").split("x")
            return reps_mod.rep_flip_image(int(h), int(w), field=REAL)
        raise UsageError(f"group 'vierer' supports reps filter3x3/flipHxW, not {rep_spec!r}")
    if group_spec.startswith("cyclic-"):
        n = int(group_spec.split("-", 1)[1])
        if rep_spec != "shift":
            raise UsageError("cyclic groups support the 'shift' representation")
        return reps_mod.rep_cyclic_shift(n, field=COMPLEX)
    if group_spec.startswith("symmetric-"):
        n = int(group_spec.split("-", 1)[1])
        if not rep_spec.startswith("tensor-"):
            raise UsageError("symmetric groups support 'tensor-K' representations")
        k = int(rep_spec.split("-", 1)[1])
        return reps_mod.rep_permutation_tensor(n, k, field=REAL)
    if group_spec == "alternating-5":
        if rep_spec != "standard":
            raise UsageError("alternating-5 supports the 'standard' representation")
        base = reps_mod.rep_permutation_tensor(5, 1, field=COMPLEX)
        sub = groups.commutator_subgroup(base.group)
        return reps_mod.rep_restrict(base, sub, name="A5")
    raise UsageError(f"unknown group spec {group_spec!r}")


def _export_coupling_tables(spec: str, out_dir: Path) -> int:
    """Write Clebsch-Gordan tables as JSON: rep spec 'coupling-L1xL2' or 'coupling-all'."""
    from projeq import su2

    levels = [t / 2.0 for t in su2.SUPPORTED_TWO_L]
    if spec == "coupling-all":
        pairs = [(a, b) for a in levels for b in levels]
    else:
        try:
            l1, l2 = spec.removeprefix("coupling-").split("x")
            pairs = [(float(l1), float(l2))]
        except ValueError as exc:
            raise UsageError(f"bad coupling spec {spec!r}; use coupling-L1xL2 or coupling-all") from exc
    for l1, l2 in pairs:
        table = su2.clebsch_gordan(l1, l2)
        name = f"coupling_{l1:g}x{l2:g}.json".replace(".", "_").replace("_json", ".json")
        serialize.write_text(out_dir / name, serialize.dump_json(table.to_json()))
    print(f"wrote {len(pairs)} coupling tables to {out_dir}")
    return 0


def cmd_bases(args) -> int:
    out_dir = Path(args.out or "bases_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.group == "su2":
        return _export_coupling_tables(args.rep, out_dir)
    rep = _resolve_group_rep(args.group, args.rep)
    serialize.write_text(out_dir / "group.json", serialize.dump_json(rep.group.to_json()))
    if rep.dim <= 64:
        serialize.write_text(out_dir / "rep.json", serialize.dump_json(rep.to_json()))
    bases = invariants.projective_invariants(rep)
    figure_data = {}
    for i, basis in enumerate(bases):
        payload = {
            "group": rep.group.name,
            "rep": rep.name,
            "character": basis.character.to_json(),
            "dimension": basis.dim,
            "basis": [[[float(np.real(x)), float(np.imag(x))] for x in v] for v in basis.vectors],
        }
        serialize.write_text(out_dir / f"basis_char{i}.json", serialize.dump_json(payload))
        if args.group == "vierer" and rep.dim == 9:
            grids = serialize.basis_grid_text(basis.vectors, 3, 3)
            serialize.write_text(out_dir / f"basis_char{i}_grid.txt", grids)
            figure_data[f"char {i}"] = [np.real(v).reshape(3, 3) for v in basis.vectors]
    if figure_data:
        figures.save_filter_basis_figure(figure_data, out_dir / "filter_bases.png")
    dims = [b.dim for b in bases]
    print(f"wrote {len(bases)} bases (dims {dims}) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# training commands

VIERER_DEFAULTS = {
    "model": "vierer",
    "epochs": 30,
    "lr": 1e-3,
    "batch_size": 32,
    "seed": 0,
    "repeats": 1,
    "jobs": 1,
    "train_size": 5000,
    "eval_size": 1000,
    "widths": [4, 4, 4],
    "precision": "single",
    "synthetic": True,
    "mnist_dir": "",
    "out": "vierer_out",
}

SPINOR_DEFAULTS = {
    "variant": "squared-features",
    "noise": 0.0,
    "epochs": 300,
    "lr": 1e-2,
    "batch_size": 32,
    "seed": 0,
    "repeats": 1,
    "jobs": 1,
    "train_size": 256,
    "eval_size": 256,
    "out": "spinor_out",
}


def _load_mnist(mnist_dir: str, train_size: int, eval_size: int, seed: int):
    root = Path(mnist_dir)
    if not root.exists() and not root.is_absolute() and os.environ.get("PROJEQ_DATA_DIR"):
        root = Path(os.environ["PROJEQ_DATA_DIR"]) / mnist_dir
    names = {
        "train_images": "train-images-idx3-ubyte",
        "train_labels": "train-labels-idx1-ubyte",
        "eval_images": "t10k-images-idx3-ubyte",
        "eval_labels": "t10k-labels-idx1-ubyte",
    }
    arrays = {}
    for key, name in names.items():
        path = root / name
        if not path.exists():
            raise data.IdxTruncationError(f"missing IDX file {path}")
        arrays[key] = data.read_idx(path)
    train_ds = data.flip_dataset_from_arrays(
        arrays["train_images"][:train_size], arrays["train_labels"][:train_size], seed, stream=0
    )
    eval_ds = data.flip_dataset_from_arrays(
        arrays["eval_images"][:eval_size], arrays["eval_labels"][:eval_size], seed, stream=1
    )
    return train_ds, eval_ds


def run_vierer_repeat(cfg: dict) -> dict:
    """Train one model for one repeat; returns the summary entry."""
    seed = cfg["seed"]
    if cfg["mnist_dir"]:
        train_ds, eval_ds = _load_mnist(cfg["mnist_dir"], cfg["train_size"], cfg["eval_size"], seed)
    else:
        train_ds = data.gen_flip_dataset(cfg["train_size"], seed=seed, stream=0)
        eval_ds = data.gen_flip_dataset(cfg["eval_size"], seed=seed, stream=1)
    widths = tuple(int(w) for w in cfg["widths"])
    dtype = np.float32 if cfg["precision"] == "single" else np.float64
    if cfg["model"] == "vierer":
        model = vierernet.ViererNet(widths=widths, seed=seed, dtype=dtype)
    elif cfg["model"] == "baseline":
        model = vierernet.BaselineCNN(widths=widths, seed=seed, dtype=dtype)
    else:
        raise UsageError(f"unknown model {cfg['model']!r}")
    fn_tr = train.classifier_batch_fn(model, train_ds.images, train_ds.labels, vierernet.CLASS_WEIGHTS)
    fn_ev = train.classifier_batch_fn(model, eval_ds.images, eval_ds.labels, vierernet.CLASS_WEIGHTS)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{cfg['model']}_seed{seed}"
    try:
        result = train.train_loop(
            model, fn_tr, fn_ev, len(train_ds.labels), len(eval_ds.labels),
            epochs=cfg["epochs"], lr=cfg["lr"], batch_size=cfg["batch_size"], seed=seed,
        )
    except train.DivergenceError as exc:
        if exc.last_good is not None:
            serialize.write_checkpoint(out_dir / f"checkpoint_{tag}.pjeq", exc.last_good)
        raise
    serialize.write_text(out_dir / f"metrics_{tag}.csv", serialize.metrics_to_csv(result.metrics))
    serialize.write_checkpoint(out_dir / f"checkpoint_{tag}.pjeq", result.final_state)
    figures.save_training_curves(result.metrics, out_dir / f"curves_{tag}.png", title=tag)
    eval_rows = result.rows_for("eval")
    return {
        "model": cfg["model"],
        "seed": seed,
        "parameters": model.parameter_count(),
        "final_eval_accuracy": eval_rows[-1].accuracy,
        "best_eval_accuracy": max(r.accuracy for r in eval_rows),
        "eval_accuracy_by_epoch": [r.accuracy for r in eval_rows],
        "final_eval_loss": eval_rows[-1].loss,
    }


def run_spinor_repeat(cfg: dict) -> dict:
    seed = cfg["seed"]
    train_ds = data.gen_spinor_dataset(cfg["train_size"], cfg["noise"], seed=seed, rotate=False, stream=0)
    eval_ds = data.gen_spinor_dataset(cfg["eval_size"], cfg["noise"], seed=seed, rotate=True, stream=1)
    model = spinornet.SpinorNet(cfg["variant"], seed=seed)
    fn_tr = train.spinor_batch_fn(model, train_ds)
    fn_ev = train.spinor_batch_fn(model, eval_ds)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{cfg['variant']}_noise{cfg['noise']:g}_seed{seed}"
    try:
        result = train.train_loop(
            model, fn_tr, fn_ev, cfg["train_size"], cfg["eval_size"],
            epochs=cfg["epochs"], lr=cfg["lr"], batch_size=cfg["batch_size"], seed=seed,
        )
    except train.DivergenceError as exc:
        if exc.last_good is not None:
            serialize.write_checkpoint(out_dir / f"checkpoint_{tag}.pjeq", exc.last_good)
        raise
    serialize.write_text(out_dir / f"metrics_{tag}.csv", serialize.metrics_to_csv(result.metrics))
    serialize.write_checkpoint(out_dir / f"checkpoint_{tag}.pjeq", result.final_state)
    figures.save_training_curves(result.metrics, out_dir / f"curves_{tag}.png", title=tag)
    eval_rows = result.rows_for("eval")
    return {
        "variant": cfg["variant"],
        "noise": cfg["noise"],
        "seed": seed,
        "parameters": model.parameter_count(),
        "final_eval_loss": eval_rows[-1].loss,
        "best_eval_loss": min(r.loss for r in eval_rows),
        "eval_loss_by_epoch": [r.loss for r in eval_rows],
    }


def _run_repeats(cfg: dict, worker) -> list[dict]:
    repeat_cfgs = []
    for r in range(cfg["repeats"]):
        sub = dict(cfg)
        sub["seed"] = cfg["seed"] + r
        repeat_cfgs.append(sub)
    if cfg["jobs"] > 1 and len(repeat_cfgs) > 1:
        # spawn keeps each worker's BLAS state independent of the parent
        ctx = multiprocessing.get_context("spawn")
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg["jobs"], mp_context=ctx) as pool:
            return list(pool.map(worker, repeat_cfgs))
    return [worker(sub) for sub in repeat_cfgs]


def cmd_train_vierer(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    cli_values = {
        k: getattr(args, k)
        for k in VIERER_DEFAULTS
        if hasattr(args, k)
    }
    if args.widths is not None:
        cli_values["widths"] = [int(w) for w in args.widths.split(",")]
    cfg = merge_config(VIERER_DEFAULTS, file_values, cli_values)
    if not cfg["mnist_dir"] and not cfg["synthetic"]:
        cfg["mnist_dir"] = os.environ.get("PROJEQ_DATA_DIR", "")
        if not cfg["mnist_dir"]:
            raise UsageError("non-synthetic runs need --mnist-dir or PROJEQ_DATA_DIR")
    summaries = _run_repeats(cfg, run_vierer_repeat)
    out_dir = Path(cfg["out"])
    summary = {"config": {k: cfg[k] for k in sorted(cfg) if k != "out"}, "repeats": summaries}
    serialize.write_text(out_dir / f"summary_{cfg['model']}.json", serialize.dump_json(summary))
    curves = {f"seed{s['seed']}": [s["eval_accuracy_by_epoch"]] for s in summaries}
    figures.save_accuracy_comparison(curves, out_dir / f"eval_accuracy_{cfg['model']}.png")
    for s in summaries:
        print(f"{s['model']} seed {s['seed']}: final eval accuracy {s['final_eval_accuracy']:.4f} ({s['parameters']} params)")
    return 0


def cmd_train_spinor(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    cli_values = {k: getattr(args, k) for k in SPINOR_DEFAULTS if hasattr(args, k)}
    cfg = merge_config(SPINOR_DEFAULTS, file_values, cli_values)
    summaries = _run_repeats(cfg, run_spinor_repeat)
    out_dir = Path(cfg["out"])
    summary = {"config": {k: cfg[k] for k in sorted(cfg) if k != "out"}, "repeats": summaries}
    serialize.write_text(out_dir / f"summary_{cfg['variant']}.json", serialize.dump_json(summary))
    for s in summaries:
        print(f"{s['variant']} seed {s['seed']}: final eval loss {s['final_eval_loss']:.4f} ({s['parameters']} params)")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projeq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the structural verification suites")
    p.add_argument("--scope", choices=("all",) + verify.SCOPES, default="all")
    p.add_argument("--out", default=None, help="directory for the JSON report")

    p = sub.add_parser("bases", help="export twisted invariant bases")
    p.add_argument("--group", required=True, help="vierer | cyclic-N | symmetric-N | alternating-5")
    p.add_argument("--rep", required=True, help="filter3x3 | shift | tensor-K | standard")
    p.add_argument("--out", default=None)

    p = sub.add_parser("train-vierer", help="train the flip-CNN or baseline")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--model", choices=("vierer", "baseline"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--train-size", dest="train_size", type=int, default=None)
    p.add_argument("--eval-size", dest="eval_size", type=int, default=None)
    p.add_argument("--widths", default=None, help="comma separated channel widths")
    p.add_argument("--precision", choices=("single", "double"), default=None, help="training float width")
    p.add_argument("--synthetic", action="store_const", const=True, default=None, help="use the synthetic glyph task")
    p.add_argument("--mnist-dir", dest="mnist_dir", default=None, help="directory with the four IDX files")
    p.add_argument("--out", default=None)

    p = sub.add_parser("train-spinor", help="train one point-cloud variant")
    p.add_argument("--config", default=None)
    p.add_argument("--variant", choices=spinornet.VARIANT_NAMES, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--train-size", dest="train_size", type=int, default=None)
    p.add_argument("--eval-size", dest="eval_size", type=int, default=None)
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "verify": cmd_verify,
        "bases": cmd_bases,
        "train-vierer": cmd_train_vierer,
        "train-spinor": cmd_train_spinor,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (data.IdxMagicError, data.IdxTruncationError, data.IdxDimensionError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (train.DivergenceError, serialize.CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
