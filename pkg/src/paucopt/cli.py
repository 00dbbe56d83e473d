"""Experiment harness: ``paucopt run <config>`` and ``paucopt compare <config>...``.

Configs are INI files with the sections ``[experiment]``, ``[dataset]``,
``[range]`` and ``[solver]`` (plus an optional ``[output]``)::

    [experiment]
    task = pauc            ; pauc | sorr
    solver = agd_sbcd      ; agd_sbcd | dca | prox_dca
    seeds = 0, 1, 2
    out = runs/agd         ; relative paths resolve against the config file
    epochs = 50            ; optional epoch-equivalent budget

    [dataset]
    synthetic = yes        ; or: libsvm = data/train.svm
    n_pos = 50
    n_neg = 500
    positive_label = 1     ; libsvm only

    [range]
    alpha = 0.1            ; or: m = 50 / n = 250
    beta = 0.5

    [solver]
    K = 100
    C = 50
    J = 10

For every seed the harness writes ``seed_<s>/trace.csv``,
``seed_<s>/metrics.json`` and ``seed_<s>/roc.csv`` below the output
directory. Exit codes: 0 success, 2 configuration error, 3 data error,
4 solver divergence.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import subprocess
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .agd import AgdConfig, agd_run, evaluate
from .baselines import DcaConfig, dca_run, prox_dca_run
from .dataset import (BinaryDataset, DataError, RegressionDataset, SyntheticSpec,
                      generate_logistic_regression, generate_synthetic, load_libsvm,
                      read_libsvm)
from .metrics import roc_curve
from .prox_solver import ConfigError, SolverDivergence
from .ranked_range import PAucRange

log = logging.getLogger("paucopt")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4
TRACE_COLUMNS = ("k", "epoch", "normalized_loss", "train_pauc", "xi_norm", "wall_ms")
SOLVERS = ("agd_sbcd", "dca", "prox_dca")
TASKS = ("pauc", "sorr")

_SYNTH_PAUC_KEYS = {"n_pos": int, "n_neg": int, "d": int, "separation": float,
                    "noise": float, "seed": int}
_SYNTH_SORR_KEYS = {"n": int, "d": int, "separation": float, "noise": float,
                    "flip": float, "seed": int}


@dataclass
class ExperimentConfig:
    """Parsed harness configuration; ``sections`` keeps the raw key/values."""

    task: str
    solver: str
    dataset: dict
    range: dict
    solver_params: dict
    seeds: list
    out: Path
    epochs: float | None = None
    wall_time: bool = False
    source: str = "<string>"
    sections: dict = field(default_factory=dict)

    def echo(self):
        """Everything needed to rerun: the resolved sections as plain strings."""
        echo = {name: dict(items) for name, items in self.sections.items()}
        exp = echo.setdefault("experiment", {})
        exp["seeds"] = ", ".join(str(s) for s in self.seeds)
        exp["out"] = str(self.out)
        if self.dataset.get("kind") == "libsvm":
            echo["dataset"]["libsvm"] = str(self.dataset["path"])
        if self.epochs is not None:
            exp["epochs"] = repr(self.epochs)
        else:
            exp.pop("epochs", None)
        return echo


def _parse_bool(value, key):
    v = value.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _typed(section, key, kind):
    raw = section[key]
    try:
        if kind is bool:
            return _parse_bool(raw, key)
        if kind is float:
            return float(raw)
        if kind is int:
            x = float(raw)
            if not x.is_integer():
                raise ValueError
            return int(x)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def _optional_float(raw):
    return None if raw.strip().lower() in ("", "none", "auto") else float(raw)


def _solver_fields(cls):
    kinds = {}
    for f in fields(cls):
        t = str(f.type)
        if f.name == "seed":
            continue
        if "float | None" in t:
            kinds[f.name] = "optfloat"
        elif t.startswith("bool"):
            kinds[f.name] = bool
        elif t.startswith("int"):
            kinds[f.name] = int
        elif t.startswith("float"):
            kinds[f.name] = float
        else:
            kinds[f.name] = str
    return kinds


def parse_config(text, source="<string>", base_dir=None) -> ExperimentConfig:
    """Parse INI text into an :class:`ExperimentConfig` (raises ConfigError)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {' '.join(str(exc).split())}") from None
    for name in ("experiment", "dataset", "range"):
        if not cp.has_section(name):
            raise ConfigError(f"{source}: missing [{name}] section")
    unknown = set(cp.sections()) - {"experiment", "dataset", "range", "solver", "output"}
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    exp = cp["experiment"]
    task = exp.get("task", "pauc").strip()
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    solver = exp.get("solver", "agd_sbcd").strip()
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver!r}")
    try:
        seeds = [int(s) for s in exp.get("seeds", "0").replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"seeds: cannot parse {exp.get('seeds')!r}") from None
    if not seeds:
        raise ConfigError("seeds: at least one seed is required")
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    out = Path(exp.get("out", "paucopt-out").strip())
    if not out.is_absolute():
        out = base / out
    epochs = _optional_float(exp["epochs"]) if "epochs" in exp else None

    ds = cp["dataset"]
    has_lib, has_syn = "libsvm" in ds, _parse_bool(ds.get("synthetic", "no"), "synthetic")
    if has_lib == has_syn:
        raise ConfigError("[dataset] needs exactly one of 'libsvm = <path>' or 'synthetic = yes'")
    dataset = {"kind": "libsvm" if has_lib else "synthetic"}
    if has_lib:
        path = Path(ds["libsvm"].strip())
        dataset["path"] = path if path.is_absolute() else base / path
        dataset["positive_label"] = _typed(ds, "positive_label", float) \
            if "positive_label" in ds else 1.0
    else:
        keys = _SYNTH_PAUC_KEYS if task == "pauc" else _SYNTH_SORR_KEYS
        extra = set(ds) - set(keys) - {"synthetic"}
        if extra:
            raise ConfigError(f"[dataset] unknown synthetic key(s) {sorted(extra)}")
        dataset.update({k: _typed(ds, k, kind) for k, kind in keys.items() if k in ds})

    rg = cp["range"]
    by_fpr = "alpha" in rg or "beta" in rg
    by_rank = "m" in rg or "n" in rg
    if by_fpr == by_rank:
        raise ConfigError("[range] needs exactly one of (alpha, beta) or (m, n)")
    if by_fpr:
        if task == "sorr":
            raise ConfigError("the sorr task takes its range as (m, n)")
        if not ("alpha" in rg and "beta" in rg):
            raise ConfigError("[range] needs both alpha and beta")
        range_ = {"alpha": _typed(rg, "alpha", float), "beta": _typed(rg, "beta", float)}
    else:
        if not ("m" in rg and "n" in rg):
            raise ConfigError("[range] needs both m and n")
        range_ = {"m": _typed(rg, "m", int), "n": _typed(rg, "n", int)}

    kinds = _solver_fields(AgdConfig if solver == "agd_sbcd" else DcaConfig)
    params = {}
    if cp.has_section("solver"):
        for key, raw in cp["solver"].items():
            if key not in kinds:
                raise ConfigError(f"[solver] unknown key {key!r} for solver {solver}")
            kind = kinds[key]
            if kind == "optfloat":
                try:
                    params[key] = _optional_float(raw)
                except ValueError:
                    raise ConfigError(f"{key}: cannot parse {raw!r}") from None
            else:
                params[key] = _typed(cp["solver"], key, kind)
    if solver == "prox_dca" and not params.get("L_prox", 0.0) > 0:
        log.warning("prox_dca with L_prox = 0 is plain DCA")

    wall_time = False
    if cp.has_section("output"):
        extra = set(cp["output"]) - {"wall_time"}
        if extra:
            raise ConfigError(f"[output] unknown key(s) {sorted(extra)}")
        if "wall_time" in cp["output"]:
            wall_time = _typed(cp["output"], "wall_time", bool)

    sections = {name: dict(cp[name]) for name in cp.sections()}
    return ExperimentConfig(task, solver, dataset, range_, params, seeds, out, epochs,
                            wall_time, source, sections)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), base_dir=path.parent)


def build_dataset(cfg: ExperimentConfig):
    """Materialize the dataset described by ``cfg`` (raises DataError)."""
    spec = cfg.dataset
    if spec["kind"] == "libsvm":
        try:
            if cfg.task == "pauc":
                return load_libsvm(spec["path"], spec["positive_label"])
            x, labels = read_libsvm(spec["path"])
        except OSError as exc:
            raise DataError(f"cannot read {spec['path']}: {exc.strerror}") from None
        y = (labels == spec["positive_label"]).astype(np.float64)
        return RegressionDataset(x, y, source=str(spec["path"]))
    params = {k: v for k, v in spec.items() if k != "kind"}
    if cfg.task == "pauc":
        return generate_synthetic(SyntheticSpec(**params))
    return generate_logistic_regression(**params)


def resolve_range(cfg: ExperimentConfig, data):
    """PAucRange for pAUC tasks, (m, n) for SoRR."""
    n_right = data.n_neg if isinstance(data, BinaryDataset) else data.n
    if "alpha" in cfg.range:
        return PAucRange.from_fpr(cfg.range["alpha"], cfg.range["beta"], n_right)
    m, n = cfg.range["m"], cfg.range["n"]
    if not 0 <= m < n <= n_right:
        raise ConfigError(f"need 0 <= m < n <= {n_right}, got m={m}, n={n}")
    if isinstance(data, BinaryDataset):
        return PAucRange.from_ranks(m, n, n_right)
    return (m, n)


def _solver_config(cfg: ExperimentConfig, seed):
    params = dict(cfg.solver_params)
    if cfg.epochs is not None:
        params["max_epochs"] = cfg.epochs
    params["seed"] = seed
    try:
        return (AgdConfig if cfg.solver == "agd_sbcd" else DcaConfig)(**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class SeedResult:
    seed: int
    trace: object
    w_final: np.ndarray
    w_best: np.ndarray
    metrics: dict


def run_seed(cfg: ExperimentConfig, data, r, seed) -> SeedResult:
    """Run one solver/seed pair and collect the metrics dictionary."""
    scfg = _solver_config(cfg, seed)
    w0 = np.zeros(data.d)
    cert = None
    if cfg.solver == "agd_sbcd":
        w_best, trace, cert = agd_run(data, r, scfg, w0)
    elif cfg.solver == "dca":
        w_best, trace = dca_run(data, r, scfg, w0)
    else:
        w_best, trace = prox_dca_run(data, r, scfg, w0)
    w_final = trace.models[-1]
    final_loss, final_pauc = evaluate(w_final, data, r)
    best_loss, best_pauc = evaluate(w_best, data, r)
    metrics = {
        "version": version_stamp(),
        "task": cfg.task,
        "solver": cfg.solver,
        "seed": seed,
        "outer_iterations": len(trace.records),
        "epochs": trace.records[-1].epoch,
        "range": list(r if isinstance(r, tuple) else (r.m, r.n)),
        "initial": {"normalized_loss": trace.initial_loss, "train_pauc": trace.initial_pauc},
        "final": {"normalized_loss": final_loss, "train_pauc": final_pauc,
                  "model": w_final.tolist()},
        "best": {"k": trace.best_index, "normalized_loss": best_loss,
                 "train_pauc": best_pauc, "model": w_best.tolist()},
        "certificate": None if cert is None else {
            "k": cert.k, "xi_norm": cert.xi_norm, "dist_to_vm": cert.dist_to_vm,
            "dist_to_vn": cert.dist_to_vn, "epsilon": cert.epsilon(),
            "low_confidence": cert.low_confidence},
        "theoretical": None if trace.theoretical_model is None else {
            "k": trace.theoretical_index, "model": trace.theoretical_model.tolist()},
        "config": cfg.echo(),
    }
    if cfg.wall_time:
        metrics["wall_ms_total"] = float(sum(rec.wall_ms for rec in trace.records))
    return SeedResult(seed, trace, w_final, w_best, metrics)


def _fmt(x):
    x = float(x)
    return repr(x) if np.isfinite(x) else ("nan" if np.isnan(x) else repr(x))


def trace_rows(trace, wall_time=False):
    for rec in trace.records:
        yield [str(rec.k), _fmt(rec.epoch), _fmt(rec.normalized_loss),
               _fmt(rec.train_pauc), _fmt(rec.xi_norm),
               _fmt(rec.wall_ms) if wall_time else ""]


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _json_safe(obj):
    """NaN/inf become null so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_outputs(cfg: ExperimentConfig, data, res: SeedResult):
    out = cfg.out / f"seed_{res.seed}"
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "trace.csv", TRACE_COLUMNS, trace_rows(res.trace, cfg.wall_time))
    if isinstance(data, BinaryDataset):
        pos, neg = data.positives @ res.w_best, data.negatives @ res.w_best
    else:
        scores = data.features @ res.w_best
        pos, neg = scores[data.targets == 1], scores[data.targets != 1]
    if pos.size and neg.size:
        roc = roc_curve(pos, neg)
        _write_csv(out / "roc.csv", ("fpr", "tpr", "threshold"),
                   ([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in roc.rows()))
    text = json.dumps(_json_safe(res.metrics), indent=2, sort_keys=True, allow_nan=False)
    (out / "metrics.json").write_text(text + "\n")
    return out


def version_stamp():
    """``<version>`` or ``<version>+g<short hash>`` inside a git checkout."""
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return __version__
    h = rev.stdout.strip()
    return f"{__version__}+g{h}" if rev.returncode == 0 and h else __version__


def run_experiment(cfg: ExperimentConfig):
    """Run every seed of ``cfg``; returns the list of :class:`SeedResult`."""
    data = build_dataset(cfg)
    r = resolve_range(cfg, data)
    results = []
    for seed in cfg.seeds:
        log.info("%s seed %d", cfg.solver, seed)
        res = run_seed(cfg, data, r, seed)
        write_outputs(cfg, data, res)
        results.append(res)
    return results


def _shared_key(cfg: ExperimentConfig):
    return (cfg.task, json.dumps({k: str(v) for k, v in cfg.dataset.items()}, sort_keys=True),
            json.dumps(cfg.range, sort_keys=True))


def compare(cfgs, out):
    """Run several configs on a shared dataset/range and merge their traces."""
    if len(cfgs) < 2:
        raise ConfigError("compare needs at least two configs")
    if len({_shared_key(c) for c in cfgs}) != 1:
        raise ConfigError("compared configs must share task, dataset and range")
    out = Path(out)
    labels, merged, summary = [], [], []
    for cfg in cfgs:
        label = cfg.solver
        n = sum(1 for lab in labels if lab == label or lab.startswith(label + "#"))
        labels.append(label if n == 0 else f"{label}#{n + 1}")
        cfg.out = out / labels[-1]
        results = run_experiment(cfg)
        for res in results:
            for row in trace_rows(res.trace, cfg.wall_time):
                merged.append([labels[-1], str(res.seed)] + row)
        summary.append((labels[-1], len(results),
                        float(np.median([r.metrics["final"]["normalized_loss"] for r in results])),
                        float(np.median([r.metrics["final"]["train_pauc"] for r in results])),
                        float(np.median([r.metrics["epochs"] for r in results]))))
    _write_csv(out / "compare.csv", ("solver", "seed") + TRACE_COLUMNS, merged)
    return summary


def format_summary(summary):
    lines = [f"{'solver':<12} {'seeds':>5} {'final_loss':>12} {'final_pauc':>10} {'epochs':>9}"]
    for label, n, loss, pa, ep in summary:
        lines.append(f"{label:<12} {n:>5d} {loss:>12.6g} {pa:>10.4f} {ep:>9.3f}")
    return "\n".join(lines)


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.epochs is not None:
        if not args.epochs > 0:
            raise ConfigError("--epochs must be > 0")
        cfg.epochs = args.epochs
    if getattr(args, "out", None) is not None and args.command == "run":
        cfg.out = Path(args.out)
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="paucopt", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment config"),
                        ("compare", "run several configs and merge their traces")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("configs", nargs=1 if name == "run" else "+", metavar="config")
        sp.add_argument("--seed", type=int, help="run only this seed")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--epochs", type=float, help="epoch-equivalent budget")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="paucopt: %(message)s", stream=sys.stderr)
    try:
        cfgs = [_apply_overrides(load_config(c), args) for c in args.configs]
        if args.command == "run":
            results = run_experiment(cfgs[0])
            losses = [r.metrics["final"]["normalized_loss"] for r in results]
            line = (f"wrote {len(results)} seed(s) to {cfgs[0].out}; "
                    f"median final loss {np.median(losses):.6g}")
            if cfgs[0].task == "pauc":
                paucs = [r.metrics["final"]["train_pauc"] for r in results]
                line += f", median final train pAUC {np.median(paucs):.4f}"
            print(line)
        else:
            out = Path(args.out) if args.out else Path("paucopt-compare")
            summary = compare(cfgs, out)
            print(format_summary(summary))
            print(f"merged trace: {out / 'compare.csv'}")
    except DataError as exc:
        print(f"paucopt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverDivergence as exc:
        print(f"paucopt: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError) as exc:
        print(f"paucopt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
