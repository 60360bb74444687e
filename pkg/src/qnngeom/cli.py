"""Command-line front end.

Every run resolves its full configuration (defaults + optional config file
+ explicit flags), writes a manifest echoing it, and stamps each output
file with a hash of the semantic parameters (the output directory is not
hashed, so results are byte-identical wherever they land).  Re-running a
command from its manifest reproduces the outputs exactly.

Config files are flat ``key = value`` text; any flag can override a config
entry.  The default output directory comes from QNNGEOM_OUTDIR.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import effdim, experiments, fisher, spectra, training
from .datasets import load_dataset
from .errors import InternalError, NumericalError, ValidationError
from .rng import RngStream

FORMAT_VERSION = 1

OUTDIR_ENV = "QNNGEOM_OUTDIR"


# ---------------------------------------------------------------------------
# config plumbing

def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt_value(v) for v in value)
    return str(value)


def _parse_typed(raw: str, kind):
    raw = raw.strip()
    if kind is bool:
        if raw in ("true", "1", "yes"):
            return True
        if raw in ("false", "0", "no"):
            return False
        raise ValidationError(f"expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def read_config_file(path) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        values[key.strip()] = raw.strip()
    return values


def config_hash(config: dict) -> str:
    lines = [
        f"{key}={_fmt_value(config[key])}"
        for key in sorted(config)
        if key not in ("out", "config_hash")
    ]
    digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    return digest[:12]


def resolve_config(command: str, schema: dict, args) -> dict:
    """Merge defaults, config-file entries and explicit CLI flags."""
    merged = {key: default for key, (_, default, _) in schema.items()}
    if args.config:
        file_values = read_config_file(args.config)
        claimed = file_values.pop("command", command)
        if claimed != command:
            raise ValidationError(
                f"config file is for command {claimed!r}, not {command!r}"
            )
        file_values.pop("config_hash", None)
        version = file_values.pop("format_version", str(FORMAT_VERSION))
        if int(version) != FORMAT_VERSION:
            raise ValidationError(f"unsupported config format_version {version}")
        for key, raw in file_values.items():
            if key not in schema:
                raise ValidationError(f"unknown config key {key!r} for {command}")
            merged[key] = _parse_typed(raw, schema[key][0])
    for key in schema:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    if merged.get("out") is None:
        merged["out"] = _default_out()
    missing = [k for k, v in merged.items() if v is None]
    if missing:
        raise ValidationError(f"missing required option(s): {', '.join(missing)}")
    for key, (_, _, validator) in schema.items():
        if validator is not None:
            validator(merged[key])
    return merged


class Run:
    """Output-directory handle stamping files with the config hash."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = dict(config)
        self.hash = config_hash(self.config)
        self.outdir = Path(self.config["out"])
        self.outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.outdir / f"{self.command}-{self.hash}-{name}"

    def write_manifest(self):
        lines = [f"command = {self.command}", f"format_version = {FORMAT_VERSION}"]
        for key in sorted(self.config):
            lines.append(f"{key} = {_fmt_value(self.config[key])}")
        lines.append(f"config_hash = {self.hash}")
        self.path("manifest.txt").write_text("\n".join(lines) + "\n")

    def write_csv(self, name: str, columns, rows) -> Path:
        path = self.path(name)
        with open(path, "w") as fh:
            fh.write(f"# config={self.hash} command={self.command} format={FORMAT_VERSION}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt_value(v) for v in row) + "\n")
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.path(name)
        body = {
            "command": self.command,
            "config_hash": self.hash,
            "format_version": FORMAT_VERSION,
        }
        body.update(payload)
        with open(path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


# ---------------------------------------------------------------------------
# shared option schemas and helpers

def _positive(name):
    def check(value):
        if value is not None and value <= 0:
            raise ValidationError(f"{name} must be > 0, got {value}")

    return check


def _gamma_check(value):
    if not 0.0 < value <= 1.0:
        raise ValidationError(f"gamma must lie in (0, 1], got {value}")


def _default_out() -> str:
    return os.environ.get(OUTDIR_ENV, "qnngeom-out")


COMMON = {
    "seed": (int, 0, None),
    "jobs": (int, 1, _positive("jobs")),
    "out": (str, None, None),
}

MODEL_OPTS = {
    "model": (str, None, None),
    "qubits": (int, 4, _positive("qubits")),
    "d": (int, 0, None),  # 0 means "derive from depth"
    "depth": (int, 0, None),  # 0 means "derive from d or use default"
}


def _build_model_from(config, allow_identity=False):
    spec = config["model"]
    if allow_identity and spec == "identity-fisher":
        return None
    return experiments.build_model(
        spec,
        n_qubits=config["qubits"],
        d=config["d"] or None,
        var_depth=config["depth"] or None,
    )


def parse_grid(text: str) -> list[float]:
    """Comma list (``1e2,1e4``) or log-spaced range (``1e2:1e12:30``)."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, points = text.split(":")
            lo, hi, points = float(lo), float(hi), int(points)
            if lo <= 0 or hi <= lo or points < 1:
                raise ValueError
            grid = np.unique(
                np.round(np.logspace(math.log10(lo), math.log10(hi), points))
            )
            return [float(v) for v in grid]
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse grid {text!r}") from None


def _load_training_dataset(config, model):
    name = config["dataset"]
    if name.endswith(".csv"):
        dataset = load_dataset(name)
    else:
        dataset = experiments.load_named_dataset(
            name,
            normalize=config["normalize"],
            blob_n=config["points"],
            blob_spread=config["spread"],
            seed=config["seed"],
        )
    if dataset.n_features != model.n_inputs:
        raise ValidationError(
            f"dataset has {dataset.n_features} features, model expects {model.n_inputs}"
        )
    from .quantum import QuantumClassifier

    if isinstance(model, QuantumClassifier):
        span = max(abs(dataset.features.min()), abs(dataset.features.max()))
        if span > 1.0 + 1e-9:
            raise ValidationError(
                "quantum models need features normalized to [-1, 1]; "
                "re-export the dataset normalized or pass --normalize"
            )
    return dataset


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(config: dict) -> int:
    model = _build_model_from(config)
    run = Run("spectrum", config)
    ensemble, eigenvalues, stats, hist, zoom = experiments.spectrum_pipeline(
        model,
        config["samples"],
        config["data_samples"],
        config["bins"],
        RngStream(config["seed"]),
        jobs=config["jobs"],
    )
    run.write_csv("hist.csv", ("bin_lo", "bin_hi", "count"), hist.rows())
    run.write_csv("hist-zoom.csv", ("bin_lo", "bin_hi", "count"), zoom.rows())
    run.write_json(
        "stats.json",
        {
            "model": model.get_params(),
            "model_spec": config["model"],
            "d": ensemble.d,
            "k": ensemble.k,
            "n_estimates": len(ensemble.estimates),
            "mean_numeric_rank": float(np.mean([s.numeric_rank for s in stats])),
            "mean_near_zero_fraction": float(
                np.mean([s.near_zero_fraction for s in stats])
            ),
            "trace_mean": ensemble.trace_mean,
            "per_matrix": [s.as_dict() for s in stats],
        },
    )
    fisher.save_ensemble(
        ensemble,
        run.path("ensemble.json"),
        run.path("ensemble.csv"),
        model_params={"spec": config["model"], **model.get_params()},
        config_hash=run.hash,
    )
    run.write_manifest()
    return 0


def cmd_effdim(config: dict) -> int:
    model = _build_model_from(config, allow_identity=True)
    run = Run("effdim", config)
    n_grid = parse_grid(config["n_grid"])
    if model is None:
        if not config["d"]:
            raise ValidationError("identity-fisher needs --d")
        result = experiments.identity_effdim_curve(
            config["d"], config["gamma"], n_grid, config["samples"]
        )
    else:
        result = experiments.effdim_pipeline(
            model,
            config["gamma"],
            n_grid,
            config["samples"],
            config["data_samples"],
            RngStream(config["seed"]),
            jobs=config["jobs"],
        )
    run.write_csv(
        "curve.csv",
        ("n", "kappa", "effdim", "effdim_normalised"),
        result.rows(),
    )
    run.write_manifest()
    return 0


def cmd_train(config: dict) -> int:
    model = _build_model_from(config)
    run = Run("train", config)
    dataset = _load_training_dataset(config, model)
    summary = training.run_trials(
        model,
        dataset.features,
        dataset.labels,
        training.TrainConfig(
            learning_rate=config["lr"],
            n_iter=config["iters"],
            n_trials=config["trials"],
        ),
        RngStream(config["seed"]),
        compute_fisher_rao=True,
        fisher_k=config["fisher_samples"],
    )
    for index, record in enumerate(summary.records):
        run.write_csv(
            f"trial{index:03d}.csv",
            ("iter", "loss"),
            list(enumerate(record.loss_trace)),
        )
    run.write_json(
        "summary.json",
        {
            "model": model.get_params(),
            "model_spec": config["model"],
            "dataset": config["dataset"],
            "d": model.n_params,
            **summary.as_dict(),
        },
    )
    run.write_manifest()
    return 0


def cmd_sensitivity(config: dict) -> int:
    model = _build_model_from(config)
    run = Run("sensitivity", config)
    grid = [int(v) for v in parse_grid(config["grid"])]
    rows = experiments.sensitivity_pipeline(
        model,
        grid,
        config["repeats"],
        config["gamma"],
        config["n"],
        RngStream(config["seed"]),
        jobs=config["jobs"],
    )
    run.write_csv(
        "sensitivity.csv",
        ("samples", "mean_effdim_normalised", "std_effdim_normalised"),
        [(r.n_samples, r.mean_effdim_norm, r.std_effdim_norm) for r in rows],
    )
    run.write_manifest()
    return 0


def cmd_confusion(config: dict) -> int:
    run = Run("confusion", config)
    fractions = parse_grid(config["grid"])
    for rho in fractions:
        if not 0.0 <= rho <= 1.0:
            raise ValidationError(f"randomisation fraction {rho} outside [0, 1]")
    rows = experiments.confusion_pipeline(
        fractions,
        config["runs"],
        RngStream(config["seed"]),
        net_spec=config["net"],
        n_points=config["points"],
        spread=config["spread"],
        gamma=config["gamma"],
        learning_rate=config["lr"],
        n_local=config["local_samples"],
        k=config["data_samples"],
    )
    run.write_csv(
        "confusion.csv",
        ("fraction", "mean_effdim_normalised", "std_effdim_normalised",
         "converged", "runs"),
        [
            (r.fraction, r.mean_effdim_norm, r.std_effdim_norm,
             r.n_converged, r.n_runs)
            for r in rows
        ],
    )
    run.write_manifest()
    return 0


def cmd_barren(config: dict) -> int:
    run = Run("barren", config)
    grid = [int(v) for v in parse_grid(config["qubits"])]
    diagnostic = experiments.barren_pipeline(
        config["model"],
        grid,
        config["samples"],
        config["data_samples"],
        RngStream(config["seed"]),
        var_depth=config["depth"] or None,
        jobs=config["jobs"],
    )
    run.write_csv(
        "barren.csv",
        ("qubits", "d", "mean_trace_over_d"),
        diagnostic.rows(),
    )
    run.write_json(
        "barren.json",
        {
            "model_spec": config["model"],
            "decay_rate": diagnostic.decay_rate,
            "decay_stderr": diagnostic.decay_stderr,
            "degenerate": diagnostic.degenerate,
            "barren_flag": diagnostic.barren_flag,
        },
    )
    run.write_manifest()
    return 0


def cmd_bound(config: dict) -> int:
    run = Run("bound", config)
    inputs = effdim.BoundInputs(
        d_eff=config["d_eff"],
        gamma=config["gamma"],
        n=config["n"],
        alpha=config["alpha"],
        m_const=config["m_const"],
        b_range=config["b_range"],
        c_const=config["c_const"],
    )
    result = effdim.generalisation_bound_rhs(inputs)
    run.write_json("bound.json", {"inputs": vars(inputs), **result.as_dict()})
    run.write_manifest()
    return 0


def cmd_topologies(config: dict) -> int:
    run = Run("topologies", config)
    if config["rank"]:
        table = experiments.rank_topologies(
            config["d"],
            config["s_in"],
            config["s_out"],
            RngStream(config["seed"]),
            n_theta=config["samples"],
            k=config["data_samples"],
            max_layers=config["max_layers"],
            max_width=config["max_width"],
        )
        run.write_csv(
            "topologies.csv",
            ("topology", "d", "mean_fisher_rank"),
            [(r.spec, r.d, r.mean_rank) for r in table],
        )
    else:
        from .classical import enumerate_topologies

        table = enumerate_topologies(
            config["d"], config["s_in"], config["s_out"],
            config["max_layers"], config["max_width"],
        )
        run.write_csv(
            "topologies.csv",
            ("topology", "d"),
            [(t.spec_string(), t.param_count) for t in table],
        )
    run.write_manifest()
    return 0


# ---------------------------------------------------------------------------
# schemas and argument wiring

SCHEMAS = {
    "spectrum": {
        **MODEL_OPTS,
        "samples": (int, 100, _positive("samples")),
        "data_samples": (int, 100, _positive("data-samples")),
        "bins": (int, 50, _positive("bins")),
        **COMMON,
    },
    "effdim": {
        **MODEL_OPTS,
        "gamma": (float, 1.0, _gamma_check),
        "n_grid": (str, "1e2:1e12:30", None),
        "samples": (int, 100, _positive("samples")),
        "data_samples": (int, 100, _positive("data-samples")),
        **COMMON,
    },
    "train": {
        **MODEL_OPTS,
        "dataset": (str, "iris2", None),
        "lr": (float, 0.1, _positive("lr")),
        "iters": (int, 100, lambda v: _positive("iters")(v + 1)),
        "trials": (int, 100, _positive("trials")),
        "fisher_samples": (int, 100, _positive("fisher-samples")),
        "normalize": (bool, False, None),
        "points": (int, 1000, _positive("points")),
        "spread": (float, 1.0, _positive("spread")),
        **COMMON,
    },
    "sensitivity": {
        **MODEL_OPTS,
        "grid": (str, "10,20,40,70,100", None),
        "repeats": (int, 10, _positive("repeats")),
        "gamma": (float, 1.0, _gamma_check),
        "n": (float, 1e6, _positive("n")),
        **COMMON,
    },
    "confusion": {
        "net": (str, experiments.CONFUSION_NET, None),
        "grid": (str, "0,0.1,0.2,0.3,0.4,0.5", None),
        "runs": (int, 10, _positive("runs")),
        "points": (int, 1000, _positive("points")),
        "spread": (float, 1.0, _positive("spread")),
        "gamma": (float, 1.0, _gamma_check),
        "lr": (float, training.CONFUSION_LEARNING_RATE, _positive("lr")),
        "local_samples": (int, 100, _positive("local-samples")),
        "data_samples": (int, 100, _positive("data-samples")),
        **COMMON,
    },
    "barren": {
        "model": (str, "easy-qnn", None),
        "qubits": (str, "4,6,8,10", None),
        "depth": (int, 0, None),
        "samples": (int, 100, _positive("samples")),
        "data_samples": (int, 100, _positive("data-samples")),
        **COMMON,
    },
    "bound": {
        "d_eff": (float, None, _positive("d-eff")),
        "gamma": (float, None, _gamma_check),
        "n": (int, None, None),
        "alpha": (float, None, None),
        "m_const": (float, None, None),
        "b_range": (float, None, _positive("b-range")),
        "c_const": (float, None, _positive("c-const")),
        **COMMON,
    },
    "topologies": {
        "d": (int, None, _positive("d")),
        "s_in": (int, 4, _positive("s-in")),
        "s_out": (int, 2, _positive("s-out")),
        "max_layers": (int, 3, _positive("max-layers")),
        "max_width": (int, 256, _positive("max-width")),
        "rank": (bool, False, None),
        "samples": (int, 10, _positive("samples")),
        "data_samples": (int, 50, _positive("data-samples")),
        **COMMON,
    },
}

HANDLERS = {
    "spectrum": cmd_spectrum,
    "effdim": cmd_effdim,
    "train": cmd_train,
    "sensitivity": cmd_sensitivity,
    "confusion": cmd_confusion,
    "barren": cmd_barren,
    "bound": cmd_bound,
    "topologies": cmd_topologies,
}

HELP = {
    "spectrum": "Fisher ensemble, eigenvalue statistics and pooled histograms",
    "effdim": "effective-dimension curve over a data-count grid",
    "train": "multi-trial ADAM training with Fisher-Rao norms",
    "sensitivity": "effective-dimension stability against sample counts",
    "confusion": "label-randomisation generalisation study",
    "barren": "normalised Fisher trace across system sizes",
    "bound": "generalisation-bound right-hand-side evaluation",
    "topologies": "classical layouts for an exact parameter budget",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnngeom",
        description="Fisher-information geometry of quantum and classical "
        "neural networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in SCHEMAS.items():
        p = sub.add_parser(command, help=HELP[command])
        p.add_argument("--config", help="flat key = value config file")
        for key, (kind, _, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=key, action="store_const",
                               const=True, default=None)
            else:
                p.add_argument(flag, dest=key, type=kind, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    schema = SCHEMAS[args.command]
    try:
        config = resolve_config(args.command, schema, args)
        return HANDLERS[args.command](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except InternalError as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
