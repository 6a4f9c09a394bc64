"""Experiment runner: seeded, reproducible data files for each analysis.

Usage:

    qdarwin <experiment> [--config PATH] [--seed N] [--n-env N]
                         [--action X] [--delta X] [--out PATH]
                         [--format csv|json] [more flags below]

Experiments: pip, haar-pip, redundancy, ridge, sieve, envariance, qbm.

A config file is a flat ``key = value`` text file (lists are
comma-separated); command-line flags win over file values. Every run
writes the data file plus a ``<output>.manifest.json`` echoing the fully
resolved configuration, the toolkit version, and the derived sub-seeds;
re-running with the manifest as ``--config`` reproduces the data file
byte for byte. The environment variable ``QDARWIN_OUT_DIR`` sets the
default output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical or size guard.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .branches import ising_evolve, predictability_sieve, sample_couplings
from .dense import GuardError, PureState, split_seed
from .envariance import (
    RationalAmplitudeSpec,
    Verdict,
    born_via_envariance,
    equiprobability,
    finegrain,
    is_envariant,
    repeatability_constraint,
    verify_copy_map,
)
from .metrics import haar_pip, pip_curve, redundancy, redundancy_ridge
from .qbm import QbmParams, qbm_mutual_information, qbm_redundancy

EXPERIMENTS = ("pip", "haar-pip", "redundancy", "ridge", "sieve", "envariance", "qbm")

_DEFAULT_MU_GRID = tuple(np.pi / 16 * k for k in range(5))  # 0 .. pi/4
_DEFAULT_A_GRID = (0.25, 0.5, 1.0)
_DEFAULT_F_GRID = tuple(round(0.02 * k, 2) for k in range(1, 50))


@dataclass
class ExperimentConfig:
    experiment: str
    n_env: int = 50
    n_system: int = 1
    n_states: int = 20
    action: float = 1.0
    a_grid: tuple[float, ...] = _DEFAULT_A_GRID
    mu_grid: tuple[float, ...] = _DEFAULT_MU_GRID
    f_grid: tuple[float, ...] = _DEFAULT_F_GRID
    delta: float = 0.1
    n_samples: int = 200
    seed: int = 0
    h_s: float = 1.0
    squeeze: float = 10.0
    max_fragment: int = 12
    max_denominator: int = 10_000
    out: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class Diagnostic:
    """One actionable configuration problem, tied to the offending field."""

    fieldname: str
    message: str

    def __str__(self) -> str:
        return f"{self.fieldname}: {self.message}"


_INT_KEYS = {"n_env", "n_system", "n_states", "n_samples", "seed", "max_fragment", "max_denominator"}
_FLOAT_KEYS = {"action", "delta", "h_s", "squeeze"}
_LIST_KEYS = {"a_grid", "mu_grid", "f_grid"}
_STR_KEYS = {"experiment", "out", "format"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS


def parse_config_file(path: str) -> tuple[dict, list[Diagnostic]]:
    """Read a flat key = value config file (or a run manifest).

    A JSON file containing a ``config`` object (the manifest format) is
    accepted and its echoed configuration reused, which is what makes
    manifest-driven reruns a one-flag operation.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        raw = payload.get("config", payload)
        return dict(raw), []

    values: dict = {}
    diagnostics: list[Diagnostic] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            diagnostics.append(Diagnostic("config", f"line {lineno}: expected 'key = value'"))
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values, diagnostics


def _coerce(values: dict) -> tuple[dict, list[Diagnostic]]:
    out: dict = {}
    diagnostics: list[Diagnostic] = []
    for key, value in values.items():
        if key not in _ALL_KEYS:
            diagnostics.append(Diagnostic(key, "unknown configuration key"))
            continue
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _LIST_KEYS:
                if isinstance(value, (list, tuple)):
                    out[key] = tuple(float(v) for v in value)
                else:
                    out[key] = tuple(float(v) for v in str(value).split(",") if v.strip())
            else:
                out[key] = str(value)
        except (TypeError, ValueError):
            diagnostics.append(Diagnostic(key, f"cannot interpret value {value!r}"))
    return out, diagnostics


def validate(config: ExperimentConfig) -> list[Diagnostic]:
    """All configuration problems; the run starts only when this is empty."""
    diags: list[Diagnostic] = []
    if config.experiment not in EXPERIMENTS:
        close = difflib.get_close_matches(config.experiment, EXPERIMENTS, n=3)
        hint = f"; did you mean one of {close}?" if close else ""
        diags.append(
            Diagnostic("experiment", f"unknown experiment {config.experiment!r}{hint} "
                       f"(choices: {', '.join(EXPERIMENTS)})")
        )
    for name in ("n_env", "n_system", "n_states", "n_samples"):
        if getattr(config, name) < 1:
            diags.append(Diagnostic(name, "must be a positive count"))
    if not 0.0 < config.delta < 1.0:
        diags.append(Diagnostic("delta", "must lie in (0, 1)"))
    if config.action < 0.0:
        diags.append(Diagnostic("action", "must be non-negative"))
    if not 0 <= config.seed < 2**64:
        diags.append(Diagnostic("seed", "must fit in 64 bits"))
    if config.format not in ("csv", "json"):
        diags.append(Diagnostic("format", "must be 'csv' or 'json'"))
    if config.experiment in ("ridge", "sieve"):
        if not config.mu_grid:
            diags.append(Diagnostic("mu_grid", "must be a nonempty list of angles"))
        if not config.a_grid:
            diags.append(Diagnostic("a_grid", "must be a nonempty list of actions"))
    if config.experiment == "qbm" and not config.f_grid:
        diags.append(Diagnostic("f_grid", "must be a nonempty list of fractions"))
    if not 1 <= config.max_fragment <= 20:
        diags.append(Diagnostic("max_fragment", "must lie in 1..20"))
    if config.max_denominator < 1:
        diags.append(Diagnostic("max_denominator", "must be a positive integer"))
    if config.squeeze < 1.0:
        diags.append(Diagnostic("squeeze", "must be at least 1"))
    if config.h_s < 0.0:
        diags.append(Diagnostic("h_s", "must be non-negative"))
    return diags


def _fmt(x: float) -> str:
    """Locale-independent float formatting at 12 significant digits."""
    return format(float(x), ".12g")


def _fmt_bool(x: bool) -> str:
    return "true" if x else "false"


def _run_pip(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    seeds = {"couplings": split_seed(config.seed, 0), "fragments": split_seed(config.seed, 1)}
    couplings = sample_couplings(config.n_env, seeds["couplings"]).at_action(config.action)
    curve = pip_curve(ising_evolve(couplings), config.n_samples, seeds["fragments"])
    rows = [
        [str(p.m), _fmt(p.f), _fmt(p.i_mean), _fmt(p.i_stddev), _fmt(curve.plateau)]
        for p in curve.points
    ]
    return ["m", "f", "I_mean_bits", "I_stddev_bits", "H_S_bits"], rows, seeds


def _run_haar_pip(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    seeds = {"sampling": split_seed(config.seed, 0)}
    curve = haar_pip(
        config.n_system, config.n_env, config.n_states, config.n_samples, seeds["sampling"]
    )
    rows = [
        [str(p.m), _fmt(p.f), _fmt(p.i_mean), _fmt(p.i_stddev), _fmt(curve.plateau)]
        for p in curve.points
    ]
    return ["m", "f", "I_mean_bits", "I_stddev_bits", "H_S_bits"], rows, seeds


def _run_redundancy(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    seeds = {"couplings": split_seed(config.seed, 0), "fragments": split_seed(config.seed, 1)}
    couplings = sample_couplings(config.n_env, seeds["couplings"]).at_action(config.action)
    result = redundancy(ising_evolve(couplings), config.delta, config.n_samples, seeds["fragments"])
    rows = [
        [
            _fmt(result.delta),
            _fmt(result.f_delta),
            _fmt(result.r_delta),
            _fmt_bool(result.interpolated),
            _fmt(result.h_s),
        ]
    ]
    return ["delta", "f_delta", "R_delta", "interpolated", "H_S_bits"], rows, seeds


def _run_ridge(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    seeds = {"couplings": split_seed(config.seed, 0), "fragments": split_seed(config.seed, 1)}
    couplings = sample_couplings(config.n_env, seeds["couplings"])
    points = redundancy_ridge(
        couplings,
        config.a_grid,
        config.mu_grid,
        delta=config.delta,
        n_samples=config.n_samples,
        seed=seeds["fragments"],
        max_fragment=min(config.max_fragment, config.n_env),
    )
    rows = [[_fmt(p.mu), _fmt(p.action), _fmt(p.r_delta), _fmt(p.f_delta)] for p in points]
    return ["mu", "action", "R_delta", "f_delta"], rows, seeds


def _run_sieve(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    seeds = {"couplings": split_seed(config.seed, 0)}
    couplings = sample_couplings(config.n_env, seeds["couplings"])
    mean_g = float(np.mean(couplings.g))
    t_grid = [a / mean_g for a in config.a_grid]
    result = predictability_sieve(couplings, config.mu_grid, t_grid)
    rows = []
    for i, mu in enumerate(result.mu_grid):
        for j, t in enumerate(result.t_grid):
            rows.append([_fmt(mu), _fmt(t), _fmt(result.entropies[i, j])])
    return ["mu", "t", "H_S_bits"], rows, seeds


def _run_qbm(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    params = QbmParams(config.h_s, config.squeeze, config.delta, units="bits")
    curve = qbm_mutual_information(params, config.f_grid)
    rows = [[_fmt(p.f), _fmt(p.i_value), _fmt_bool(p.clamped)] for p in curve.points]
    return ["f", "I_bits", "clamped"], rows, {"r_delta": _fmt(qbm_redundancy(params))}


def _run_envariance(config: ExperimentConfig) -> tuple[list[str], list[list[str]], dict]:
    """Deterministic verification vignettes for the symmetry machinery."""
    rows: list[list[str]] = []

    def record(check: str, expected: str, actual: str) -> None:
        rows.append([check, expected, actual, _fmt_bool(expected == actual)])

    bell = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    record(
        "equal-coefficient pair probabilities",
        "1/2|1/2",
        "|".join(str(Fraction(p).limit_denominator(10**6)) for p in equiprobability(bell, (0,))),
    )

    _, probs = finegrain(RationalAmplitudeSpec((2, 1), 3))
    record("finegrain weights 2:1", "2/3|1/3", "|".join(str(p) for p in probs))

    amps = np.sqrt(np.array([2 / 3, 1 / 3]))
    record(
        "squared-amplitude probabilities (rational case)",
        "2/3|1/3",
        "|".join(str(p) for p in born_via_envariance(amps, config.max_denominator)),
    )
    record(
        "certainty case",
        "1|0",
        "|".join(str(p) for p in born_via_envariance(np.array([1.0, 0.0]), config.max_denominator)),
    )

    phase = np.diag([1.0, np.exp(1j * 0.7)])
    record("Schmidt phase is undoable from the partner", "true",
           _fmt_bool(is_envariant(bell, phase, (0,))[0]))

    lopsided = PureState(
        np.sqrt(np.array([2 / 3, 0, 0, 1 / 3])).astype(complex), (2, 2)
    )
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    record("swap of unequal branches is not undoable", "false",
           _fmt_bool(is_envariant(lopsided, swap, (0,))[0]))

    cnot = np.eye(4)[[0, 1, 3, 2]]
    report = verify_copy_map([1, 0], [0, 1], cnot, [1, 0])
    record("basis copier verdict", Verdict.ORTHOGONAL_OK.value,
           report.verdict.value if report.verdict else "system-perturbed")
    report = verify_copy_map([1, 0], [0, 1], np.eye(4), [1, 0])
    record("identity copier verdict", Verdict.UNSUCCESSFUL_COPY.value,
           report.verdict.value if report.verdict else "system-perturbed")
    plus = np.array([1, 1]) / np.sqrt(2)
    report = verify_copy_map(plus, [0, 1], cnot, [1, 0])
    record("copier on a superposition perturbs it", "true", _fmt_bool(not report.system_preserved))

    record("repeatability identity rejects partial records", Verdict.VIOLATION.value,
           repeatability_constraint(0.5, 0.3).value)

    return ["check", "expected", "actual", "pass"], rows, {}


_RUNNERS: dict[str, Callable[[ExperimentConfig], tuple[list[str], list[list[str]], dict]]] = {
    "pip": _run_pip,
    "haar-pip": _run_haar_pip,
    "redundancy": _run_redundancy,
    "ridge": _run_ridge,
    "sieve": _run_sieve,
    "envariance": _run_envariance,
    "qbm": _run_qbm,
}


@dataclass(frozen=True)
class RunResult:
    output_path: str
    manifest_path: str
    rows: int


def _render_csv(config: ExperimentConfig, header: list[str], rows: list[list[str]]) -> str:
    lines = [f"# seed={config.seed} version={__version__} experiment={config.experiment}"]
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _render_json(config: ExperimentConfig, header: list[str], rows: list[list[str]]) -> str:
    payload = {
        "metadata": {
            "seed": config.seed,
            "version": __version__,
            "experiment": config.experiment,
        },
        "columns": header,
        "rows": rows,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def run(config: ExperimentConfig) -> RunResult:
    """Execute the configured experiment; deterministic for a fixed config.

    Data is written atomically (no partial files survive a failure) and a
    manifest with the resolved configuration and derived seeds is placed
    next to it.
    """
    problems = validate(config)
    if problems:
        raise ValueError("; ".join(str(p) for p in problems))
    started = time.perf_counter()
    header, rows, seeds = _RUNNERS[config.experiment](config)

    out_dir = os.environ.get("QDARWIN_OUT_DIR", ".")
    default_name = f"{config.experiment}.{config.format}"
    path = config.out or os.path.join(out_dir, default_name)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)

    render = _render_csv if config.format == "csv" else _render_json
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(render(config, header, rows))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)

    manifest_path = path + ".manifest.json"
    manifest = {
        "config": asdict(config),
        "version": __version__,
        "experiment": config.experiment,
        "seeds": seeds,
        "output_path": path,
        "rows": len(rows),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunResult(path, manifest_path, len(rows))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdarwin",
        description="Seeded, reproducible decoherence and redundancy experiments.",
    )
    parser.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    parser.add_argument("--config", help="flat key=value config file or a run manifest")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n-env", dest="n_env", type=int)
    parser.add_argument("--n-system", dest="n_system", type=int)
    parser.add_argument("--n-states", dest="n_states", type=int)
    parser.add_argument("--n-samples", dest="n_samples", type=int)
    parser.add_argument("--action", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--mu-grid", dest="mu_grid")
    parser.add_argument("--a-grid", dest="a_grid")
    parser.add_argument("--f-grid", dest="f_grid")
    parser.add_argument("--h-s", dest="h_s", type=float)
    parser.add_argument("--squeeze", type=float)
    parser.add_argument("--max-fragment", dest="max_fragment", type=int)
    parser.add_argument("--max-denominator", dest="max_denominator", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("csv", "json"))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    diagnostics: list[Diagnostic] = []
    values: dict = {}

    if args.config:
        try:
            file_values, file_diags = parse_config_file(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config: cannot read {args.config}: {exc}", file=sys.stderr)
            return 2
        diagnostics.extend(file_diags)
        values.update(file_values)

    flag_values = {
        key: getattr(args, key)
        for key in _ALL_KEYS - {"experiment"}
        if getattr(args, key, None) is not None
    }
    values.update(flag_values)
    values["experiment"] = args.experiment
    coerced, coerce_diags = _coerce(values)
    diagnostics.extend(coerce_diags)
    if diagnostics:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)
        return 2

    config = ExperimentConfig(**coerced)
    diagnostics = validate(config)
    if diagnostics:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)
        return 2

    try:
        result = run(config)
    except GuardError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {result.rows} rows to {result.output_path}")
    print(f"manifest: {result.manifest_path}")
    return 0


def entry_point() -> None:
    raise SystemExit(main())
