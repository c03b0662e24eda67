"""Config-driven command line front end.

Subcommands::

    qswitch run      --config PATH [--out DIR] [--seed N] [--restarts N] [--workers N]
    qswitch list
    qswitch validate --config PATH
    qswitch bath     [--config PATH | --b FLOAT] [--kappa FLOAT] [--out DIR]
    qswitch reach    --config PATH [--out DIR]

Experiment configs are INI files with a versioned schema (see
:data:`SCHEMA_VERSION`).  Sections: ``[meta]`` (schema_version, name,
description), ``[model]`` (builder kind plus its parameters), ``[problem]``
(initial/target labels, total_time, slices), ``[task]`` (kind), and the
task-specific ``[optimizer]``, ``[sweep]``, ``[protocol]``, ``[bath]``,
``[output]``.  ``--config`` also accepts the bare name of a bundled
experiment (``qswitch list`` enumerates them).

State labels: ``ground``, ``max_mixed``, ``ghz``, ``file:PATH`` (JSON density
matrix, resolved relative to the config), ``diag:w1,w2,...`` (diagonal state
with relative weights, normalized), ``algcool`` / ``test2`` (partner-pairing
fixed point and its averaged variant; thermal models only).

Every run writes its artifacts atomically under one output directory:
``result.json`` (byte-stable: no timestamps or timings), task-specific CSVs,
a copy of the config, and last a ``manifest.json`` holding the config digest,
the seed actually used, package versions, wall time, and a SHA-256 digest of
every emitted file.  Omitting the seed is still reproducible: it defaults to
a hash of the config text.

Exit codes: 0 success, 2 config error, 3 reachability infeasibility,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import importlib.resources
import json
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bath import (
    Timescales,
    damping_rate,
    lamb_shift_rate,
    occupation,
    gmon_lamb_ratio,
    validate_timescales,
)
from .errors import ConfigError, NumericalError, QSwitchError, ReachabilityError
from .grape import (
    OptimizerConfig,
    TransferProblem,
    optimize,
    result_record,
    sequence_to_csv,
    sweep_durations,
)
from .liouville import ControlSystem, DensityOperator
from .models import (
    default_gmon_bath,
    einstein_coefficients,
    gmon_bath_temperature,
    gmon_chain,
    ion_trap_collective,
    ising_chain,
    kappa_to_rate,
    target_state,
    thermal_ising_chain,
)
from .propagation import frobenius_error, propagate
from .protocols import (
    algorithmic_cooling_state,
    amp_damp_exact_plan,
    cooling_protocol,
    erasure_protocol,
    execute_plan,
    greedy_equalize_plan,
    hlp_full_plan,
    plan_to_json,
    reachability_verdict,
    test2_target,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

TASKS = ("optimize", "sweep", "protocol", "reachability", "bath", "validate-timescales")
MODEL_KINDS = ("ising_chain", "thermal_ising_chain", "gmon_chain", "ion_trap_collective")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """A parsed and schema-checked experiment description."""

    name: str
    description: str
    task: str
    model: dict
    problem: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    bath: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source_text: str = ""
    source_path: Path | None = None

    @property
    def base_dir(self) -> Path:
        return self.source_path.parent if self.source_path else Path.cwd()

    def default_seed(self) -> int:
        """Config-hash seed so that runs without an explicit seed still repeat."""
        digest = hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()
        return int(digest, 16) % 2**32


_ANGLE = re.compile(r"^(?:(\d+(?:\.\d+)?)\s*\*\s*)?pi(?:\s*/\s*(\d+(?:\.\d+)?))?$")


def parse_angle(text: str) -> float:
    """Parse a float or a 'pi'-expression such as ``pi/2`` or ``3*pi/4``."""
    text = text.strip()
    m = _ANGLE.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse angle {text!r}") from exc


def _parse_floats(text: str) -> list[float]:
    parts = [p for p in re.split(r"[\s,]+", text.strip()) if p]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _section(parser: configparser.ConfigParser, name: str) -> dict:
    return dict(parser[name]) if parser.has_section(name) else {}


def resolve_config_path(spec: str) -> Path:
    """Resolve ``--config``: a filesystem path, or the name of a bundled config."""
    p = Path(spec)
    if p.exists():
        return p
    stem = spec[:-4] if spec.endswith(".cfg") else spec
    bundled = importlib.resources.files("qswitch.experiments") / f"{stem}.cfg"
    try:
        if bundled.is_file():
            return Path(str(bundled))
    except (OSError, TypeError):  # non-filesystem resource loader
        pass
    raise ConfigError(f"config {spec!r} not found (path or bundled name)")


def load_config(path) -> ExperimentConfig:
    """Parse and schema-check one experiment config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    parser.optionxform = str  # keep key case: 'J' stays 'J'
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    for required in ("meta", "model", "task"):
        if not parser.has_section(required):
            raise ConfigError(f"config {path} lacks required section [{required}]")
    meta = parser["meta"]
    version = meta.getint("schema_version", fallback=None)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config {path} has schema_version {version!r}, expected {SCHEMA_VERSION}"
        )
    task = parser["task"].get("kind", "").strip()
    if task not in TASKS:
        raise ConfigError(f"unknown task kind {task!r} (choose from {', '.join(TASKS)})")
    model = _section(parser, "model")
    if task not in ("bath", "validate-timescales"):
        if model.get("kind", "").strip() not in MODEL_KINDS:
            raise ConfigError(
                f"unknown model kind {model.get('kind')!r} "
                f"(choose from {', '.join(MODEL_KINDS)})"
            )
    cfg = ExperimentConfig(
        name=meta.get("name", path.stem).strip(),
        description=meta.get("description", "").strip(),
        task=task,
        model=model,
        problem=_section(parser, "problem"),
        optimizer=_section(parser, "optimizer"),
        sweep=_section(parser, "sweep"),
        protocol=_section(parser, "protocol"),
        bath=_section(parser, "bath"),
        output=_section(parser, "output"),
        source_text=text,
        source_path=path,
    )
    _check_task_sections(cfg)
    return cfg


def _check_task_sections(cfg: ExperimentConfig) -> None:
    if cfg.task in ("optimize", "sweep"):
        for key in ("initial", "target", "total_time", "slices"):
            if cfg.task == "sweep" and key == "total_time":
                continue  # durations come from [sweep]
            if key not in cfg.problem:
                raise ConfigError(f"task {cfg.task} requires [problem] {key}")
    if cfg.task == "sweep" and "durations" not in cfg.sweep:
        raise ConfigError("task sweep requires [sweep] durations")
    if cfg.task == "protocol":
        kind = cfg.protocol.get("kind")
        if kind not in (
            "hlp", "greedy", "compare", "amp_damp_exact", "cooling", "erasure",
        ):
            raise ConfigError(
                "task protocol requires [protocol] kind in "
                "{hlp, greedy, compare, amp_damp_exact, cooling, erasure}"
            )
        if kind not in ("cooling", "erasure"):
            for key in ("initial", "target"):
                if key not in cfg.problem:
                    raise ConfigError(f"protocol kind {kind} requires [problem] {key}")
    if cfg.task == "reachability":
        for key in ("initial", "target"):
            if key not in cfg.problem:
                raise ConfigError(f"task reachability requires [problem] {key}")


# ---------------------------------------------------------------------------
# model and state resolution
# ---------------------------------------------------------------------------


def _get(section: dict, key: str, cast, default):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return cast(section[key])
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"bad value for {key!r}: {section[key]!r} ({exc})") from exc


def build_system(cfg: ExperimentConfig) -> ControlSystem:
    """Instantiate the [model] section's builder."""
    m = cfg.model
    kind = m.get("kind", "").strip()
    try:
        if kind == "ising_chain":
            return ising_chain(
                n=_get(m, "n", int, 3),
                J=_get(m, "J", float, 1.0),
                theta=_get(m, "theta", parse_angle, 0.0),
                gamma_max=_get(m, "gamma_max", float, 5.0),
                gamma_dephasing=_get(m, "gamma_dephasing", float, 0.0),
            )
        if kind == "thermal_ising_chain":
            return thermal_ising_chain(
                n=_get(m, "n", int, 2),
                J=_get(m, "J", float, 1.0),
                b=_get(m, "b", float, 2.0),
                gamma_max=_get(m, "gamma_max", float, 5.0),
                lamb_ratio=_get(m, "lamb_ratio", float, 0.0),
            )
        if kind == "gmon_chain":
            bath = default_gmon_bath(_get(m, "b", float, 1e-3))
            anharmonicity = (
                float(m["anharmonicity"]) if "anharmonicity" in m else None
            )
            return gmon_chain(
                n=_get(m, "n", int, 2),
                J=_get(m, "J", float, 1.0),
                anharmonicity=anharmonicity,
                bath=bath,
                gamma_max=_get(m, "gamma_max", float, 5.0),
            )
        if kind == "ion_trap_collective":
            return ion_trap_collective(
                n=_get(m, "n", int, 4),
                interaction=_get(m, "interaction", float, 1.0),
                gamma_max=_get(m, "gamma_max", float, 5.0),
            )
    except (ValueError, QSwitchError) as exc:
        raise ConfigError(f"cannot build model {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def resolve_state(
    label: str, system: ControlSystem, cfg: ExperimentConfig
) -> DensityOperator:
    """Turn a [problem] state label into a density operator."""
    label = label.strip()
    dims = system.dims
    N = int(np.prod(dims))
    if label.startswith("diag:"):
        weights = np.array(_parse_floats(label[len("diag:"):]), dtype=float)
        if len(weights) != N or np.any(weights < 0) or weights.sum() <= 0:
            raise ConfigError(
                f"diag: needs {N} nonnegative weights with positive sum"
            )
        return DensityOperator(np.diag(weights / weights.sum()).astype(complex), dims)
    if label in ("algcool", "test2"):
        if cfg.model.get("kind") != "thermal_ising_chain":
            raise ConfigError(f"label {label!r} requires a thermal_ising_chain model")
        n = _get(cfg.model, "n", int, 2)
        b = _get(cfg.model, "b", float, 2.0)
        builder = algorithmic_cooling_state if label == "algcool" else test2_target
        return builder(n, b)
    if label.startswith("file:"):
        rel = label[len("file:"):].strip()
        if not rel:
            raise ConfigError("file: label requires a path")
        path = Path(rel)
        if not path.is_absolute():
            path = cfg.base_dir / path
        label = f"file:{path}"
    return target_state(label, dims).state


def _noise_kind(cfg: ExperimentConfig) -> tuple[str, float | None]:
    """Map the model to a (noise kind, Boltzmann factor) for reachability."""
    kind = cfg.model.get("kind")
    if kind == "ising_chain":
        theta = _get(cfg.model, "theta", parse_angle, 0.0)
        if theta == 0.0:
            return "amp_damp", None
        if abs(theta - math.pi / 2) < 1e-12:
            return "bit_flip", None
        # pair action of V_theta matches a thermal channel with b = cot²(θ/2)
        return "finite_T", 1.0 / math.tan(theta / 2) ** 2
    if kind == "thermal_ising_chain":
        return "finite_T", _get(cfg.model, "b", float, 2.0)
    if kind == "ion_trap_collective":
        return "amp_damp", None
    raise ConfigError(
        f"reachability verdicts cover qubit-register models, not {kind!r}"
    )


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------


def _to_jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(x) for x in obj]
    return obj


def _json_bytes(payload: dict) -> bytes:
    return (
        json.dumps(_to_jsonable(payload), sort_keys=True, indent=1) + "\n"
    ).encode("utf-8")


def write_atomic(path: Path, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class ArtifactWriter:
    """Collects artifact files for one run and closes with a manifest."""

    def __init__(self, outdir: Path):
        self.outdir = Path(outdir)
        self.digests: dict[str, str] = {}

    def add_bytes(self, name: str, data: bytes) -> None:
        write_atomic(self.outdir / name, data)
        self.digests[name] = hashlib.sha256(data).hexdigest()

    def add_json(self, name: str, payload: dict) -> None:
        self.add_bytes(name, _json_bytes(payload))

    def add_file_via(self, name: str, writer) -> None:
        """Run ``writer(tmp_path)`` and move the finished file into place."""
        self.outdir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.outdir, prefix=f".{name}.")
        os.close(fd)
        try:
            writer(tmp)
            data = Path(tmp).read_bytes()
            os.replace(tmp, self.outdir / name)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        self.digests[name] = hashlib.sha256(data).hexdigest()

    def finish(self, cfg: ExperimentConfig, seed: int | None, wall_time: float) -> None:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.name,
            "config_sha256": hashlib.sha256(
                cfg.source_text.encode("utf-8")
            ).hexdigest(),
            "task": cfg.task,
            "seed": seed,
            "versions": {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "qswitch": __version__,
            },
            "wall_time_s": wall_time,
            "files": dict(sorted(self.digests.items())),
        }
        self.add_bytes("manifest.json", _json_bytes(manifest))


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------


def _optimizer_config(cfg: ExperimentConfig, seed: int) -> OptimizerConfig:
    opt = cfg.optimizer
    kwargs = dict(
        restarts=_get(opt, "restarts", int, 1),
        max_iterations=_get(opt, "max_iterations", int, 200),
        gradient_method=opt.get("gradient_method", "auxiliary").strip(),
        tolerance=_get(opt, "tolerance", float, 1e-12),
        seed=seed,
        workers=_get(opt, "workers", int, 0),
    )
    if "amplitude_cap" in opt:
        kwargs["amplitude_cap"] = float(opt["amplitude_cap"])
    if "target_error" in opt:
        kwargs["target_error"] = float(opt["target_error"])
    return OptimizerConfig(**kwargs)


def _final_state_summary(system, problem, result) -> dict:
    final = propagate(system, result.best_sequence, problem.initial).final
    diag = np.real(np.diag(final.matrix))
    return {
        "ground_population": float(diag[0]),
        "final_diagonal": [float(x) for x in diag],
    }


def _run_optimize(cfg, system, writer, seed) -> int:
    problem = TransferProblem(
        system=system,
        initial=resolve_state(cfg.problem["initial"], system, cfg),
        target=resolve_state(cfg.problem["target"], system, cfg),
        total_time=_get(cfg.problem, "total_time", float, None),
        slice_count=_get(cfg.problem, "slices", int, None),
        label=cfg.name,
    )
    config = _optimizer_config(cfg, seed)
    result = optimize(problem, config)
    record = result_record(problem, config, result, include_wall_time=False)
    record["final_state"] = _final_state_summary(system, problem, result)
    writer.add_json("result.json", record)
    writer.add_file_via(
        "sequence.csv",
        lambda p: sequence_to_csv(
            result.best_sequence,
            p,
            labels=[c.label for c in system.controls]
            + [ch.label for ch in system.channels],
        ),
    )
    if cfg.output.get("trajectory", "false").strip().lower() in ("true", "1", "yes"):
        traj = propagate(system, result.best_sequence, problem.initial)
        writer.add_file_via("trajectory.csv", traj.to_csv)
    print(
        f"task optimize ({cfg.name}): best delta_F = {result.best_error:.6e}"
        f" (restart {result.best_restart},"
        f" {sum(result.converged)}/{len(result.converged)} converged)"
    )
    return EXIT_OK


def _run_sweep(cfg, system, writer, seed) -> int:
    durations = _parse_floats(cfg.sweep["durations"])
    problem = TransferProblem(
        system=system,
        initial=resolve_state(cfg.problem["initial"], system, cfg),
        target=resolve_state(cfg.problem["target"], system, cfg),
        total_time=max(durations),
        slice_count=_get(cfg.problem, "slices", int, None),
        label=cfg.name,
    )
    config = _optimizer_config(cfg, seed)
    sweep = sweep_durations(problem, durations, config)
    rows = []
    records = []
    for tau, res in zip(sweep.durations, sweep.results):
        rows.append((tau, res.best_error, all(res.converged)))
        prob_tau = dataclasses.replace(problem, total_time=tau)
        records.append(result_record(prob_tau, config, res, include_wall_time=False))
    writer.add_json(
        "result.json",
        {
            "durations": list(map(float, sweep.durations)),
            "best_errors": [float(e) for e in sweep.best_errors],
            "running_min": [float(e) for e in sweep.running_min],
            "runs": records,
        },
    )
    csv = "tau,best_delta_F,all_converged\n" + "".join(
        f"{tau:.16e},{err:.16e},{int(conv)}\n" for tau, err, conv in rows
    )
    writer.add_bytes("sweep.csv", csv.encode())
    best = min(sweep.best_errors)
    print(
        f"task sweep ({cfg.name}): {len(durations)} durations,"
        f" best delta_F = {best:.6e}"
    )
    return EXIT_OK


def _protocol_entry(system, plan, rho0, target, execute: bool) -> dict:
    entry = {
        "label": plan.label,
        "steps": len(plan.steps),
        "noise_duration": plan.noise_duration,
        "unitary_duration": plan.unitary_duration,
        "total_duration": plan.total_duration,
        "predicted_error": plan.predicted_error,
    }
    if execute:
        final = execute_plan(system, plan, rho0)
        entry["executed_error"] = frobenius_error(final, target)
    return entry


def _run_protocol(cfg, system, writer, seed) -> int:
    sec = cfg.protocol
    kind = sec["kind"].strip()
    execute = sec.get("execute", "true").strip().lower() in ("true", "1", "yes")
    entries: dict[str, dict] = {}
    plans = {}

    if kind in ("hlp", "greedy", "compare", "amp_damp_exact"):
        rho0 = resolve_state(cfg.problem["initial"], system, cfg)
        target = resolve_state(cfg.problem["target"], system, cfg)
        gamma = float(sec["gamma"]) if "gamma" in sec else None
        if kind in ("hlp", "compare"):
            plans["hlp"] = hlp_full_plan(
                rho0, target, system, gamma=gamma,
                gamma_tau_budget=_get(sec, "gamma_tau_budget", float, 20.0),
            )
        if kind in ("greedy", "compare"):
            plans["greedy"] = greedy_equalize_plan(
                rho0, target, system, gamma=gamma,
                gamma_tau_budget=_get(sec, "gamma_tau_budget", float, 20.0),
            )
        if kind == "amp_damp_exact":
            plans["amp_damp_exact"] = amp_damp_exact_plan(
                rho0, target, system, gamma=gamma
            )
        for name, plan in plans.items():
            entries[name] = _protocol_entry(system, plan, rho0, target, execute)
    elif kind in ("cooling", "erasure"):
        n = len(system.dims)
        J = _get(cfg.model, "J", float, 1.0)
        gamma_max = _get(cfg.model, "gamma_max", float, 5.0)
        delta_F = _get(sec, "delta_F", float, 1e-4 if kind == "cooling" else 1e-3)
        if kind == "cooling":
            plan, bound = cooling_protocol(n, J=J, gamma_max=gamma_max, delta_F=delta_F)
            rho0 = resolve_state("max_mixed", system, cfg)
            target = resolve_state("ground", system, cfg)
        else:
            mode = sec.get("mode", "amp_damp_exact").strip()
            plan, bound = erasure_protocol(
                n, J=J, gamma_max=gamma_max, mode=mode, delta_F=delta_F
            )
            rho0 = resolve_state("ground", system, cfg)
            target = resolve_state("max_mixed", system, cfg)
        plans[kind] = plan
        entries[kind] = _protocol_entry(system, plan, rho0, target, execute)
        entries[kind]["duration_bound"] = bound
    else:  # pragma: no cover - guarded in _check_task_sections
        raise ConfigError(f"unknown protocol kind {kind!r}")

    for name, plan in plans.items():
        writer.add_file_via(f"plan_{name}.json", lambda p, plan=plan: plan_to_json(plan, p))
    writer.add_json("result.json", {"protocols": entries})
    for name, entry in entries.items():
        executed = entry.get("executed_error")
        print(
            f"task protocol ({cfg.name}/{name}): noise time "
            f"{entry['noise_duration']:.6g}, predicted delta_F = "
            f"{entry['predicted_error']:.6e}"
            + (f", executed delta_F = {executed:.6e}" if executed is not None else "")
        )
    return EXIT_OK


def _run_reachability(cfg, system, writer, seed) -> int:
    rho0 = resolve_state(cfg.problem["initial"], system, cfg)
    target = resolve_state(cfg.problem["target"], system, cfg)
    kind, b = _noise_kind(cfg)
    verdict = reachability_verdict(rho0, target, kind, b=b)
    payload = {"noise_kind": kind, "boltzmann_b": b, "verdict": verdict.reachable}
    if verdict.witness is not None:
        payload["witness"] = {
            "reference": verdict.witness.reference,
            "floor": verdict.witness.floor,
            "margins": [float(x) for x in verdict.witness.margins],
        }
    writer.add_json("verdict.json", payload)
    writer.add_json("result.json", payload)
    print(f"task reachability ({cfg.name}): {verdict.reachable} under {kind}")
    return EXIT_INFEASIBLE if verdict.reachable == "no" else EXIT_OK


def bath_report(b: float, kappa: float | None = None, factor: float = 10.0) -> dict:
    """Rates, KMS ratio, Lamb data, and timescale checks for a transmission-line bath."""
    spec = default_gmon_bath(b)
    omega = spec.transition
    down = damping_rate(omega, spec)
    up = damping_rate(-omega, spec)
    report = {
        "b": b,
        "temperature_K": gmon_bath_temperature(b),
        "occupation": occupation(omega, spec),
        "rate_down": down,
        "rate_up": up,
        "kms_ratio": up / down,
        "lamb_shift_down": lamb_shift_rate(omega, spec),
        "lamb_shift_up": lamb_shift_rate(-omega, spec),
        "lamb_ratio": gmon_lamb_ratio(spec),
    }
    if kappa is not None:
        rate = kappa_to_rate(kappa, spec)
        scales = Timescales(
            bath_correlation=spec.cutoff,
            system=abs(omega),
            relaxation=rate,
        )
        ts = validate_timescales(scales, factor=factor)
        report["kappa"] = kappa
        report["gamma"] = rate
        report["einstein"] = einstein_coefficients(spec, kappa)
        report["timescales"] = {
            "factor": ts.factor,
            "passed": ts.passed,
            "checks": [
                {"name": name, "ratio": ratio, "ok": ok}
                for name, ratio, ok in ts.checks
            ],
        }
    return report


def _run_bath(cfg, system, writer, seed) -> int:
    sec = cfg.bath
    report = bath_report(
        b=_get(sec, "b", float, 1e-3),
        kappa=float(sec["kappa"]) if "kappa" in sec else None,
        factor=_get(sec, "factor", float, 10.0),
    )
    writer.add_json("result.json", report)
    print(json.dumps(_to_jsonable(report), sort_keys=True, indent=1))
    return EXIT_OK


def _run_timescales(cfg, system, writer, seed) -> int:
    sec = cfg.bath
    explicit = all(k in sec for k in ("bath_correlation", "system", "relaxation"))
    if explicit:
        scales = Timescales(
            bath_correlation=float(sec["bath_correlation"]),
            system=float(sec["system"]),
            relaxation=float(sec["relaxation"]),
            control=float(sec["control"]) if "control" in sec else None,
        )
    else:
        spec = default_gmon_bath(_get(sec, "b", float, 1e-3))
        kappa = _get(sec, "kappa", float, None)
        scales = Timescales(
            bath_correlation=spec.cutoff,
            system=abs(spec.transition),
            relaxation=kappa_to_rate(kappa, spec),
        )
    report = validate_timescales(scales, factor=_get(sec, "factor", float, 10.0))
    payload = {
        "factor": report.factor,
        "passed": report.passed,
        "checks": [
            {"name": name, "ratio": ratio, "ok": ok}
            for name, ratio, ok in report.checks
        ],
    }
    writer.add_json("result.json", payload)
    for line in report.lines():
        print(line)
    return EXIT_OK


_RUNNERS = {
    "optimize": _run_optimize,
    "sweep": _run_sweep,
    "protocol": _run_protocol,
    "reachability": _run_reachability,
    "bath": _run_bath,
    "validate-timescales": _run_timescales,
}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def list_experiments() -> list[dict]:
    """Catalog of bundled experiment configs: name, task, description."""
    catalog = []
    root = importlib.resources.files("qswitch.experiments")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".cfg"):
            continue
        cfg = load_config(Path(str(entry)))
        item = {
            "name": cfg.name,
            "task": cfg.task,
            "description": cfg.description,
        }
        missing = _missing_external_files(cfg)
        if missing:
            item["requires"] = [str(p) for p in missing]
        catalog.append(item)
    return catalog


def _missing_external_files(cfg: ExperimentConfig) -> list[Path]:
    missing = []
    for key in ("initial", "target"):
        label = cfg.problem.get(key, "")
        if label.startswith("file:"):
            path = Path(label[len("file:"):].strip())
            if not path.is_absolute():
                path = cfg.base_dir / path
            if not path.exists():
                missing.append(path)
    return missing


def _cmd_list(args) -> int:
    for item in list_experiments():
        req = f"  [requires {', '.join(item['requires'])}]" if "requires" in item else ""
        print(f"{item['name']:24s} {item['task']:20s} {item['description']}{req}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(resolve_config_path(args.config))
        if cfg.task not in ("bath", "validate-timescales"):
            system = build_system(cfg)
            dims = "x".join(str(d) for d in system.dims)
            # resolve states now so bad labels fail here, not at run time;
            # absent external files are reported but do not fail validation
            missing = _missing_external_files(cfg)
            for key in ("initial", "target"):
                label = cfg.problem.get(key)
                if label and not (label.startswith("file:") and missing):
                    resolve_state(label, system, cfg)
            print(f"ok: {cfg.name} (task {cfg.task}, dims {dims})")
            for path in missing:
                print(f"note: external input not present yet: {path}")
        else:
            print(f"ok: {cfg.name} (task {cfg.task})")
    except (QSwitchError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_run(args) -> int:
    t0 = time.perf_counter()
    try:
        cfg = load_config(resolve_config_path(args.config))
        for key, value in (
            ("restarts", args.restarts),
            ("workers", args.workers),
        ):
            if value is not None:
                cfg.optimizer[key] = str(value)
        if args.seed is not None:
            cfg.optimizer["seed"] = str(args.seed)
        system = (
            build_system(cfg)
            if cfg.task not in ("bath", "validate-timescales")
            else None
        )
        missing = _missing_external_files(cfg)
        if missing:
            raise ConfigError(
                "missing input files: " + ", ".join(str(p) for p in missing)
            )
        outdir = Path(
            args.out
            or cfg.output.get("directory", "").strip()
            or Path("runs") / cfg.name
        )
        seed = (
            int(cfg.optimizer["seed"])
            if "seed" in cfg.optimizer
            else cfg.default_seed()
        )
    except (QSwitchError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    writer = ArtifactWriter(outdir)
    try:
        code = _RUNNERS[cfg.task](cfg, system, writer, seed)
    except ReachabilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        writer.add_json("result.json", {"infeasible": str(exc)})
        writer.finish(cfg, seed, time.perf_counter() - t0)
        return EXIT_INFEASIBLE
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QSwitchError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    writer.add_bytes("config.cfg", cfg.source_text.encode("utf-8"))
    writer.finish(cfg, seed, time.perf_counter() - t0)
    print(f"artifacts -> {writer.outdir}")
    return code


def _cmd_bath(args) -> int:
    try:
        if args.config:
            cfg = load_config(resolve_config_path(args.config))
            sec = cfg.bath
            b = _get(sec, "b", float, 1e-3)
            kappa = float(sec["kappa"]) if "kappa" in sec else args.kappa
            factor = _get(sec, "factor", float, args.factor)
        else:
            b, kappa, factor = args.b, args.kappa, args.factor
        report = bath_report(b=b, kappa=kappa, factor=factor)
    except (QSwitchError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(_to_jsonable(report), sort_keys=True, indent=1))
    if args.out:
        writer = ArtifactWriter(Path(args.out))
        writer.add_json("result.json", report)
        if args.config:
            writer.finish(cfg, None, 0.0)
    return EXIT_OK


def _cmd_reach(args) -> int:
    try:
        cfg = load_config(resolve_config_path(args.config))
        system = build_system(cfg)
        rho0 = resolve_state(cfg.problem["initial"], system, cfg)
        target = resolve_state(cfg.problem["target"], system, cfg)
        kind, b = _noise_kind(cfg)
    except (QSwitchError, ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    verdict = reachability_verdict(rho0, target, kind, b=b)
    payload = {"noise_kind": kind, "boltzmann_b": b, "verdict": verdict.reachable}
    if verdict.witness is not None:
        payload["witness"] = {
            "reference": verdict.witness.reference,
            "floor": verdict.witness.floor,
            "margins": [float(x) for x in verdict.witness.margins],
        }
    print(json.dumps(_to_jsonable(payload), sort_keys=True, indent=1))
    if args.out:
        writer = ArtifactWriter(Path(args.out))
        writer.add_json("verdict.json", payload)
        writer.finish(cfg, None, 0.0)
    return EXIT_INFEASIBLE if verdict.reachable == "no" else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qswitch",
        description="Open-system control experiments with switchable local noise.",
    )
    parser.add_argument("--version", action="version", version=f"qswitch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config and write artifacts")
    p_run.add_argument("--config", required=True, help="config path or bundled name")
    p_run.add_argument("--out", help="artifact directory (default [output] or runs/<name>)")
    p_run.add_argument("--seed", type=int, help="override the optimizer seed")
    p_run.add_argument("--restarts", type=int, help="override optimizer restarts")
    p_run.add_argument("--workers", type=int, help="override optimizer worker count")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="enumerate bundled experiment configs")
    p_list.set_defaults(func=_cmd_list)

    p_val = sub.add_parser("validate", help="parse and check a config without running")
    p_val.add_argument("--config", required=True, help="config path or bundled name")
    p_val.set_defaults(func=_cmd_validate)

    p_bath = sub.add_parser("bath", help="report bath rates, KMS ratio, timescales")
    p_bath.add_argument("--config", help="read [bath] parameters from a config")
    p_bath.add_argument("--b", type=float, default=1e-3, help="Boltzmann factor")
    p_bath.add_argument("--kappa", type=float, help="coupling coefficient")
    p_bath.add_argument("--factor", type=float, default=10.0, help="separation factor")
    p_bath.add_argument("--out", help="also write the report as an artifact")
    p_bath.set_defaults(func=_cmd_bath)

    p_reach = sub.add_parser("reach", help="reachability verdict for a config's pair")
    p_reach.add_argument("--config", required=True, help="config path or bundled name")
    p_reach.add_argument("--out", help="also write the verdict as an artifact")
    p_reach.set_defaults(func=_cmd_reach)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
