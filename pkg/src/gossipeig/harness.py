"""Experiment runner: build a model, run the full pipeline, report metrics.

A trial is fully determined by its config and seed: one SplitMix64 stream
drives (in order) graph sampling for random-graph models, the Gaussian state
initialization, the iteration events, the orthogonalization events, and the
cleanup events.  Reports for identical (config, seed) are byte-identical.

Sweep CSV rows have a fixed column order (see ``CSV_COLUMNS``); an aggregate
summary (median and quartiles per config over successful trials) is written
as a separate file.  Expected per-trial failures (a degenerate sampled
graph, infeasible cleanup parameters, the overflow guard) are recorded in
the row's ``status`` instead of aborting the sweep.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence, TextIO

import numpy as np

from . import community, model as model_mod, orth, params as params_mod
from .errors import (
    DegenerateGraphError,
    InfeasibleCleanupError,
    InvalidInputError,
    InvalidParametersError,
    NoMixingError,
    StepSizeTooLargeError,
)
from .linalg import SymEigen, as_matrix, sym_eigen
from .oja import OjaSchedule, run_asynch_oja
from .rng import SplitMix64, derive_trial_seed

PARALLELISM_ENV_VAR = "GOSSIPEIG_PARALLELISM"

MODEL_KINDS = ("weighted", "sbm", "population", "graph-file")

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate-graph"
STATUS_NO_MIXING = "no-mixing"
STATUS_INFEASIBLE_CLEANUP = "infeasible-cleanup"
STATUS_OVERFLOW = "step-size-overflow"


@dataclass
class ExperimentConfig:
    """One experiment: a model family, a run parameterization, and trial count.

    Exactly one parameterization must be given: direct (eta, t_oja, t_orth)
    or schedule-derived (eps, delta, constants).
    """

    model: str
    n: int
    p: float | None = None
    q: float | None = None
    graph_file: str | None = None
    k: int = 2
    eta: float | None = None
    t_oja: int | None = None
    t_orth: int | None = None
    eps: float | None = None
    delta: float | None = None
    constants: params_mod.ScheduleConstants = field(default_factory=params_mod.ScheduleConstants)
    cleanup: bool = False
    cleanup_eps: float | None = None
    cleanup_phases: int | None = None
    cleanup_rounds: int | None = None
    trials: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise InvalidParametersError(f"unknown model kind {self.model!r}")
        if self.model in ("weighted", "sbm") and (self.p is None or self.q is None):
            raise InvalidParametersError(f"model {self.model!r} requires p and q")
        if self.model == "graph-file" and not self.graph_file:
            raise InvalidParametersError("model 'graph-file' requires graph_file")
        direct = all(v is not None for v in (self.eta, self.t_oja, self.t_orth))
        derived = self.eps is not None and self.delta is not None
        if direct == derived:
            raise InvalidParametersError(
                "exactly one of (eta, t_oja, t_orth) or (eps, delta) must be given"
            )
        if self.trials < 1:
            raise InvalidParametersError("trials must be >= 1")
        if self.k < 2:
            raise InvalidParametersError("the pipeline labels by the second column; k must be >= 2")
        has_override = self.cleanup_phases is not None or self.cleanup_rounds is not None
        if has_override and (self.cleanup_phases is None or self.cleanup_rounds is None):
            raise InvalidParametersError("cleanup overrides need both cleanup_phases and cleanup_rounds")
        if self.cleanup and self.model in ("population", "graph-file") and not has_override:
            raise InvalidParametersError(
                f"model {self.model!r} has no derived cleanup schedule; give explicit overrides"
            )


@dataclass
class TrialReport:
    """Metrics of one trial; failed stages leave their metrics as nan."""

    seed: int
    status: str
    eta: float
    t_oja: int
    t_orth: int
    cleanup_phases: int
    cleanup_rounds: int
    alignment_1: float
    alignment_2: float
    norm_2: float
    subspace_error: float
    truth_alignment_2: float
    misclass_before: float
    misclass_after_cleanup: float
    orth_failures: float
    rounds_used: int
    local_rounds_max: int


CSV_COLUMNS = (
    "config",
    "trial",
    "model",
    "n",
    "p",
    "q",
    "k",
    *(f.name for f in fields(TrialReport)),
)

_SUMMARY_METRICS = (
    "alignment_1",
    "alignment_2",
    "norm_2",
    "subspace_error",
    "truth_alignment_2",
    "misclass_before",
    "misclass_after_cleanup",
    "orth_failures",
    "local_rounds_max",
)


def _failed_report(seed: int, status: str, schedule: OjaSchedule | None = None) -> TrialReport:
    nan = float("nan")
    return TrialReport(
        seed=seed,
        status=status,
        eta=schedule.eta if schedule else nan,
        t_oja=schedule.t_oja if schedule else 0,
        t_orth=schedule.t_orth if schedule else 0,
        cleanup_phases=0,
        cleanup_rounds=0,
        alignment_1=nan,
        alignment_2=nan,
        norm_2=nan,
        subspace_error=nan,
        truth_alignment_2=nan,
        misclass_before=nan,
        misclass_after_cleanup=nan,
        orth_failures=nan,
        rounds_used=0,
        local_rounds_max=0,
    )


def _build_model(config: ExperimentConfig, rng: SplitMix64):
    if config.model == "weighted":
        return model_mod.weighted_model(config.n, config.p, config.q)
    if config.model == "sbm":
        m, truth, _edges = model_mod.sbm_model(config.n, config.p, config.q, rng)
        return m, truth
    if config.model == "population":
        return model_mod.population_model(config.n), model_mod.planted_truth(config.n)
    with open(config.graph_file, encoding="utf-8") as fp:
        edges = model_mod.read_edges(fp)
    return model_mod.graph_model(edges, config.n), model_mod.planted_truth(config.n)


def _build_schedule(config: ExperimentConfig, comm_model) -> OjaSchedule:
    if config.eta is not None:
        return OjaSchedule(k=config.k, eta=config.eta, t_oja=config.t_oja, t_orth=config.t_orth)
    if config.model == "weighted":
        bounds = params_mod.weighted_spectral_bounds(config.n, config.p, config.q, config.k)
        lambda1 = params_mod.weighted_spectral_facts(config.n, config.p, config.q).lambda1
    else:
        bounds = params_mod.measured_spectral_bounds(comm_model, config.k)
        lambda1 = float(sym_eigen(model_mod.communication_matrix(comm_model)).values[0])
    return params_mod.oja_schedule(
        bounds, config.k, config.eps, config.delta, config.constants, lambda1, config.n
    )


def _cleanup_params(config: ExperimentConfig) -> community.CleanupParams:
    if config.cleanup_phases is not None:
        return community.CleanupParams(
            phases=config.cleanup_phases, rounds_per_phase=config.cleanup_rounds
        )
    if config.model == "weighted":
        eps = config.cleanup_eps if config.cleanup_eps is not None else 1.0 / 64.0
        return community.cleanup_params_weighted(config.n, config.p, config.q, eps)
    return community.cleanup_params_sbm(config.n, config.p, config.q)


def _subspace_error(vhat: np.ndarray, eig: SymEigen, k: int) -> float:
    z = eig.vectors[:, k:]
    return float(np.sum((z.T @ vhat) ** 2))


def subspace_error(vhat, m) -> float:
    """Squared Frobenius norm of the projection of ``vhat`` onto the bottom
    n-k eigenvectors of symmetric ``m`` (k = number of columns of vhat)."""
    v = np.asarray(vhat, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    a = as_matrix(m, square=True)
    if v.shape[1] >= a.shape[0]:
        raise InvalidParametersError("vhat must have fewer columns than m has rows")
    return _subspace_error(v, sym_eigen(a), v.shape[1])


def run_trial(config: ExperimentConfig, seed: int) -> TrialReport:
    """Run the full pipeline for one seed and measure it against the
    eigensolver's ground truth for the realized communication matrix."""
    rng = SplitMix64(seed)
    try:
        comm_model, truth = _build_model(config, rng)
    except DegenerateGraphError:
        return _failed_report(seed, STATUS_DEGENERATE)
    try:
        schedule = _build_schedule(config, comm_model)
    except NoMixingError:
        return _failed_report(seed, STATUS_NO_MIXING)

    counts = np.zeros(comm_model.n, dtype=np.int64)
    try:
        q, log = run_asynch_oja(comm_model, schedule, rng)
    except StepSizeTooLargeError:
        return _failed_report(seed, STATUS_OVERFLOW, schedule)
    counts += np.bincount(log.us, minlength=comm_model.n)
    counts += np.bincount(log.vs, minlength=comm_model.n)

    state = orth.run_orth_protocol(q, comm_model, schedule.t_orth, rng, counts)
    vhat = state.vhat
    orth_failures = int(np.sum(state.failed))

    eig = sym_eigen(model_mod.communication_matrix(comm_model))
    sqrt_n = math.sqrt(comm_model.n)
    alignment_1 = abs(float(vhat[:, 0] @ eig.vectors[:, 0]))
    alignment_2 = abs(float(vhat[:, 1] @ eig.vectors[:, 1]))
    norm_2 = float(np.sqrt(np.sum(vhat[:, 1] ** 2)))
    sub_err = _subspace_error(vhat, eig, config.k)
    truth_alignment_2 = abs(float(eig.vectors[:, 1] @ (truth.chi / sqrt_n)))

    labels = community.assign_labels(vhat[:, 1])
    misclass_before = community.misclassification(labels, truth)

    status = STATUS_OK
    phases = 0
    rounds_per_phase = 0
    misclass_after = float("nan")
    if config.cleanup:
        try:
            cp = _cleanup_params(config)
        except InfeasibleCleanupError:
            status = STATUS_INFEASIBLE_CLEANUP
        else:
            phases = cp.phases
            rounds_per_phase = cp.rounds_per_phase
            final = community.run_cleanup(comm_model, labels, cp, rng, counts)
            misclass_after = community.misclassification(final, truth)

    return TrialReport(
        seed=seed,
        status=status,
        eta=schedule.eta,
        t_oja=schedule.t_oja,
        t_orth=schedule.t_orth,
        cleanup_phases=phases,
        cleanup_rounds=rounds_per_phase,
        alignment_1=alignment_1,
        alignment_2=alignment_2,
        norm_2=norm_2,
        subspace_error=sub_err,
        truth_alignment_2=truth_alignment_2,
        misclass_before=float(misclass_before),
        misclass_after_cleanup=misclass_after,
        orth_failures=float(orth_failures),
        rounds_used=schedule.t_oja + schedule.t_orth + phases * rounds_per_phase,
        local_rounds_max=int(np.max(counts)) if counts.size else 0,
    )


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _report_row(config_index: int, trial_index: int, config: ExperimentConfig, report: TrialReport) -> str:
    cells = [
        config_index,
        trial_index,
        config.model,
        config.n,
        config.p,
        config.q,
        config.k,
    ]
    cells.extend(getattr(report, f.name) for f in fields(TrialReport))
    return ",".join(_format_cell(c) for c in cells)


def _sweep_task(args):
    config, config_index, trial_index = args
    seed = derive_trial_seed(config.base_seed, trial_index)
    return config_index, trial_index, run_trial(config, seed)


def resolve_parallelism(requested: int | None) -> int:
    """Requested worker count, overridden by the environment variable."""
    env = os.environ.get(PARALLELISM_ENV_VAR)
    if env is not None:
        value = int(env)
    elif requested is not None:
        value = requested
    else:
        value = 1
    if value < 1:
        raise InvalidParametersError("parallelism must be >= 1")
    return value


def run_sweep(
    configs: Sequence[ExperimentConfig],
    parallelism: int | None,
    csv_fp: TextIO,
    summary_fp: TextIO | None = None,
) -> list[tuple[int, int, TrialReport]]:
    """Run every (config, trial) pair and write one CSV row per trial.

    Rows are sorted by (config index, trial index) before writing, so output
    does not depend on the worker count.  Trial seeds derive from each
    config's base seed, making trials independent and order-free.
    """
    if not configs:
        raise InvalidParametersError("at least one config is required")
    workers = resolve_parallelism(parallelism)
    tasks = [
        (config, ci, ti)
        for ci, config in enumerate(configs)
        for ti in range(config.trials)
    ]
    if workers == 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    results.sort(key=lambda item: (item[0], item[1]))
    csv_fp.write(",".join(CSV_COLUMNS) + "\n")
    for config_index, trial_index, report in results:
        csv_fp.write(_report_row(config_index, trial_index, configs[config_index], report) + "\n")
    if summary_fp is not None:
        _write_summary(configs, results, summary_fp)
    return results


def _write_summary(configs, results, fp: TextIO) -> None:
    header = ["config", "model", "n", "trials", "ok"]
    for name in _SUMMARY_METRICS:
        header.extend((f"{name}_q25", f"{name}_median", f"{name}_q75"))
    fp.write(",".join(header) + "\n")
    for ci, config in enumerate(configs):
        reports = [r for idx, _, r in results if idx == ci]
        ok = [r for r in reports if r.status == STATUS_OK]
        cells = [str(ci), config.model, str(config.n), str(len(reports)), str(len(ok))]
        for name in _SUMMARY_METRICS:
            values = np.array([getattr(r, name) for r in ok], dtype=np.float64)
            values = values[~np.isnan(values)]
            if values.size:
                qs = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
                cells.extend(repr(float(x)) for x in qs)
            else:
                cells.extend(["nan", "nan", "nan"])
        fp.write(",".join(cells) + "\n")


# --- config and matrix file formats -------------------------------------

_CONFIG_INT_KEYS = {"n", "k", "t_oja", "t_orth", "cleanup_phases", "cleanup_rounds", "trials", "base_seed"}
_CONFIG_FLOAT_KEYS = {"p", "q", "eta", "eps", "delta", "cleanup_eps", "c1", "c2", "c3"}
_CONFIG_STR_KEYS = {"model", "graph_file"}
_CONFIG_BOOL_KEYS = {"cleanup"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value config format (one key per line, # comments)."""
    values: dict = {}
    consts: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParametersError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _CONFIG_INT_KEYS:
            values[key] = int(value)
        elif key in {"c1", "c2", "c3"}:
            consts[key] = float(value)
        elif key in _CONFIG_FLOAT_KEYS:
            values[key] = float(value)
        elif key in _CONFIG_STR_KEYS:
            values[key] = value
        elif key in _CONFIG_BOOL_KEYS:
            if value not in ("on", "off"):
                raise InvalidParametersError(f"line {lineno}: {key} must be 'on' or 'off'")
            values[key] = value == "on"
        else:
            raise InvalidParametersError(f"line {lineno}: unknown key {key!r}")
    if consts:
        values["constants"] = params_mod.ScheduleConstants(**consts)
    return ExperimentConfig(**values)


def read_config_file(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fp:
        return parse_config(fp.read())


def with_overrides(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Copy a config with some fields replaced (revalidates)."""
    return replace(config, **kwargs)


def read_matrix_file(fp: TextIO) -> np.ndarray:
    """Matrix file format: first line n, then n whitespace-separated rows."""
    tokens = fp.read().split()
    if not tokens:
        raise InvalidInputError("empty matrix file")
    n = int(tokens[0])
    if n < 1:
        raise InvalidInputError(f"matrix size must be >= 1, got {n}")
    data = tokens[1:]
    if len(data) != n * n:
        raise InvalidInputError(f"expected {n * n} entries for n={n}, got {len(data)}")
    return np.array([float(t) for t in data], dtype=np.float64).reshape(n, n)


def write_matrix_file(m: np.ndarray, fp: TextIO) -> None:
    a = as_matrix(m, square=True)
    fp.write(f"{a.shape[0]}\n")
    for row in a:
        fp.write(" ".join(repr(float(x)) for x in row) + "\n")
