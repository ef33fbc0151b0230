"""Experiment orchestration: seeded sweeps, trial parallelism, CSV emission.

An experiment is described by a JSON spec (see `parse_spec`). Each trial is
one (sweep value, topology, channel realization, algorithm) tuple with a
deterministic seed derived from the base seed and the trial indices, so any
run is reproducible bit-for-bit, serially or with a worker pool.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cssm as cssm_mod
from . import vi
from .exceptions import ConfigError
from .network import NetworkConfig, sample_channels, sample_topology
from .rates import closed_form_aux_profile
from .solvers import (
    RunReport,
    SolverConfig,
    init_profile,
    solve_best_response,
    solve_gradient_response,
    solve_qne_selection,
)

ALGORITHMS = ("alg1", "alg2", "alg3-sumrate", "alg3-eves", "alg3-secrecy", "cssm")
_ALG3_CRITERIA = {"alg3-sumrate": "sum_rate", "alg3-eves": "eves_rates",
                  "alg3-secrecy": "secrecy_sum"}

OUT_DIR_ENV = "SECGAME_OUT"

TRIAL_COLUMNS = (
    "sweep_value", "algorithm", "topology", "realization", "status", "converged",
    "iterations", "secrecy_sum_rate", "secrecy_sum_rate_raw", "sum_rate",
    "eves_rate", "power_total_norm", "power_info_norm", "power_an_norm",
    "final_residual",
)

AGGREGATE_COLUMNS = (
    "sweep_value", "algorithm", "trials",
    "secrecy_sum_rate_mean", "secrecy_sum_rate_ci95",
    "sum_rate_mean", "sum_rate_ci95",
    "eves_rate_mean", "eves_rate_ci95",
    "power_total_norm_mean", "power_total_norm_ci95",
    "power_info_norm_mean", "power_info_norm_ci95",
    "power_an_norm_mean", "power_an_norm_ci95",
    "convergence_fraction", "iterations_mean",
)

UNIQUENESS_COLUMNS = (
    "sweep_value", "topology", "realization", "point", "unique",
    "min_lam_min", "max_offdiag_sum",
)

TRACE_FILE_COLUMNS = (
    "iteration", "secrecy_sum_rate", "secrecy_sum_rate_raw", "sum_rate",
    "eves_rate", "power_info", "power_an", "vi_residual",
)

_NETWORK_KEYS = {
    "num_links", "num_eves", "r_circ", "d_link", "path_loss_exp",
    "n_tx", "n_rx", "n_eve", "power_dbm", "noise_dbm",
}


@dataclass
class ExperimentSpec:
    """Validated experiment description with §-level defaults filled in."""

    network: dict
    solver: dict = field(default_factory=dict)
    algorithms: tuple = ("alg2",)
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    topologies: int = 10
    realizations: int = 20
    base_seed: int = 1
    out_dir: str | None = None
    init: str = "deterministic"
    cssm_restarts: int = 10
    trace: bool = False

    def network_config(self, sweep_value=None):
        params = dict(self.network)
        if self.sweep_axis is not None and sweep_value is not None:
            params[self.sweep_axis] = sweep_value
        return NetworkConfig(**params)

    def solver_config(self):
        return SolverConfig(**self.solver)

    def to_dict(self):
        return {
            "network": dict(self.network),
            "solver": dict(self.solver),
            "algorithms": list(self.algorithms),
            "sweep": (
                {"axis": self.sweep_axis, "values": list(self.sweep_values)}
                if self.sweep_axis
                else None
            ),
            "topologies": self.topologies,
            "realizations": self.realizations,
            "base_seed": self.base_seed,
            "out_dir": self.out_dir,
            "init": self.init,
            "cssm_restarts": self.cssm_restarts,
            "trace": self.trace,
        }


def spec_from_dict(raw) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise ConfigError("spec must be a JSON object")
    if "network" not in raw:
        raise ConfigError("spec is missing the 'network' section")
    network = dict(raw["network"])
    unknown = set(network) - _NETWORK_KEYS
    if unknown:
        raise ConfigError(f"unknown network fields: {sorted(unknown)}")
    for key in ("num_links", "num_eves"):
        if key not in network:
            raise ConfigError(f"network.{key} is required")
    solver = dict(raw.get("solver", {}))
    known_solver = set(SolverConfig.__dataclass_fields__)
    unknown = set(solver) - known_solver
    if unknown:
        raise ConfigError(f"unknown solver fields: {sorted(unknown)}")
    algorithms = tuple(raw.get("algorithms", ["alg2"]))
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {alg!r}; expected one of {ALGORITHMS}")
    if not algorithms:
        raise ConfigError("algorithms list must be nonempty")
    sweep = raw.get("sweep")
    axis, values = None, ()
    if sweep is not None:
        axis = sweep.get("axis")
        values = tuple(sweep.get("values", ()))
        if axis not in _NETWORK_KEYS:
            raise ConfigError(f"sweep.axis must be a network field, got {axis!r}")
        if not values:
            raise ConfigError("sweep.values must be nonempty")
    spec = ExperimentSpec(
        network=network,
        solver=solver,
        algorithms=algorithms,
        sweep_axis=axis,
        sweep_values=values,
        topologies=int(raw.get("topologies", 10)),
        realizations=int(raw.get("realizations", 20)),
        base_seed=int(raw.get("base_seed", 1)),
        out_dir=raw.get("out_dir"),
        init=raw.get("init", "deterministic"),
        cssm_restarts=int(raw.get("cssm_restarts", 10)),
        trace=bool(raw.get("trace", False)),
    )
    if spec.topologies < 1 or spec.realizations < 1:
        raise ConfigError("topologies and realizations must be >= 1")
    if spec.init not in ("deterministic", "random"):
        raise ConfigError(f"init must be 'deterministic' or 'random', got {spec.init!r}")
    if spec.cssm_restarts < 1:
        raise ConfigError("cssm_restarts must be >= 1")
    # construct eagerly so field errors surface at parse time
    spec.network_config()
    spec.solver_config().validate()
    return spec


def parse_spec(path) -> ExperimentSpec:
    """Load and validate a JSON experiment spec (defaults per the README)."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    return spec_from_dict(raw)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------


def _trial_seed(base_seed, sweep_idx, topo_idx, real_idx, alg):
    return np.random.SeedSequence(
        [base_seed, sweep_idx, topo_idx, real_idx, ALGORITHMS.index(alg)]
    )


def _topology_seed(base_seed, sweep_idx, topo_idx):
    return np.random.SeedSequence([base_seed, sweep_idx, 7919, topo_idx])


def _channel_seed(base_seed, sweep_idx, topo_idx, real_idx):
    return np.random.SeedSequence([base_seed, sweep_idx, 104729, topo_idx, real_idx])


def _initial_profile(spec, channels, seed_seq):
    if spec.init == "deterministic":
        return init_profile(channels)
    return init_profile(channels, "random", np.random.default_rng(seed_seq))


def run_trial(spec: ExperimentSpec, sweep_idx, topo_idx, real_idx, alg) -> dict:
    """Run one solver on one channel realization; never raises for solver
    failures (the row records the error instead)."""
    sweep_value = spec.sweep_values[sweep_idx] if spec.sweep_axis else ""
    row = {
        "sweep_value": sweep_value,
        "algorithm": alg,
        "topology": topo_idx,
        "realization": real_idx,
    }
    try:
        net = spec.network_config(sweep_value if spec.sweep_axis else None)
        topo = sample_topology(net, _topology_seed(spec.base_seed, sweep_idx, topo_idx))
        channels = sample_channels(
            topo, net, _channel_seed(spec.base_seed, sweep_idx, topo_idx, real_idx)
        )
        cfg = spec.solver_config()
        seed_seq = _trial_seed(spec.base_seed, sweep_idx, topo_idx, real_idx, alg)
        report = _dispatch(spec, alg, channels, cfg, seed_seq)
        summary = report.final_summary()
        budget = float(channels.powers_linear.sum())
        row.update({
            "status": report.status,
            "converged": int(report.converged),
            "iterations": report.iterations,
            "secrecy_sum_rate": summary["secrecy_sum_rate"],
            "secrecy_sum_rate_raw": summary["secrecy_sum_rate_raw"],
            "sum_rate": summary["sum_rate"],
            "eves_rate": summary["eves_rate"],
            "power_total_norm": (summary["power_info"] + summary["power_an"]) / budget,
            "power_info_norm": summary["power_info"] / budget,
            "power_an_norm": summary["power_an"] / budget,
            "final_residual": report.final_residual,
        })
        if spec.trace:
            row["_trace"] = report.trace
    except Exception as err:  # per-trial failures never abort the sweep
        reason = f"error: {err}".replace(",", ";").replace("\n", " ")
        row.update({
            "status": reason,
            "converged": 0,
            "iterations": 0,
            "secrecy_sum_rate": float("nan"),
            "secrecy_sum_rate_raw": float("nan"),
            "sum_rate": float("nan"),
            "eves_rate": float("nan"),
            "power_total_norm": float("nan"),
            "power_info_norm": float("nan"),
            "power_an_norm": float("nan"),
            "final_residual": float("nan"),
        })
    return row


def _dispatch(spec, alg, channels, cfg, seed_seq) -> RunReport:
    profile = _initial_profile(spec, channels, seed_seq)
    if alg == "alg1":
        return solve_best_response(channels, cfg, profile)
    if alg == "alg2":
        return solve_gradient_response(channels, cfg, profile)
    if alg in _ALG3_CRITERIA:
        return solve_qne_selection(channels, cfg, profile, criterion=_ALG3_CRITERIA[alg])
    if alg == "cssm":
        return _run_cssm_averaged(spec, channels, cfg, seed_seq)
    raise ConfigError(f"unknown algorithm {alg!r}")


def _run_cssm_averaged(spec, channels, cfg, seed_seq) -> RunReport:
    """Average the centralized benchmark over random initializations.

    The first start is the trial's standard initial point; the remaining
    restarts are seeded random draws. The returned report carries the best
    run's profile/trace with the restart-mean summary values in meta.
    """
    rng = np.random.default_rng(seed_seq)
    reports = [solve_cssm_once(channels, cfg, _initial_profile(spec, channels, rng))]
    for _ in range(spec.cssm_restarts - 1):
        reports.append(
            solve_cssm_once(channels, cfg, init_profile(channels, "random", rng))
        )
    best = max(reports, key=lambda r: r.final_summary()["secrecy_sum_rate"])
    means = {
        key: float(np.mean([r.final_summary()[key] for r in reports]))
        for key in best.final_summary()
    }
    best.meta["restart_means"] = means
    best.meta["restarts"] = len(reports)
    return _AveragedReport(best, means)


def solve_cssm_once(channels, cfg, profile):
    return cssm_mod.solve_cssm(channels, cfg, profile)


class _AveragedReport:
    """RunReport facade whose summary returns restart means."""

    def __init__(self, base: RunReport, means):
        self._base = base
        self._means = means

    def __getattr__(self, name):
        return getattr(self._base, name)

    def final_summary(self):
        return dict(self._means)


# ---------------------------------------------------------------------------
# CSV emission and aggregation
# ---------------------------------------------------------------------------


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row[c]) for c in columns) + "\n")


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(dict(zip(header, parts)))
    return header, rows


def aggregate_rows(trial_rows):
    """Group trials by (sweep value, algorithm); normal-approximation CI95."""
    groups = {}
    for row in trial_rows:
        groups.setdefault((row["sweep_value"], row["algorithm"]), []).append(row)
    out = []
    for (sweep_value, alg), rows in sorted(
        groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])
    ):
        def series(key):
            return np.array([float(r[key]) for r in rows])

        def ci95(values):
            if len(values) < 2:
                return 0.0
            return 1.96 * float(np.std(values, ddof=1)) / np.sqrt(len(values))

        agg = {
            "sweep_value": sweep_value,
            "algorithm": alg,
            "trials": len(rows),
            "convergence_fraction": float(np.mean(series("converged"))),
            "iterations_mean": float(np.mean(series("iterations"))),
        }
        for key in ("secrecy_sum_rate", "sum_rate", "eves_rate",
                    "power_total_norm", "power_info_norm", "power_an_norm"):
            vals = series(key)
            agg[f"{key}_mean"] = float(np.mean(vals))
            agg[f"{key}_ci95"] = ci95(vals)
        out.append(agg)
    return out


def _trial_args(spec):
    sweep_indices = range(len(spec.sweep_values)) if spec.sweep_axis else [0]
    for sweep_idx in sweep_indices:
        for topo_idx in range(spec.topologies):
            for real_idx in range(spec.realizations):
                for alg in spec.algorithms:
                    yield (sweep_idx, topo_idx, real_idx, alg)


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs=1):
    """Execute every trial, write per-trial and aggregate CSVs.

    Returns (trial rows, aggregate rows, written paths). Parallel execution
    is deterministic: results are reordered to the serial trial order before
    any aggregation or output.
    """
    out_dir = out_dir or spec.out_dir or os.environ.get(OUT_DIR_ENV) or "secgame-out"
    os.makedirs(out_dir, exist_ok=True)
    args = [(spec, *rest) for rest in _trial_args(spec)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_trial_star, args, chunksize=1))
    else:
        rows = [run_trial(*a) for a in args]
    paths = []
    trace_rows = [(i, row.pop("_trace")) for i, row in enumerate(rows) if "_trace" in row]
    trials_path = os.path.join(out_dir, "trials.csv")
    write_csv(trials_path, TRIAL_COLUMNS, rows)
    paths.append(trials_path)
    aggregates = aggregate_rows(rows)
    agg_path = os.path.join(out_dir, "aggregates.csv")
    write_csv(agg_path, AGGREGATE_COLUMNS, aggregates)
    paths.append(agg_path)
    spec_path = os.path.join(out_dir, "spec_echo.json")
    with open(spec_path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
    paths.append(spec_path)
    for idx, trace in trace_rows:
        trace_path = os.path.join(out_dir, f"trace_{idx:06d}.csv")
        trace_table = [
            {c: trace[c][i] for c in TRACE_FILE_COLUMNS}
            for i in range(len(trace["iteration"]))
        ]
        write_csv(trace_path, TRACE_FILE_COLUMNS, trace_table)
        paths.append(trace_path)
    return rows, aggregates, paths


# ---------------------------------------------------------------------------
# Uniqueness report
# ---------------------------------------------------------------------------


def check_uniqueness(spec: ExperimentSpec, point="init", out_dir=None):
    """Evaluate the block-dominance uniqueness test per trial.

    point='init' evaluates at the standard starting profile; 'converged'
    runs the selection solver first and evaluates at its final point.
    """
    if point not in ("init", "converged"):
        raise ConfigError(f"point must be 'init' or 'converged', got {point!r}")
    out_dir = out_dir or spec.out_dir or os.environ.get(OUT_DIR_ENV) or "secgame-out"
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    sweep_indices = range(len(spec.sweep_values)) if spec.sweep_axis else [0]
    cfg = spec.solver_config()
    for sweep_idx in sweep_indices:
        sweep_value = spec.sweep_values[sweep_idx] if spec.sweep_axis else ""
        net = spec.network_config(sweep_value if spec.sweep_axis else None)
        for topo_idx in range(spec.topologies):
            topo = sample_topology(net, _topology_seed(spec.base_seed, sweep_idx, topo_idx))
            for real_idx in range(spec.realizations):
                channels = sample_channels(
                    topo, net,
                    _channel_seed(spec.base_seed, sweep_idx, topo_idx, real_idx),
                )
                profile = init_profile(channels)
                if point == "converged":
                    profile = solve_qne_selection(
                        channels, cfg, profile, criterion=cfg.criterion
                    ).final_profile
                aux = closed_form_aux_profile(profile, channels)
                report = vi.uniqueness_check(
                    vi.jacobian_blocks(profile, aux, channels, cfg.beta)
                )
                rows.append({
                    "sweep_value": sweep_value,
                    "topology": topo_idx,
                    "realization": real_idx,
                    "point": point,
                    "unique": int(report.unique),
                    "min_lam_min": min(p.lam_min for p in report.per_link),
                    "max_offdiag_sum": max(p.offdiag_norm_sum for p in report.per_link),
                })
    path = os.path.join(out_dir, "uniqueness.csv")
    write_csv(path, UNIQUENESS_COLUMNS, rows)
    fractions = {}
    for row in rows:
        fractions.setdefault(row["sweep_value"], []).append(row["unique"])
    fractions = {k: float(np.mean(v)) for k, v in sorted(fractions.items(), key=str)}
    return rows, fractions, [path]
