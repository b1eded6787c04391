"""Batch experiment runner: configs, sweeps, and figure-ready output.

An experiment is described by a small INI document (sections of key = value
pairs, parsed strictly: unknown keys or sections are errors).  Four sweep
modes cover the package's capabilities:

* ``bound-compare``  regular vs controlled precision limits over a time grid
* ``optimize``       adds the numerical maximization of the information
* ``pea-sweep``      realistic-measurement Fisher information over (n, m, t)
* ``lemma-test``     randomized check of the spectral-gap-sum maximizer

plus ``dump-family``, which writes a Hamiltonian family to the plain-text
grid interchange format that ``family = custom`` reads back.

Outputs are CSV or JSON, written atomically, with floats at 12 significant
digits and no timestamps, so identical config and seed give byte-identical
files.  Grid points are independent; with ``jobs > 1`` they are dispatched
to a thread pool and written back in grid order.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .controlled import OptimizerSettings, g_bound, lemma1_maximizer, maximize_fi
from .hamiltonians import (
    BUILTIN_FAMILIES,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    HamiltonianFamily,
    make_family,
    phase_parameter,
)
from .linalg import random_hermitian, random_unitary, spectral_gap
from .pea import PeaConfig, pea_fi


class ConfigError(ValueError):
    """Invalid experiment configuration; reported with field diagnostics."""


class ComputationError(RuntimeError):
    """A sweep computation failed; annotated with the offending grid point."""


MODES = ("bound-compare", "optimize", "pea-sweep", "lemma-test", "dump-family")

_NAMED_GENERATORS = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}

_CSV_COLUMNS = ("t", "n", "m", "cqfi", "g_bound", "fi_optimized", "fi_pea", "equioriented")
_LEMMA_COLUMNS = ("trial", "dim", "gap_sum", "achieved", "best_random", "violations")


@dataclass(frozen=True)
class SweepRecord:
    """One grid point of computed information quantities."""

    t: float
    cqfi: float
    g_bound: float
    fi_optimized: float
    equioriented: bool
    n: int | None = None
    m: int | None = None
    fi_pea: float | None = None

    def __post_init__(self):
        values = [self.t, self.cqfi, self.g_bound, self.fi_optimized]
        if self.fi_pea is not None:
            values.append(self.fi_pea)
        if not all(math.isfinite(v) for v in values):
            raise ComputationError(f"non-finite value in sweep record at t={self.t}")
        slack = 1e-6
        if self.fi_optimized > self.g_bound + slack:
            raise ComputationError(
                f"fi_optimized {self.fi_optimized} exceeds the bound {self.g_bound} at t={self.t}"
            )
        if self.fi_pea is not None and self.fi_pea > self.g_bound + slack:
            raise ComputationError(
                f"fi_pea {self.fi_pea} exceeds the bound {self.g_bound} at t={self.t}"
            )


@dataclass(frozen=True)
class LemmaRecord:
    trial: int
    dim: int
    gap_sum: float
    achieved: float
    best_random: float
    violations: int


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    family: str = "qubit-angle"
    family_params: dict = field(default_factory=dict)
    generator: str | None = None
    family_path: str | None = None
    xi_true: float = 0.7853981633974483
    t_grid: tuple = (1.0,)
    seed: int = 0
    # pea
    n_list: tuple = (4,)
    m_list: tuple = (5,)
    tau: float = 0.1
    # optimizer
    restarts: int = 8
    max_iter: int = 2000
    # lemma-test
    lemma_dim: int = 3
    lemma_trials: int = 500
    lemma_random_controls: int = 100
    # dump-family
    dump_grid: tuple = ()
    # output
    out_path: str = "sweep.csv"
    out_format: str = "csv"
    jobs: int = 1


def parse_grid(text: str, name: str, integer: bool = False):
    """Parse a grid: comma-separated values or ``start:stop:count``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError("count must be >= 1")
            vals = np.linspace(start, stop, count)
        else:
            vals = np.array([float(v) for v in text.split(",") if v.strip() != ""])
        if vals.size == 0:
            raise ValueError("empty grid")
        if integer:
            ivals = vals.astype(int)
            if np.any(ivals != vals):
                raise ValueError("expected integers")
            return tuple(int(v) for v in ivals)
        return tuple(float(v) for v in vals)
    except ValueError as exc:
        raise ConfigError(f"field {name!r}: {exc} (got {text!r})") from None


_SCHEMA = {
    "run": {"mode", "family", "xi_true", "t_grid", "seed", "jobs"},
    "family": {"name", "path", "generator", "omega", "mu", "zero_field", "strain"},
    "pea": {"n_list", "m_list", "tau"},
    "optimizer": {"restarts", "max_iter"},
    "lemma": {"dim", "trials", "random_controls"},
    "dump": {"xi_grid"},
    "output": {"path", "format"},
}


def load_config(path: str, mode: str | None = None) -> ExperimentConfig:
    """Read and validate an experiment configuration file.

    ``mode``, when given (by the command line subcommand), overrides or must
    agree with the file's own ``mode`` field.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    file_mode = get("run", "mode")
    if mode is None:
        mode = file_mode
    elif file_mode is not None and file_mode != mode:
        raise ConfigError(
            f"config file requests mode {file_mode!r} but the command is {mode!r}"
        )
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    family = get("family", "name", get("run", "family", "qubit-angle"))
    params = {}
    for key in ("omega", "mu", "zero_field", "strain"):
        raw = get("family", key)
        if raw is not None:
            try:
                params[key] = float(raw)
            except ValueError:
                raise ConfigError(f"field 'family.{key}': not a number ({raw!r})") from None

    try:
        cfg = ExperimentConfig(
            mode=mode,
            family=family,
            family_params=params,
            generator=get("family", "generator"),
            family_path=get("family", "path"),
            xi_true=float(get("run", "xi_true", "0.7853981633974483")),
            t_grid=parse_grid(get("run", "t_grid", "1.0"), "t_grid"),
            seed=int(get("run", "seed", "0")),
            n_list=parse_grid(get("pea", "n_list", "4"), "n_list", integer=True),
            m_list=parse_grid(get("pea", "m_list", "5"), "m_list", integer=True),
            tau=float(get("pea", "tau", "0.1")),
            restarts=int(get("optimizer", "restarts", "8")),
            max_iter=int(get("optimizer", "max_iter", "2000")),
            lemma_dim=int(get("lemma", "dim", "3")),
            lemma_trials=int(get("lemma", "trials", "500")),
            lemma_random_controls=int(get("lemma", "random_controls", "100")),
            dump_grid=parse_grid(get("dump", "xi_grid", "0.1:3.0:40"), "xi_grid"),
            out_path=get("output", "path", "sweep.csv"),
            out_format=get("output", "format", "csv"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if cfg.out_format not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got {cfg.out_format!r}")
    if cfg.mode != "dump-family" and not all(t > 0 for t in cfg.t_grid):
        raise ConfigError("t_grid values must be positive")
    return cfg


def build_family(cfg: ExperimentConfig) -> HamiltonianFamily:
    """Instantiate the family a config refers to."""
    name = cfg.family
    if name == "custom":
        if not cfg.family_path:
            raise ConfigError("family 'custom' needs family.path")
        return load_custom_family(cfg.family_path)
    if name == "phase-parameter":
        gen_name = cfg.generator or "sigma_z"
        if gen_name in _NAMED_GENERATORS:
            g = _NAMED_GENERATORS[gen_name]
        elif os.path.exists(gen_name):
            g = _read_matrix_file(gen_name)
        else:
            raise ConfigError(
                f"unknown generator {gen_name!r}; use one of {sorted(_NAMED_GENERATORS)} "
                "or a path to a matrix file"
            )
        return phase_parameter(g)
    if name in BUILTIN_FAMILIES:
        factory = BUILTIN_FAMILIES[name]
        try:
            return factory(**cfg.family_params)
        except TypeError as exc:
            raise ConfigError(f"family {name!r}: {exc}") from None
    raise ConfigError(
        f"unknown family {name!r}; available: {sorted(BUILTIN_FAMILIES) + ['phase-parameter', 'custom']}"
    )


# ---------------------------------------------------------------------------
# family grid interchange format


def dump_family(fam: HamiltonianFamily, xi_grid, path: str) -> None:
    """Write a family to the plain-text grid format.

    One line per grid point: the parameter value followed by the d*d matrix
    entries in row-major order, each as ``re,im``.
    """
    lines = []
    for xi in xi_grid:
        h = fam.hamiltonian(float(xi))
        tokens = [f"{float(xi):.17g}"]
        for z in h.reshape(-1):
            tokens.append(f"{z.real:.17g},{z.imag:.17g}")
        lines.append(" ".join(tokens))
    _atomic_write(path, "\n".join(lines) + "\n")


def load_custom_family(path: str, name: str = "custom") -> HamiltonianFamily:
    """Load a family from the grid format, interpolating entries cubically.

    Requires at least 5 grid points and Hermitian matrices at every point;
    evaluation re-symmetrizes the interpolant, and the analytic derivative is
    the (symmetrized) spline derivative.
    """
    xis = []
    mats = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            body = tokens[1:]
            d = math.isqrt(len(body))
            if d * d != len(body) or d == 0:
                raise ConfigError(
                    f"{path}:{lineno}: expected xi plus d*d entries, got {len(body)}"
                )
            try:
                xi = float(tokens[0])
                entries = [complex(*map(float, tok.split(","))) for tok in body]
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: malformed number") from None
            m = np.array(entries, dtype=complex).reshape(d, d)
            defect = np.linalg.norm(m - m.conj().T)
            if defect > 1e-10 * max(1.0, np.linalg.norm(m)):
                raise ConfigError(
                    f"{path}:{lineno}: matrix at grid point {len(xis)} is not Hermitian "
                    f"(defect {defect:.3e})"
                )
            xis.append(xi)
            mats.append(m)
    if len(xis) < 5:
        raise ConfigError(f"{path}: need at least 5 grid points, got {len(xis)}")
    order = np.argsort(xis)
    xs = np.asarray(xis, dtype=float)[order]
    if np.any(np.diff(xs) <= 0):
        raise ConfigError(f"{path}: grid points must be distinct")
    stack = np.stack([mats[i] for i in order])
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ConfigError(f"{path}: inconsistent matrix dimensions {sorted(dims)}")

    spline = CubicSpline(xs, stack, axis=0)
    dspline = spline.derivative()

    def evaluate(xi: float) -> np.ndarray:
        m = spline(xi)
        return 0.5 * (m + m.conj().T)

    def derivative(xi: float) -> np.ndarray:
        m = dspline(xi)
        return 0.5 * (m + m.conj().T)

    return make_family(
        name, int(dims.pop()), (float(xs[0]), float(xs[-1])), evaluate, derivative
    )


def _read_matrix_file(path: str) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    d = math.isqrt(len(tokens))
    if d * d != len(tokens) or d == 0:
        raise ConfigError(f"{path}: expected d*d 're,im' entries, got {len(tokens)}")
    entries = [complex(*map(float, tok.split(","))) for tok in tokens]
    return np.array(entries, dtype=complex).reshape(d, d)


# ---------------------------------------------------------------------------
# sweep execution


@dataclass(frozen=True)
class RunResult:
    records: tuple
    summary: dict


def _bound_point(fam, cfg, t, optimize, point_seed):
    rep = g_bound(fam, cfg.xi_true, t)
    fi_opt = rep.fi_at_optimum
    if optimize:
        settings = OptimizerSettings(
            restarts=cfg.restarts, max_iter=cfg.max_iter, seed=point_seed
        )
        _, _, fi_opt = maximize_fi(fam, cfg.xi_true, t, settings)
    return SweepRecord(
        t=t,
        cqfi=rep.cqfi,
        g_bound=rep.g_bound,
        fi_optimized=fi_opt,
        equioriented=rep.equioriented,
    )


def _pea_point(fam, cfg, n, m, t):
    rep = g_bound(fam, cfg.xi_true, t)
    pea_cfg = PeaConfig(
        n=n, m=m, tau=cfg.tau, control=rep.v_opt,
        preparation=rep.psi0_opt, interrogation_t=t,
    )
    fi = pea_fi(fam, cfg.xi_true, pea_cfg)
    return SweepRecord(
        t=t,
        n=n,
        m=m,
        cqfi=rep.cqfi,
        g_bound=rep.g_bound,
        fi_optimized=rep.fi_at_optimum,
        fi_pea=fi,
        equioriented=rep.equioriented,
    )


def _lemma_point(cfg, trial):
    rng = np.random.default_rng(cfg.seed + trial)
    d = cfg.lemma_dim
    m1 = random_hermitian(d, rng)
    m2 = random_hermitian(d, rng)
    u_star, value = lemma1_maximizer(m1, m2)
    achieved = spectral_gap(m1 + u_star @ m2 @ u_star.conj().T)
    best_random = 0.0
    violations = 0
    for _ in range(cfg.lemma_random_controls):
        v = random_unitary(d, rng)
        gap = spectral_gap(m1 + v @ m2 @ v.conj().T)
        best_random = max(best_random, gap)
        if gap > value + 1e-9:
            violations += 1
    if abs(achieved - value) > 1e-9:
        violations += 1
    return LemmaRecord(
        trial=trial, dim=d, gap_sum=value, achieved=achieved,
        best_random=best_random, violations=violations,
    )


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute a sweep; deterministic for a given config and seed."""
    if cfg.mode == "dump-family":
        fam = build_family(cfg)
        dump_family(fam, cfg.dump_grid, cfg.out_path)
        return RunResult(
            records=(),
            summary={"mode": cfg.mode, "family": fam.name,
                     "grid_points": len(cfg.dump_grid), "path": cfg.out_path},
        )

    if cfg.mode == "lemma-test":
        tasks = list(range(cfg.lemma_trials))
        worker = lambda trial: _lemma_point(cfg, trial)
    else:
        fam = build_family(cfg)
        if not fam.contains(cfg.xi_true):
            raise ConfigError(
                f"xi_true = {cfg.xi_true} outside the admissible range "
                f"{fam.param_range} of family {fam.name!r}"
            )
        if cfg.mode == "pea-sweep":
            tasks = [
                (n, m, t) for n in cfg.n_list for m in cfg.m_list for t in cfg.t_grid
            ]
            worker = lambda task: _pea_point(fam, cfg, *task)
        else:
            optimize = cfg.mode == "optimize"
            tasks = list(enumerate(cfg.t_grid))
            worker = lambda task: _bound_point(
                fam, cfg, task[1], optimize, cfg.seed + task[0]
            )

    def guarded(task):
        try:
            return worker(task)
        except ComputationError:
            raise
        except Exception as exc:
            raise ComputationError(f"grid point {task!r}: {exc}") from exc

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = tuple(pool.map(guarded, tasks))
    else:
        records = tuple(guarded(task) for task in tasks)

    if cfg.mode == "lemma-test":
        summary = {
            "mode": cfg.mode,
            "dim": cfg.lemma_dim,
            "trials": cfg.lemma_trials,
            "total_violations": int(sum(r.violations for r in records)),
            "max_achieved_error": max(abs(r.achieved - r.gap_sum) for r in records),
        }
    else:
        summary = {
            "mode": cfg.mode,
            "family": fam.name,
            "xi_true": cfg.xi_true,
            "grid_points": len(records),
            "max_delta": max(r.g_bound - r.cqfi for r in records),
            "min_saturation": min(
                r.fi_optimized / r.g_bound if r.g_bound > 0 else 1.0 for r in records
            ),
        }
    return RunResult(records=records, summary=summary)


# ---------------------------------------------------------------------------
# writers


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ComputationError(f"refusing to write non-finite value {value}")
        return f"{value:.12g}"
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record_row(record) -> list:
    if isinstance(record, LemmaRecord):
        return [record.trial, record.dim, record.gap_sum, record.achieved,
                record.best_random, record.violations]
    return [record.t, record.n, record.m, record.cqfi, record.g_bound,
            record.fi_optimized, record.fi_pea, record.equioriented]


def write_result(result: RunResult, cfg: ExperimentConfig, path: str | None = None) -> str:
    """Write records plus summary to CSV or JSON; returns the path written."""
    path = path or cfg.out_path
    lemma = cfg.mode == "lemma-test"
    columns = _LEMMA_COLUMNS if lemma else _CSV_COLUMNS
    if cfg.out_format == "csv":
        lines = [",".join(columns)]
        for record in result.records:
            lines.append(",".join(_fmt(v) for v in _record_row(record)))
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        payload = {
            "config": _config_echo(cfg),
            "summary": {k: _json_value(v) for k, v in result.summary.items()},
            "records": [
                dict(zip(columns, (_json_value(v) for v in _record_row(record))))
                for record in result.records
            ],
        }
        _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _json_value(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ComputationError(f"refusing to write non-finite value {v}")
        return float(f"{v:.12g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = {}
    for key, value in vars(cfg).items():
        if isinstance(value, tuple):
            echo[key] = list(value)
        elif isinstance(value, dict):
            echo[key] = dict(value)
        else:
            echo[key] = value
    return echo
