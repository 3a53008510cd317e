"""Scenario configuration, Monte-Carlo driver, plot-data emission and the CLI.

Configs are JSON documents mirroring :class:`ScenarioConfig`; every field can
be overridden on the command line with ``--set section.field=value``.
Power figures are given in dBm and converted to watts on load.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .array import AngleGrid, ArrayConfig, BeampatternSpec, beampattern
from .channel import (
    ChannelSet,
    CltReport,
    DependentError,
    IndependentError,
    clt_validate,
    empirical_gamma_factor,
    gaussian_kl_floor,
    generate_rayleigh,
)
from .conic import SolverSettings
from .optimizer import (
    CommCentricConfig,
    RadarCentricConfig,
    RelaxationInfeasible,
    randomization_baseline,
    seed_words,
    solve_comm_centric,
    solve_radar_centric,
)
from .outage import UserQoS
from .radar_loss import RadarLossConfig

log = logging.getLogger(__name__)

ALGORITHMS = ("radar_centric", "comm_centric", "baseline", "clt_validate")
SWEEP_AXES = ("gamma_db", "p_out", "K", "M", "sigma_e2")
DOI_SPACING_DEG = 30.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    if not w > 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(w) + 30.0


def doi_layout(M: int, spacing_deg: float = DOI_SPACING_DEG) -> list[float]:
    """``M`` directions spaced ``spacing_deg`` apart and centred on broadside."""
    if M < 1:
        raise ValueError("need at least one direction of interest")
    return [spacing_deg * (m - (M - 1) / 2) for m in range(M)]


# ----------------------------------------------------------------------------
# configuration


@dataclass
class ArraySection:
    num_antennas: int = 10
    spacing_wavelengths: float = 0.5
    carrier_hz: float = 5e9


@dataclass
class DoiSection:
    angles_deg: list = field(default_factory=lambda: [-30.0, 0.0, 30.0])
    halfwidth_deg: float = 5.0
    grid_points: int = 181


@dataclass
class UsersSection:
    num_users: int = 3
    gamma_db: list = field(default_factory=lambda: [10.0])  # broadcast when shorter than K
    p_out: list = field(default_factory=lambda: [0.1])


@dataclass
class ErrorSection:
    variant: str = "independent"  # independent | dependent | none
    sigma_e2: float = 0.005
    lambda_decay: float = 1.0
    entry_law: str = "uniform"
    gamma_source: str = "exact"  # exact | empirical
    gamma_trials: int = 20_000


@dataclass
class LossSection:
    delta: float = 1.0
    c1: float = 0.3
    c2: float = 5.0


@dataclass
class ScheduleSection:
    zeta_1: float | None = None
    mu: float = 0.8
    rank_tol: float = 1e-4
    max_outer_iters: int = 30
    bisection_tol: float = 1e-3
    inner_penalty_iters: int = 10
    solver_tol: float = 1e-6
    solver_max_iters: int = 50_000


@dataclass
class TrialsSection:
    channel_realizations: int = 100
    error_realizations: int = 1000
    baseline_candidates: int = 40_000
    workers: int = 1


@dataclass
class CltSection:
    sizes: list = field(default_factory=lambda: [4, 6, 8, 10, 12, 14, 16])
    trials: int = 100_000
    bins: int = 100
    laws: list = field(default_factory=lambda: ["uniform", "sum_of_uniforms"])


@dataclass
class ScenarioConfig:
    array: ArraySection = field(default_factory=ArraySection)
    dois: DoiSection = field(default_factory=DoiSection)
    users: UsersSection = field(default_factory=UsersSection)
    power_dbm: float = 30.0
    noise_dbm: float = 10.0
    error: ErrorSection = field(default_factory=ErrorSection)
    loss: LossSection = field(default_factory=LossSection)
    algorithm: str = "radar_centric"
    schedules: ScheduleSection = field(default_factory=ScheduleSection)
    trials: TrialsSection = field(default_factory=TrialsSection)
    clt: CltSection = field(default_factory=CltSection)
    baseline_row_norm: str = "squared"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials.channel_realizations < 1 or self.trials.error_realizations < 1:
            raise ValueError("trial counts must be at least 1")
        if self.users.num_users < 0:
            raise ValueError("number of users must be nonnegative")
        if self.error.variant not in ("independent", "dependent", "none"):
            raise ValueError(f"unknown error variant {self.error.variant!r}")
        if self.error.gamma_source not in ("exact", "empirical"):
            raise ValueError(f"unknown gamma source {self.error.gamma_source!r}")
        if self.baseline_row_norm not in ("squared", "norm"):
            raise ValueError("baseline_row_norm must be 'squared' or 'norm'")
        if not self.dois.angles_deg:
            raise ValueError("at least one direction of interest is required")
        self.gammas_linear()
        self.p_outs()

    # unit conversion happens once, here
    @property
    def power_w(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def _per_user(self, values, name):
        vals = list(np.atleast_1d(values).astype(float))
        K = self.users.num_users
        if len(vals) == 1:
            return vals * K
        if len(vals) != K:
            raise ValueError(f"{name} has {len(vals)} entries for {K} users")
        return vals

    def gammas_linear(self) -> list[float]:
        return [10 ** (g / 10) for g in self._per_user(self.users.gamma_db, "gamma_db")]

    def p_outs(self) -> list[float]:
        ps = self._per_user(self.users.p_out, "p_out")
        for p in ps:
            if not 0 < p < 0.5:
                raise ValueError(f"outage budget must lie in (0, 0.5), got {p}")
        return ps

    # -- (de)serialisation

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        return _from_dict(cls, data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with Path(path).open() as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **dotted) -> "ScenarioConfig":
        """Copy with ``section.field`` (or top-level) overrides applied."""
        d = self.to_dict()
        for key, value in dotted.items():
            _set_dotted(d, key.replace("__", "."), value)
        return ScenarioConfig.from_dict(d)

    def quick(self) -> "ScenarioConfig":
        return self.replace(**{"trials.channel_realizations": 10, "trials.error_realizations": 200})


def _from_dict(cls, data):
    if not isinstance(data, dict):
        raise ValueError(f"expected an object for {cls.__name__}, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field(s): {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if known[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _from_dict(type(default), value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        if p not in cur or not isinstance(cur[p], dict):
            raise ValueError(f"unknown config section {p!r} in {key!r}")
        cur = cur[p]
    if parts[-1] not in cur:
        raise ValueError(f"unknown config field {key!r}")
    cur[parts[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    """``"users.gamma_db=[5, 7]"`` -> ``("users.gamma_db", [5, 7])``; values are JSON, else strings."""
    if "=" not in text:
        raise ValueError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


# ----------------------------------------------------------------------------
# scenario objects


def array_config(cfg: ScenarioConfig) -> ArrayConfig:
    return ArrayConfig.from_carrier(cfg.array.num_antennas, cfg.array.carrier_hz, cfg.array.spacing_wavelengths)


def loss_config(cfg: ScenarioConfig) -> RadarLossConfig:
    grid = AngleGrid.uniform(cfg.dois.grid_points)
    spec = BeampatternSpec.rectangular(np.radians(cfg.dois.angles_deg), np.radians(cfg.dois.halfwidth_deg), grid)
    return RadarLossConfig(spec, array_config(cfg), cfg.loss.delta)


def error_model(cfg: ScenarioConfig):
    e, N = cfg.error, cfg.array.num_antennas
    if e.variant == "none":
        return IndependentError.uniform(N, 0.0)
    if e.variant == "independent":
        return IndependentError.uniform(N, e.sigma_e2)
    return DependentError(N, e.lambda_decay, e.entry_law, sigma_e2=e.sigma_e2)


def solver_settings(cfg: ScenarioConfig) -> SolverSettings:
    s = cfg.schedules
    return SolverSettings(tol_primal=s.solver_tol, tol_dual=s.solver_tol, max_iters=s.solver_max_iters)


def radar_config(cfg: ScenarioConfig) -> RadarCentricConfig:
    s = cfg.schedules
    qos = tuple(UserQoS(g, p) for g, p in zip(cfg.gammas_linear(), cfg.p_outs()))
    return RadarCentricConfig(qos=qos, power_budget=cfg.power_w, loss=loss_config(cfg), zeta_1=s.zeta_1, mu=s.mu,
                              rank_tol=s.rank_tol, max_outer_iters=s.max_outer_iters,
                              outage_trials=cfg.trials.error_realizations, solver=solver_settings(cfg))


def comm_config(cfg: ScenarioConfig) -> CommCentricConfig:
    s = cfg.schedules
    return CommCentricConfig(gammas=tuple(cfg.gammas_linear()), power_budget=cfg.power_w, loss=loss_config(cfg),
                             c1=cfg.loss.c1, c2=cfg.loss.c2, bisection_tol=s.bisection_tol, rank_tol=s.rank_tol,
                             inner_penalty_iters=s.inner_penalty_iters, outage_trials=cfg.trials.error_realizations,
                             solver=solver_settings(cfg))


def channels_for(cfg: ScenarioConfig, index: int) -> ChannelSet:
    return generate_rayleigh(cfg.users.num_users, cfg.array.num_antennas, seed=[cfg.seed, index, 0],
                             noise_power=cfg.noise_w)


def gamma_factor_for(cfg: ScenarioConfig, model, index: int):
    if model.is_zero:
        return None
    if cfg.error.gamma_source == "empirical":
        return empirical_gamma_factor(model, cfg.error.gamma_trials, [cfg.seed, index, 3])
    return model.gamma_factor()


# ----------------------------------------------------------------------------
# results


METRICS = ("l1", "l2", "combined", "sum_rate", "max_outage", "max_rank_ratio", "iterations",
           "relaxed_loss", "t_star", "baseline_combined", "baseline_feasible")


@dataclass
class RealizationRow:
    index: int
    status: str
    l1: float = math.nan
    l2: float = math.nan
    combined: float = math.nan
    alpha: float = math.nan
    sum_rate: float = math.nan
    outage: list = field(default_factory=list)
    max_outage: float = math.nan
    max_rank_ratio: float = math.nan
    iterations: int = 0
    relaxed_loss: float = math.nan
    t_star: float = math.nan
    baseline_combined: float = math.nan
    baseline_feasible: int = 0
    wall_time: float = 0.0
    error: str = ""
    covariance: np.ndarray | None = field(default=None, repr=False)

    def csv_row(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("covariance", "wall_time"):
                continue
            v = getattr(self, f.name)
            if f.name == "outage":
                v = ";".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            out[f.name] = v
        return out


def _mean_stderr(values):
    x = np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    rows: list[RealizationRow]
    reference_loss: float = math.nan  # radar-only combined loss for the same spec
    clt_reports: dict = field(default_factory=dict, repr=False)  # (law, N) -> CltReport
    kl_floor: float = math.nan

    def aggregate(self) -> dict:
        agg = {}
        for m in METRICS:
            mean, se = _mean_stderr([getattr(r, m) for r in self.rows])
            agg[m] = mean
            agg[m + "_stderr"] = se
        agg["rows"] = len(self.rows)
        agg["ok_rows"] = sum(r.status in ("optimal", "max_iterations") for r in self.rows)
        agg["reference_loss"] = self.reference_loss
        agg["excess_loss"] = agg["combined"] - self.reference_loss
        return agg

    def mean_beampattern(self):
        covs = [r.covariance for r in self.rows if r.covariance is not None]
        if not covs:
            return None
        lc = loss_config(self.config)
        return np.mean([beampattern(R, lc.spec.grid, lc.array) for R in covs], axis=0)

    def write_rows(self, path) -> Path:
        path = Path(path)
        rows = [r.csv_row() for r in self.rows]
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["index"])
            w.writeheader()
            w.writerows(rows)
        return path


def radar_only_loss(cfg: ScenarioConfig) -> tuple[float, np.ndarray]:
    """Combined loss and covariance of the communication-free design for ``cfg``'s radar spec."""
    rc = radar_config(cfg)
    rc = dataclasses.replace(rc, qos=())
    ch = ChannelSet(None, np.zeros((0, cfg.array.num_antennas, cfg.array.num_antennas)), cfg.noise_w)
    res = solve_radar_centric(ch, None, rc)
    return res.loss.combined, res.covariance


def _fill_design(row: RealizationRow, res):
    row.status = res.status
    row.l1, row.l2, row.combined, row.alpha = res.loss.l1, res.loss.l2, res.loss.combined, res.loss.alpha
    row.sum_rate = res.sum_rate
    row.outage = [o.fraction for o in res.outage]
    row.max_outage = max(row.outage) if row.outage else math.nan
    row.max_rank_ratio = max(res.rank_ratios) if res.rank_ratios else 0.0
    row.iterations = res.solver_iterations
    row.relaxed_loss = res.relaxed_loss
    row.covariance = res.covariance


def run_realization(cfg: ScenarioConfig, index: int) -> RealizationRow:
    """One channel realization of ``cfg.algorithm``; failures become a status, never an exception."""
    t0 = time.perf_counter()
    row = RealizationRow(index=index, status="pending")
    try:
        ch = channels_for(cfg, index)
        model = error_model(cfg)
        gf = gamma_factor_for(cfg, model, index)
        mc_seed = [cfg.seed, index, 1]
        if cfg.algorithm in ("radar_centric", "baseline"):
            res = solve_radar_centric(ch, model, radar_config(cfg), gamma_factor=gf, seed=mc_seed)
            _fill_design(row, res)
            if cfg.algorithm == "baseline":
                base = randomization_baseline(res.relaxed_blocks, ch, model, radar_config(cfg).qos, cfg.power_w,
                                              loss_config(cfg), cfg.trials.baseline_candidates,
                                              seed=seed_words([cfg.seed, index, 2]), gamma_factor=gf,
                                              row_norm=cfg.baseline_row_norm)
                row.baseline_feasible = base.num_feasible
                row.baseline_combined = base.loss.combined if base.loss is not None else math.nan
        elif cfg.algorithm == "comm_centric":
            res = solve_comm_centric(ch, model, comm_config(cfg), gamma_factor=gf, seed=mc_seed)
            _fill_design(row, res)
            row.t_star = res.max_outage
        else:
            raise ValueError("clt_validate is not a per-realization algorithm; use run_clt")
    except RelaxationInfeasible as exc:
        row.status, row.error = "infeasible", str(exc)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        row.status, row.error = "error", f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - t0
    return row


def _row_task(args):
    cfg_dict, index = args
    return run_realization(ScenarioConfig.from_dict(cfg_dict), index)


def run_scenario(cfg: ScenarioConfig, workers: int | None = None, reference: bool = True) -> ExperimentResult:
    """Monte-Carlo run over ``cfg.trials.channel_realizations`` channel draws."""
    if cfg.algorithm == "clt_validate":
        return run_clt(cfg)
    n = cfg.trials.channel_realizations
    workers = cfg.trials.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_task, [(cfg.to_dict(), i) for i in range(n)]))
    else:
        rows = [run_realization(cfg, i) for i in range(n)]
    rows.sort(key=lambda r: r.index)
    ref = radar_only_loss(cfg)[0] if reference and cfg.algorithm != "comm_centric" else math.nan
    return ExperimentResult(cfg, rows, reference_loss=ref)


def random_hermitian(N: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / 2
    return G + G.conj().T


def run_clt(cfg: ScenarioConfig) -> ExperimentResult:
    """Gaussianity check of ``-Tr[B E]`` over the configured sizes and dependent entry laws."""
    c = cfg.clt
    reports = {}
    for law in c.laws:
        for N in c.sizes:
            model = DependentError(int(N), cfg.error.lambda_decay, law)
            B = random_hermitian(int(N), [cfg.seed, int(N), 4])
            rep = clt_validate(model, B, c.trials, c.bins, seed=[cfg.seed, int(N), 5])
            rep.label = f"{law}_N{int(N)}"
            reports[(law, int(N))] = rep
    floor = gaussian_kl_floor(c.trials, c.bins, seed=[cfg.seed, 6])
    return ExperimentResult(cfg, [], clt_reports=reports, kl_floor=floor)


# ----------------------------------------------------------------------------
# sweeps


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "gamma_db":
        return cfg.replace(**{"users.gamma_db": [float(value)]})
    if axis == "p_out":
        return cfg.replace(**{"users.p_out": [float(value)]})
    if axis == "K":
        return cfg.replace(**{"users.num_users": int(value)})
    if axis == "M":
        return cfg.replace(**{"dois.angles_deg": doi_layout(int(value))})
    if axis == "sigma_e2":
        return cfg.replace(**{"error.sigma_e2": float(value)})
    raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


@dataclass
class SweepResult:
    axis: str
    values: list
    results: list[ExperimentResult]

    def table(self) -> list[dict]:
        out = []
        for v, r in zip(self.values, self.results):
            row = {"x": v}
            row.update(r.aggregate())
            out.append(row)
        return out


def sweep(cfg: ScenarioConfig, axis: str, values, workers: int | None = None) -> SweepResult:
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    results = []
    for v in values:
        point = apply_axis(cfg, axis, v)
        log.info("sweep %s=%s", axis, v)
        results.append(run_scenario(point, workers=workers))
    return SweepResult(axis, values, results)


# ----------------------------------------------------------------------------
# plot data


class MissingSeries(LookupError):
    """The requested plot series is not present in the result."""


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _append_manifest(out: Path, entries):
    with (out / "manifest.txt").open("a") as fh:
        for file, x, y, label in entries:
            fh.write(f"{file}\tx={x}\ty={y}\tlabel={label}\n")


def emit_plot_data(result, kind: str, out_dir, metric: str = "combined", linear: bool = False) -> list[Path]:
    """Write figure-ready CSVs for ``kind`` and append them to ``out_dir/manifest.txt``.

    Parameters
    ----------
    result : ExperimentResult or SweepResult
    kind : {"beampattern", "sweep_curve", "histogram", "kl_curve"}
    metric : str
        Aggregate plotted by ``sweep_curve`` (``excess_loss`` gives loss minus radar-only).
    linear : bool
        Beampattern in linear power instead of dB relative to the peak.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written, manifest = [], []
    if kind == "beampattern":
        if not isinstance(result, ExperimentResult):
            raise MissingSeries("beampattern needs a single-scenario result")
        pattern = result.mean_beampattern()
        if pattern is None:
            raise MissingSeries("result has no successful designs to plot")
        series = [("dfrc", pattern)]
        if np.isfinite(result.reference_loss):
            series.append(("radar_only", beampattern(radar_only_loss(result.config)[1],
                                                     loss_config(result.config).spec.grid,
                                                     loss_config(result.config).array)))
        theta = loss_config(result.config).spec.grid.degrees
        for name, p in series:
            if linear:
                col, vals = "power_linear", p
            else:
                col, vals = "power_db_relative", 10 * np.log10(np.maximum(p, 1e-30) / p.max())
            path = _write_csv(out / f"beampattern_{name}.csv", ["theta_deg", col], zip(theta, vals))
            written.append(path)
            manifest.append((path.name, "theta_deg", col, name))
    elif kind == "sweep_curve":
        if not isinstance(result, SweepResult):
            raise MissingSeries("sweep_curve needs a sweep result")
        table = result.table()
        if metric not in table[0]:
            raise MissingSeries(f"unknown sweep metric {metric!r}")
        se_key = metric + "_stderr"
        rows = [(r["x"], r[metric], r.get(se_key, math.nan)) for r in table]
        path = _write_csv(out / f"sweep_{result.axis}_{metric}.csv", ["x", "mean", "stderr"], rows)
        written.append(path)
        manifest.append((path.name, result.axis, metric, f"{metric} vs {result.axis}"))
    elif kind == "histogram":
        if not getattr(result, "clt_reports", None):
            raise MissingSeries("histogram needs CLT reports")
        for (law, N), rep in sorted(result.clt_reports.items()):
            path = rep.to_csv(out / f"histogram_{law}_N{N}.csv")
            written.append(path)
            manifest.append((path.name, "bin_center", "empirical_density,fitted_density", rep.label))
    elif kind == "kl_curve":
        if not getattr(result, "clt_reports", None):
            raise MissingSeries("kl_curve needs CLT reports")
        laws = sorted({law for law, _ in result.clt_reports})
        for law in laws:
            rows = sorted((N, rep.kl_divergence) for (l, N), rep in result.clt_reports.items() if l == law)
            path = _write_csv(out / f"kl_curve_{law}.csv", ["N", "kl"], rows)
            written.append(path)
            manifest.append((path.name, "N", "kl", law))
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    _append_manifest(out, manifest)
    return written


# ----------------------------------------------------------------------------
# CLI


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dfrc-outage", description="Outage-constrained DFRC beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON scenario file")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--quick", action="store_true", help="desk-scale trial counts (10 channels, 200 error draws)")
        sp.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. users.gamma_db=[5]")
        sp.add_argument("--workers", type=int, help="parallel realization workers")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name in ("radar-centric", "comm-centric", "clt-validate"):
        common(sub.add_parser(name))
    bp = sub.add_parser("baseline", help="penalty design versus Gaussian randomisation")
    common(bp)
    bp.add_argument("--baseline-row-norm", choices=("squared", "norm"),
                    help="scale antenna rows to squared norm P_T/N (default) or norm P_T/N")
    bp.add_argument("--candidates", type=int, help="randomised candidates per realization")
    sp = sub.add_parser("sweep", help="sweep one scenario axis")
    common(sp)
    sp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sp.add_argument("--values", required=True, help="comma-separated axis values")
    sp.add_argument("--algorithm", choices=("radar_centric", "comm_centric", "baseline"))
    return p


def resolve_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    algo = {"radar-centric": "radar_centric", "comm-centric": "comm_centric", "baseline": "baseline",
            "clt-validate": "clt_validate"}.get(args.command)
    if args.command == "sweep" and args.algorithm:
        algo = args.algorithm
    overrides = dict(parse_override(s) for s in args.set)
    if algo:
        overrides.setdefault("algorithm", algo)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["trials.workers"] = args.workers
    if getattr(args, "baseline_row_norm", None):
        overrides["baseline_row_norm"] = args.baseline_row_norm
    if getattr(args, "candidates", None) is not None:
        overrides["trials.baseline_candidates"] = args.candidates
    if overrides:
        cfg = cfg.replace(**overrides)
    if args.quick:
        cfg = cfg.quick()
    return cfg


def _write_summary(out: Path, payload: dict):
    with (out / "summary.json").open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        print(cfg.to_json())
        return 0
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text("")
    (out / "config.json").write_text(cfg.to_json() + "\n")
    t0 = time.perf_counter()
    try:
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            res = sweep(cfg, args.axis, values)
            table = res.table()
            _write_csv(out / "sweep_table.csv", list(table[0]), [list(r.values()) for r in table])
            for metric in ("combined", "excess_loss", "sum_rate", "max_outage", "t_star"):
                emit_plot_data(res, "sweep_curve", out, metric=metric)
            for v, r in zip(res.values, res.results):
                r.write_rows(out / f"rows_{args.axis}_{v:g}.csv")
            summary = {"axis": args.axis, "table": table}
        else:
            res = run_scenario(cfg)
            if cfg.algorithm == "clt_validate":
                emit_plot_data(res, "histogram", out)
                emit_plot_data(res, "kl_curve", out)
                summary = {"kl_floor": res.kl_floor,
                           "kl": {f"{law}_N{N}": r.kl_divergence for (law, N), r in sorted(res.clt_reports.items())}}
            else:
                res.write_rows(out / "rows.csv")
                try:
                    emit_plot_data(res, "beampattern", out)
                except MissingSeries as exc:
                    log.warning("no beampattern: %s", exc)
                summary = res.aggregate()
                failed = [r for r in res.rows if r.status in ("error", "infeasible")]
                if failed:
                    print(f"{len(failed)} of {len(res.rows)} realizations failed; see rows.csv", file=sys.stderr)
    except (ValueError, RelaxationInfeasible) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    _write_summary(out, summary)
    # wall time lives outside the CSVs so reruns stay byte-identical
    (out / "timing.json").write_text(json.dumps({"wall_time_s": time.perf_counter() - t0}) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
