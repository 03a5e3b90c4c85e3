"""Experiment presets and deterministic table output.

Every preset expands to a list of independent sweep points; each point
produces one :class:`ResultRow`.  Rows are sorted by a canonical key before
writing so worker parallelism never changes the file, floats are serialized
with 17 significant digits, and exact-mode rows carry a zero wall time so
repeated runs are byte identical.
"""

from __future__ import annotations

import configparser
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import channels as ch
from . import gb, ib, nested, qmath
from .metrics import FidelityReport

SCHEMA_VERSION = 1

RESULT_FIELDS = (
    "protocol",
    "gate",
    "noise_kind",
    "p0",
    "d",
    "mode",
    "f_incoherent",
    "f_coherent",
    "ratio",
    "success_probability",
    "seed",
    "wall_time_ms",
    "statistical_error",
)


class ValidationError(ValueError):
    """Configuration rejected before any computation ran."""


@dataclass
class ResultRow:
    protocol: str
    gate: str
    noise_kind: str
    p0: float
    d: str  # branch count, or n/d_tot descriptor for nested runs
    mode: str
    f_incoherent: float
    f_coherent: float
    ratio: float
    success_probability: float
    seed: int
    wall_time_ms: float
    statistical_error: str  # empty for exact rows

    def sort_key(self) -> tuple:
        return (
            self.protocol,
            self.gate,
            self.noise_kind,
            self.p0,
            self.d,
            self.mode,
        )


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.17g}"
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(RESULT_FIELDS)]
    for row in sorted(rows, key=ResultRow.sort_key):
        record = asdict(row)
        lines.append(",".join(_fmt(record[f]) for f in RESULT_FIELDS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[ResultRow]) -> str:
    out = []
    for row in sorted(rows, key=ResultRow.sort_key):
        record = asdict(row)
        out.append({f: _fmt(record[f]) for f in RESULT_FIELDS})
    return json.dumps(out, indent=2) + "\n"


@dataclass
class ExperimentConfig:
    """A resolved experiment: named preset or an explicit parameter set."""

    name: str
    protocol: str  # gb | nested | mb | ib
    gate: str  # T | cnot | CZ | layered
    noise_kind: str  # dephasing | depolarizing | correlated_dephasing
    p0_grid: list[float]
    d_values: list[int] = field(default_factory=lambda: [2])
    modes: list[str] = field(default_factory=lambda: ["probabilistic"])
    m: int = 1
    n_layers: int = 1
    nested_n: int = 1
    cswap_relative: list[float] = field(default_factory=list)
    seed: int = 1234
    monte_carlo: bool = False
    n_trajectories: int = 20000
    aux_grid: int = 0  # Bloch-angle grid resolution for the aux sweep preset

    def validate(self) -> None:
        floors = {"dephasing": 0.0, "depolarizing": 0.0, "correlated_dephasing": 0.0}
        if self.protocol == "ib":
            floors = {"dephasing": 0.5, "depolarizing": 0.25}
        if self.noise_kind not in floors:
            raise ValidationError(f"unknown noise kind {self.noise_kind!r}")
        lo = floors[self.noise_kind]
        if not self.p0_grid:
            raise ValidationError("empty p0 grid")
        for p0 in self.p0_grid:
            if not lo <= p0 <= 1.0:
                raise ValidationError(
                    f"p0={p0} outside [{lo}, 1] for {self.noise_kind} ({self.protocol})"
                )


def _gate_unitary(gate: str, n_layers: int = 1, p0: float = 1.0):
    from .qmath import CNOT, CZ, T_GATE

    if gate == "T":
        return T_GATE, 1
    if gate == "cnot":
        return CNOT, 2
    if gate == "CZ":
        return CZ, 2
    if gate == "layered":
        u, _ = gb.layered_circuit(n_layers, p0)
        return u, 2
    raise ValidationError(f"unknown gate {gate!r}")


def _noise_channel(kind: str, p0: float, m: int) -> ch.KrausChannel:
    if kind == "dephasing":
        return ch.tensor_channel(ch.dephasing(p0), m)
    if kind == "depolarizing":
        return ch.tensor_channel(ch.depolarizing(p0), m)
    if kind == "correlated_dephasing":
        if m != 2:
            raise ValidationError("correlated dephasing is a two-qubit model")
        return gb.correlated_dephasing_channel(p0)
    raise ValidationError(f"unknown noise kind {kind!r}")


# ---------------------------------------------------------------------------
# sweep-point evaluation


def _report_to_row(
    config: ExperimentConfig,
    report: FidelityReport,
    p0: float,
    d_label: str,
    mode: str,
    wall_ms: float,
    stat_err: str = "",
) -> ResultRow:
    return ResultRow(
        protocol=config.protocol,
        gate=config.gate,
        noise_kind=config.noise_kind,
        p0=p0,
        d=d_label,
        mode=mode,
        f_incoherent=report.f_incoherent,
        f_coherent=report.f_coherent,
        ratio=report.ratio,
        success_probability=report.success_probability,
        seed=config.seed,
        wall_time_ms=wall_ms,
        statistical_error=stat_err,
    )


def _eval_gb_point(config: ExperimentConfig, p0: float, d: int, mode: str) -> ResultRow:
    u, m = _gate_unitary(config.gate, config.n_layers, p0)
    if config.gate == "layered":
        _, noise = gb.layered_circuit(config.n_layers, p0)
    else:
        noise = _noise_channel(config.noise_kind, p0, m)
    keep_rule = ("drop_worst", 1) if mode == "quasi_deterministic" else ("keep_all",)
    cswap_noise = None
    if config.cswap_relative:
        p_rel = config.cswap_relative[0]
        cswap_noise = None if p_rel == 0.0 else 1.0 - p_rel * (1.0 - p0)
    if mode == "probabilistic" and d > 2 and m == 2:
        # Large multi-register composites: use the exact process-matrix update.
        chi = ch.kraus_to_chi(noise)
        upd, prob = gb.chi_update_full_sensitivity(chi, d)
        f0 = chi.p_ne
        f = float(np.real(upd.lam[0, 0]))
        report = FidelityReport.build(f, f0, prob)
    else:
        cfg = gb.choi_config(
            d=d, m=m, u=u, noise=noise, mode=mode,
            keep_rule=keep_rule, cswap_noise=cswap_noise,
        )
        report = gb.run_gb_report(cfg)
    return _report_to_row(config, report, p0, str(d), mode, 0.0)


def _eval_gb_layered_point(
    config: ExperimentConfig, p0: float, n_layers: int, p_rel: float
) -> ResultRow:
    u, noise = gb.layered_circuit(n_layers, p0)
    cswap_noise = None if p_rel == 0.0 else 1.0 - p_rel * (1.0 - p0)
    aux = qmath.kron(qmath.KET0, qmath.KET0)
    cfg = gb.choi_config(
        d=2, m=2, u=u, noise=noise, mode="quasi_deterministic",
        keep_rule=("drop_worst", 1), cswap_noise=cswap_noise,
        aux_state=None, aux_meas_state=None,
    )
    report = gb.run_gb_report(cfg)
    row = _report_to_row(config, report, p0, str(n_layers), "quasi_deterministic", 0.0)
    return ResultRow(**{**asdict(row), "gate": f"layered@prel={p_rel:g}"})


def _eval_nested_point(config: ExperimentConfig, p0: float, strategy: str) -> ResultRow:
    m = 2
    u, _ = _gate_unitary("cnot")
    chi0 = ch.kraus_to_chi(_noise_channel("depolarizing", p0, m))
    n = config.nested_n
    seq = [2] * n
    if strategy == "full_sensitivity":
        out, prob = nested.nested_chi_fully_sensitive(chi0, seq)
    else:
        if strategy == "alternating":
            aux = nested.default_aux_sequence(m, n)
        else:  # same_plus
            aux = [qmath.kron_pow(qmath.KET_PLUS, m)] * n
        plan = nested.NestedPlan(u=u, d_seq=seq, aux_seq=aux)
        out, prob = nested.nested_chi(chi0, plan)
    f0 = chi0.p_ne
    f = float(np.real(out.lam[0, 0]))
    report = FidelityReport.build(f, f0, prob)
    row = _report_to_row(config, report, p0, f"n={n},dtot={2 * n}", strategy, 0.0)
    return row


def _eval_ib_point(config: ExperimentConfig, p0: float, d: int, mode: str) -> ResultRow:
    u, m = _gate_unitary(config.gate)
    if config.noise_kind == "dephasing":
        vio1 = ib.vio_dephasing(p0)
        noise1 = ch.dephasing(p0)
    else:
        vio1 = ib.vio_depolarizing(p0)
        noise1 = ch.depolarizing(p0)
    cfg = ib.IbConfig(
        d=d,
        m=m,
        u=u,
        noise=ch.tensor_channel(noise1, m),
        vio=ib.tensor_vio(vio1, m),
        mode=mode,
    )
    report = ib.run_ib(cfg)
    return _report_to_row(config, report, p0, str(d), mode, 0.0)


def _eval_mb_point(config: ExperimentConfig, p0: float, mode: str) -> ResultRow:
    from .mb.protocol import MbSqemConfig, run_mb_sqem

    started = time.perf_counter()
    mb_cfg = MbSqemConfig(
        gate=config.gate,
        m=config.m,
        p0=p0,
        noise_kind=config.noise_kind,
        noise_scope="all" if "cswap" in config.name else "computation_only",
        n_layers=config.n_layers,
        n_trajectories=config.n_trajectories,
        seed=config.seed,
    )
    est = run_mb_sqem(mb_cfg)
    wall = (time.perf_counter() - started) * 1000.0
    report = FidelityReport.build(est.f_cj, est.f_incoherent, est.p_success)
    return _report_to_row(
        config, report, p0, "2", mode, wall, stat_err=_fmt(est.f_err)
    )


def _eval_aux_sweep_point(config: ExperimentConfig, theta: float, phi: float) -> ResultRow:
    """One Bloch-grid auxiliary for the d=2 T-gate sweep."""
    u, _ = _gate_unitary("T")
    noise = ch.depolarizing(config.p0_grid[0])
    aux = np.array(
        [np.cos(theta / 2.0), np.sin(theta / 2.0) * np.exp(1j * phi)], dtype=complex
    )
    psi = qmath.bell_state(1)
    # Widened registers: test qubit idle, aux on the computation half.
    wide_aux = qmath.kron(qmath.KET0, aux)
    best = None
    cfg = gb.GbConfig(
        d=2, m=1, u=u, noise=noise,
        aux_state=wide_aux,
        aux_meas_state=qmath.kron(qmath.KET0, qmath.KET_PLUS),
        reg_width=2,
    )
    outcomes = gb.run_gb(cfg, psi)
    # Post-select control 0; among its auxiliary outcomes keep the likeliest.
    live = [o for o in outcomes if o.control_outcome == 0 and o.probability > 1e-12]
    chosen = max(live, key=lambda o: o.probability)
    from .metrics import cj_overlap

    f = cj_overlap(chosen.rho.normalize(), u, 1)
    f0 = gb.incoherent_cj_fidelity(u, noise, 1)
    report = FidelityReport.build(f, f0, chosen.probability)
    row = _report_to_row(config, report, config.p0_grid[0], "2", "probabilistic", 0.0)
    return ResultRow(**{**asdict(row), "gate": f"T@theta={theta:.6g},phi={phi:.6g}"})


# ---------------------------------------------------------------------------
# presets

PRESETS: dict[str, str] = {
    "fig3-aux-sweep": "d=2 T gate, depolarizing p0=0.97, auxiliary states on a Bloch grid",
    "fig4-T-dephasing": "T gate under dephasing, d in 2..5, three post-processing modes",
    "fig4-cnot-depolarizing": "cNOT under two-qubit depolarizing, d in 2..5",
    "fig6-noisy-cswap": "quasi-deterministic layered circuits with noisy controlled-SWAPs",
    "fig7-nested": "nested iterations on a cNOT: three auxiliary strategies",
    "fig9-mb-gates": "measurement-based T gate, computation-portion noise (Monte Carlo)",
    "fig10-mb-noisy-cswap": "measurement-based layers with all-vertex noise (Monte Carlo)",
    "fig11-ib": "interferometric T and cNOT runs from the stochastic-field closed forms",
}


def list_presets() -> list[tuple[str, str]]:
    return sorted(PRESETS.items())


def preset_config(name: str, seed: int = 1234) -> ExperimentConfig:
    if name == "fig3-aux-sweep":
        return ExperimentConfig(
            name=name, protocol="gb", gate="T", noise_kind="depolarizing",
            p0_grid=[0.97], aux_grid=7, seed=seed,
        )
    if name == "fig4-T-dephasing":
        return ExperimentConfig(
            name=name, protocol="gb", gate="T", noise_kind="dephasing",
            p0_grid=[0.75, 0.8, 0.85, 0.9, 0.95, 0.97, 0.99],
            d_values=[2, 3, 4, 5],
            modes=["probabilistic", "quasi_deterministic", "deterministic"],
            seed=seed,
        )
    if name == "fig4-cnot-depolarizing":
        return ExperimentConfig(
            name=name, protocol="gb", gate="cnot", noise_kind="depolarizing",
            p0_grid=[0.9, 0.95, 0.97, 0.99],
            d_values=[2, 3, 4, 5],
            modes=["probabilistic", "quasi_deterministic", "deterministic"],
            m=2, seed=seed,
        )
    if name == "fig6-noisy-cswap":
        return ExperimentConfig(
            name=name, protocol="gb", gate="layered", noise_kind="depolarizing",
            p0_grid=[1.0 - 3e-4], d_values=[2],
            modes=["quasi_deterministic"],
            cswap_relative=[0.0, 1.0, 10.0],
            m=2, n_layers=20, seed=seed,
        )
    if name == "fig7-nested":
        return ExperimentConfig(
            name=name, protocol="nested", gate="cnot", noise_kind="depolarizing",
            p0_grid=[0.85, 0.9, 0.95, 0.99], m=2, nested_n=12, seed=seed,
        )
    if name == "fig9-mb-gates":
        return ExperimentConfig(
            name=name, protocol="mb", gate="T", noise_kind="depolarizing",
            p0_grid=[0.97, 0.99], monte_carlo=True, n_trajectories=4000, seed=seed,
        )
    if name == "fig10-mb-noisy-cswap":
        return ExperimentConfig(
            name=name, protocol="mb", gate="T", noise_kind="depolarizing",
            p0_grid=[0.997, 0.999], monte_carlo=True, n_trajectories=4000, seed=seed,
        )
    if name == "fig11-ib":
        return ExperimentConfig(
            name=name, protocol="ib", gate="T", noise_kind="dephasing",
            p0_grid=[0.75, 0.85, 0.95, 0.99, 0.999],
            d_values=[2, 3, 4],
            modes=["probabilistic", "deterministic"],
            seed=seed,
        )
    raise ValidationError(f"unknown preset {name!r}")


def sweep_points(config: ExperimentConfig) -> list[tuple]:
    """Expand a config into independent (kind, args) work items."""
    config.validate()
    points: list[tuple] = []
    if config.name == "fig3-aux-sweep":
        k = config.aux_grid
        thetas = [np.pi * i / (k - 1) for i in range(k)]
        phis = [2 * np.pi * i / (k - 1) for i in range(k)]
        for theta in thetas:
            for phi in phis:
                points.append(("aux_sweep", theta, phi))
        return points
    if config.protocol == "gb" and config.gate == "layered":
        for p_rel in config.cswap_relative:
            for n_l in range(1, config.n_layers + 1):
                points.append(("gb_layered", config.p0_grid[0], n_l, p_rel))
        return points
    if config.protocol == "gb":
        for p0 in config.p0_grid:
            for d in config.d_values:
                for mode in config.modes:
                    points.append(("gb", p0, d, mode))
        return points
    if config.protocol == "nested":
        for p0 in config.p0_grid:
            for strategy in ("full_sensitivity", "alternating", "same_plus"):
                points.append(("nested", p0, strategy))
        return points
    if config.protocol == "ib":
        for p0 in config.p0_grid:
            for d in config.d_values:
                for mode in config.modes:
                    points.append(("ib", p0, d, mode))
        return points
    if config.protocol == "mb":
        for p0 in config.p0_grid:
            points.append(("mb", p0, "probabilistic"))
        return points
    raise ValidationError(f"unknown protocol {config.protocol!r}")


def eval_point(config: ExperimentConfig, point: tuple) -> ResultRow:
    kind = point[0]
    if kind == "aux_sweep":
        return _eval_aux_sweep_point(config, point[1], point[2])
    if kind == "gb_layered":
        return _eval_gb_layered_point(config, point[1], point[2], point[3])
    if kind == "gb":
        return _eval_gb_point(config, point[1], point[2], point[3])
    if kind == "nested":
        return _eval_nested_point(config, point[1], point[2])
    if kind == "ib":
        return _eval_ib_point(config, point[1], point[2], point[3])
    if kind == "mb":
        return _eval_mb_point(config, point[1], point[2])
    raise ValidationError(f"unknown point kind {kind!r}")


def run_experiment(
    config: ExperimentConfig,
    out_path: str | Path | None = None,
    fmt: str = "csv",
    jobs: int = 1,
) -> list[ResultRow]:
    """Evaluate every sweep point and optionally write the table.

    Points are independent; with ``jobs > 1`` they run in a process pool.
    Output rows are canonically sorted, so parallelism never changes files.
    """
    points = sweep_points(config)
    if not points:
        raise ValidationError("experiment expands to an empty grid")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_eval_star, [(config, p) for p in points]))
    else:
        rows = [eval_point(config, p) for p in points]
    rows.sort(key=ResultRow.sort_key)
    if out_path is not None:
        text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
        Path(out_path).write_text(text, encoding="utf-8")
    return rows


def _eval_star(args):
    return eval_point(*args)


# ---------------------------------------------------------------------------
# config files


def config_from_file(path: str | Path) -> ExperimentConfig:
    """Parse an experiment description (INI sections: [experiment], [grid])."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read config file {path}")
    if "experiment" not in parser:
        raise ValidationError("config must have an [experiment] section")
    exp = parser["experiment"]
    if "preset" in exp:
        return preset_config(exp["preset"], seed=exp.getint("seed", 1234))
    grid = parser["grid"] if "grid" in parser else {}

    def floats(key: str, default: str = "") -> list[float]:
        raw = grid.get(key, default) if grid else default
        return [float(x) for x in raw.split()] if raw else []

    def ints(key: str, default: str = "") -> list[int]:
        raw = grid.get(key, default) if grid else default
        return [int(x) for x in raw.split()] if raw else []

    return ExperimentConfig(
        name=exp.get("name", "custom"),
        protocol=exp.get("protocol", "gb"),
        gate=exp.get("gate", "T"),
        noise_kind=exp.get("noise", "dephasing"),
        p0_grid=floats("p0", "0.9"),
        d_values=ints("d", "2") or [2],
        modes=(grid.get("modes", "probabilistic").split() if grid else ["probabilistic"]),
        m=exp.getint("m", 1),
        n_layers=exp.getint("n_layers", 1),
        nested_n=exp.getint("nested_n", 1),
        cswap_relative=floats("cswap_relative"),
        seed=exp.getint("seed", 1234),
        n_trajectories=exp.getint("trajectories", 20000),
    )
