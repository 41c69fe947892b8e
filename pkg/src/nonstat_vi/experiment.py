"""Experiment orchestration: measured losses against the bounds, as CSV rows."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .avi import ErrorModel, extract_periodic_policy, run_avi, trace_stats
from .bounds import (
    AUDIT_SLACK,
    BoundInputs,
    BoundReport,
    asymptotic_bounds,
    audit_trace_inequalities,
    build_tightness_instance,
    thm1_bound,
    thm3_bound,
)
from .garnet import GarnetSpec, generate_garnet
from .io import read_mdp, write_trace
from .solvers import DEFAULT_TOL, evaluate_periodic, loss, solve_optimal

COLUMNS = (
    "trial",
    "seed",
    "n_states",
    "n_actions",
    "gamma",
    "k",
    "m",
    "eps_span",
    "eps_inf",
    "delta",
    "loss",
    "bound_thm3",
    "bound_thm1",
    "margin",
    "audit_ok",
)

SOURCES = ("garnet", "file", "tightness")


@dataclass
class ExperimentConfig:
    """What to run.

    ``source`` selects the instance: a Garnet family (``garnet``), a fixed MDP
    file (``mdp_path``) or the tightness chain (``tightness`` with ``gamma``,
    ``eps`` and ``delta``; its ``k`` is the experiment's ``k``). ``errors`` is
    ``{"kind": "zero"}`` or ``{"kind": "random_span", "bound": b}``; the
    tightness source always uses its own errors and tie-break.
    """

    source: str = "garnet"
    k: int = 30
    m_list: list = field(default_factory=lambda: [1, 2, 5, 10, 30])
    garnet: GarnetSpec = field(default_factory=GarnetSpec)
    mdp_path: Optional[str] = None
    tightness: dict = field(
        default_factory=lambda: {"gamma": 0.5, "eps": 0.1, "delta": 1.0}
    )
    errors: dict = field(default_factory=lambda: {"kind": "zero"})
    tie_break: str = "lowest"
    tol: float = DEFAULT_TOL
    output: Optional[str] = None
    trace_dir: Optional[str] = None
    trials: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if isinstance(self.garnet, dict):
            self.garnet = GarnetSpec(**self.garnet)
        self.m_list = [int(m) for m in self.m_list]
        self.validate()

    def validate(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.m_list:
            raise ValueError("m_list must not be empty")
        bad = [m for m in self.m_list if not 1 <= m <= self.k]
        if bad:
            raise ValueError(f"m values {bad} outside [1, k={self.k}]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.source == "file" and not self.mdp_path:
            raise ValueError("source 'file' needs mdp_path")
        if self.errors.get("kind") not in ("zero", "random_span"):
            raise ValueError(f"unsupported error model {self.errors!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    rows: list
    reports: list

    @property
    def all_ok(self) -> bool:
        return all(row["audit_ok"] and row["margin"] >= -AUDIT_SLACK for row in self.rows)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return x


def _trial_setup(cfg: ExperimentConfig, seed: int, file_mdp):
    if cfg.source == "tightness":
        t = cfg.tightness
        inst = build_tightness_instance(t["gamma"], cfg.k, t["eps"], t["delta"])
        return inst.mdp, inst.v0, inst.error_model(), inst.tie_break
    if cfg.source == "garnet":
        mdp = generate_garnet(dataclasses.replace(cfg.garnet, seed=seed))
    else:
        mdp = file_mdp
    if cfg.errors["kind"] == "zero":
        err = ErrorModel.zero()
    else:
        err = ErrorModel.random_span(float(cfg.errors["bound"]), seed=[seed, 1])
    return mdp, np.zeros(mdp.n_states), err, cfg.tie_break


def run_trial(cfg: ExperimentConfig, trial: int, file_mdp=None):
    seed = cfg.base_seed + trial
    mdp, v0, err, tie_break = _trial_setup(cfg, seed, file_mdp)
    v_star = solve_optimal(mdp, cfg.tol).value
    trace = run_avi(mdp, v0, cfg.k, err, tie_break)
    if cfg.trace_dir:
        Path(cfg.trace_dir).mkdir(parents=True, exist_ok=True)
        write_trace(trace, Path(cfg.trace_dir) / f"trace_{trial:04d}.json")
    stats = trace_stats(trace, v_star)
    periodic = {
        m: evaluate_periodic(mdp, extract_periodic_policy(trace, m), cfg.tol)
        for m in cfg.m_list
    }
    audit = audit_trace_inequalities(
        mdp, trace, v_star, cfg.m_list, cfg.tol, periodic_values=periodic
    )
    bound1 = thm1_bound(BoundInputs(mdp.gamma, cfg.k, 1, stats.eps_span, stats.delta0))
    rows, thm3, measured = [], [], []
    for m in cfg.m_list:
        bound = thm3_bound(
            BoundInputs(mdp.gamma, cfg.k, m, stats.eps_span, stats.delta0)
        )
        measured_loss = loss(v_star, periodic[m])
        thm3.append((m, bound))
        measured.append((m, measured_loss))
        rows.append(
            {
                "trial": trial,
                "seed": seed,
                "n_states": mdp.n_states,
                "n_actions": mdp.n_actions,
                "gamma": mdp.gamma,
                "k": cfg.k,
                "m": m,
                "eps_span": stats.eps_span,
                "eps_inf": stats.eps_inf,
                "delta": stats.delta0,
                "loss": measured_loss,
                "bound_thm3": bound,
                "bound_thm1": bound1,
                "margin": bound - measured_loss,
                "audit_ok": audit.m_ok(m),
            }
        )
    report = BoundReport(
        thm1=bound1,
        thm3=thm3,
        classic_asymptotic=asymptotic_bounds(mdp.gamma, stats.eps_inf, stats.eps_span).classic,
        measured=measured,
    )
    return rows, report


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every trial in order and optionally write the CSV to ``cfg.output``."""
    cfg.validate()
    file_mdp = read_mdp(cfg.mdp_path) if cfg.source == "file" else None
    rows, reports = [], []
    for trial in range(cfg.trials):
        trial_rows, report = run_trial(cfg, trial, file_mdp)
        rows.extend(trial_rows)
        reports.append(report)
    result = ExperimentResult(rows, reports)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(result.to_csv())
    return result
