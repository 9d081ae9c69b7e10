"""Scenario runner: figure datasets, CSV output and the validation suite.

A scenario is a flat key = value text file describing one experiment; the
run_* functions turn it into deterministic CSV datasets (fixed 12-digit
formatting) plus standalone matplotlib scripts, and run_validate executes
the analytic-vs-oracle cross checks and reports machine-readable results.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .counterdiabatic import (
    CDDrive,
    cd_propagator,
    cd_truncated_transition,
    cd_two_level_transition_probability,
)
from .oracle import DriveFunction, integrate_propagator
from .protocol import (
    MATCHING_RTOL,
    PROBABILITY_ATOL,
    TangentDrive,
    adiabatic_reference_energy,
    cutoff_error_relation,
    diabatic_energy,
    diabatic_state,
    drive_from_ratio,
    field_at,
    instantaneous_eigenvalues,
    propagator,
    theta,
    truncated_transition_matrix,
    two_level_transition_probability,
    window_from_delta0,
    window_from_tau_c,
)
from .su2 import Spin, fidelity

OUTPUT_KINDS = ("fields", "levels", "populations", "truncation_scan", "validate")
_WINDOWED_KINDS = ("fields", "levels", "populations", "validate")

# Near-adiabatic reference curve included in every fields dataset.
REFERENCE_GAMMA = 0.01
# Spin sizes exercised by the validation suite.
VALIDATE_TWO_J = (1, 2, 3)
ORACLE_FIDELITY_DEFICIT = 1e-8
PHASE_AGREEMENT_RTOL = 1e-10
CLOSED_FORM_ATOL = 1e-12


class ConfigError(ValueError):
    """Scenario file or parameter rejected; message carries the location."""


@dataclass(frozen=True)
class Scenario:
    """One experiment: spin, drive ratio, truncation window, outputs.

    Exactly one of delta0 / gamma_tau_c defines the window whenever an
    output other than truncation_scan is requested.  eta2_perturbation
    detunes eta2 off the matching condition (negative-control knob for the
    validation suite); scan_* configure the truncation_scan grid.
    """

    name: str
    two_j: int
    gamma_over_eta1: float
    eta1: float = 1.0
    delta0: float | None = None
    gamma_tau_c: float | None = None
    initial_m: int | None = None
    samples: int = 400
    tol: float = 1e-10
    outputs: tuple[str, ...] = OUTPUT_KINDS
    scan_gammas: tuple[float, ...] = (0.5, 0.8, 0.9, 0.99)
    scan_delta0_max: float = math.pi / 12
    scan_points: int = 200
    eta2_perturbation: float = 0.0

    def __post_init__(self):
        if self.two_j < 0:
            raise ConfigError(f"two_j must be nonnegative, got {self.two_j}")
        if not 0.0 < self.gamma_over_eta1 < 1.0:
            raise ConfigError(
                f"gamma_over_eta1 must lie strictly in (0, 1), got {self.gamma_over_eta1}"
            )
        if self.eta1 <= 0:
            raise ConfigError(f"eta1 must be positive, got {self.eta1}")
        if self.samples < 2:
            raise ConfigError(f"samples must be >= 2, got {self.samples}")
        if not 1e-13 <= self.tol <= 1e-6:
            raise ConfigError(f"tol={self.tol} outside [1e-13, 1e-6]")
        unknown = set(self.outputs) - set(OUTPUT_KINDS)
        if unknown:
            raise ConfigError(f"unknown outputs {sorted(unknown)}; allowed {OUTPUT_KINDS}")
        if self.delta0 is not None and self.gamma_tau_c is not None:
            raise ConfigError("give only one of delta0 / gamma_tau_c, not both")
        needs_window = any(kind in _WINDOWED_KINDS for kind in self.outputs)
        if needs_window and self.delta0 is None and self.gamma_tau_c is None:
            raise ConfigError(
                "a window is required: give exactly one of delta0 / gamma_tau_c"
            )
        if self.delta0 is not None and not 0.0 < self.delta0 < math.pi / 2:
            raise ConfigError(f"delta0={self.delta0} outside (0, pi/2)")
        if self.gamma_tau_c is not None and not 0.0 < self.gamma_tau_c < math.pi / 2:
            raise ConfigError(f"gamma_tau_c={self.gamma_tau_c} outside (0, pi/2)")
        if "populations" in self.outputs:
            if self.initial_m is None:
                raise ConfigError("populations output requires initial_m")
            if (self.initial_m - self.two_j) % 2 != 0 or abs(self.initial_m) > self.two_j:
                raise ConfigError(
                    f"initial_m={self.initial_m} invalid for two_j={self.two_j}"
                )
        for g in self.scan_gammas:
            if not 0.0 < g < 1.0:
                raise ConfigError(f"scan_gammas entries must lie in (0, 1), got {g}")
        if not 0.0 < self.scan_delta0_max < math.pi / 2:
            raise ConfigError(f"scan_delta0_max={self.scan_delta0_max} outside (0, pi/2)")
        if self.scan_points < 2:
            raise ConfigError(f"scan_points must be >= 2, got {self.scan_points}")

    def matched_drive(self, gamma_over_eta1: float | None = None) -> TangentDrive:
        return drive_from_ratio(self.eta1, gamma_over_eta1 or self.gamma_over_eta1)

    def drive(self) -> TangentDrive:
        """Scenario drive; detuned off matching if eta2_perturbation is set."""
        matched = self.matched_drive()
        if self.eta2_perturbation == 0.0:
            return matched
        return TangentDrive(
            matched.eta1, matched.eta2 + self.eta2_perturbation, matched.gamma
        )

    def window(self, drive: TangentDrive):
        """Truncation window; its geometry always comes from the matched field."""
        if self.delta0 is not None:
            return window_from_delta0(drive, self.delta0)
        return window_from_tau_c(drive, self.gamma_tau_c / drive.gamma)


_LIST_KEYS = {"outputs", "scan_gammas"}


def _parse_value(key: str, value: str):
    if key == "name":
        return value
    if key in ("two_j", "initial_m", "samples", "scan_points"):
        return int(value)
    if key == "outputs":
        return tuple(item.strip() for item in value.split(",") if item.strip())
    if key == "scan_gammas":
        return tuple(float(item) for item in value.split(",") if item.strip())
    return float(value)


def parse_scenario(path) -> Scenario:
    """Read a flat key = value scenario file; unknown keys are rejected."""
    path = Path(path)
    known = set(Scenario.__dataclass_fields__)
    data: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in data:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            data[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    data.setdefault("name", path.stem)
    for required in ("two_j", "gamma_over_eta1"):
        if required not in data:
            raise ConfigError(f"{path}: missing required key {required!r}")
    try:
        return Scenario(**data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class Dataset:
    """Columnar result of one run_* operation, ready for CSV serialization."""

    kind: str
    columns: dict  # name -> 1-d float array, insertion order = file order
    comment: str


def _scenario_comment(scenario: Scenario) -> str:
    window = (
        f"delta0={scenario.delta0!r}" if scenario.delta0 is not None
        else f"gamma_tau_c={scenario.gamma_tau_c!r}"
    )
    return (
        f"scenario={scenario.name} two_j={scenario.two_j} "
        f"gamma_over_eta1={scenario.gamma_over_eta1!r} eta1={scenario.eta1!r} "
        f"{window} samples={scenario.samples} tol={scenario.tol!r} "
        f"tanpulse_version={__version__}"
    )


def _time_grid(tau_c: float, samples: int) -> np.ndarray:
    grid = np.linspace(-tau_c, tau_c, samples)
    if samples % 2 == 1:
        grid[samples // 2] = 0.0  # pin the midpoint so t = 0 rows are exact
    return grid


def _m_label(m: float) -> str:
    return f"{m:+g}"


def run_fields(scenario: Scenario) -> Dataset:
    """Field z-component over the truncated window, long format per sweep ratio.

    Includes a near-adiabatic reference curve at gamma/eta1 = 0.01 next to the
    scenario's own ratio.
    """
    gammas = [scenario.gamma_over_eta1]
    if REFERENCE_GAMMA not in gammas:
        gammas.append(REFERENCE_GAMMA)
    ratio_col, t_col, omega_col = [], [], []
    for ratio in gammas:
        drive = scenario.matched_drive(ratio)
        window = scenario.window(drive)
        for t in _time_grid(window.tau_c, scenario.samples):
            _, _, omega_z = field_at(drive, t)
            ratio_col.append(ratio)
            t_col.append(t * drive.eta1)
            omega_col.append(omega_z / drive.eta1)
    return Dataset(
        kind="fields",
        columns={
            "gamma_over_eta1": np.array(ratio_col),
            "t_eta1": np.array(t_col),
            "omega_z_over_eta1": np.array(omega_col),
        },
        comment=_scenario_comment(scenario),
    )


def run_levels(scenario: Scenario) -> Dataset:
    """Diabatic, adiabatic-reference and instantaneous levels over the window.

    Energies are reported over eta1.  E_adiabatic_reference_* is the
    -m*eta1*sec(gamma*t) family (the gamma -> 0 matched limit);
    E_instantaneous_* is the spectrum of H(t), rank-labelled by m descending.
    """
    spin = Spin(scenario.two_j)
    drive = scenario.drive()
    window = scenario.window(scenario.matched_drive())
    grid = _time_grid(window.tau_c, scenario.samples)
    m_values = spin.m_values()
    two_ms = [int(round(2 * m)) for m in m_values]
    columns = {"t_eta1": grid * drive.eta1}
    diabatic = {
        two_m: np.array([diabatic_energy(drive, spin, two_m, t) for t in grid])
        for two_m in two_ms
    }
    reference = {
        two_m: np.array([adiabatic_reference_energy(drive, spin, two_m, t) for t in grid])
        for two_m in two_ms
    }
    instantaneous = np.array([instantaneous_eigenvalues(drive, spin, t) for t in grid])
    for m, two_m in zip(m_values, two_ms):
        columns[f"E_diabatic_m{_m_label(m)}"] = diabatic[two_m] / drive.eta1
    for m, two_m in zip(m_values, two_ms):
        columns[f"E_adiabatic_reference_m{_m_label(m)}"] = reference[two_m] / drive.eta1
    for rank, m in enumerate(m_values):
        columns[f"E_instantaneous_m{_m_label(m)}"] = instantaneous[:, rank] / drive.eta1
    return Dataset(kind="levels", columns=columns, comment=_scenario_comment(scenario))


def run_populations(scenario: Scenario) -> Dataset:
    """Populations of the evolving diabatic state labelled by initial_m.

    The trajectory is the exact solution whose label tends to |initial_m> at
    the window edge (the ideal-sweep curve, truncated for plotting), so the
    t = 0 row carries the closed-form crossing populations exactly.
    """
    spin = Spin(scenario.two_j)
    drive = scenario.drive()
    window = scenario.window(scenario.matched_drive())
    grid = _time_grid(window.tau_c, scenario.samples)
    pops = np.array([
        diabatic_state(drive, spin, scenario.initial_m, -window.tau_c, t).populations
        for t in grid
    ])
    columns = {"t_eta1": grid * drive.eta1}
    for rank, m in enumerate(spin.m_values()):
        columns[f"p_m{_m_label(m)}"] = pops[:, rank]
    return Dataset(kind="populations", columns=columns, comment=_scenario_comment(scenario))


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_truncation_scan(scenario: Scenario, jobs: int = 1) -> Dataset:
    """Cutoff error of both protocols over a (delta0, gamma/eta1) grid.

    Two-level closed forms: the tangent probability uses the deficit angle
    delta(gamma) from the geometric relation, the counter-diabatic one uses
    delta0 itself; bound_* are the corresponding error envelopes sin^2.
    The delta0 = 0 rows are the exact untruncated limit (P = 1).
    """
    delta0_grid = np.linspace(0.0, scenario.scan_delta0_max, scenario.scan_points)

    def one_gamma(ratio: float):
        drive = scenario.matched_drive(ratio)
        cd = CDDrive(drive)
        rows = np.empty((len(delta0_grid), 6))
        for i, delta0 in enumerate(delta0_grid):
            if delta0 == 0.0:
                rows[i] = (delta0, ratio, 1.0, 1.0, 0.0, 0.0)
                continue
            window = window_from_delta0(drive, delta0)
            phase = theta(drive, -window.tau_c, window.tau_c)
            p_tan = two_level_transition_probability(phase, window.delta)
            phase_cd = cd.theta_cd(-window.tau_c, window.tau_c)
            p_cd = cd_two_level_transition_probability(phase_cd, delta0)
            rows[i] = (
                delta0, ratio, p_tan, p_cd,
                math.sin(window.delta) ** 2, math.sin(delta0) ** 2,
            )
        return rows

    blocks = _map_ordered(one_gamma, list(scenario.scan_gammas), jobs)
    table = np.vstack(blocks)
    names = ("delta0", "gamma_over_eta1", "P_tangent", "P_cd", "bound_tangent", "bound_cd")
    return Dataset(
        kind="truncation_scan",
        columns={name: table[:, i] for i, name in enumerate(names)},
        comment=_scenario_comment(scenario),
    )


# ---------------------------------------------------------------------------
# validation suite

@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "measured", float(self.measured))
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.threshold)


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "measured": c.measured,
                    "threshold": c.threshold,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }

    def summary_lines(self):
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            yield f"{status} {c.name}: measured={c.measured:.3e} threshold={c.threshold:.3e}"


def _validate_one(scenario: Scenario, tol: float) -> list[CheckResult]:
    drive = scenario.drive()
    window = scenario.window(scenario.matched_drive())
    name = scenario.name
    checks = [CheckResult(f"{name}:matching_condition", drive.matching_defect, MATCHING_RTOL)]

    closed = theta(drive, -window.tau_c, window.tau_c)
    quadrature, _ = quad(
        lambda t: drive.eta2 / math.cos(drive.gamma * t),
        -window.tau_c, window.tau_c, epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    checks.append(CheckResult(
        f"{name}:phase_closed_form",
        abs(closed - quadrature) / abs(quadrature),
        PHASE_AGREEMENT_RTOL,
    ))

    phase = closed
    p_closed = two_level_transition_probability(phase, window.delta)
    p_matrix = truncated_transition_matrix(drive, Spin(1), window).probabilities[1, 0]
    checks.append(CheckResult(
        f"{name}:two_level_closed_form", abs(p_closed - p_matrix), CLOSED_FORM_ATOL
    ))

    cd = CDDrive(drive)
    for two_j in VALIDATE_TWO_J:
        spin = Spin(two_j)
        label = f"{two_j}/2" if two_j % 2 else f"{two_j // 2}"
        u_analytic = propagator(drive, spin, -window.tau_c, window.tau_c)
        result = integrate_propagator(
            DriveFunction.from_tangent(drive), spin, -window.tau_c, window.tau_c, tol
        )
        checks.append(CheckResult(
            f"{name}:tangent_oracle_fidelity_j{label}",
            1.0 - fidelity(u_analytic, result.final_propagator),
            ORACLE_FIDELITY_DEFICIT,
        ))

        u_cd = cd_propagator(cd, spin, -window.tau_c, window.tau_c)
        result_cd = integrate_propagator(
            DriveFunction.from_counterdiabatic(cd), spin, -window.tau_c, window.tau_c, tol
        )
        checks.append(CheckResult(
            f"{name}:cd_oracle_fidelity_j{label}",
            1.0 - fidelity(u_cd, result_cd.final_propagator),
            ORACLE_FIDELITY_DEFICIT,
        ))

        transitions = truncated_transition_matrix(drive, spin, window)
        checks.append(CheckResult(
            f"{name}:transition_product_vs_propagator_j{label}",
            float(np.max(np.abs(transitions.probabilities - np.abs(u_analytic) ** 2))),
            CLOSED_FORM_ATOL,
        ))
        p = transitions.probabilities
        stochastic_defect = max(
            float(np.abs(p.sum(axis=0) - 1.0).max()),
            float(np.abs(p.sum(axis=1) - 1.0).max()),
        )
        checks.append(CheckResult(
            f"{name}:double_stochasticity_j{label}", stochastic_defect, PROBABILITY_ATOL
        ))
    return checks


def run_validate(scenarios, jobs: int = 1, tol: float | None = None) -> ValidationReport:
    """Run the analytic-vs-oracle cross checks for each scenario.

    An empty scenario list yields an empty, passing report.  Thresholds are
    fixed by the module contracts; `tol` overrides the integrator tolerance.
    """
    def one(scenario: Scenario) -> list[CheckResult]:
        return _validate_one(scenario, tol if tol is not None else scenario.tol)

    blocks = _map_ordered(one, list(scenarios), jobs)
    return ValidationReport(checks=tuple(c for block in blocks for c in block))


# ---------------------------------------------------------------------------
# serialization

def format_value(value: float) -> str:
    """Fixed 12-significant-digit scientific formatting used in every CSV."""
    return f"{value:.11e}"


def write_dataset(dataset: Dataset, out_dir) -> Path:
    """Write kind.csv (comment line, header row, 12-digit rows) and its plot script."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{dataset.kind}.csv"
    names = list(dataset.columns)
    table = np.column_stack([dataset.columns[name] for name in names])
    lines = [f"# {dataset.comment}", ",".join(names)]
    lines.extend(",".join(format_value(v) for v in row) for row in table)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    write_plot_script(dataset.kind, out_dir)
    return path


def write_report(report: ValidationReport, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "validation_report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


_PLOT_COMMON = '''#!/usr/bin/env python3
"""Standalone plot script generated next to {kind}.csv; run it from this directory."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

here = Path(__file__).resolve().parent
with open(here / "{kind}.csv", newline="") as fh:
    rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
header, data = rows[0], np.array(rows[1:], dtype=float)
cols = {{name: data[:, i] for i, name in enumerate(header)}}
'''

_PLOT_BODIES = {
    "fields": '''
for ratio in np.unique(cols["gamma_over_eta1"]):
    mask = cols["gamma_over_eta1"] == ratio
    style = "--" if ratio == min(np.unique(cols["gamma_over_eta1"])) else "-"
    plt.plot(cols["t_eta1"][mask], cols["omega_z_over_eta1"][mask], style,
             label=f"gamma/eta1 = {ratio:g}")
plt.xlabel("t * eta1")
plt.ylabel("Omega_z / eta1")
plt.legend()
plt.tight_layout()
plt.savefig(here / "fields.png", dpi=150)
''',
    "levels": '''
styles = {"E_diabatic": "-", "E_adiabatic_reference": "--", "E_instantaneous": ":"}
for name in header[1:]:
    prefix = name.rsplit("_m", 1)[0]
    plt.plot(cols["t_eta1"], cols[name], styles.get(prefix, "-"), label=name)
plt.xlabel("t * eta1")
plt.ylabel("E / eta1")
plt.legend(fontsize=7)
plt.tight_layout()
plt.savefig(here / "levels.png", dpi=150)
''',
    "populations": '''
for name in header[1:]:
    plt.plot(cols["t_eta1"], cols[name], label=name)
plt.xlabel("t * eta1")
plt.ylabel("population")
plt.legend()
plt.tight_layout()
plt.savefig(here / "populations.png", dpi=150)
''',
    "truncation_scan": '''
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
for ratio in np.unique(cols["gamma_over_eta1"]):
    mask = cols["gamma_over_eta1"] == ratio
    ax1.semilogy(cols["delta0"][mask], 1 - cols["P_tangent"][mask],
                 label=f"gamma/eta1 = {ratio:g}")
    ax2.semilogy(cols["delta0"][mask], 1 - cols["P_cd"][mask],
                 label=f"gamma/eta1 = {ratio:g}")
ax1.set_title("tangent protocol")
ax2.set_title("counter-diabatic protocol")
for ax in (ax1, ax2):
    ax.set_xlabel("delta0 (rad)")
    ax.legend(fontsize=7)
ax1.set_ylabel("1 - P")
fig.tight_layout()
fig.savefig(here / "truncation_scan.png", dpi=150)
''',
}


def write_plot_script(kind: str, out_dir) -> Path:
    path = Path(out_dir) / f"plot_{kind}.py"
    script = _PLOT_COMMON.format(kind=kind) + _PLOT_BODIES[kind]
    path.write_text(script, encoding="utf-8")
    return path


_RUNNERS = {
    "fields": run_fields,
    "levels": run_levels,
    "populations": run_populations,
}


def run_kind(scenario: Scenario, kind: str, jobs: int = 1,
             tol: float | None = None) -> Dataset:
    """Dispatch one dataset kind, applying a CLI tolerance override if given."""
    if kind not in OUTPUT_KINDS or kind == "validate":
        raise ConfigError(f"unknown dataset kind {kind!r}")
    if kind not in scenario.outputs:
        raise ConfigError(
            f"scenario {scenario.name!r} does not list output {kind!r} "
            f"(outputs: {', '.join(scenario.outputs)})"
        )
    if tol is not None:
        scenario = replace(scenario, tol=tol)
    if kind == "truncation_scan":
        return run_truncation_scan(scenario, jobs=jobs)
    return _RUNNERS[kind](scenario)
