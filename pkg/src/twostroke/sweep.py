"""Parameter-grid sweeps, invariant verification, and tabular emission.

A sweep solves the limit cycle of a family of engines obtained by
varying one or two scalar parameters of a base spec on a rectangular
grid.  Grid points are independent, so they may be solved by a worker
pool; output rows are always placed in row-major axis order, making the
emitted bytes independent of the execution schedule.  Per-point solver
failures are recorded in the row's status column and never abort the
rest of the grid.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .engine import (
    EngineSpec,
    PartialSwapCoupling,
    XYZCoupling,
    _require_keys,
    _number,
    qubit_site,
    check_strict_energy_conservation,
    with_durations,
)
from .errors import SpecError, TwoStrokeError
from .simulate import (
    classify_regime,
    find_limit_cycle,
    ground_start,
    heat_stroke,
    otto_check,
    run_cycles,
    work_stroke,
)
from .serialize import dumps_json, rows_to_csv, write_text

__all__ = [
    "SWEEP_AXES",
    "SweepAxis",
    "SweepPlan",
    "SweepResult",
    "apply_axis_value",
    "plan_from_config",
    "run_sweep",
    "sweep_to_csv",
    "sweep_to_json",
    "verify",
    "VERIFY_COLUMNS",
    "verify_to_csv",
    "verify_to_json",
    "emit",
]

SWEEP_AXES = ("tau_q", "tau_w", "lambda", "g", "J_z", "N", "omega_ratio")


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: ``points`` values evenly spaced on [min, max]."""

    name: str
    min: float
    max: float
    points: int

    def __post_init__(self) -> None:
        if self.name not in SWEEP_AXES:
            raise SpecError(
                f"unknown sweep axis {self.name!r}; supported: {', '.join(SWEEP_AXES)}"
            )
        if self.points < 1:
            raise SpecError("sweep axis needs at least one point")
        if self.points > 1 and not self.max > self.min:
            raise SpecError(f"axis {self.name}: max must exceed min")
        if self.name == "lambda" and not (0.0 < self.min and self.max <= 1.0):
            raise SpecError("lambda axis values must lie in (0, 1]")

    def values(self) -> tuple[float, ...]:
        if self.points == 1:
            return (float(self.min),)
        return tuple(float(v) for v in np.linspace(self.min, self.max, self.points))


@dataclass(frozen=True)
class SweepPlan:
    base: EngineSpec
    axes: tuple[SweepAxis, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.axes) <= 2:
            raise SpecError("a sweep takes one or two axes")
        if len({a.name for a in self.axes}) != len(self.axes):
            raise SpecError("sweep axes must be distinct")
        for axis in self.axes:
            # fail fast on axes the base spec cannot support
            apply_axis_value(self.base, axis.name, axis.values()[0])

    def grid(self) -> list[tuple[float, ...]]:
        """Row-major coordinates in axis declaration order."""

        return list(product(*(a.values() for a in self.axes)))


def _uniform_bath_g(spec: EngineSpec) -> float:
    if spec.cold.is_explicit or spec.hot.is_explicit:
        raise SpecError("this axis requires qubit-form baths")
    if spec.cold.g != spec.hot.g:
        raise SpecError("this axis requires equal cold and hot collision strengths")
    return spec.cold.g


def _rebuild_qubit_chain(spec: EngineSpec, n_sites: int, omega_first: float, omega_last: float) -> EngineSpec:
    if not spec.all_qubits:
        raise SpecError("chain rebuilds are defined for qubit chains only")
    if isinstance(spec.coupling, PartialSwapCoupling) and isinstance(spec.coupling.g, tuple):
        raise SpecError("chain rebuilds require a uniform bond strength")
    if not isinstance(spec.coupling, (PartialSwapCoupling, XYZCoupling)):
        raise SpecError("chain rebuilds require a uniform coupling family")
    omegas = np.linspace(omega_first, omega_last, n_sites)
    sites = tuple(qubit_site(float(w), i) for i, w in enumerate(omegas, start=1))
    return dataclasses.replace(spec, sites=sites)


def apply_axis_value(spec: EngineSpec, name: str, value: float) -> EngineSpec:
    """Rebuild ``spec`` with one swept parameter set to ``value``.

    Axes: ``tau_q``/``tau_w`` set a stroke duration; ``lambda`` sets the
    per-collision thermalization strength by solving
    lambda = (1 - cos(2 g tau_q))/2 for tau_q on the principal branch;
    ``g`` sets both bath collision strengths; ``J_z`` sets the ZZ
    component of an anisotropic coupling; ``N`` rebuilds the chain with
    that many sites, interpolating frequencies linearly between the
    first and last site; ``omega_ratio`` rescales the first frequency to
    ratio * omega_N, re-interpolating the interior.
    """

    if name == "tau_q":
        return with_durations(spec, tau_q=float(value))
    if name == "tau_w":
        return with_durations(spec, tau_w=float(value))
    if name == "lambda":
        if not 0.0 < value <= 1.0:
            raise SpecError(f"lambda must lie in (0, 1], got {value}")
        g = _uniform_bath_g(spec)
        if g <= 0.0:
            raise SpecError("lambda axis requires a positive collision strength")
        tau_q = math.acos(1.0 - 2.0 * float(value)) / (2.0 * g)
        return with_durations(spec, tau_q=tau_q)
    if name == "g":
        if spec.cold.is_explicit or spec.hot.is_explicit:
            raise SpecError("g axis requires qubit-form baths")
        return dataclasses.replace(
            spec,
            cold=dataclasses.replace(spec.cold, g=float(value)),
            hot=dataclasses.replace(spec.hot, g=float(value)),
        )
    if name == "J_z":
        if not isinstance(spec.coupling, XYZCoupling):
            raise SpecError("J_z axis requires an anisotropic (XYZ) coupling")
        return dataclasses.replace(
            spec, coupling=dataclasses.replace(spec.coupling, Jz=float(value))
        )
    if name == "N":
        n = round(float(value))
        if abs(value - n) > 1e-9 or n < 2:
            raise SpecError(f"N axis values must be integers >= 2, got {value}")
        return _rebuild_qubit_chain(
            spec, n, spec.site_omega(1), spec.site_omega(spec.n_sites)
        )
    if name == "omega_ratio":
        omega_last = spec.site_omega(spec.n_sites)
        return _rebuild_qubit_chain(
            spec, spec.n_sites, float(value) * omega_last, omega_last
        )
    raise SpecError(f"unknown sweep axis {name!r}")


# -- execution ----------------------------------------------------------------

SWEEP_VALUE_COLUMNS = (
    "status",
    "Q_C",
    "Q_H",
    "W",
    "power",
    "Sigma",
    "efficiency",
    "regime",
    "cycles_to_converge",
    "residual",
)


@dataclass(frozen=True)
class SweepResult:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


def _solve_point(task) -> tuple[int, tuple]:
    index, spec, axis_names, coords, method, tol, max_cycles = task
    try:
        point = spec
        for name, value in zip(axis_names, coords):
            point = apply_axis_value(point, name, value)
        report = find_limit_cycle(point, method=method, tol=tol, max_cycles=max_cycles)
        row = coords + (
            "ok",
            report.Q_C,
            report.Q_H,
            report.W,
            report.power,
            report.Sigma,
            report.efficiency,
            classify_regime(report),
            report.cycles_to_converge,
            report.residual,
        )
    except Exception as exc:  # recorded per point; the sweep always completes
        row = coords + (f"error:{type(exc).__name__}",) + (None,) * (
            len(SWEEP_VALUE_COLUMNS) - 1
        )
    return index, row


def run_sweep(
    plan: SweepPlan,
    *,
    method: str = "iterate",
    tol: float = 1e-12,
    max_cycles: int = 100_000,
    jobs: int = 1,
) -> SweepResult:
    """Solve the limit cycle at every grid point of ``plan``.

    ``jobs`` > 1 distributes points over a process pool; the output is
    byte-identical to the serial run because rows are placed by grid
    index, not completion order.
    """

    axis_names = tuple(a.name for a in plan.axes)
    tasks = [
        (i, plan.base, axis_names, coords, method, tol, max_cycles)
        for i, coords in enumerate(plan.grid())
    ]
    rows: list[tuple | None] = [None] * len(tasks)
    if jobs > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for index, row in pool.map(_solve_point, tasks, chunksize=chunk):
                rows[index] = row
    else:
        for task in tasks:
            index, row = _solve_point(task)
            rows[index] = row
    return SweepResult(
        columns=axis_names + SWEEP_VALUE_COLUMNS, rows=tuple(rows)
    )


def sweep_to_csv(result: SweepResult) -> str:
    return rows_to_csv(result.columns, [list(r) for r in result.rows])


def sweep_to_json(result: SweepResult) -> str:
    payload = [dict(zip(result.columns, row)) for row in result.rows]
    return dumps_json(payload)


# -- config ingestion ---------------------------------------------------------

_AXIS_KEYS = {"name", "min", "max", "points"}


def plan_from_config(doc: dict, base: EngineSpec) -> SweepPlan:
    """Build a SweepPlan from a config document's ``sweep`` block."""

    block = doc.get("sweep")
    if not isinstance(block, dict):
        raise SpecError("sweep requires a config with a 'sweep' object")
    _require_keys(block, {"axes"}, {"axes"}, "sweep")
    axes_doc = block["axes"]
    if not isinstance(axes_doc, list) or not axes_doc:
        raise SpecError("sweep.axes must be a non-empty array")
    axes = []
    for i, axis_doc in enumerate(axes_doc):
        if not isinstance(axis_doc, dict):
            raise SpecError("each sweep axis must be an object")
        where = f"sweep.axes[{i}]"
        _require_keys(axis_doc, _AXIS_KEYS, _AXIS_KEYS, where)
        name = axis_doc["name"]
        if not isinstance(name, str):
            raise SpecError(f"{where}: name must be a string")
        points = axis_doc["points"]
        if isinstance(points, bool) or not isinstance(points, int):
            raise SpecError(f"{where}: points must be an integer")
        axes.append(
            SweepAxis(
                name=name,
                min=_number(axis_doc, "min", where),
                max=_number(axis_doc, "max", where),
                points=points,
            )
        )
    return SweepPlan(base=base, axes=tuple(axes))


# -- invariant verification ---------------------------------------------------

VERIFY_COLUMNS = ("check", "status", "residual", "tolerance", "detail")


def _row(check, status, residual, tolerance, detail) -> dict:
    return {
        "check": check,
        "status": status,
        "residual": residual,
        "tolerance": tolerance,
        "detail": detail,
    }


def verify(
    spec: EngineSpec,
    *,
    cycles: int = 25,
    method: str = "iterate",
    tol: float = 1e-12,
    max_cycles: int = 100_000,
) -> list[dict]:
    """Run the full invariant suite against one engine spec.

    Returns machine-readable rows; check failures are data, not errors.
    """

    rows: list[dict] = []
    norm_c, norm_h = check_strict_energy_conservation(spec)
    sec_resonant = max(norm_c, norm_h) <= 1e-12

    # transient run from the ground state, tracking stroke-level bookkeeping
    rho = ground_start(spec)
    first_law = 0.0
    min_sigma = math.inf
    onoff = 0.0
    double_entry = 0.0
    energy_split = 0.0
    for _ in range(cycles):
        h = heat_stroke(rho, spec)
        w = work_stroke(h.state_after, spec)
        for out in (h, w):
            double_entry = max(
                double_entry,
                abs(out.W_onoff_C + out.dV_C),
                abs(out.W_onoff_H + out.dV_H),
            )
        onoff = max(onoff, abs(h.W_onoff_C), abs(h.W_onoff_H))
        energy_split = max(
            energy_split,
            abs(h.Q_C_ancilla - h.Q_C) if sec_resonant else 0.0,
            abs(h.Q_H_ancilla - h.Q_H) if sec_resonant else 0.0,
        )
        rho = w.state_after
    ledger = run_cycles(ground_start(spec), spec, cycles)
    for rec in ledger.rows:
        first_law = max(first_law, abs(rec.dE - rec.Q_C - rec.Q_H + rec.W))
        min_sigma = min(min_sigma, rec.Sigma)

    rows.append(
        _row(
            "strict-energy-conservation",
            "pass" if sec_resonant else "fail",
            max(norm_c, norm_h),
            1e-12,
            f"boundary commutator norms ({norm_c:.3e}, {norm_h:.3e}); "
            f"max |on/off work| over {cycles} cycles = {onoff:.3e}",
        )
    )
    rows.append(
        _row(
            "onoff-work-accounting",
            "pass" if double_entry <= 1e-10 else "fail",
            double_entry,
            1e-10,
            "on/off work equals the interaction-energy release on every stroke",
        )
    )
    if sec_resonant:
        rows.append(
            _row(
                "heat-double-entry",
                "pass" if max(onoff, energy_split) <= 1e-10 else "fail",
                max(onoff, energy_split),
                1e-10,
                "resonant collisions: ancilla-side heat equals system-side heat",
            )
        )
    rows.append(
        _row(
            "first-law-transient",
            "pass" if first_law <= 1e-10 else "fail",
            first_law,
            1e-10,
            f"max |dE - Q_C - Q_H + W| over {cycles} cycles",
        )
    )
    rows.append(
        _row(
            "second-law-transient",
            "pass" if min_sigma >= -1e-12 else "fail",
            min_sigma,
            -1e-12,
            f"min entropy production over {cycles} cycles",
        )
    )

    try:
        report = find_limit_cycle(spec, method=method, tol=tol, max_cycles=max_cycles)
    except TwoStrokeError as exc:
        rows.append(_row("limit-cycle", "fail", None, None, f"{type(exc).__name__}: {exc}"))
        return rows
    rows.append(
        _row(
            "limit-cycle",
            "pass",
            report.residual,
            tol,
            f"converged in {report.cycles_to_converge} cycles; "
            f"regime - {classify_regime(report)}",
        )
    )
    rows.append(
        _row(
            "first-law-steady",
            "pass" if abs(report.W - report.Q_C - report.Q_H) <= 1e-10 else "fail",
            abs(report.W - report.Q_C - report.Q_H),
            1e-10,
            "steady cycle returns to its starting energy",
        )
    )
    rows.append(
        _row(
            "second-law-steady",
            "pass" if report.Sigma >= -1e-12 else "fail",
            report.Sigma,
            -1e-12,
            "steady-cycle entropy production is non-negative",
        )
    )
    if spec.n_sites > 2:
        drift = max((abs(d) for d in report.internal_drift), default=0.0)
        rows.append(
            _row(
                "internal-site-freeze",
                "pass" if drift <= 1e-9 else "fail",
                drift,
                1e-9,
                "internal site energies are stationary over the steady cycle",
            )
        )
    check = otto_check(spec, report)
    if not check.applicable:
        rows.append(_row("otto-efficiency", "not-applicable", None, None, check.reason))
    else:
        ratio_ok = check.heat_ratio_residual <= 1e-9
        eff_ok = (
            check.efficiency_residual is None or check.efficiency_residual <= 1e-8
        )
        sign_ok = check.sign_law_ok is not False
        rows.append(
            _row(
                "otto-efficiency",
                "pass" if (ratio_ok and eff_ok and sign_ok) else "fail",
                check.heat_ratio_residual,
                1e-9,
                f"heat ratio pinned to the frequency ratio; predicted efficiency "
                f"{check.predicted_efficiency:.6f}",
            )
        )
    return rows


def verify_to_csv(rows: list[dict]) -> str:
    return rows_to_csv(VERIFY_COLUMNS, [[r[c] for c in VERIFY_COLUMNS] for r in rows])


def verify_to_json(rows: list[dict]) -> str:
    return dumps_json(rows)


def emit(text: str, path: str | None) -> None:
    """Write tabular output to ``path``, or stdout when no path is given."""

    if path is None:
        print(text, end="")
    else:
        write_text(path, text)
