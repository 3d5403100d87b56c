"""Stroboscopic two-stroke dynamics: collisions, work strokes, limit cycles.

One full cycle is a heat stroke (fresh thermal ancillas couple to the chain
ends, the collision space evolves unitarily, the ancillas are traced out)
followed by a work stroke (the isolated chain evolves under its local terms
plus internal bonds).  Heat is booked twice per stroke -- from the ancilla
energy change and from the boundary-site energy change -- and the mismatch
between the two is the energy trapped by switching the couplings, which is
recorded rather than assumed to vanish.

Sign conventions: heat is positive flowing into the chain, work is positive
when extracted.  Per-cycle entropy production uses the ancilla-side heats,
for which positivity is guaranteed; the ledger's heat columns are the
boundary-site values, for which the per-cycle energy balance
dE = Q_C + Q_H - W is an identity.  The two agree whenever the bath
couplings commute with the bare boundary-plus-ancilla Hamiltonians.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass
from functools import lru_cache

from .engine import (
    EngineSpec,
    bath_states,
    build_heat_hamiltonian,
    build_work_hamiltonian,
    resolve_bath,
)
from .errors import (
    ConsistencyError,
    ConvergenceError,
    DegenerateFixedPointError,
    LayoutError,
    ParameterError,
)
from .hilbert import (
    DensityMatrix,
    HermitianOperator,
    _partial_trace_matrix,
    embed_operator,
    tensor_compose,
    thermal_state,
    von_neumann_entropy,
)
from .serialize import dumps_json, read_csv_rows, rows_to_csv

__all__ = [
    "REGIME_TOL",
    "StrokeOutcome",
    "CycleRecord",
    "CycleLedger",
    "LimitCycleReport",
    "OttoCheck",
    "heat_stroke",
    "work_stroke",
    "run_cycles",
    "find_limit_cycle",
    "limit_cycle_thermo",
    "classify_regime",
    "otto_check",
    "thermal_start",
    "ground_start",
    "LEDGER_COLUMNS",
    "ledger_to_csv",
    "ledger_to_json",
    "ledger_rows_from_csv",
    "ledger_rows_from_json",
    "REPORT_COLUMNS",
    "report_to_csv",
    "report_to_json",
    "report_scalars_from_json",
]

# Net currents with magnitude at or below this are treated as zero when
# naming the operating regime or deciding whether an efficiency is defined.
REGIME_TOL = 1e-12
# Two channel eigenvalues this close to 1 mean no unique limit cycle.
DEGENERACY_TOL = 1e-9
CPTP_TOL = 1e-10


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def _unitary(h: HermitianOperator, tau: float) -> np.ndarray:
    w, v = h.eigensystem
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


def _re_trace(a: np.ndarray, b: np.ndarray) -> float:
    """Re tr(a @ b) without forming the product matrix."""
    return float(np.einsum("ij,ji->", a, b).real)


def _trace_dist(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(a - b)).sum() / 2.0)


class _Compiled:
    """Per-spec operator cache: Hamiltonians, unitaries, Kraus operators."""

    def __init__(self, spec: EngineSpec):
        self.spec = spec
        self.chain = spec.chain_layout()
        self.coll = spec.collision_layout()
        self.h_work = build_work_hamiltonian(spec)
        self.h_heat = build_heat_hamiltonian(spec)
        self.u_work = _unitary(self.h_work, spec.tau_w)
        self.u_heat = _unitary(self.h_heat, spec.tau_q)
        self.rho_c, self.rho_h = bath_states(spec)
        self.h_sites = tuple(
            embed_operator(s.local_hamiltonian, self.chain).matrix for s in spec.sites
        )
        self.h_local = sum(self.h_sites)
        self.v_internal = self.h_work.matrix - self.h_local
        self.h_anc_c = resolve_bath(spec, "cold")[0].matrix
        self.h_anc_h = resolve_bath(spec, "hot")[0].matrix
        self.v_c_emb = embed_operator(resolve_bath(spec, "cold")[1], self.coll).matrix
        self.v_h_emb = embed_operator(resolve_bath(spec, "hot")[1], self.coll).matrix
        self.kraus = self._build_kraus()
        check = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        dev = np.abs(check - np.eye(self.chain.total_dim)).max()
        if dev > CPTP_TOL:
            raise ConsistencyError(
                f"heat-stroke Kraus set is not trace preserving (deviation {dev:.3e})"
            )

    def _build_kraus(self) -> np.ndarray:
        dc = self.rho_c.layout.total_dim
        dh = self.rho_h.layout.total_dim
        d = self.chain.total_dim
        pc, vc = np.linalg.eigh(self.rho_c.matrix)
        ph, vh = np.linalg.eigh(self.rho_h.matrix)
        # Rotate the collision unitary into the ancilla eigenbases so the
        # initial ancilla states are diagonal with weights pc, ph.
        basis = np.kron(np.kron(vc, np.eye(d)), vh)
        u = basis.conj().T @ self.u_heat @ basis
        u6 = u.reshape(dc, d, dh, dc, d, dh)
        ops = []
        for c in range(dc):
            for h in range(dh):
                weight = np.sqrt(max(pc[c], 0.0) * max(ph[h], 0.0))
                for c2 in range(dc):
                    for h2 in range(dh):
                        ops.append(weight * u6[c2, :, h2, c, :, h])
        return np.stack(ops)

    def apply_heat(self, rho: np.ndarray) -> np.ndarray:
        tmp = self.kraus @ rho
        return np.einsum("kij,kmj->im", tmp, self.kraus.conj())

    def apply_work(self, rho: np.ndarray) -> np.ndarray:
        return self.u_work @ rho @ self.u_work.conj().T

    def apply_cycle(self, rho: np.ndarray) -> np.ndarray:
        return _sym(self.apply_work(self.apply_heat(rho)))

    def cycle_superoperator(self) -> np.ndarray:
        """Matrix of the full cycle channel in row-major vec convention."""
        d = self.chain.total_dim
        phi = np.zeros((d * d, d * d), dtype=complex)
        for k in self.kraus:
            phi += np.kron(k, k.conj())
        return np.kron(self.u_work, self.u_work.conj()) @ phi


@lru_cache(maxsize=64)
def _compiled(spec: EngineSpec) -> _Compiled:
    return _Compiled(spec)


@dataclass(frozen=True)
class StrokeOutcome:
    """Post-stroke chain state plus the energy bookkeeping of one stroke.

    Heat strokes fill the heat fields and leave W at zero; work strokes fill
    W and leave the heats at zero.  Q_C/Q_H are boundary-site values,
    Q_*_ancilla the ancilla-side ones; W_onoff_* = Q_sys - Q_anc is the
    switching work per bath and dV_* the interaction-energy change it must
    mirror (W_onoff = -dV).  For work strokes dV is the internal-coupling
    energy change, an independent recomputation of W.
    """

    state_after: DensityMatrix
    Q_C: float = 0.0
    Q_H: float = 0.0
    W: float = 0.0
    W_onoff_C: float = 0.0
    W_onoff_H: float = 0.0
    dV: float = 0.0
    Q_C_ancilla: float = 0.0
    Q_H_ancilla: float = 0.0
    dV_C: float = 0.0
    dV_H: float = 0.0


def heat_stroke(rho: DensityMatrix, spec: EngineSpec) -> StrokeOutcome:
    """Couple fresh thermal ancillas to the chain ends for tau_q."""
    cp = _compiled(spec)
    if rho.layout != cp.chain:
        raise LayoutError(
            f"state layout {rho.layout.labels} does not match chain {cp.chain.labels}"
        )
    comp0 = np.kron(np.kron(cp.rho_c.matrix, rho.matrix), cp.rho_h.matrix)
    comp1 = cp.u_heat @ comp0 @ cp.u_heat.conj().T
    comp1 = _sym(comp1)

    dims = cp.coll.dims
    k = len(dims)
    chain_axes = list(range(1, k - 1))
    rho_s1 = _sym(_partial_trace_matrix(comp1, dims, chain_axes))
    rho_c1 = _partial_trace_matrix(comp1, dims, [0])
    rho_h1 = _partial_trace_matrix(comp1, dims, [k - 1])

    q_c_anc = -(_re_trace(cp.h_anc_c, rho_c1) - _re_trace(cp.h_anc_c, cp.rho_c.matrix))
    q_h_anc = -(_re_trace(cp.h_anc_h, rho_h1) - _re_trace(cp.h_anc_h, cp.rho_h.matrix))
    q_c_sys = _re_trace(cp.h_sites[0], rho_s1 - rho.matrix)
    q_h_sys = _re_trace(cp.h_sites[-1], rho_s1 - rho.matrix)
    dv_c = _re_trace(cp.v_c_emb, comp1 - comp0)
    dv_h = _re_trace(cp.v_h_emb, comp1 - comp0)

    return StrokeOutcome(
        state_after=DensityMatrix(cp.chain, rho_s1),
        Q_C=q_c_sys,
        Q_H=q_h_sys,
        W_onoff_C=q_c_sys - q_c_anc,
        W_onoff_H=q_h_sys - q_h_anc,
        dV=dv_c + dv_h,
        Q_C_ancilla=q_c_anc,
        Q_H_ancilla=q_h_anc,
        dV_C=dv_c,
        dV_H=dv_h,
    )


def work_stroke(rho: DensityMatrix, spec: EngineSpec) -> StrokeOutcome:
    """Evolve the isolated chain under local terms plus internal bonds."""
    cp = _compiled(spec)
    if rho.layout != cp.chain:
        raise LayoutError(
            f"state layout {rho.layout.labels} does not match chain {cp.chain.labels}"
        )
    out = _sym(cp.apply_work(rho.matrix))
    w_local = -_re_trace(cp.h_local, out - rho.matrix)
    w_internal = _re_trace(cp.v_internal, out - rho.matrix)
    return StrokeOutcome(
        state_after=DensityMatrix(cp.chain, out),
        W=w_local,
        dV=w_internal,
    )


def thermal_start(spec: EngineSpec, temperature: float | None = None) -> DensityMatrix:
    """Product of per-site thermal states (default: at the cold temperature)."""
    T = spec.cold.temperature if temperature is None else temperature
    return tensor_compose([thermal_state(s.local_hamiltonian, T) for s in spec.sites])


def ground_start(spec: EngineSpec) -> DensityMatrix:
    """Product of per-site ground-state projectors."""
    parts = []
    for site in spec.sites:
        w, v = site.local_hamiltonian.eigensystem
        vec = v[:, 0]
        parts.append(DensityMatrix(site.local_hamiltonian.layout, np.outer(vec, vec.conj())))
    return tensor_compose(parts)


@dataclass(frozen=True)
class CycleRecord:
    """Per-cycle thermodynamic bookkeeping (cycle index n counts from 0)."""

    n: int
    Q_C: float
    Q_H: float
    W: float
    dE: float
    Sigma: float
    S: float
    W_onoff_C: float = 0.0
    W_onoff_H: float = 0.0
    rho: DensityMatrix | None = None
    rho_tilde: DensityMatrix | None = None


@dataclass(frozen=True)
class CycleLedger:
    """Cycle-by-cycle record of a finite run, plus the final chain state."""

    spec: EngineSpec
    rows: tuple[CycleRecord, ...]
    final_state: DensityMatrix


def run_cycles(
    rho0: DensityMatrix,
    spec: EngineSpec,
    n_cycles: int,
    keep_snapshots: bool = False,
) -> CycleLedger:
    """Run ``n_cycles`` full cycles from ``rho0`` with full bookkeeping."""
    if n_cycles < 1:
        raise ParameterError(f"n_cycles must be >= 1, got {n_cycles}")
    cp = _compiled(spec)
    t_c = spec.cold.temperature
    t_h = spec.hot.temperature
    rows = []
    rho = rho0
    entropy = von_neumann_entropy(rho)
    for n in range(n_cycles):
        ho = heat_stroke(rho, spec)
        wo = work_stroke(ho.state_after, spec)
        nxt = wo.state_after
        entropy_next = von_neumann_entropy(nxt)
        de = _re_trace(cp.h_local, nxt.matrix - rho.matrix)
        sigma = entropy_next - entropy - ho.Q_C_ancilla / t_c - ho.Q_H_ancilla / t_h
        rows.append(
            CycleRecord(
                n=n,
                Q_C=ho.Q_C,
                Q_H=ho.Q_H,
                W=wo.W,
                dE=de,
                Sigma=sigma,
                S=entropy,
                W_onoff_C=ho.W_onoff_C,
                W_onoff_H=ho.W_onoff_H,
                rho=rho if keep_snapshots else None,
                rho_tilde=ho.state_after if keep_snapshots else None,
            )
        )
        rho = nxt
        entropy = entropy_next
    return CycleLedger(spec=spec, rows=tuple(rows), final_state=rho)


@dataclass(frozen=True)
class LimitCycleReport:
    """Stationary-cycle state pair and its per-cycle thermodynamics."""

    rho_star: DensityMatrix
    rho_tilde_star: DensityMatrix
    Q_C: float
    Q_H: float
    W: float
    Sigma: float
    efficiency: float | None
    power: float
    internal_drift: tuple[float, ...]
    cycles_to_converge: int
    residual: float
    subdominant_eigenvalue: float | None = None


def limit_cycle_thermo(
    rho_star: DensityMatrix,
    spec: EngineSpec,
    cycles_to_converge: int = 0,
    residual: float = 0.0,
    subdominant_eigenvalue: float | None = None,
) -> LimitCycleReport:
    """Thermodynamics of the cycle anchored at the stationary state."""
    cp = _compiled(spec)
    ho = heat_stroke(rho_star, spec)
    wo = work_stroke(ho.state_after, spec)
    sigma = -ho.Q_C_ancilla / spec.cold.temperature - ho.Q_H_ancilla / spec.hot.temperature
    efficiency = wo.W / ho.Q_H if ho.Q_H > REGIME_TOL else None
    drift = tuple(
        _re_trace(cp.h_sites[i], rho_star.matrix - ho.state_after.matrix)
        for i in range(1, spec.n_sites - 1)
    )
    return LimitCycleReport(
        rho_star=rho_star,
        rho_tilde_star=ho.state_after,
        Q_C=ho.Q_C,
        Q_H=ho.Q_H,
        W=wo.W,
        Sigma=sigma,
        efficiency=efficiency,
        power=wo.W / (spec.tau_q + spec.tau_w),
        internal_drift=drift,
        cycles_to_converge=cycles_to_converge,
        residual=residual,
        subdominant_eigenvalue=subdominant_eigenvalue,
    )


def find_limit_cycle(
    spec: EngineSpec,
    method: str = "iterate",
    tol: float = 1e-12,
    max_cycles: int = 100_000,
    start: DensityMatrix | None = None,
) -> LimitCycleReport:
    """Solve for the stationary state of the composed cycle channel.

    ``iterate`` repeatedly applies the physical cycle until the trace
    distance between successive states drops below ``tol``; ``spectral``
    builds the channel matrix and extracts its unit-eigenvalue fixed point,
    failing loudly when that eigenvalue is degenerate.
    """
    if not (tol > 0.0):
        raise ParameterError(f"tol must be > 0, got {tol}")
    cp = _compiled(spec)
    if method == "iterate":
        if max_cycles < 1:
            raise ParameterError(f"max_cycles must be >= 1, got {max_cycles}")
        state = start if start is not None else thermal_start(spec)
        if state.layout != cp.chain:
            raise LayoutError("start state layout does not match the chain")
        rho = state.matrix
        cycles = 0
        for cycles in range(1, max_cycles + 1):
            nxt = cp.apply_cycle(rho)
            # keep float drift in the exactly-conserved trace from
            # accumulating over long runs
            nxt = nxt / np.trace(nxt).real
            resid = _trace_dist(nxt, rho)
            rho = nxt
            if resid < tol:
                break
        else:
            raise ConvergenceError(
                f"no limit cycle within {max_cycles} cycles "
                f"(last residual {resid:.3e}, tol {tol:g})",
                residual=resid,
            )
        rho_star = DensityMatrix(cp.chain, rho)
        final_resid = _trace_dist(cp.apply_cycle(rho), rho)
        return limit_cycle_thermo(
            rho_star, spec, cycles_to_converge=cycles, residual=final_resid
        )
    if method == "spectral":
        phi = cp.cycle_superoperator()
        evals, evecs = np.linalg.eig(phi)
        near_unit = np.abs(evals - 1.0) < DEGENERACY_TOL
        if near_unit.sum() == 0:
            raise ConsistencyError(
                "cycle channel has no unit eigenvalue "
                f"(closest {evals[np.argmin(np.abs(evals - 1.0))]:.12f})"
            )
        magnitudes = np.sort(np.abs(evals))[::-1]
        subdominant = float(magnitudes[1]) if len(magnitudes) > 1 else 0.0
        if near_unit.sum() > 1:
            raise DegenerateFixedPointError(
                f"unit eigenvalue has multiplicity {int(near_unit.sum())}; "
                f"second-largest magnitude {subdominant:.12f}"
            )
        d = cp.chain.total_dim
        vec = evecs[:, int(np.argmin(np.abs(evals - 1.0)))].reshape(d, d)
        tr = vec.trace()
        if abs(tr) < 1e-12:
            raise ConsistencyError("channel fixed point has vanishing trace")
        vec = _sym(vec / tr)
        rho_star = DensityMatrix(cp.chain, vec)
        resid = _trace_dist(cp.apply_cycle(vec), vec)
        return limit_cycle_thermo(
            rho_star,
            spec,
            cycles_to_converge=0,
            residual=resid,
            subdominant_eigenvalue=subdominant,
        )
    raise ParameterError(f"method must be 'iterate' or 'spectral', got {method!r}")


def classify_regime(report: LimitCycleReport) -> str:
    """Name the operating mode from the signs of the net currents.

    Currents within ``REGIME_TOL`` of zero are treated as zero; a state with
    all three currents at zero is idle.  Boundary cases (some currents in
    the zero band) are assigned to the nearest named regime.
    """
    w, q_c, q_h = report.W, report.Q_C, report.Q_H
    t = REGIME_TOL
    if max(abs(w), abs(q_c), abs(q_h)) <= t:
        return "idle"
    if w > t:
        return "engine"
    if w < -t:
        if q_c > t:
            return "refrigerator"
        if q_h > t:
            return "accelerator"
        return "heater"
    return "accelerator" if q_h > t else "heater"


@dataclass(frozen=True)
class OttoCheck:
    """Diagnostics for the frequency-ratio laws of exchange-coupled chains."""

    applicable: bool
    reason: str
    heat_ratio_residual: float | None = None
    efficiency_residual: float | None = None
    sign_law_ok: bool | None = None
    predicted_efficiency: float | None = None


def otto_check(spec: EngineSpec, report: LimitCycleReport) -> OttoCheck:
    """Test Q_C = -(w1/wN) Q_H, the heat-sign law, and eta = 1 - w1/wN.

    Only meaningful when every internal bond is of pure excitation-exchange
    form; for other couplings the check reports not-applicable instead of
    failing.
    """
    if spec.cold.is_explicit or spec.hot.is_explicit:
        return OttoCheck(False, "explicit bath interactions are not verified to be of exchange form")
    if not spec.is_eigenoperator_coupling():
        from .engine import ExplicitCoupling

        if isinstance(spec.coupling, ExplicitCoupling):
            return OttoCheck(
                False,
                "explicit bond operators are not verified to be of exchange form; "
                "frequency-ratio laws are not guaranteed",
            )
        return OttoCheck(
            False,
            "coupling mixes excitation sectors; frequency-ratio laws do not apply",
        )
    omega_1 = spec.site_omega(1)
    omega_n = spec.site_omega(spec.n_sites)
    ratio_residual = abs(report.Q_C + (omega_1 / omega_n) * report.Q_H)
    prefactor = omega_1 / spec.cold.temperature - omega_n / spec.hot.temperature
    if abs(report.Q_H) <= REGIME_TOL or abs(prefactor) <= REGIME_TOL:
        sign_ok = None
    else:
        sign_ok = (report.Q_H > 0) == (prefactor > 0)
    predicted = 1.0 - omega_1 / omega_n
    eff_residual = None
    if report.efficiency is not None:
        eff_residual = abs(report.efficiency - predicted)
    return OttoCheck(
        applicable=True,
        reason="all couplings are of excitation-exchange form",
        heat_ratio_residual=ratio_residual,
        efficiency_residual=eff_residual,
        sign_law_ok=sign_ok,
        predicted_efficiency=predicted,
    )


# -- serialization ------------------------------------------------------------

LEDGER_COLUMNS = ("n", "Q_C", "Q_H", "W", "dE", "Sigma", "S")


def ledger_to_csv(ledger: CycleLedger) -> str:
    rows = [
        {c: (row.n if c == "n" else getattr(row, c)) for c in LEDGER_COLUMNS}
        for row in ledger.rows
    ]
    return rows_to_csv(LEDGER_COLUMNS, rows)


def ledger_to_json(ledger: CycleLedger) -> str:
    rows = [
        {c: (row.n if c == "n" else getattr(row, c)) for c in LEDGER_COLUMNS}
        for row in ledger.rows
    ]
    return dumps_json({"rows": rows})


def ledger_rows_from_csv(text: str) -> list[dict[str, float]]:
    out = []
    for raw in read_csv_rows(text):
        row: dict[str, float] = {"n": int(raw["n"])}
        for c in LEDGER_COLUMNS[1:]:
            row[c] = float(raw[c])
        out.append(row)
    return out


def ledger_rows_from_json(text: str) -> list[dict[str, float]]:
    import json

    doc = json.loads(text)
    return [
        {c: (int(r["n"]) if c == "n" else float(r[c])) for c in LEDGER_COLUMNS}
        for r in doc["rows"]
    ]


REPORT_COLUMNS = (
    "Q_C",
    "Q_H",
    "W",
    "Sigma",
    "efficiency",
    "power",
    "regime",
    "cycles_to_converge",
    "residual",
    "internal_drift_max",
    "subdominant_eigenvalue",
)


def _report_row(report: LimitCycleReport) -> dict:
    drift_max = max((abs(x) for x in report.internal_drift), default=0.0)
    return {
        "Q_C": report.Q_C,
        "Q_H": report.Q_H,
        "W": report.W,
        "Sigma": report.Sigma,
        "efficiency": report.efficiency,
        "power": report.power,
        "regime": classify_regime(report),
        "cycles_to_converge": report.cycles_to_converge,
        "residual": report.residual,
        "internal_drift_max": drift_max,
        "subdominant_eigenvalue": report.subdominant_eigenvalue,
    }


def report_to_csv(report: LimitCycleReport) -> str:
    return rows_to_csv(REPORT_COLUMNS, [_report_row(report)])


def _matrix_doc(state: DensityMatrix) -> dict:
    return {
        "labels": list(state.layout.labels),
        "dims": list(state.layout.dims),
        "re": [[float(x) for x in row] for row in state.matrix.real],
        "im": [[float(x) for x in row] for row in state.matrix.imag],
    }


def report_to_json(report: LimitCycleReport, include_states: bool = False) -> str:
    doc = _report_row(report)
    doc["internal_drift"] = list(report.internal_drift)
    if include_states:
        doc["rho_star"] = _matrix_doc(report.rho_star)
        doc["rho_tilde_star"] = _matrix_doc(report.rho_tilde_star)
    return dumps_json(doc)


def report_scalars_from_json(text: str) -> dict:
    import json

    return json.loads(text)
