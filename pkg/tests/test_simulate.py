import numpy as np
import pytest

from twostroke.engine import (
    PartialSwapCoupling,
    XYZCoupling,
    qubit_chain,
    with_durations,
)
from twostroke.errors import (
    ConvergenceError,
    DegenerateFixedPointError,
    ParameterError,
)
from twostroke.hilbert import thermal_state, trace_distance, von_neumann_entropy
from twostroke.simulate import (
    LEDGER_COLUMNS,
    REPORT_COLUMNS,
    classify_regime,
    find_limit_cycle,
    ground_start,
    heat_stroke,
    ledger_rows_from_csv,
    ledger_rows_from_json,
    ledger_to_csv,
    ledger_to_json,
    otto_check,
    report_scalars_from_json,
    report_to_csv,
    report_to_json,
    run_cycles,
    thermal_start,
    work_stroke,
)


def _baseline():
    return qubit_chain([0.75, 1.0], PartialSwapCoupling(0.3), 0.4, 0.8, 0.3, 0.3, 1.0, 1.0)


def _detuned_cold():
    return qubit_chain(
        [0.75, 1.0], PartialSwapCoupling(0.3), 0.4, 0.8, 0.3, 0.3, 1.0, 1.0,
        omega_cold=0.9,
    )


def test_start_states():
    spec = _baseline()
    rho = thermal_start(spec)
    f1 = 1.0 / (np.exp(0.75 / 0.4) + 1.0)
    f2 = 1.0 / (np.exp(1.0 / 0.4) + 1.0)
    pops = np.diag(rho.matrix).real
    expect = np.array([f1 * f2, f1 * (1 - f2), (1 - f1) * f2, (1 - f1) * (1 - f2)])
    assert np.abs(pops - expect).max() < 1e-14
    hot = thermal_start(spec, temperature=0.8)
    assert hot.matrix[0, 0].real > rho.matrix[0, 0].real
    g = ground_start(spec)
    expect = np.zeros((4, 4))
    expect[3, 3] = 1.0
    assert np.abs(g.matrix - expect).max() < 1e-15


def test_gibbs_state_is_fixed_point_at_equilibrium():
    # uniform frequencies and equal temperatures: the product thermal state
    # commutes with every stroke generator and nothing should flow
    spec = qubit_chain([1.0, 1.0, 1.0], PartialSwapCoupling(0.4), 0.6, 0.6, 0.5, 0.5, 0.9, 1.3)
    rho = thermal_start(spec)
    ledger = run_cycles(rho, spec, 5)
    assert trace_distance(ledger.final_state, rho) < 1e-13
    for row in ledger.rows:
        assert abs(row.Q_C) < 1e-13
        assert abs(row.Q_H) < 1e-13
        assert abs(row.W) < 1e-13
        assert abs(row.Sigma) < 1e-12


def test_stroke_bookkeeping_identities():
    spec = _baseline()
    rho = ground_start(spec)
    ho = heat_stroke(rho, spec)
    # resonant collisions: every ancilla joule lands on the boundary site
    assert abs(ho.Q_C - ho.Q_C_ancilla) < 1e-14
    assert abs(ho.Q_H - ho.Q_H_ancilla) < 1e-14
    assert abs(ho.W_onoff_C) < 1e-14
    assert abs(ho.W_onoff_H) < 1e-14
    assert abs(ho.dV) < 1e-13
    # ground-start first collision: f * omega flows in from each side
    f_c = 1.0 / (np.exp(0.75 / 0.4) + 1.0)
    f_h = 1.0 / (np.exp(1.0 / 0.8) + 1.0)
    lam = (1.0 - np.cos(2 * 0.3 * 1.0)) / 2.0
    assert abs(ho.Q_C - lam * f_c * 0.75) < 1e-14
    assert abs(ho.Q_H - lam * f_h * 1.0) < 1e-14
    wo = work_stroke(ho.state_after, spec)
    # the work is stored interaction energy: W = dV exactly
    assert abs(wo.W - wo.dV) < 1e-14
    assert wo.Q_C == 0.0 and wo.Q_H == 0.0


def test_onoff_work_detuned_cold_bath():
    spec = _detuned_cold()
    rho = thermal_start(spec)
    for _ in range(5):
        ho = heat_stroke(rho, spec)
        # switching work is nonzero and exactly mirrors the trapped
        # interaction energy, W_onoff = -dV, bath by bath
        assert abs(ho.W_onoff_C) > 1e-6
        assert abs(ho.W_onoff_C + ho.dV_C) < 1e-10
        assert abs(ho.W_onoff_H) < 1e-12
        assert abs(ho.dV_H) < 1e-12
        rho = work_stroke(ho.state_after, spec).state_after


def test_run_cycles_first_and_second_law():
    rng = np.random.default_rng(5)
    specs = [
        _baseline(),
        _detuned_cold(),
        qubit_chain([1.5, 1.75, 2.0], XYZCoupling(0.8, 0.8, 0.7), 0.2, 0.8, 0.9, 0.9, 0.7, 0.25),
    ]
    for spec in specs:
        start = thermal_start(spec, temperature=float(rng.uniform(0.3, 1.0)))
        ledger = run_cycles(start, spec, 20)
        assert len(ledger.rows) == 20
        for row in ledger.rows:
            assert abs(row.dE - (row.Q_C + row.Q_H - row.W)) < 1e-12
            assert row.Sigma > -1e-12
        # dE telescopes to the total energy change
        total = sum(r.dE for r in ledger.rows)
        h_local = sum(
            np.kron(np.eye(2 ** i), np.kron(s.local_hamiltonian.matrix, np.eye(2 ** (spec.n_sites - 1 - i))))
            for i, s in enumerate(spec.sites)
        )
        e0 = np.trace(h_local @ start.matrix).real
        e1 = np.trace(h_local @ ledger.final_state.matrix).real
        assert abs(total - (e1 - e0)) < 1e-12
    with pytest.raises(ParameterError):
        run_cycles(thermal_start(specs[0]), specs[0], 0)


def test_run_cycles_snapshots_and_entropy_column():
    spec = _baseline()
    rho = ground_start(spec)
    ledger = run_cycles(rho, spec, 4, keep_snapshots=True)
    assert ledger.rows[0].rho == rho
    for row in ledger.rows:
        assert abs(row.S - von_neumann_entropy(row.rho)) < 1e-12
        assert row.rho_tilde is not None
    # without snapshots the states are dropped
    bare = run_cycles(rho, spec, 2)
    assert bare.rows[0].rho is None and bare.rows[0].rho_tilde is None


def test_find_limit_cycle_methods_agree():
    for spec in (_baseline(), _detuned_cold()):
        it = find_limit_cycle(spec, method="iterate", tol=1e-14)
        sp = find_limit_cycle(spec, method="spectral")
        assert trace_distance(it.rho_star, sp.rho_star) < 1e-9
        assert abs(it.W - sp.W) < 1e-10
        assert abs(it.Q_C - sp.Q_C) < 1e-10
        assert abs(it.Q_H - sp.Q_H) < 1e-10
        assert it.cycles_to_converge > 0
        assert it.residual < 1e-13
        assert sp.subdominant_eigenvalue is not None
        assert 0.0 < sp.subdominant_eigenvalue < 1.0
        # the stationary state reproduces itself over one cycle
        again = work_stroke(heat_stroke(sp.rho_star, spec).state_after, spec).state_after
        assert trace_distance(again, sp.rho_star) < 1e-12


def test_limit_cycle_thermodynamics_baseline():
    spec = _baseline()
    report = find_limit_cycle(spec, method="spectral")
    assert report.W > 0
    assert report.Q_H > 0
    assert report.Q_C < 0
    assert report.Sigma > 0
    assert abs(report.W - (report.Q_C + report.Q_H)) < 1e-12
    assert report.efficiency is not None
    assert abs(report.efficiency - 0.25) < 1e-10
    assert abs(report.power - report.W / 2.0) < 1e-15
    assert classify_regime(report) == "engine"
    assert report.internal_drift == ()


def test_internal_sites_frozen_over_heat_stroke():
    spec = qubit_chain(
        [1.5, 1.625, 1.75, 1.875, 2.0],
        XYZCoupling(0.8, 0.8, 0.0),
        0.2, 0.8, 16.0, 16.0, 0.05, 0.25,
    )
    report = find_limit_cycle(spec, method="iterate", tol=1e-13)
    assert len(report.internal_drift) == 3
    assert max(abs(d) for d in report.internal_drift) < 1e-9


def test_regime_classification_by_frequency_ratio():
    # the three operating modes of the two-qubit exchange engine are set by
    # the ratio omega_1/omega_2 against T_C/T_H = 0.5 and against 1
    cases = [
        (0.3, "refrigerator"),
        (0.75, "engine"),
        (1.2, "accelerator"),
    ]
    for omega_1, expect in cases:
        spec = qubit_chain([omega_1, 1.0], PartialSwapCoupling(0.3), 0.4, 0.8, 0.3, 0.3, 1.0, 1.0)
        report = find_limit_cycle(spec, method="spectral")
        assert classify_regime(report) == expect
    idle = qubit_chain([1.0, 1.0], PartialSwapCoupling(0.3), 0.6, 0.6, 0.3, 0.3, 1.0, 1.0)
    assert classify_regime(find_limit_cycle(idle, method="spectral")) == "idle"


def test_otto_check():
    spec = _baseline()
    report = find_limit_cycle(spec, method="spectral")
    check = otto_check(spec, report)
    assert check.applicable
    assert check.heat_ratio_residual < 1e-12
    assert check.efficiency_residual < 1e-12
    assert check.sign_law_ok is True
    assert abs(check.predicted_efficiency - 0.25) < 1e-15
    xxz = qubit_chain([0.75, 1.0], XYZCoupling(0.8, 0.8, 0.7), 0.4, 0.8, 0.3, 0.3, 1.0, 1.0)
    check = otto_check(xxz, find_limit_cycle(xxz, method="spectral"))
    assert not check.applicable
    assert check.heat_ratio_residual is None


def test_nonconvergence_and_degenerate_fixed_point():
    spec = _baseline()
    with pytest.raises(ConvergenceError) as err:
        find_limit_cycle(spec, method="iterate", tol=1e-14, max_cycles=3)
    assert err.value.residual > 0
    # zero-strength collisions leave the cycle unitary, so the unit
    # eigenvalue of the channel is massively degenerate
    degen = qubit_chain(
        [1.0, 1.0], PartialSwapCoupling(0.0), 0.4, 0.8, 0.0, 0.0, 1.0, 1.0
    )
    with pytest.raises(DegenerateFixedPointError):
        find_limit_cycle(degen, method="spectral")
    with pytest.raises(ParameterError):
        find_limit_cycle(spec, method="newton")
    with pytest.raises(ParameterError):
        find_limit_cycle(spec, method="iterate", tol=-1.0)


def test_long_iteration_keeps_state_normalized():
    spec = qubit_chain(
        [1.5, 1.75, 2.0], XYZCoupling(0.8, 0.8, 0.7), 0.2, 0.8, 16.0, 16.0,
        0.0063, 0.25,
    )
    # small lambda forces thousands of cycles; trace drift must not build up
    report = find_limit_cycle(spec, method="iterate", tol=1e-12, max_cycles=20000)
    assert abs(np.trace(report.rho_star.matrix).real - 1.0) < 1e-13


def test_ledger_serialization_roundtrip():
    spec = _baseline()
    ledger = run_cycles(ground_start(spec), spec, 6)
    text = ledger_to_csv(ledger)
    assert text.splitlines()[0] == ",".join(LEDGER_COLUMNS)
    rows = ledger_rows_from_csv(text)
    assert len(rows) == 6
    for row, rec in zip(rows, ledger.rows):
        assert row["n"] == rec.n
        for col in LEDGER_COLUMNS[1:]:
            assert row[col] == getattr(rec, col)  # 17-digit float round trip
    rows_j = ledger_rows_from_json(ledger_to_json(ledger))
    assert rows_j == rows


def test_report_serialization_roundtrip():
    spec = _baseline()
    report = find_limit_cycle(spec, method="spectral")
    text = report_to_csv(report)
    assert text.splitlines()[0] == ",".join(REPORT_COLUMNS)
    doc = report_scalars_from_json(report_to_json(report))
    assert doc["W"] == report.W
    assert doc["regime"] == "engine"
    assert doc["internal_drift"] == []
    with_states = report_scalars_from_json(report_to_json(report, include_states=True))
    re = np.array(with_states["rho_star"]["re"])
    im = np.array(with_states["rho_star"]["im"])
    assert np.abs((re + 1j * im) - report.rho_star.matrix).max() == 0.0


def test_heat_stroke_requires_chain_layout():
    spec = _baseline()
    other = qubit_chain([0.75, 1.0, 1.25], PartialSwapCoupling(0.3), 0.4, 0.8, 0.3, 0.3, 1.0, 1.0)
    with pytest.raises(Exception):
        heat_stroke(thermal_start(other), spec)


def test_duration_change_invalidates_nothing():
    # same spec with shorter work stroke: weaker engine but identical API
    spec = _baseline()
    short = with_durations(spec, tau_w=0.1)
    r1 = find_limit_cycle(spec, method="spectral")
    r2 = find_limit_cycle(short, method="spectral")
    assert r2.W < r1.W
