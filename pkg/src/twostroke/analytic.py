"""Closed-form observable dynamics for the two-qubit exchange engine.

For a two-site qubit chain with excitation-exchange coupling, resonant
qubit baths of equal collision strength, and local Hamiltonians
(omega_i/2) sigma_z^i, the stroboscopic dynamics closes on four real
observables

    Z_i = <sigma_z^i>,
    S   = <sp1 sm2 + sm1 sp2> =  2 Re c,
    A   = i<sp1 sm2 - sm1 sp2> = -2 Im c,      c = tr{rho sp1 sm2},

where sp/sm are the raising/lowering operators of each site.  Both
strokes act as affine maps on x = (Z1, Z2, S, A):

  heat stroke   x~ = J x + Svec
      Z~_i = (1 - lam) Z_i + lam Z_i^th
      S~   = (1 - lam) ( cr * S + sr * A)
      A~   = (1 - lam) (-sr * S + cr * A)
    with lam = (1 - cos(2 g tau_q))/2 the per-collision thermalization
    strength and (cr, sr) = (cos, sin)((omega_1 - omega_2) tau_q) the
    free rotation of the cross correlator accumulated during the
    collision window.  Note sr is the *signed* sine; its magnitude is
    sqrt(1 - p) with p = cr^2.

  work stroke   x' = D x~
      Z1' = (1 - eta) Z1~ + eta Z2~ + 2 eta tan(th) S~ - 2 xi A~
      Z2' = (1 - eta) Z2~ + eta Z1~ - 2 eta tan(th) S~ + 2 xi A~
      S'  = eta tan(th) (Z1~ - Z2~) + (1 - 2 eta tan(th)^2) S~
            + 2 xi tan(th) A~
      A'  = xi (Z1~ - Z2~) - 2 xi tan(th) S~ + (1 - 2 eta sec(th)^2) A~
    with omega_r = sqrt(4 g^2 + (omega_1 - omega_2)^2) the exchange
    Rabi frequency, eta = (2 g^2/omega_r^2)(1 - cos(omega_r tau_w)) the
    swap weight, xi = (g/omega_r) sin(omega_r tau_w) the coherent
    mixing weight, and tan(th) = (omega_1 - omega_2)/(2 g) the detuning
    angle.  The identity xi^2 = eta (1 - eta sec(th)^2) holds exactly.

Every coefficient above has been validated against the density-matrix
simulation in :mod:`twostroke.simulate`: the affine pair reproduces the
exact cycle at machine precision for either frequency ordering.  The
combinations eta*tan(th), eta*tan(th)^2, xi*tan(th) and eta*sec(th)^2
are stored directly so that the g -> 0 limit (pure free rotation of the
correlator) stays finite.

Thermal targets use the excited-state occupation f_x = 1/(e^{omega/T}+1)
of each bath, giving Z^th = 2 f - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .engine import (
    COLD_LABEL,
    HOT_LABEL,
    EngineSpec,
    PartialSwapCoupling,
)
from .errors import ParameterError, SpecError
from .hilbert import DensityMatrix, SIGMA_PLUS, SIGMA_MINUS, PAULI_Z
from .serialize import dumps_json, rows_to_csv

__all__ = [
    "AnalyticParams",
    "ObservableVector",
    "AffineMapPair",
    "derive_params",
    "from_engine_spec",
    "observables_from_state",
    "heat_map",
    "work_map",
    "build_affine_maps",
    "trajectory",
    "closed_form_state",
    "steady_state",
    "relaxation_rate",
    "work_closed_form",
    "thermo_from_states",
    "steady_state_thermo",
    "TRAJECTORY_COLUMNS",
    "trajectory_to_csv",
    "trajectory_to_json",
]


class ObservableVector(NamedTuple):
    """The closed observable set x = (Z1, Z2, S, A) of the two-qubit engine."""

    Z1: float
    Z2: float
    S: float
    A: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class AnalyticParams:
    """Raw and derived parameters of the two-qubit exchange engine.

    Raw inputs are the site frequencies, the shared coupling strength g
    (used both for the bath collisions and the inter-site exchange), the
    stroke durations and the bath temperatures.  Derived fields are the
    map coefficients documented in the module docstring.  ``lam``, ``p``,
    ``eta_w`` and ``xi`` may be overridden at construction, in which case
    ``identity_residual`` reports how far the overridden set drifts from
    the exact coefficient identity.
    """

    omega_1: float
    omega_2: float
    g: float
    tau_q: float
    tau_w: float
    T_C: float
    T_H: float
    # heat-stroke coefficients
    lam: float
    p: float
    cos_rot: float
    sin_rot: float
    # work-stroke coefficients
    eta_w: float
    xi: float
    theta: float
    omega_r: float
    eta_tan: float
    eta_tan2: float
    xi_tan: float
    eta_sec2: float
    # thermal targets
    f_C: float
    f_H: float
    Z1_th: float
    Z2_th: float

    @property
    def identity_residual(self) -> float:
        """Residual of xi^2 = eta (1 - eta sec(th)^2); zero for raw inputs."""

        return self.xi**2 - (self.eta_w - self.eta_w * self.eta_sec2)

    @property
    def detuning(self) -> float:
        return self.omega_1 - self.omega_2


def _occupation(omega: float, temperature: float) -> float:
    if temperature <= 0.0:
        raise ParameterError("bath temperature must be positive")
    return 1.0 / (math.exp(omega / temperature) + 1.0)


def derive_params(
    omega_1: float,
    omega_2: float,
    g: float,
    tau_q: float,
    tau_w: float,
    T_C: float,
    T_H: float,
    *,
    lam: float | None = None,
    p: float | None = None,
    eta: float | None = None,
    xi: float | None = None,
) -> AnalyticParams:
    """Compute all map coefficients from the physical inputs.

    The keyword arguments override the derived ``lam``, ``p``, ``eta_w``
    and ``xi`` values; overriding ``p`` or ``eta`` keeps the sign of the
    associated rotation from the raw geometry while taking the magnitude
    from the override.  When ``eta`` is overridden and ``xi`` is not,
    ``xi`` is re-derived from the coefficient identity.
    """

    if g < 0.0:
        raise ParameterError("coupling strength g must be non-negative")
    if tau_q <= 0.0 or tau_w < 0.0:
        raise ParameterError("stroke durations must be positive (tau_w may be zero)")

    delta = omega_1 - omega_2
    lam_raw = (1.0 - math.cos(2.0 * g * tau_q)) / 2.0
    cos_rot = math.cos(delta * tau_q)
    sin_rot = math.sin(delta * tau_q)
    if lam is not None:
        if not 0.0 <= lam <= 1.0:
            raise ParameterError("lam override must lie in [0, 1]")
    else:
        lam = lam_raw
    if p is not None:
        if not 0.0 <= p <= 1.0:
            raise ParameterError("p override must lie in [0, 1]")
        cos_rot = math.sqrt(p)
        sin_rot = math.copysign(math.sqrt(1.0 - p), sin_rot)
    else:
        p = cos_rot**2

    omega_r = math.hypot(2.0 * g, delta)
    theta = math.atan2(delta, 2.0 * g)
    if omega_r == 0.0:
        # fully resonant and uncoupled: the work stroke is trivial
        a_frac = 0.0
        b_frac = 0.0
        one_minus_cos = 0.0
        sin_w = 0.0
    else:
        a_frac = 2.0 * g / omega_r
        b_frac = delta / omega_r
        one_minus_cos = 1.0 - math.cos(omega_r * tau_w)
        sin_w = math.sin(omega_r * tau_w)

    eta_raw = (a_frac**2 / 2.0) * one_minus_cos
    xi_raw = (a_frac / 2.0) * sin_w
    if eta is not None:
        if not 0.0 <= eta <= 1.0:
            raise ParameterError("eta override must lie in [0, 1]")
        scale = eta / eta_raw if eta_raw > 0.0 else 0.0
    else:
        eta = eta_raw
        scale = 1.0
    eta_tan = (a_frac * b_frac / 2.0) * one_minus_cos * scale
    eta_tan2 = (b_frac**2 / 2.0) * one_minus_cos * scale
    eta_sec2 = eta + eta_tan2
    if xi is not None:
        if abs(xi) > 0.5:
            raise ParameterError("xi override must lie in [-0.5, 0.5]")
    elif eta_raw > 0.0 and scale != 1.0:
        xi = math.copysign(
            math.sqrt(max(eta - eta * eta_sec2, 0.0)), xi_raw if xi_raw else 1.0
        )
    else:
        xi = xi_raw
    if a_frac > 0.0:
        xi_tan = xi * b_frac / a_frac
    else:
        xi_tan = (b_frac / 2.0) * sin_w

    f_C = _occupation(omega_1, T_C)
    f_H = _occupation(omega_2, T_H)
    return AnalyticParams(
        omega_1=omega_1,
        omega_2=omega_2,
        g=g,
        tau_q=tau_q,
        tau_w=tau_w,
        T_C=T_C,
        T_H=T_H,
        lam=lam,
        p=p,
        cos_rot=cos_rot,
        sin_rot=sin_rot,
        eta_w=eta,
        xi=xi,
        theta=theta,
        omega_r=omega_r,
        eta_tan=eta_tan,
        eta_tan2=eta_tan2,
        xi_tan=xi_tan,
        eta_sec2=eta_sec2,
        f_C=f_C,
        f_H=f_H,
        Z1_th=2.0 * f_C - 1.0,
        Z2_th=2.0 * f_H - 1.0,
    )


def from_engine_spec(
    spec: EngineSpec,
    *,
    lam: float | None = None,
    p: float | None = None,
    eta: float | None = None,
    xi: float | None = None,
) -> AnalyticParams:
    """Derive analytic parameters from a two-qubit excitation-exchange spec.

    Requires exactly two qubit sites, an excitation-exchange internal
    coupling, resonant qubit baths, and a single shared coupling
    strength; anything else falls outside the closed four-observable
    description.
    """

    if spec.n_sites != 2:
        raise SpecError("closed-form dynamics requires exactly two sites")
    if not isinstance(spec.coupling, PartialSwapCoupling):
        raise SpecError("closed-form dynamics requires excitation-exchange coupling")
    g_int = spec.coupling.bond_strength(0, 1)
    for bath, label in ((spec.cold, COLD_LABEL), (spec.hot, HOT_LABEL)):
        if bath.is_explicit:
            raise SpecError("closed-form dynamics requires qubit-form baths")
    omega_1 = spec.site_omega(1)
    omega_2 = spec.site_omega(2)
    if spec.cold.omega is not None and not math.isclose(
        spec.cold.omega, omega_1, rel_tol=0.0, abs_tol=1e-12
    ):
        raise SpecError("cold bath must be resonant with the first site")
    if spec.hot.omega is not None and not math.isclose(
        spec.hot.omega, omega_2, rel_tol=0.0, abs_tol=1e-12
    ):
        raise SpecError("hot bath must be resonant with the last site")
    if not (
        math.isclose(spec.cold.g, g_int, rel_tol=0.0, abs_tol=1e-12)
        and math.isclose(spec.hot.g, g_int, rel_tol=0.0, abs_tol=1e-12)
    ):
        raise SpecError(
            "closed-form dynamics requires equal bath and inter-site coupling"
        )
    return derive_params(
        omega_1,
        omega_2,
        g_int,
        spec.tau_q,
        spec.tau_w,
        spec.cold.temperature,
        spec.hot.temperature,
        lam=lam,
        p=p,
        eta=eta,
        xi=xi,
    )


_SP_SM = np.kron(SIGMA_PLUS, SIGMA_MINUS)
_SZ_1 = np.kron(PAULI_Z, np.eye(2))
_SZ_2 = np.kron(np.eye(2), PAULI_Z)


def observables_from_state(state: DensityMatrix) -> ObservableVector:
    """Extract (Z1, Z2, S, A) from a two-qubit density matrix."""

    m = state.matrix
    if m.shape != (4, 4):
        raise ParameterError("observable extraction requires a two-qubit state")
    c = np.einsum("ij,ji->", _SP_SM, m)
    return ObservableVector(
        Z1=float(np.einsum("ij,ji->", _SZ_1, m).real),
        Z2=float(np.einsum("ij,ji->", _SZ_2, m).real),
        S=float(2.0 * c.real),
        A=float(-2.0 * c.imag),
    )


def heat_map(x: ObservableVector, params: AnalyticParams) -> ObservableVector:
    """One heat stroke: damp populations toward thermal targets, rotate
    and damp the cross correlator.  Starting from S = A = 0 the stroke
    cannot create correlations."""

    lam = params.lam
    keep = 1.0 - lam
    return ObservableVector(
        Z1=keep * x.Z1 + lam * params.Z1_th,
        Z2=keep * x.Z2 + lam * params.Z2_th,
        S=keep * (params.cos_rot * x.S + params.sin_rot * x.A),
        A=keep * (-params.sin_rot * x.S + params.cos_rot * x.A),
    )


def work_map(xt: ObservableVector, params: AnalyticParams) -> ObservableVector:
    """One work stroke: partial population swap plus coherent mixing with
    the cross correlator."""

    eta = params.eta_w
    xi = params.xi
    dz = xt.Z1 - xt.Z2
    swap = eta * dz - 2.0 * params.eta_tan * xt.S + 2.0 * xi * xt.A
    return ObservableVector(
        Z1=xt.Z1 - swap,
        Z2=xt.Z2 + swap,
        S=params.eta_tan * dz + (1.0 - 2.0 * params.eta_tan2) * xt.S
        + 2.0 * params.xi_tan * xt.A,
        A=xi * dz - 2.0 * params.xi_tan * xt.S + (1.0 - 2.0 * params.eta_sec2) * xt.A,
    )


@dataclass(frozen=True)
class AffineMapPair:
    """Matrix form of the two strokes: x~ = J x + Svec, x' = D x~."""

    J: np.ndarray
    D: np.ndarray
    Svec: np.ndarray

    def __post_init__(self) -> None:
        for name in ("J", "D"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (4, 4):
                raise ParameterError(f"{name} must be a 4x4 real matrix")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        s = np.asarray(self.Svec, dtype=float)
        if s.shape != (4,):
            raise ParameterError("Svec must be a 4-component real vector")
        s.setflags(write=False)
        object.__setattr__(self, "Svec", s)

    @property
    def cycle_matrix(self) -> np.ndarray:
        """The per-cycle linear part DJ."""

        return self.D @ self.J

    @property
    def cycle_offset(self) -> np.ndarray:
        """The per-cycle affine part D Svec."""

        return self.D @ self.Svec


def build_affine_maps(params: AnalyticParams) -> AffineMapPair:
    lam = params.lam
    keep = 1.0 - lam
    cr, sr = params.cos_rot, params.sin_rot
    J = np.array(
        [
            [keep, 0.0, 0.0, 0.0],
            [0.0, keep, 0.0, 0.0],
            [0.0, 0.0, keep * cr, keep * sr],
            [0.0, 0.0, -keep * sr, keep * cr],
        ]
    )
    Svec = lam * np.array([params.Z1_th, params.Z2_th, 0.0, 0.0])
    eta, xi = params.eta_w, params.xi
    et, et2, xt, es2 = params.eta_tan, params.eta_tan2, params.xi_tan, params.eta_sec2
    D = np.array(
        [
            [1.0 - eta, eta, 2.0 * et, -2.0 * xi],
            [eta, 1.0 - eta, -2.0 * et, 2.0 * xi],
            [et, -et, 1.0 - 2.0 * et2, 2.0 * xt],
            [xi, -xi, -2.0 * xt, 1.0 - 2.0 * es2],
        ]
    )
    return AffineMapPair(J=J, D=D, Svec=Svec)


def trajectory(
    x0: ObservableVector, n_cycles: int, maps: AffineMapPair
) -> list[tuple[ObservableVector, ObservableVector]]:
    """Iterate the stroke maps for ``n_cycles`` full cycles.

    Returns ``n_cycles + 1`` rows; row n holds the cycle-start vector
    x_n and its post-heat-stroke companion x~_n.
    """

    if n_cycles < 0:
        raise ParameterError("n_cycles must be non-negative")
    rows = []
    x = np.asarray(x0, dtype=float)
    for _ in range(n_cycles + 1):
        xt = maps.J @ x + maps.Svec
        rows.append((ObservableVector(*x), ObservableVector(*xt)))
        x = maps.D @ xt
    return rows


def closed_form_state(
    x0: ObservableVector, n: int, maps: AffineMapPair
) -> ObservableVector:
    """Evaluate x_n = M^n x0 + (sum_{r<n} M^r) b directly, M = DJ, b = DS.

    Uses a linear solve for the geometric sum when I - M is invertible
    and an explicit power sum otherwise; agrees with the iterated maps
    to machine precision.
    """

    if n < 0:
        raise ParameterError("n must be non-negative")
    m = maps.cycle_matrix
    b = maps.cycle_offset
    eye = np.eye(4)
    m_n = np.linalg.matrix_power(m, n)
    gap = eye - m
    if abs(np.linalg.det(gap)) > 1e-12:
        geo = np.linalg.solve(gap, (eye - m_n) @ b)
    else:
        geo = np.zeros(4)
        acc = np.eye(4)
        for _ in range(n):
            geo = geo + acc @ b
            acc = acc @ m
    return ObservableVector(*(m_n @ np.asarray(x0, dtype=float) + geo))


def steady_state(maps: AffineMapPair) -> tuple[ObservableVector, ObservableVector]:
    """Fixed point x* = (I - DJ)^{-1} D Svec and its heat-stroke partner x~*."""

    gap = np.eye(4) - maps.cycle_matrix
    if abs(np.linalg.det(gap)) < 1e-14:
        raise ParameterError(
            "no unique steady cycle: the cycle map has a unit eigenvalue "
            "(zero thermalization strength)"
        )
    x_star = np.linalg.solve(gap, maps.cycle_offset)
    xt_star = maps.J @ x_star + maps.Svec
    return ObservableVector(*x_star), ObservableVector(*xt_star)


def relaxation_rate(maps: AffineMapPair) -> float:
    """Largest eigenvalue magnitude of DJ; equals 1 - lam."""

    return float(np.abs(np.linalg.eigvals(maps.cycle_matrix)).max())


def thermo_from_states(
    x: ObservableVector,
    xt: ObservableVector,
    x_next: ObservableVector,
    params: AnalyticParams,
) -> tuple[float, float, float]:
    """Per-cycle heats and work from consecutive stroke states.

    Site energies are omega_i Z_i / 2, so Q_x = omega_x (Z~_x - Z_x)/2
    (positive into the chain) and W = -sum_i omega_i (Z_i' - Z~_i)/2
    (positive when extracted).
    """

    q_c = params.omega_1 * (xt.Z1 - x.Z1) / 2.0
    q_h = params.omega_2 * (xt.Z2 - x.Z2) / 2.0
    w = -(
        params.omega_1 * (x_next.Z1 - xt.Z1) + params.omega_2 * (x_next.Z2 - xt.Z2)
    ) / 2.0
    return q_c, q_h, w


def steady_state_thermo(
    params: AnalyticParams, maps: AffineMapPair | None = None
) -> tuple[float, float, float]:
    """(Q_C*, Q_H*, W*) in the steady cycle; W* = Q_C* + Q_H* exactly."""

    if maps is None:
        maps = build_affine_maps(params)
    x_star, xt_star = steady_state(maps)
    return thermo_from_states(x_star, xt_star, x_star, params)


def work_closed_form(params: AnalyticParams) -> float:
    """Steady-cycle work output evaluated in closed form.

    The expression is the solved fixed point of the affine cycle map;
    the overall factor 1/2 carries the site energy omega_i Z_i / 2.  It
    vanishes with the numerator factor (f_C - f_H)(omega_1 - omega_2),
    which pins the engine window and the reversible point.
    """

    lam = params.lam
    eta = params.eta_w
    delta = params.omega_1 - params.omega_2
    num = 2.0 * eta * (2.0 - lam) * lam * (params.f_C - params.f_H) * delta
    den = (
        lam**2
        + 2.0 * (1.0 + eta) * (1.0 - lam)
        - 2.0 * params.cos_rot * (1.0 - lam) * (1.0 - params.eta_tan2 - params.eta_sec2)
        + 4.0 * params.sin_rot * (1.0 - lam) * params.xi_tan
    )
    if den == 0.0:
        return 0.0
    return 0.5 * num / den


TRAJECTORY_COLUMNS = ("n", "Z1", "Z1t", "Z2", "Z2t", "S", "St", "A", "At")


def _trajectory_rows(
    rows: list[tuple[ObservableVector, ObservableVector]]
) -> list[list]:
    out = []
    for n, (x, xt) in enumerate(rows):
        out.append([n, x.Z1, xt.Z1, x.Z2, xt.Z2, x.S, xt.S, x.A, xt.A])
    return out


def trajectory_to_csv(rows: list[tuple[ObservableVector, ObservableVector]]) -> str:
    return rows_to_csv(TRAJECTORY_COLUMNS, _trajectory_rows(rows))


def trajectory_to_json(rows: list[tuple[ObservableVector, ObservableVector]]) -> str:
    payload = [
        dict(zip(TRAJECTORY_COLUMNS, row)) for row in _trajectory_rows(rows)
    ]
    return dumps_json(payload)
