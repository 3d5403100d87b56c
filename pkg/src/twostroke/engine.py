"""Declarative description of a two-stroke engine on a qudit chain.

An :class:`EngineSpec` pins down everything needed to run strokes: the chain
sites with their local Hamiltonians, nearest-neighbour internal couplings,
one thermal ancilla attached to each end of the chain, and the two stroke
durations.  Builders turn the declarative pieces into concrete operators on
the chain (factors ``S1..SN``) or on the full collision space
(``C, S1..SN, H``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any, Sequence, Union

import numpy as np

from .errors import LayoutError, ParameterError, SpecError
from .hilbert import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    DensityMatrix,
    HermitianOperator,
    SpaceLayout,
    embed_operator,
    thermal_state,
)

__all__ = [
    "SiteSpec",
    "BathSpec",
    "PartialSwapCoupling",
    "XYZCoupling",
    "ExplicitCoupling",
    "Coupling",
    "EngineSpec",
    "qubit_site",
    "qubit_chain",
    "build_partial_swap",
    "build_xyz_coupling",
    "build_heat_hamiltonian",
    "build_work_hamiltonian",
    "check_strict_energy_conservation",
    "spec_to_json",
    "spec_from_json",
    "load_config",
]

COLD_LABEL = "C"
HOT_LABEL = "H"


def site_label(index: int) -> str:
    """Label of chain site ``index`` (1-based)."""
    return f"S{index}"


@dataclass(frozen=True)
class SiteSpec:
    """One chain site: its dimension and local Hamiltonian."""

    dimension: int
    local_hamiltonian: HermitianOperator

    def __post_init__(self):
        if self.dimension < 2:
            raise SpecError(f"site dimension must be >= 2, got {self.dimension}")
        if self.local_hamiltonian.layout.total_dim != self.dimension:
            raise SpecError(
                f"local Hamiltonian dim {self.local_hamiltonian.layout.total_dim} "
                f"does not match site dimension {self.dimension}"
            )


@dataclass(frozen=True)
class BathSpec:
    """A stream of identically prepared thermal ancillas for one boundary.

    The common case is a qubit ancilla with Hamiltonian (omega/2) sigma_z
    coupled through a partial-swap interaction of strength ``g``; ``omega``
    of ``None`` means resonant with the boundary site it attaches to.  A
    fully explicit ancilla Hamiltonian plus interaction operator may be
    given instead for qudit baths.
    """

    temperature: float
    g: float = 0.0
    omega: float | None = None
    ancilla: HermitianOperator | None = None
    interaction: HermitianOperator | None = None

    def __post_init__(self):
        if not (self.temperature > 0.0):
            raise SpecError(f"bath temperature must be > 0, got {self.temperature}")
        explicit = self.ancilla is not None or self.interaction is not None
        if explicit and (self.ancilla is None or self.interaction is None):
            raise SpecError("explicit baths need both an ancilla Hamiltonian and an interaction")
        if explicit and self.omega is not None:
            raise SpecError("give either a qubit omega or an explicit ancilla, not both")

    @property
    def is_explicit(self) -> bool:
        return self.ancilla is not None


@dataclass(frozen=True)
class PartialSwapCoupling:
    """Excitation-exchange bond g(s+ s- + s- s+), uniform or per bond."""

    g: Union[float, tuple[float, ...]]

    def bond_strength(self, bond: int, n_bonds: int) -> float:
        if isinstance(self.g, tuple):
            if len(self.g) != n_bonds:
                raise SpecError(f"{len(self.g)} bond strengths for {n_bonds} bonds")
            return float(self.g[bond])
        return float(self.g)


@dataclass(frozen=True)
class XYZCoupling:
    """Jx XX + Jy YY + Jz ZZ on every bond (qubit chains only)."""

    Jx: float
    Jy: float
    Jz: float


@dataclass(frozen=True)
class ExplicitCoupling:
    """One caller-supplied Hermitian bond operator per nearest-neighbour pair."""

    bonds: tuple[HermitianOperator, ...]


Coupling = Union[PartialSwapCoupling, XYZCoupling, ExplicitCoupling]


def _qubit_hamiltonian(omega: float, label: str) -> HermitianOperator:
    layout = SpaceLayout((2,), (label,))
    return HermitianOperator(layout, (omega / 2.0) * PAULI_Z)


def qubit_site(omega: float, index: int) -> SiteSpec:
    """Qubit site with splitting ``omega``: H = (omega/2) sigma_z."""
    return SiteSpec(2, _qubit_hamiltonian(omega, site_label(index)))


def build_partial_swap(g: float, label_a: str, label_b: str) -> HermitianOperator:
    """g (s+ s- + s- s+) between two qubits; swaps |01> and |10>."""
    layout = SpaceLayout((2, 2), (label_a, label_b))
    matrix = g * (np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS))
    return HermitianOperator(layout, matrix)


def build_xyz_coupling(Jx: float, Jy: float, Jz: float, label_a: str, label_b: str) -> HermitianOperator:
    """Jx XX + Jy YY + Jz ZZ between two qubits."""
    layout = SpaceLayout((2, 2), (label_a, label_b))
    matrix = (
        Jx * np.kron(PAULI_X, PAULI_X)
        + Jy * np.kron(PAULI_Y, PAULI_Y)
        + Jz * np.kron(PAULI_Z, PAULI_Z)
    )
    return HermitianOperator(layout, matrix)


@dataclass(frozen=True)
class EngineSpec:
    """Complete declarative description of one engine."""

    sites: tuple[SiteSpec, ...]
    coupling: Coupling
    cold: BathSpec
    hot: BathSpec
    tau_q: float
    tau_w: float

    def __post_init__(self):
        if len(self.sites) < 2:
            raise SpecError(f"chain needs at least 2 sites, got {len(self.sites)}")
        for i, site in enumerate(self.sites, start=1):
            want = (site_label(i),)
            if site.local_hamiltonian.layout.labels != want:
                raise SpecError(
                    f"site {i} local Hamiltonian must be labeled {want}, "
                    f"got {site.local_hamiltonian.layout.labels}"
                )
        if self.cold.temperature > self.hot.temperature:
            raise SpecError(
                f"cold bath temperature {self.cold.temperature} exceeds hot "
                f"bath temperature {self.hot.temperature}"
            )
        if not (self.tau_q > 0.0) or not (self.tau_w > 0.0):
            raise SpecError(f"stroke durations must be > 0, got {self.tau_q}, {self.tau_w}")
        if isinstance(self.coupling, XYZCoupling) and not self.all_qubits:
            raise SpecError("XYZ couplings are defined for qubit chains only")
        if isinstance(self.coupling, PartialSwapCoupling):
            if not self.all_qubits:
                raise SpecError("partial-swap couplings are defined for qubit chains only")
            self.coupling.bond_strength(0, self.n_sites - 1)  # validates count
        if isinstance(self.coupling, ExplicitCoupling) and len(self.coupling.bonds) != self.n_sites - 1:
            raise SpecError(
                f"{len(self.coupling.bonds)} bond operators for {self.n_sites - 1} bonds"
            )
        for bath, boundary in ((self.cold, 1), (self.hot, self.n_sites)):
            if not bath.is_explicit and self.sites[boundary - 1].dimension != 2:
                raise SpecError("qubit-form baths require a qubit boundary site")

    # -- layouts -----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def all_qubits(self) -> bool:
        return all(s.dimension == 2 for s in self.sites)

    def chain_layout(self) -> SpaceLayout:
        return SpaceLayout(
            tuple(s.dimension for s in self.sites),
            tuple(site_label(i) for i in range(1, self.n_sites + 1)),
        )

    def collision_layout(self) -> SpaceLayout:
        cold_anc, _ = resolve_bath(self, "cold")
        hot_anc, _ = resolve_bath(self, "hot")
        chain = self.chain_layout()
        return SpaceLayout(
            (cold_anc.layout.total_dim,) + chain.dims + (hot_anc.layout.total_dim,),
            (COLD_LABEL,) + chain.labels + (HOT_LABEL,),
        )

    # -- site frequencies ---------------------------------------------------

    def site_omega(self, index: int) -> float:
        """Level splitting of qubit site ``index`` (1-based)."""
        site = self.sites[index - 1]
        if site.dimension != 2:
            raise SpecError(f"site {index} is not a qubit")
        m = site.local_hamiltonian.matrix
        return float((m[0, 0] - m[1, 1]).real)

    def is_eigenoperator_coupling(self) -> bool:
        """True when every bond is of pure excitation-exchange form."""
        if isinstance(self.coupling, PartialSwapCoupling):
            return True
        if isinstance(self.coupling, XYZCoupling):
            return self.coupling.Jz == 0.0 and self.coupling.Jx == self.coupling.Jy
        return False


def qubit_chain(
    omegas: Sequence[float],
    coupling: Coupling,
    T_cold: float,
    T_hot: float,
    g_cold: float,
    g_hot: float,
    tau_q: float,
    tau_w: float,
    omega_cold: float | None = None,
    omega_hot: float | None = None,
) -> EngineSpec:
    """Engine on a qubit chain with (omega/2) sigma_z local Hamiltonians."""
    sites = tuple(qubit_site(w, i) for i, w in enumerate(omegas, start=1))
    return EngineSpec(
        sites=sites,
        coupling=coupling,
        cold=BathSpec(temperature=T_cold, g=g_cold, omega=omega_cold),
        hot=BathSpec(temperature=T_hot, g=g_hot, omega=omega_hot),
        tau_q=tau_q,
        tau_w=tau_w,
    )


# -- operator builders -------------------------------------------------------


def resolve_bath(spec: EngineSpec, side: str) -> tuple[HermitianOperator, HermitianOperator]:
    """Concrete (ancilla Hamiltonian, interaction) pair for one boundary.

    The interaction operator lives on the in-order factor pair: (C, S1) for
    the cold side, (SN, H) for the hot side.
    """
    if side == "cold":
        bath, anc_label, boundary = spec.cold, COLD_LABEL, 1
    elif side == "hot":
        bath, anc_label, boundary = spec.hot, HOT_LABEL, spec.n_sites
    else:
        raise ParameterError(f"bath side must be 'cold' or 'hot', got {side!r}")
    b_label = site_label(boundary)
    if bath.is_explicit:
        ancilla = relabel_single(bath.ancilla, anc_label)
        pair = (anc_label, b_label) if side == "cold" else (b_label, anc_label)
        want_dims = (
            (ancilla.layout.total_dim, spec.sites[boundary - 1].dimension)
            if side == "cold"
            else (spec.sites[boundary - 1].dimension, ancilla.layout.total_dim)
        )
        inter = bath.interaction
        if inter.layout.dims != want_dims:
            raise SpecError(
                f"explicit {side} interaction dims {inter.layout.dims} do not "
                f"match (ancilla, site) dims {want_dims}"
            )
        layout = SpaceLayout(want_dims, pair)
        return ancilla, HermitianOperator(layout, inter.matrix)
    omega = bath.omega if bath.omega is not None else spec.site_omega(boundary)
    ancilla = _qubit_hamiltonian(omega, anc_label)
    if side == "cold":
        inter = build_partial_swap(bath.g, anc_label, b_label)
    else:
        inter = build_partial_swap(bath.g, b_label, anc_label)
    return ancilla, inter


def relabel_single(op: HermitianOperator, label: str) -> HermitianOperator:
    if op.layout.n_factors != 1:
        raise LayoutError("expected a single-factor operator")
    return HermitianOperator(SpaceLayout(op.layout.dims, (label,)), op.matrix)


def _bond_operator(spec: EngineSpec, bond: int) -> HermitianOperator:
    """Coupling operator on sites (bond+1, bond+2), labeled in place."""
    a, b = site_label(bond + 1), site_label(bond + 2)
    if isinstance(spec.coupling, PartialSwapCoupling):
        return build_partial_swap(spec.coupling.bond_strength(bond, spec.n_sites - 1), a, b)
    if isinstance(spec.coupling, XYZCoupling):
        c = spec.coupling
        return build_xyz_coupling(c.Jx, c.Jy, c.Jz, a, b)
    op = spec.coupling.bonds[bond]
    da, db = spec.sites[bond].dimension, spec.sites[bond + 1].dimension
    if op.layout.dims != (da, db):
        raise SpecError(f"bond {bond} operator dims {op.layout.dims} do not match sites ({da}, {db})")
    return HermitianOperator(SpaceLayout((da, db), (a, b)), op.matrix)


@lru_cache(maxsize=256)
def build_work_hamiltonian(spec: EngineSpec) -> HermitianOperator:
    """Sum of local site terms plus all internal bonds, on the chain."""
    layout = spec.chain_layout()
    total = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    for site in spec.sites:
        total = total + embed_operator(site.local_hamiltonian, layout).matrix
    for bond in range(spec.n_sites - 1):
        total = total + embed_operator(_bond_operator(spec, bond), layout).matrix
    return HermitianOperator(layout, total)


@lru_cache(maxsize=256)
def build_heat_hamiltonian(spec: EngineSpec) -> HermitianOperator:
    """Local terms plus both bath couplings on the collision space.

    Internal bonds are absent: during the heat stroke the chain interior is
    decoupled and only the boundary sites talk to their ancillas.
    """
    layout = spec.collision_layout()
    total = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    for site in spec.sites:
        total = total + embed_operator(site.local_hamiltonian, layout).matrix
    for side in ("cold", "hot"):
        ancilla, inter = resolve_bath(spec, side)
        total = total + embed_operator(ancilla, layout).matrix
        total = total + embed_operator(inter, layout).matrix
    return HermitianOperator(layout, total)


def check_strict_energy_conservation(spec: EngineSpec) -> tuple[float, float]:
    """Max-abs norms of [V_x, H_boundary + H_ancilla] for each bath.

    Both vanish exactly when each ancilla is resonant with its boundary
    site, in which case no energy is trapped by switching the couplings on
    and off.
    """
    norms = []
    for side, boundary in (("cold", 1), ("hot", spec.n_sites)):
        ancilla, inter = resolve_bath(spec, side)
        pair_layout = inter.layout
        h_site = spec.sites[boundary - 1].local_hamiltonian
        local = (
            embed_operator(ancilla, pair_layout).matrix
            + embed_operator(h_site, pair_layout).matrix
        )
        comm = inter.matrix @ local - local @ inter.matrix
        norms.append(float(np.abs(comm).max()))
    return norms[0], norms[1]


@lru_cache(maxsize=256)
def bath_states(spec: EngineSpec) -> tuple[DensityMatrix, DensityMatrix]:
    """Fresh thermal ancilla states (cold, hot) used by every heat stroke."""
    cold_anc, _ = resolve_bath(spec, "cold")
    hot_anc, _ = resolve_bath(spec, "hot")
    return (
        thermal_state(cold_anc, spec.cold.temperature),
        thermal_state(hot_anc, spec.hot.temperature),
    )


# -- JSON configuration -------------------------------------------------------

_COUPLING_KEYS = {
    "partial_swap": {"g"},
    "xx": {"Jx"},
    "xxz": {"Jx", "Jz"},
    "xyz": {"Jx", "Jy", "Jz"},
}


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = required - set(obj)
    if missing:
        raise SpecError(f"missing key(s) {sorted(missing)} in {where}")


def _number(obj: dict, key: str, where: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SpecError(f"{where}.{key} must be a number, got {val!r}")
    return float(val)


def _coupling_from_json(obj: Any) -> Coupling:
    if not isinstance(obj, dict):
        raise SpecError("coupling must be an object")
    kind = obj.get("type")
    if kind not in _COUPLING_KEYS:
        raise SpecError(
            f"coupling type must be one of {sorted(_COUPLING_KEYS)}, got {kind!r}"
        )
    keys = _COUPLING_KEYS[kind]
    _require_keys(obj, keys | {"type"}, keys | {"type"}, "coupling")
    if kind == "partial_swap":
        return PartialSwapCoupling(g=_number(obj, "g", "coupling"))
    if kind == "xx":
        j = _number(obj, "Jx", "coupling")
        return XYZCoupling(Jx=j, Jy=j, Jz=0.0)
    if kind == "xxz":
        j = _number(obj, "Jx", "coupling")
        return XYZCoupling(Jx=j, Jy=j, Jz=_number(obj, "Jz", "coupling"))
    return XYZCoupling(
        Jx=_number(obj, "Jx", "coupling"),
        Jy=_number(obj, "Jy", "coupling"),
        Jz=_number(obj, "Jz", "coupling"),
    )


def _coupling_to_json(coupling: Coupling) -> dict:
    if isinstance(coupling, PartialSwapCoupling):
        if isinstance(coupling.g, tuple):
            raise SpecError("per-bond partial-swap strengths have no JSON form")
        return {"type": "partial_swap", "g": coupling.g}
    if isinstance(coupling, XYZCoupling):
        if coupling.Jz == 0.0 and coupling.Jx == coupling.Jy:
            return {"type": "xx", "Jx": coupling.Jx}
        if coupling.Jx == coupling.Jy:
            return {"type": "xxz", "Jx": coupling.Jx, "Jz": coupling.Jz}
        return {"type": "xyz", "Jx": coupling.Jx, "Jy": coupling.Jy, "Jz": coupling.Jz}
    raise SpecError("explicit bond operators have no JSON form")


def _bath_from_json(obj: Any, where: str) -> BathSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{where} must be an object")
    _require_keys(obj, {"T", "g", "omega"}, {"T", "g"}, where)
    omega = None
    if "omega" in obj:
        omega = _number(obj, "omega", where)
    return BathSpec(temperature=_number(obj, "T", where), g=_number(obj, "g", where), omega=omega)


def _bath_to_json(bath: BathSpec) -> dict:
    if bath.is_explicit:
        raise SpecError("explicit baths have no JSON form")
    out: dict[str, Any] = {"T": bath.temperature, "g": bath.g}
    if bath.omega is not None:
        out["omega"] = bath.omega
    return out


TOP_LEVEL_KEYS = {"sites", "coupling", "baths", "tau_q", "tau_w", "initial_state", "sweep", "overrides"}
ENGINE_KEYS = {"sites", "coupling", "baths", "tau_q", "tau_w"}


def spec_from_json(doc: dict) -> EngineSpec:
    """Engine from a parsed JSON document; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise SpecError("top-level config must be an object")
    _require_keys(doc, TOP_LEVEL_KEYS, ENGINE_KEYS, "config")
    sites_doc = doc["sites"]
    if not isinstance(sites_doc, list) or len(sites_doc) < 2:
        raise SpecError("sites must be a list of at least 2 entries")
    omegas = []
    for i, entry in enumerate(sites_doc, start=1):
        if not isinstance(entry, dict):
            raise SpecError(f"sites[{i - 1}] must be an object")
        _require_keys(entry, {"omega"}, {"omega"}, f"sites[{i - 1}]")
        omegas.append(_number(entry, "omega", f"sites[{i - 1}]"))
    baths_doc = doc["baths"]
    if not isinstance(baths_doc, dict):
        raise SpecError("baths must be an object")
    _require_keys(baths_doc, {"cold", "hot"}, {"cold", "hot"}, "baths")
    cold = _bath_from_json(baths_doc["cold"], "baths.cold")
    hot = _bath_from_json(baths_doc["hot"], "baths.hot")
    sites = tuple(qubit_site(w, i) for i, w in enumerate(omegas, start=1))
    return EngineSpec(
        sites=sites,
        coupling=_coupling_from_json(doc["coupling"]),
        cold=cold,
        hot=hot,
        tau_q=_number(doc, "tau_q", "config"),
        tau_w=_number(doc, "tau_w", "config"),
    )


def spec_to_json(spec: EngineSpec) -> dict:
    """JSON-ready document equivalent to ``spec`` (qubit chains only)."""
    if not spec.all_qubits:
        raise SpecError("only qubit chains have a JSON form")
    return {
        "sites": [{"omega": spec.site_omega(i)} for i in range(1, spec.n_sites + 1)],
        "coupling": _coupling_to_json(spec.coupling),
        "baths": {"cold": _bath_to_json(spec.cold), "hot": _bath_to_json(spec.hot)},
        "tau_q": spec.tau_q,
        "tau_w": spec.tau_w,
    }


def load_config(path: str) -> dict:
    """Parse a JSON config file; malformed input raises ``SpecError``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError(f"config {path} must contain a JSON object")
    return doc


def with_durations(spec: EngineSpec, tau_q: float | None = None, tau_w: float | None = None) -> EngineSpec:
    """Copy of ``spec`` with one or both stroke durations replaced."""
    kwargs = {}
    if tau_q is not None:
        kwargs["tau_q"] = tau_q
    if tau_w is not None:
        kwargs["tau_w"] = tau_w
    return replace(spec, **kwargs) if kwargs else spec
