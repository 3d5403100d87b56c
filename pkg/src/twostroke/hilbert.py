"""Dense operators and states on labeled tensor-product Hilbert spaces.

Every operator and state carries a :class:`SpaceLayout` naming its tensor
factors, so composition, embedding and partial traces can be checked by
label instead of by positional convention.  All state-changing operations
return new objects; matrices are write-protected after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import LayoutError, ParameterError

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "POSITIVITY_TOL",
    "ENTROPY_EIG_CUTOFF",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "SpaceLayout",
    "HermitianOperator",
    "DensityMatrix",
    "tensor_compose",
    "partial_trace",
    "thermal_state",
    "evolve_unitary",
    "von_neumann_entropy",
    "embed_operator",
    "expectation",
    "trace_distance",
    "relabel",
]

# Structural tolerances: properties a freshly constructed object must satisfy.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
# Eigenvalues of a state may dip slightly negative from round-off.
POSITIVITY_TOL = 1e-10
# Eigenvalues below this cutoff are treated as exact zeros in entropies.
ENTROPY_EIG_CUTOFF = 1e-14


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


PAULI_X = _readonly([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = _readonly([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = _readonly([[1.0, 0.0], [0.0, -1.0]])
SIGMA_PLUS = _readonly([[0.0, 1.0], [0.0, 0.0]])
SIGMA_MINUS = _readonly([[0.0, 0.0], [1.0, 0.0]])


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered, labeled tensor factorization of a Hilbert space."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise LayoutError(
                f"{len(self.dims)} dims but {len(self.labels)} labels"
            )
        if len(self.dims) == 0:
            raise LayoutError("layout needs at least one factor")
        if any(d < 1 for d in self.dims):
            raise LayoutError(f"factor dimensions must be >= 1, got {self.dims}")
        if len(set(self.labels)) != len(self.labels):
            raise LayoutError(f"duplicate factor labels in {self.labels}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown factor label {label!r}; have {self.labels}") from None

    def axes_of(self, labels: Iterable[str]) -> list[int]:
        return [self.position(s) for s in labels]

    def sublayout(self, labels: Iterable[str]) -> "SpaceLayout":
        """Sub-layout of the named factors, kept in this layout's order."""
        wanted = set(labels)
        for s in wanted:
            self.position(s)
        keep = [i for i, s in enumerate(self.labels) if s in wanted]
        return SpaceLayout(
            dims=tuple(self.dims[i] for i in keep),
            labels=tuple(self.labels[i] for i in keep),
        )

    def dim_of(self, label: str) -> int:
        return self.dims[self.position(label)]


def _check_square(matrix: np.ndarray, dim: int, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise LayoutError(f"{what}: matrix shape {m.shape} does not match layout dim {dim}")
    return m


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix tied to a tensor-space layout."""

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _check_square(self.matrix, self.layout.total_dim, "HermitianOperator")
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise ParameterError(
                "matrix is not Hermitian within "
                f"{HERMITICITY_TOL:g} (max deviation "
                f"{np.abs(m - m.conj().T).max():.3e})"
            )
        object.__setattr__(self, "matrix", _readonly(m))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HermitianOperator)
            and self.layout == other.layout
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        return hash((self.layout, self.matrix.shape, self.matrix.tobytes()))

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and eigenvectors, cached per instance."""
        w, v = np.linalg.eigh(self.matrix)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A quantum state: Hermitian, unit trace, positive within round-off."""

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = _check_square(self.matrix, self.layout.total_dim, "DensityMatrix")
        herm = np.abs(m - m.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise ParameterError(f"state is not Hermitian within {HERMITICITY_TOL:g} ({herm:.3e})")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ParameterError(f"state trace {tr} differs from 1 beyond {TRACE_TOL:g}")
        low = np.linalg.eigvalsh(m).min()
        if low < -POSITIVITY_TOL:
            raise ParameterError(f"state has eigenvalue {low:.3e} below -{POSITIVITY_TOL:g}")
        object.__setattr__(self, "matrix", _readonly(m))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DensityMatrix)
            and self.layout == other.layout
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        return hash((self.layout, self.matrix.shape, self.matrix.tobytes()))

    @property
    def dim(self) -> int:
        return self.layout.total_dim


Operand = Union[HermitianOperator, DensityMatrix]


def tensor_compose(ops: Sequence[Operand]) -> Operand:
    """Kronecker product of operators/states in the given order.

    The result layout is the concatenation of the operand layouts.  If every
    operand is a :class:`DensityMatrix` the result is one as well, otherwise
    a :class:`HermitianOperator`.
    """
    if len(ops) == 0:
        raise LayoutError("tensor_compose needs at least one operand")
    labels: list[str] = []
    dims: list[int] = []
    for op in ops:
        labels.extend(op.layout.labels)
        dims.extend(op.layout.dims)
    if len(set(labels)) != len(labels):
        raise LayoutError(f"duplicate factor labels when composing: {labels}")
    matrix = reduce(np.kron, [op.matrix for op in ops])
    layout = SpaceLayout(tuple(dims), tuple(labels))
    if all(isinstance(op, DensityMatrix) for op in ops):
        return DensityMatrix(layout, matrix)
    return HermitianOperator(layout, matrix)


def _partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    """Partial trace of a square matrix over the factors not in keep_axes."""
    k = len(dims)
    tensor = matrix.reshape(tuple(dims) + tuple(dims))
    dropped = sorted((i for i in range(k) if i not in keep_axes), reverse=True)
    remaining = k
    for ax in dropped:
        tensor = np.trace(tensor, axis1=ax, axis2=ax + remaining)
        remaining -= 1
    d_keep = int(np.prod([dims[i] for i in sorted(keep_axes)])) if keep_axes else 1
    return tensor.reshape(d_keep, d_keep)


def partial_trace(state: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every factor not named in ``keep``; order is preserved."""
    keep = list(keep)
    if len(keep) == 0:
        raise LayoutError("partial_trace must keep at least one factor")
    if len(set(keep)) != len(keep):
        raise LayoutError(f"repeated labels in keep list: {keep}")
    axes = sorted(state.layout.axes_of(keep))
    out = _partial_trace_matrix(state.matrix, state.layout.dims, axes)
    return DensityMatrix(state.layout.sublayout(keep), out)


def thermal_state(hamiltonian: HermitianOperator, temperature: float) -> DensityMatrix:
    """Gibbs state exp(-H/T)/Z; T = +inf gives the maximally mixed state."""
    if not (temperature > 0.0):
        raise ParameterError(f"temperature must be positive, got {temperature}")
    d = hamiltonian.layout.total_dim
    if math.isinf(temperature):
        return DensityMatrix(hamiltonian.layout, np.eye(d) / d)
    w, v = hamiltonian.eigensystem
    weights = np.exp(-(w - w.min()) / temperature)
    pops = weights / weights.sum()
    return DensityMatrix(hamiltonian.layout, (v * pops) @ v.conj().T)


def evolve_unitary(hamiltonian: HermitianOperator, tau: float, state: DensityMatrix) -> DensityMatrix:
    """Conjugate ``state`` by exp(-i H tau), computed by eigendecomposition."""
    if tau < 0:
        raise ParameterError(f"evolution duration must be >= 0, got {tau}")
    if hamiltonian.layout != state.layout:
        raise LayoutError(
            f"hamiltonian layout {hamiltonian.layout.labels} does not match "
            f"state layout {state.layout.labels}"
        )
    w, v = hamiltonian.eigensystem
    u = (v * np.exp(-1j * w * tau)) @ v.conj().T
    out = u @ state.matrix @ u.conj().T
    out = (out + out.conj().T) / 2.0
    return DensityMatrix(state.layout, out)


def von_neumann_entropy(state: DensityMatrix) -> float:
    """Entropy -tr(rho ln rho) in nats; eigenvalues <= cutoff contribute 0."""
    w = np.linalg.eigvalsh(state.matrix)
    w = w[w > ENTROPY_EIG_CUTOFF]
    return float(-(w * np.log(w)).sum())


def embed_operator(op: HermitianOperator, layout: SpaceLayout) -> HermitianOperator:
    """Extend ``op`` by identities onto ``layout``.

    The factors of ``op`` must appear in ``layout`` as a contiguous run in
    the same order (nearest-neighbour supports always are).
    """
    positions = layout.axes_of(op.layout.labels)
    start = positions[0]
    if positions != list(range(start, start + len(positions))):
        raise LayoutError(
            f"operator factors {op.layout.labels} are not a contiguous run "
            f"of {layout.labels}"
        )
    for label in op.layout.labels:
        if layout.dim_of(label) != op.layout.dim_of(label):
            raise LayoutError(
                f"factor {label!r} has dim {op.layout.dim_of(label)} in the "
                f"operator but {layout.dim_of(label)} in the target layout"
            )
    d_left = int(np.prod(layout.dims[:start])) if start else 1
    d_right = int(np.prod(layout.dims[start + len(positions):])) if start + len(positions) < layout.n_factors else 1
    matrix = np.kron(np.kron(np.eye(d_left), op.matrix), np.eye(d_right))
    return HermitianOperator(layout, matrix)


def expectation(op: HermitianOperator, state: DensityMatrix) -> float:
    """tr(op @ rho), embedding ``op`` first if its support is smaller."""
    if op.layout != state.layout:
        op = embed_operator(op, state.layout)
    val = np.trace(op.matrix @ state.matrix)
    return float(val.real)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2)||a - b||_1 via the eigenvalues of the Hermitian difference."""
    if a.layout != b.layout:
        raise LayoutError("trace_distance requires matching layouts")
    w = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(np.abs(w).sum() / 2.0)


def relabel(op: Operand, labels: Sequence[str]) -> Operand:
    """Same matrix, new factor labels (dimension structure unchanged)."""
    layout = SpaceLayout(op.layout.dims, tuple(labels))
    if isinstance(op, DensityMatrix):
        return DensityMatrix(layout, op.matrix)
    return HermitianOperator(layout, op.matrix)
