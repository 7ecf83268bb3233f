"""Exact linear algebra on small finite-dimensional complex Hilbert spaces.

States and operators are immutable value objects backed by read-only numpy
arrays; all operations are pure functions, so everything here is safe to use
concurrently without coordination.

Subsystem ordering convention used throughout the package:
(spin, photon A, photon B), with the first factor as the slowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

NORM_ATOL = 1e-12
HERM_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIG_ATOL = 1e-10
UNITARY_ATOL = 1e-10
PROJECTOR_ATOL = 1e-10

OperatorKind = Literal["unitary", "projector", "observable"]


class KindMismatchError(TypeError):
    """Raised when operands of an operation have incompatible kinds."""


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on a tensor product of small subsystems."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", _frozen(np.ravel(self.amplitudes)))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if int(np.prod(self.dims)) != self.amplitudes.size:
            raise ValueError(
                f"product of dims {self.dims} != amplitude count {self.amplitudes.size}"
            )
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: |psi|^2 = {norm}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        """Return the rank-one density operator |psi><psi|."""
        mat = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityOperator(mat, self.dims)


def state_vector(amplitudes: Sequence[complex], dims: Sequence[int]) -> StateVector:
    """Build a StateVector, normalizing the given amplitudes."""
    amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return StateVector(amps / norm, tuple(dims))


def basis_state(dims: Sequence[int], indices: Sequence[int]) -> StateVector:
    """Computational basis state |i0 i1 ...> on subsystems of the given dims."""
    dims = tuple(int(d) for d in dims)
    amps = np.zeros(int(np.prod(dims)), dtype=np.complex128)
    amps[int(np.ravel_multi_index(tuple(indices), dims))] = 1.0
    return StateVector(amps, dims)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite density matrix."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=np.complex128))
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        n = int(np.prod(self.dims))
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} incompatible with dims {self.dims}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ValueError("density matrix not Hermitian")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"density matrix trace {tr} != 1")
        if float(np.min(np.linalg.eigvalsh(mat))) < -EIG_ATOL:
            raise ValueError("density matrix has a significantly negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class OperatorMatrix:
    """Square operator tagged as unitary, projector or observable."""

    matrix: np.ndarray
    kind: OperatorKind

    def __post_init__(self) -> None:
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=np.complex128))
        object.__setattr__(self, "matrix", _frozen(mat))
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        if self.kind == "unitary":
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if err > UNITARY_ATOL:
                raise ValueError(f"operator tagged unitary fails U+U=I by {err}")
        elif self.kind == "projector":
            err = np.max(np.abs(mat @ mat - mat))
            if err > PROJECTOR_ATOL:
                raise ValueError(f"operator tagged projector fails P^2=P by {err}")
        elif self.kind == "observable":
            if np.max(np.abs(mat - mat.conj().T)) > HERM_ATOL:
                raise ValueError("observable must be Hermitian")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")


def projector_onto(state: StateVector) -> OperatorMatrix:
    """Rank-one projector |psi><psi| as an OperatorMatrix."""
    return OperatorMatrix(np.outer(state.amplitudes, state.amplitudes.conj()), "projector")


def tensor_product(a, b):
    """Tensor product of two states of the same kind.

    The first operand becomes the slowest index; dims concatenate.  Mixing a
    StateVector with a DensityOperator raises KindMismatchError.
    """
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims)
    raise KindMismatchError(
        f"cannot tensor {type(a).__name__} with {type(b).__name__}"
    )


def permute_subsystems(state: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder subsystems so new subsystem i is old subsystem order[i]."""
    order = tuple(order)
    if sorted(order) != list(range(len(state.dims))):
        raise ValueError(f"invalid permutation {order} for {len(state.dims)} subsystems")
    amps = state.amplitudes.reshape(state.dims).transpose(order).ravel()
    dims = tuple(state.dims[i] for i in order)
    return StateVector(amps, dims)


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep`` (indices kept in order)."""
    keep = tuple(int(k) for k in keep)
    n = len(rho.dims)
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid keep indices {keep} for {n} subsystems")
    if tuple(sorted(keep)) == tuple(range(n)) and keep == tuple(range(n)):
        return rho
    traced = [i for i in range(n) if i not in keep]
    tensor = rho.matrix.reshape(rho.dims + rho.dims)
    # Contract row index i with column index n + i for each traced subsystem.
    for offset, idx in enumerate(traced):
        i = idx - offset  # earlier contractions shrink the axis count
        rank = tensor.ndim
        tensor = np.trace(tensor, axis1=i, axis2=rank // 2 + i)
    kept_sorted = [i for i in range(n) if i in keep]
    new_dims = tuple(rho.dims[i] for i in kept_sorted)
    mat = tensor.reshape(int(np.prod(new_dims)), int(np.prod(new_dims)))
    if keep != tuple(kept_sorted):
        # Reorder the kept subsystems to match the requested order.
        perm = [kept_sorted.index(k) for k in keep]
        m = len(new_dims)
        full = mat.reshape(new_dims + new_dims)
        full = full.transpose(perm + [m + p for p in perm])
        new_dims = tuple(rho.dims[i] for i in keep)
        mat = full.reshape(int(np.prod(new_dims)), int(np.prod(new_dims)))
    return DensityOperator(mat, new_dims)


def project_and_renormalize(state, proj: OperatorMatrix):
    """Apply a projector and renormalize.

    Returns ``(state', probability)`` where probability is the expectation of
    the projector before renormalization.  Zero probability yields
    ``(None, 0.0)`` rather than raising, so Monte Carlo rejection paths get a
    non-exceptional signal.
    """
    if proj.kind != "projector":
        raise KindMismatchError(f"expected projector, got kind {proj.kind!r}")
    p_mat = proj.matrix
    if isinstance(state, StateVector):
        if p_mat.shape[0] != state.dim:
            raise ValueError("projector dimension does not match state")
        projected = p_mat @ state.amplitudes
        prob = float(np.real(np.vdot(state.amplitudes, projected)))
        prob = min(max(prob, 0.0), 1.0)
        if prob <= NORM_ATOL:
            return None, 0.0
        return StateVector(projected / np.sqrt(prob), state.dims), prob
    if isinstance(state, DensityOperator):
        if p_mat.shape[0] != state.dim:
            raise ValueError("projector dimension does not match state")
        prob = float(np.real(np.trace(p_mat @ state.matrix)))
        prob = min(max(prob, 0.0), 1.0)
        if prob <= NORM_ATOL:
            return None, 0.0
        mat = p_mat @ state.matrix @ p_mat / prob
        mat = 0.5 * (mat + mat.conj().T)
        return DensityOperator(mat, state.dims), prob
    raise KindMismatchError(f"cannot project {type(state).__name__}")


def fidelity(rho: DensityOperator, target: StateVector) -> float:
    """Fidelity <target|rho|target> of a density operator against a pure state."""
    if rho.dims != target.dims:
        raise ValueError(f"dimension mismatch: {rho.dims} vs {target.dims}")
    val = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"fidelity has significant imaginary part {val.imag}")
    return float(min(max(val.real, 0.0), 1.0))


def entanglement_entropy_bits(state: StateVector, subsystem: int) -> float:
    """Von Neumann entropy (in bits) of one subsystem of a pure state."""
    rho = partial_trace(state.density(), [subsystem])
    eigs = np.linalg.eigvalsh(rho.matrix)
    eigs = eigs[eigs > 1e-14]
    return float(-np.sum(eigs * np.log2(eigs)))
