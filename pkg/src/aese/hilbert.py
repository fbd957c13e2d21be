"""Tensor-product Hilbert spaces for two trapped ions and their motional modes.

Subsystems are ordered ions first, then modes, and the first declared
subsystem varies fastest in the flat basis index.  Ion levels are labelled

    2-level:  0 -> |0>,  1 -> |1>
    3-level:  0 -> |0>,  1 -> |1c>,  2 -> |1z>

Operators are stored as sparse CSR matrices; ``LinearOperator.dense()``
returns the full matrix for small spaces and tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12


class HilbertError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceDescriptor:
    ion_levels: tuple[int, ...]
    mode_truncations: tuple[int, ...]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.ion_levels) + tuple(self.mode_truncations)

    @property
    def n_ions(self) -> int:
        return len(self.ion_levels)

    @property
    def n_modes(self) -> int:
        return len(self.mode_truncations)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))

    @property
    def spin_dimension(self) -> int:
        return int(np.prod(self.ion_levels))

    @property
    def motional_dimension(self) -> int:
        return int(np.prod(self.mode_truncations)) if self.mode_truncations else 1

    def mode_axis(self, mode_index: int) -> int:
        if not 0 <= mode_index < self.n_modes:
            raise HilbertError(f"mode index {mode_index} out of range for {self.n_modes} modes")
        return self.n_ions + mode_index

    def index(self, labels: Sequence[int]) -> int:
        """Flat basis index of a label tuple (first subsystem fastest)."""
        if len(labels) != len(self.dims):
            raise HilbertError("label tuple length does not match subsystem count")
        idx = 0
        stride = 1
        for lab, d in zip(labels, self.dims):
            if not 0 <= lab < d:
                raise HilbertError(f"label {lab} out of range for subsystem of size {d}")
            idx += lab * stride
            stride *= d
        return idx

    def labels(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dimension:
            raise HilbertError(f"basis index {index} out of range")
        out = []
        for d in self.dims:
            out.append(index % d)
            index //= d
        return tuple(out)

    def as_tensor(self, vec: np.ndarray) -> np.ndarray:
        """View a flat vector as a tensor with axes in declared subsystem order."""
        # first-fastest ordering == Fortran order over declared dims
        return np.asarray(vec).reshape(self.dims, order="F")

    def from_tensor(self, tensor: np.ndarray) -> np.ndarray:
        return np.asarray(tensor).reshape(-1, order="F")


def build_space(ion_levels: Sequence[int], mode_truncations: Sequence[int]) -> SpaceDescriptor:
    ion_levels = tuple(int(x) for x in ion_levels)
    mode_truncations = tuple(int(x) for x in mode_truncations)
    if not ion_levels:
        raise HilbertError("at least one ion is required")
    if any(lv not in (2, 3) for lv in ion_levels):
        raise HilbertError(f"ion level counts must be 2 or 3, got {ion_levels}")
    if any(n < 1 for n in mode_truncations):
        raise HilbertError(f"mode truncations must be >= 1, got {mode_truncations}")
    space = SpaceDescriptor(ion_levels, mode_truncations)
    if space.dimension < 4:
        raise HilbertError(f"total dimension {space.dimension} < 4")
    return space


@dataclass(frozen=True)
class QuantumState:
    space: SpaceDescriptor
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.space.dimension,):
            raise HilbertError(
                f"amplitude vector has shape {amps.shape}, expected ({self.space.dimension},)"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuantumState") -> float:
        return abs(self.overlap(other)) ** 2


def product_state(space: SpaceDescriptor, spin: np.ndarray, fock: Sequence[int]) -> QuantumState:
    """|spin> (vector over the ion factor) times Fock states |n_1, n_2, ...>."""
    spin = np.asarray(spin, dtype=np.complex128).reshape(-1)
    if spin.size != space.spin_dimension:
        raise HilbertError("spin vector dimension mismatch")
    if len(fock) != space.n_modes:
        raise HilbertError("one Fock number per mode required")
    motion = np.zeros(space.motional_dimension, dtype=np.complex128)
    idx, stride = 0, 1
    for n, d in zip(fock, space.mode_truncations):
        if not 0 <= n < d:
            raise HilbertError(f"Fock number {n} outside truncation {d}")
        idx += n * stride
        stride *= d
    motion[idx] = 1.0
    # spin factor is fastest-varying
    return QuantumState(space, np.kron(motion, spin))


def spin_basis_vector(space: SpaceDescriptor, levels: Sequence[int]) -> np.ndarray:
    vec = np.zeros(space.spin_dimension, dtype=np.complex128)
    idx, stride = 0, 1
    for lab, d in zip(levels, space.ion_levels):
        idx += lab * stride
        stride *= d
    vec[idx] = 1.0
    return vec


@dataclass(frozen=True, eq=False)
class LinearOperator:
    space: SpaceDescriptor
    matrix: sp.csr_matrix
    hermitian: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.complex128)
        n = self.space.dimension
        if m.shape != (n, n):
            raise HilbertError(f"operator shape {m.shape} does not match dimension {n}")
        m.sum_duplicates()
        m.eliminate_zeros()
        object.__setattr__(self, "matrix", m)
        if self.hermitian:
            dev = hermitian_deviation(m)
            if dev >= HERMITIAN_TOL * max(1.0, _max_abs(m)):
                raise HilbertError(f"operator flagged Hermitian but ||A - A^dag||_max = {dev:.3e}")

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conj().T.tocsr(), self.hermitian, self.label + "^dag")

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            _same_space(self, other)
            return LinearOperator(self.space, self.matrix @ other.matrix)
        if isinstance(other, QuantumState):
            return QuantumState(self.space, self.matrix @ other.amplitudes)
        return self.matrix @ other

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        _same_space(self, other)
        return LinearOperator(self.space, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        _same_space(self, other)
        return LinearOperator(self.space, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "LinearOperator":
        herm = self.hermitian and np.isreal(scalar)
        return LinearOperator(self.space, self.matrix * scalar, bool(herm))

    __rmul__ = __mul__

    def commutator(self, other: "LinearOperator") -> "LinearOperator":
        _same_space(self, other)
        return LinearOperator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def max_abs(self) -> float:
        return _max_abs(self.matrix)

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))


def _max_abs(m) -> float:
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


def hermitian_deviation(m) -> float:
    """max |M - M^dag| for sparse or dense M."""
    if sp.issparse(m):
        return _max_abs((m - m.conj().T).tocsr())
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def _same_space(a: LinearOperator, b: LinearOperator) -> None:
    if a.space != b.space:
        raise HilbertError("operators live on different spaces")


# ---------------------------------------------------------------------------
# embedding


def embed(space: SpaceDescriptor, factors: Mapping[int, np.ndarray]) -> sp.csr_matrix:
    """Kronecker-embed small per-subsystem matrices, identity elsewhere."""
    mats = []
    for axis, d in enumerate(space.dims):
        f = factors.get(axis)
        if f is None:
            mats.append(sp.identity(d, dtype=np.complex128, format="csr"))
        else:
            f = np.asarray(f, dtype=np.complex128)
            if f.shape != (d, d):
                raise HilbertError(f"factor for subsystem {axis} has shape {f.shape}, expected {(d, d)}")
            mats.append(sp.csr_matrix(f))
    # first-declared fastest => it is the rightmost Kronecker factor
    return reduce(lambda acc, m: sp.kron(m, acc, format="csr"), mats[1:], mats[0]).tocsr()


def identity(space: SpaceDescriptor) -> LinearOperator:
    return LinearOperator(space, sp.identity(space.dimension, dtype=np.complex128, format="csr"), True, "I")


def _ladder(n_max: int) -> np.ndarray:
    a = np.zeros((n_max, n_max), dtype=np.complex128)
    for n in range(1, n_max):
        a[n - 1, n] = np.sqrt(n)
    return a


def annihilation(space: SpaceDescriptor, mode_index: int) -> LinearOperator:
    axis = space.mode_axis(mode_index)
    a = _ladder(space.dims[axis])
    return LinearOperator(space, embed(space, {axis: a}), label=f"a{mode_index}")


def creation(space: SpaceDescriptor, mode_index: int) -> LinearOperator:
    return annihilation(space, mode_index).dag()


def number(space: SpaceDescriptor, mode_index: int) -> LinearOperator:
    axis = space.mode_axis(mode_index)
    n = np.diag(np.arange(space.dims[axis], dtype=np.complex128))
    return LinearOperator(space, embed(space, {axis: n}), True, f"n{mode_index}")


def _check_ion(space: SpaceDescriptor, ion: int) -> None:
    if not 0 <= ion < space.n_ions:
        raise HilbertError(f"ion index {ion} out of range")


def ion_projector(space: SpaceDescriptor, ion: int, level: int) -> LinearOperator:
    _check_ion(space, ion)
    d = space.ion_levels[ion]
    p = np.zeros((d, d), dtype=np.complex128)
    p[level, level] = 1.0
    return LinearOperator(space, embed(space, {ion: p}), True)


def sigma_z(space: SpaceDescriptor, ion: int) -> LinearOperator:
    """Pauli-z on the {|0>, |1>} (or {|0>, |1c>}) pair; |1z> has weight 0."""
    _check_ion(space, ion)
    d = space.ion_levels[ion]
    z = np.zeros((d, d), dtype=np.complex128)
    z[0, 0], z[1, 1] = 1.0, -1.0
    return LinearOperator(space, embed(space, {ion: z}), True, f"sz{ion}")


def collective_pauli_z(space: SpaceDescriptor, coefficients: Sequence[float]) -> LinearOperator:
    coefficients = list(coefficients)
    if len(coefficients) != space.n_ions:
        raise HilbertError(f"{len(coefficients)} coefficients for {space.n_ions} ions")
    m = sp.csr_matrix((space.dimension, space.dimension), dtype=np.complex128)
    for k, b in enumerate(coefficients):
        if b:
            m = m + float(b) * sigma_z(space, k).matrix
    return LinearOperator(space, m, True, "Sz")


def _require_three_level(space: SpaceDescriptor) -> None:
    if space.n_ions != 2 or any(lv != 3 for lv in space.ion_levels):
        raise HilbertError("operation requires two 3-level ions {|0>, |1c>, |1z>}")


def zeeman_projector_collective(space: SpaceDescriptor) -> LinearOperator:
    """P_z = |1z><1z|_1 - |1z><1z|_2."""
    _require_three_level(space)
    return LinearOperator(space, ion_projector(space, 0, 2).matrix - ion_projector(space, 1, 2).matrix, True, "Pz")


def clock_projector_collective(space: SpaceDescriptor) -> LinearOperator:
    """P_c = |1c><1c|_1 - |1c><1c|_2."""
    _require_three_level(space)
    return LinearOperator(space, ion_projector(space, 0, 1).matrix - ion_projector(space, 1, 1).matrix, True, "Pc")


def collective_cz_operators(space: SpaceDescriptor) -> tuple[LinearOperator, LinearOperator, LinearOperator]:
    """Collective Pauli operators on each ion's {|1c>, |1z>} pair.

    Sx = sum |1z><1c| + |1c><1z|,  Sy = sum i(|1z><1c| - |1c><1z|),
    Sz = sum |1c><1c| - |1z><1z|.
    """
    _require_three_level(space)
    sx = np.zeros((3, 3), dtype=np.complex128)
    sx[2, 1] = sx[1, 2] = 1.0
    sy = np.zeros((3, 3), dtype=np.complex128)
    sy[2, 1], sy[1, 2] = 1j, -1j
    sz = np.diag([0.0, 1.0, -1.0]).astype(np.complex128)
    out = []
    for name, single in (("Sx_cz", sx), ("Sy_cz", sy), ("Sz_cz", sz)):
        m = embed(space, {0: single}) + embed(space, {1: single})
        out.append(LinearOperator(space, m, True, name))
    return tuple(out)


def qubit_sector_projectors(space: SpaceDescriptor) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Diagonal masks for each computational sector.

    An ion's qubit label is 0 for |0> and 1 for the {|1>} (2-level) or
    {|1c>, |1z>} (3-level) manifold.  Returns ``[(bits, mask), ...]`` with
    bits ordered like the computational basis (first ion fastest).
    """
    dims = space.dims
    grids = np.indices(dims).reshape(len(dims), -1, order="F")
    out = []
    n = space.n_ions
    for flat in range(2**n):
        bits = tuple((flat >> k) & 1 for k in range(n))
        mask = np.ones(space.dimension, dtype=bool)
        for k, bit in enumerate(bits):
            lab = grids[k]
            mask &= (lab == 0) if bit == 0 else (lab >= 1)
        out.append((bits, mask))
    return out


def leakage(state, top_k: int = 2, space: SpaceDescriptor | None = None) -> float:
    """Population in the ``top_k`` highest Fock levels, summed over modes."""
    if isinstance(state, QuantumState):
        space, amps = state.space, state.amplitudes
    else:
        amps = np.asarray(state)
        if space is None:
            raise HilbertError("space required for raw amplitude vectors")
    if top_k < 1:
        raise HilbertError("top_k must be >= 1")
    probs = space.as_tensor(np.abs(amps) ** 2)
    total = 0.0
    for m in range(space.n_modes):
        axis = space.n_ions + m
        other = tuple(i for i in range(probs.ndim) if i != axis)
        marginal = probs.sum(axis=other)
        total += float(marginal[-top_k:].sum())
    return total
