"""Term-sum Hamiltonians H(t)/hbar = sum_k c_k(t) O_k in rad/s.

A ``Term`` with ``conjugate_pair=True`` stands for c(t) O + conj(c(t)) O^dag,
which is how every sideband coupling is written.  Coefficient callables must
accept numpy arrays of times.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ..hilbert import HilbertError, LinearOperator, SpaceDescriptor

Coefficient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Term:
    operator: LinearOperator
    coefficient: Coefficient
    conjugate_pair: bool = False
    frequency: float = 0.0  # fastest angular frequency in the coefficient
    label: str = ""

    def expanded(self) -> list[tuple[sp.csr_matrix, Coefficient]]:
        if not self.conjugate_pair:
            return [(self.operator.matrix, self.coefficient)]
        f = self.coefficient
        return [
            (self.operator.matrix, f),
            (self.operator.matrix.conj().T.tocsr(), lambda t, f=f: np.conj(f(t))),
        ]


def constant(value: float) -> Coefficient:
    value = float(value)
    return lambda t: np.full(np.shape(t), value) if np.ndim(t) else value


@dataclass(frozen=True, eq=False)
class TimeDependentHamiltonian:
    space: SpaceDescriptor
    terms: tuple[Term, ...]
    t_final: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.operator.space != self.space:
                raise HilbertError(f"term {term.label!r} lives on a different space")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")

    @property
    def frequency_scale(self) -> float:
        """Largest rate in the problem: coefficient frequencies and coupling sizes."""
        scale = 0.0
        probe = np.linspace(0.0, self.t_final, 257)
        for term in self.terms:
            amp = float(np.max(np.abs(np.asarray(term.coefficient(probe)))) * term.operator.max_abs())
            scale = max(scale, term.frequency, amp)
        return scale

    def with_terms(self, extra: Sequence[Term], **meta) -> "TimeDependentHamiltonian":
        md = dict(self.metadata)
        md.update(meta)
        return replace(self, terms=self.terms + tuple(extra), metadata=md)

    def expanded(self) -> list[tuple[sp.csr_matrix, Coefficient]]:
        out = []
        for term in self.terms:
            out.extend(term.expanded())
        return out

    def matrix_at(self, t: float) -> sp.csr_matrix:
        n = self.space.dimension
        m = sp.csr_matrix((n, n), dtype=np.complex128)
        for mat, f in self.expanded():
            m = m + complex(f(np.asarray([t], dtype=float))[0]) * mat
        return m

    def dense_at(self, t: float) -> np.ndarray:
        return self.matrix_at(t).toarray()

    def compile(self) -> "CompiledHamiltonian":
        return CompiledHamiltonian.from_hamiltonian(self)


@dataclass(frozen=True, eq=False)
class CompiledHamiltonian:
    """Flattened CSR layout with one coefficient slot per expanded term.

    Row ``i`` holds entries ``indptr[i]:indptr[i+1]``; entry ``p`` contributes
    ``coef[slots[p]] * vals[p] * y[indices[p]]``.  Entries from different terms
    at the same position are kept separate.
    """

    dimension: int
    indptr: np.ndarray
    indices: np.ndarray
    vals: np.ndarray
    slots: np.ndarray
    functions: tuple[Coefficient, ...]

    @classmethod
    def from_hamiltonian(cls, H: TimeDependentHamiltonian) -> "CompiledHamiltonian":
        rows, cols, vals, slots, funcs = [], [], [], [], []
        for k, (mat, f) in enumerate(H.expanded()):
            coo = mat.tocoo()
            rows.append(coo.row)
            cols.append(coo.col)
            vals.append(coo.data)
            slots.append(np.full(coo.nnz, k))
            funcs.append(f)
        n = H.space.dimension
        if rows:
            r = np.concatenate(rows)
            order = np.argsort(r, kind="stable")
            r = r[order]
            c = np.concatenate(cols)[order]
            v = np.concatenate(vals)[order]
            s = np.concatenate(slots)[order]
        else:
            r = c = s = np.zeros(0, dtype=np.int64)
            v = np.zeros(0, dtype=np.complex128)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(
            n,
            indptr.astype(np.int64),
            c.astype(np.int64),
            np.ascontiguousarray(v, dtype=np.complex128),
            s.astype(np.int64),
            tuple(funcs),
        )

    @property
    def n_slots(self) -> int:
        return len(self.functions)

    def coefficients(self, times) -> np.ndarray:
        """Coefficient table of shape (len(times), n_slots)."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, max(self.n_slots, 1)), dtype=np.complex128)
        for k, f in enumerate(self.functions):
            out[:, k] = f(times)
        return out
