"""Bose-Hubbard Hamiltonians on arbitrary graphs, in fixed-N sectors.

H = -J sum_<i,j> (a_i^dag a_j + a_j^dag a_i) + (U/2) sum_i n_i (n_i - 1)

All matrix elements are real, so the stored CSR matrix is real symmetric and
complex matvecs split into two real ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis, QuantumState
from .lattice import LatticeGraph


@dataclass(frozen=True)
class BoseHubbardParams:
    """Hopping J and on-site interaction U, in the same energy units (hbar = 1)."""

    hopping: float
    interaction: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.hopping) or not np.isfinite(self.interaction):
            raise ValueError(
                f"parameters must be finite, got J={self.hopping}, U={self.interaction}"
            )
        if self.hopping <= 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping}")

    @property
    def u_over_j(self) -> float:
        return self.interaction / self.hopping


@dataclass(eq=False)
class SparseHamiltonian:
    """Real-symmetric sparse Hamiltonian bound to one basis sector."""

    matrix: sp.csr_matrix
    basis: FockBasis
    params: BoseHubbardParams
    graph: LatticeGraph

    def __post_init__(self) -> None:
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match basis dim {self.basis.dim}"
            )
        if self.matrix.dtype != np.float64:
            raise ValueError(f"matrix must be float64, got {self.matrix.dtype}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        """H @ vec for complex vec, as two real products against the real matrix."""
        vec = np.asarray(vec)
        if np.iscomplexobj(vec):
            return self.matrix @ vec.real + 1j * (self.matrix @ vec.imag)
        return self.matrix @ vec

    def expectation(self, state: QuantumState) -> float:
        """<psi|H|psi>, real for any complex state since H is real symmetric."""
        if state.basis.sector != self.basis.sector:
            raise ValueError(
                f"state sector {state.basis.sector} does not match "
                f"Hamiltonian sector {self.basis.sector}"
            )
        # np.sum (pairwise, unthreaded) rather than a BLAS dot: reduction order
        # must not depend on the thread budget
        return float(
            np.real(np.sum(np.conjugate(state.amplitudes) * self.matvec(state.amplitudes)))
        )

    def spectral_scale(self) -> float:
        """Gershgorin bound on |E|; a size-independent yardstick for drift."""
        if not hasattr(self, "_scale"):
            abs_row_sums = np.abs(self.matrix).sum(axis=1)
            self._scale = float(np.max(abs_row_sums))
        return self._scale


def build_hamiltonian(
    graph: LatticeGraph, basis: FockBasis, params: BoseHubbardParams
) -> SparseHamiltonian:
    """Assemble the sector Hamiltonian as a CSR matrix.

    The hopping block is built once per directed edge as COO triplets and
    symmetrized by construction (both directions emitted explicitly).
    """
    if graph.site_count != basis.site_count:
        raise ValueError(
            f"graph has {graph.site_count} sites but basis has {basis.site_count}"
        )
    occ = basis.states.astype(np.int64)
    dim = basis.dim
    J, U = params.hopping, params.interaction

    diag = 0.5 * U * np.sum(occ * (occ - 1), axis=1).astype(np.float64)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for i, j in graph.edges:
        for src_site, dst_site in ((j, i), (i, j)):
            # a_dst^dag a_src: needs n_src > 0 and n_dst < cap
            mask = (occ[:, src_site] > 0) & (occ[:, dst_site] < basis.n_max)
            if not np.any(mask):
                continue
            src_idx = np.nonzero(mask)[0]
            target = occ[mask].copy()
            target[:, src_site] -= 1
            target[:, dst_site] += 1
            dst_idx = basis.rank_array(target)
            amp = -J * np.sqrt(
                occ[mask, src_site] * (occ[mask, dst_site] + 1.0)
            )
            rows.append(dst_idx)
            cols.append(src_idx)
            vals.append(amp)

    hop = sp.csr_matrix(
        (
            np.concatenate(vals) if vals else np.empty(0),
            (
                np.concatenate(rows) if rows else np.empty(0, dtype=np.int64),
                np.concatenate(cols) if cols else np.empty(0, dtype=np.int64),
            ),
        ),
        shape=(dim, dim),
    )
    matrix = (hop + sp.diags(diag, format="csr")).tocsr()
    matrix.sum_duplicates()
    return SparseHamiltonian(matrix, basis, params, graph)
