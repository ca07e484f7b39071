"""Out-of-time-order correlators on fixed-N lattices.

The four-point function F(t) = <a_j^dag(t) a_i^dag a_j(t) a_i> for a Fock
state reduces to a single inner product between two back-evolved vectors,

    p(t) = U(-t) a_j U(t) |psi>          (one boson removed)
    q(t) = U(-t) a_j U(t) a_i |psi>      (two bosons removed)
    F(t) = <a_i p(t) | q(t)>,

so only three particle-number sectors are ever touched. The forward legs
march incrementally along the time grid; each backward leg is integrated
from scratch at its own t so error bounds never compound across outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fock import (
    FockBasis,
    QuantumState,
    annihilation_matrix,
    basis_state,
    enumerate_basis,
)
from .hamiltonian import BoseHubbardParams, SparseHamiltonian, build_hamiltonian
from .lattice import LatticeGraph, OperatorSitePair, graph_distance
from .propagator import KrylovConfig, evolve


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing output times in dimensionless Jt units."""

    jt: np.ndarray

    def __post_init__(self) -> None:
        jt = np.asarray(self.jt, dtype=np.float64)
        if jt.ndim != 1 or len(jt) == 0:
            raise ValueError("time grid must be a non-empty 1-D array")
        if jt[0] < 0:
            raise ValueError(f"time grid must start at Jt >= 0, got {jt[0]}")
        if len(jt) > 1 and np.any(np.diff(jt) <= 0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "jt", jt)

    def times(self, hopping: float) -> np.ndarray:
        """Physical times t = Jt / J."""
        return self.jt / hopping

    def __len__(self) -> int:
        return len(self.jt)


def default_grid(jt_max: float = 10.0, points: int = 201) -> TimeGrid:
    return TimeGrid(np.linspace(0.0, jt_max, points))


@dataclass(eq=False)
class OTOCSeries:
    """F(t) samples plus enough context to label and trust them."""

    grid: TimeGrid
    values: np.ndarray
    pair: OperatorSitePair
    params: BoseHubbardParams
    initial_occupation: tuple[int, ...]
    error_estimates: np.ndarray = field(repr=False)
    truncated: bool = False
    hop_distance: int | None = None

    def decay(self) -> np.ndarray:
        """1 - Re F(t): zero initially, grows as information scrambles."""
        return 1.0 - self.values.real


@dataclass(eq=False)
class SectorSet:
    """Bases and Hamiltonians for sectors N, N-1, N-2 of one problem."""

    graph: LatticeGraph
    params: BoseHubbardParams
    bases: tuple[FockBasis, FockBasis, FockBasis]
    hams: tuple[SparseHamiltonian, SparseHamiltonian, SparseHamiltonian]

    @classmethod
    def build(
        cls,
        graph: LatticeGraph,
        params: BoseHubbardParams,
        total_bosons: int,
        n_max: int | None = None,
    ) -> "SectorSet":
        if total_bosons < 2:
            raise ValueError(
                f"need at least two bosons for two-ladder correlators, got {total_bosons}"
            )
        cap = total_bosons if n_max is None else n_max
        bases = tuple(
            enumerate_basis(graph.site_count, n, cap)
            for n in (total_bosons, total_bosons - 1, total_bosons - 2)
        )
        hams = tuple(build_hamiltonian(graph, b, params) for b in bases)
        return cls(graph, params, bases, hams)


def compute_otoc_series(
    graph: LatticeGraph,
    params: BoseHubbardParams,
    initial_occupation,
    pair: OperatorSitePair,
    grid: TimeGrid,
    n_max: int | None = None,
    config: KrylovConfig | None = None,
    sectors: SectorSet | None = None,
) -> OTOCSeries:
    """Evaluate F(t) on every grid point.

    Pass a prebuilt ``sectors`` to amortize Hamiltonian assembly across runs
    on the same lattice.
    """
    occ = tuple(int(n) for n in initial_occupation)
    pair.validate_for(graph)
    if sectors is None:
        sectors = SectorSet.build(graph, params, sum(occ), n_max)
    basis_n, basis_m, basis_k = sectors.bases
    ham_n, ham_m, ham_k = sectors.hams
    if config is None:
        config = KrylovConfig()

    a_i_top = annihilation_matrix(basis_n, basis_m, pair.i)
    a_j_top = annihilation_matrix(basis_n, basis_m, pair.j)
    a_i_mid = annihilation_matrix(basis_m, basis_k, pair.i)
    a_j_mid = annihilation_matrix(basis_m, basis_k, pair.j)

    psi = basis_state(basis_n, occ)
    phi = QuantumState(a_i_top @ psi.amplitudes, basis_m)

    times = grid.times(params.hopping)
    values = np.empty(len(times), dtype=np.complex128)
    errors = np.empty(len(times))
    t_prev = 0.0
    for idx, t in enumerate(times):
        if t > t_prev:
            psi = evolve(ham_n, psi, t - t_prev, config)
            phi = evolve(ham_m, phi, t - t_prev, config)
            t_prev = t
        p = evolve(ham_m, QuantumState(a_j_top @ psi.amplitudes, basis_m), -t, config)
        q = evolve(ham_k, QuantumState(a_j_mid @ phi.amplitudes, basis_k), -t, config)
        # pairwise np.sum: reduction order independent of BLAS threading
        values[idx] = np.sum(np.conjugate(a_i_mid @ p.amplitudes) * q.amplitudes)
        errors[idx] = (
            psi.error_estimate + phi.error_estimate + p.error_estimate + q.error_estimate
        )
    return OTOCSeries(
        grid,
        values,
        pair,
        params,
        occ,
        errors,
        truncated=basis_n.truncated,
        hop_distance=graph_distance(graph, pair.i, pair.j),
    )


def otoc_table(series: OTOCSeries) -> dict[str, np.ndarray]:
    """Column view used by the CSV writer; keys are the exact header names."""
    return {
        "jt": series.grid.jt,
        "re_otoc": series.values.real,
        "im_otoc": series.values.imag,
        "abs_otoc": np.abs(series.values),
    }


def departure_time(
    grid: TimeGrid, values_a: np.ndarray, values_b: np.ndarray, threshold: float = 0.01
) -> float | None:
    """First Jt where two OTOC traces differ by more than ``threshold``.

    Used to quantify how long a small lattice mimics a larger one before
    boundary effects arrive. Returns None if the traces never separate.
    """
    if len(values_a) != len(grid) or len(values_b) != len(grid):
        raise ValueError("series lengths must match the grid")
    gap = np.abs(np.asarray(values_a) - np.asarray(values_b))
    hits = np.nonzero(gap > threshold)[0]
    if len(hits) == 0:
        return None
    return float(grid.jt[hits[0]])
