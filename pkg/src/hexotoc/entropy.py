"""Entanglement diagnostics: reduced density matrices, von Neumann entropy,
bipartite and tripartite mutual information, and the OTOC-MI consistency
report.

Partial traces use a grouped-outer-product construction: basis labels are
split into kept and traced-out columns, rows are bucketed by the traced-out
part, and the reduced matrix is one sparse product. An ancilla qubit is
supported as a pseudo-site appended after the lattice sites; superpositions
whose branches live in different particle-number sectors then lose their
cross-branch lattice coherences automatically, because the ancilla column
always ends up on the traced-out side with distinct values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import QuantumState, apply_annihilation, basis_state, enumerate_basis
from .hamiltonian import BoseHubbardParams, SparseHamiltonian, build_hamiltonian
from .lattice import LatticeGraph
from .observables import OTOCSeries, TimeGrid
from .propagator import KrylovConfig, evolve

EIGENVALUE_CLIP = 1e-14
NEGATIVITY_TOL = 1e-10


@dataclass(frozen=True)
class SubsystemPartition:
    """Disjoint site-index subsets; ``ancilla_a`` marks A as the stationary qubit.

    Lattice sites are 0..L-1; the ancilla occupies pseudo-position L. When
    ``ancilla_a`` is set, ``subset_a`` must be empty and resolves to (L,).
    """

    site_count: int
    subset_a: tuple[int, ...]
    subset_b: tuple[int, ...]
    subset_c: tuple[int, ...] = ()
    ancilla_a: bool = False

    def __post_init__(self) -> None:
        if self.ancilla_a and self.subset_a:
            raise ValueError("ancilla_a partitions must leave subset_a empty")
        if not self.ancilla_a and not self.subset_a:
            raise ValueError("subset_a is empty and ancilla_a is not set")
        seen: set[int] = set()
        for name, subset in (
            ("a", self.subset_a),
            ("b", self.subset_b),
            ("c", self.subset_c),
        ):
            for s in subset:
                if not 0 <= s < self.site_count:
                    raise ValueError(
                        f"subset_{name} site {s} out of range [0, {self.site_count})"
                    )
                if s in seen:
                    raise ValueError(f"site {s} appears in more than one subset")
                seen.add(s)

    def resolved_a(self) -> tuple[int, ...]:
        return (self.site_count,) if self.ancilla_a else self.subset_a


@dataclass(eq=False)
class AncillaLatticeState:
    """Lattice ⊗ ancilla-qubit superposition with a stationary ancilla.

    branch0 multiplies ancilla level |0>, branch1 level |1>; the branches may
    live in different particle-number sectors. Construction rescales to joint
    norm 1 (the two branch norms keep their ratio).
    """

    branch0: QuantumState
    branch1: QuantumState

    def __post_init__(self) -> None:
        if self.branch0.basis.site_count != self.branch1.basis.site_count:
            raise ValueError("ancilla branches must share the lattice site count")
        total = np.hypot(self.branch0.norm(), self.branch1.norm())
        if total == 0.0:
            raise ValueError("ancilla state has zero norm")
        if abs(total - 1.0) > 1e-12:
            self.branch0 = QuantumState(
                self.branch0.amplitudes / total,
                self.branch0.basis,
                self.branch0.truncated,
                self.branch0.error_estimate,
            )
            self.branch1 = QuantumState(
                self.branch1.amplitudes / total,
                self.branch1.basis,
                self.branch1.truncated,
                self.branch1.error_estimate,
            )

    @property
    def site_count(self) -> int:
        return self.branch0.basis.site_count

    @property
    def ancilla_position(self) -> int:
        """Label column index of the ancilla (after the lattice sites)."""
        return self.site_count

    def joint_labels(self) -> tuple[np.ndarray, np.ndarray]:
        """(amplitudes, labels) over the combined basis, ancilla column last."""
        rows = []
        for level, branch in ((0, self.branch0), (1, self.branch1)):
            lab = np.hstack(
                [
                    branch.basis.states,
                    np.full((branch.basis.dim, 1), level, dtype=np.int8),
                ]
            )
            rows.append(lab)
        amps = np.concatenate([self.branch0.amplitudes, self.branch1.amplitudes])
        return amps, np.vstack(rows)


def _grouped_rho(
    amplitudes: np.ndarray, labels: np.ndarray, keep: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """rho over label columns ``keep``; groups rows by the remaining columns."""
    width = labels.shape[1]
    rest = tuple(p for p in range(width) if p not in keep)
    if keep:
        kept_labels, keep_idx = np.unique(
            labels[:, keep], axis=0, return_inverse=True
        )
    else:
        kept_labels = np.empty((1, 0), dtype=labels.dtype)
        keep_idx = np.zeros(len(labels), dtype=np.int64)
    if rest:
        _, env_idx = np.unique(labels[:, rest], axis=0, return_inverse=True)
    else:
        env_idx = np.zeros(len(labels), dtype=np.int64)
    M = sp.csr_matrix(
        (amplitudes, (env_idx, keep_idx)),
        shape=(int(env_idx.max()) + 1, len(kept_labels)),
    )
    rho = (M.T @ M.conj()).toarray()
    return rho, kept_labels


def reduced_density_matrix(
    state: QuantumState | AncillaLatticeState, subset
) -> tuple[np.ndarray, np.ndarray]:
    """Density matrix of ``subset`` plus the occupation labels of its rows.

    For a plain QuantumState the subset indexes lattice sites; for an
    AncillaLatticeState the value ``state.ancilla_position`` addresses the
    ancilla qubit.
    """
    keep = tuple(int(s) for s in subset)
    if len(set(keep)) != len(keep):
        raise ValueError(f"subset {keep} has duplicate entries")
    if isinstance(state, AncillaLatticeState):
        width = state.site_count + 1
        amps, labels = state.joint_labels()
    else:
        width = state.basis.site_count
        amps, labels = state.amplitudes, state.basis.states
    for s in keep:
        if not 0 <= s < width:
            raise ValueError(f"subset index {s} out of range [0, {width})")
    return _grouped_rho(amps, labels, keep)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-tr(rho ln rho) in nats; eigenvalues below the clip count as zero."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=NEGATIVITY_TOL):
        raise ValueError("density matrix is not Hermitian")
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > 1e-8:
        raise ValueError(f"density matrix trace {trace} is not 1")
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -NEGATIVITY_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {lam.min():.3e}")
    lam = lam[lam > EIGENVALUE_CLIP]
    # + 0.0 turns the -0.0 of pure states into a plain 0.0
    return float(-np.sum(lam * np.log(lam))) + 0.0


def subsystem_entropy(state: QuantumState | AncillaLatticeState, subset) -> float:
    rho, _ = reduced_density_matrix(state, subset)
    return von_neumann_entropy(rho)


def _entropy_triple(
    state: QuantumState | AncillaLatticeState,
    a: tuple[int, ...],
    b: tuple[int, ...],
) -> tuple[float, float, float]:
    if set(a) & set(b):
        raise ValueError(f"subsets overlap: {sorted(set(a) & set(b))}")
    s_a = subsystem_entropy(state, a)
    s_b = subsystem_entropy(state, b)
    width = (
        state.site_count + 1
        if isinstance(state, AncillaLatticeState)
        else state.basis.site_count
    )
    if len(a) + len(b) == width:
        # A ∪ B is everything: the joint state is pure, skip the full-dim rho
        s_ab = 0.0
    else:
        s_ab = subsystem_entropy(state, tuple(a) + tuple(b))
    return s_a, s_b, s_ab


def mutual_information(
    state: QuantumState | AncillaLatticeState, subset_a, subset_b
) -> float:
    """I(A:B) = S_A + S_B - S_AB in nats."""
    a = tuple(int(s) for s in subset_a)
    b = tuple(int(s) for s in subset_b)
    s_a, s_b, s_ab = _entropy_triple(state, a, b)
    return s_a + s_b - s_ab


def tripartite_mutual_information(
    state: AncillaLatticeState, subset_a, subset_b, subset_c
) -> float:
    """I3(A:B:C) = I(A:B) + I(A:C) - I(A:BC); negative values mean scrambling."""
    a, b, c = (tuple(int(s) for s in sub) for sub in (subset_a, subset_b, subset_c))
    i_ab = mutual_information(state, a, b)
    i_ac = mutual_information(state, a, c)
    i_abc = mutual_information(state, a, b + c)
    return i_ab + i_ac - i_abc


def entangled_ancilla_state(
    graph: LatticeGraph,
    occupation,
    hole_site: int,
    n_max: int | None = None,
) -> AncillaLatticeState:
    """(|occ>|0>_anc + |occ - hole>|1>_anc)/sqrt(2).

    The |1> branch is the annihilation-image of the |0> branch at
    ``hole_site``, renormalized, so the ancilla starts maximally entangled
    with the presence of a boson there.
    """
    occ = tuple(int(n) for n in occupation)
    N = sum(occ)
    if occ[hole_site] == 0:
        raise ValueError(f"hole site {hole_site} is empty in {occ}")
    cap = N if n_max is None else n_max
    basis_n = enumerate_basis(graph.site_count, N, cap)
    psi = basis_state(basis_n, occ)
    hole = apply_annihilation(psi, hole_site)
    hole_amps = hole.amplitudes / hole.norm()
    b0 = QuantumState(psi.amplitudes / np.sqrt(2.0), basis_n)
    b1 = QuantumState(hole_amps / np.sqrt(2.0), hole.basis)
    return AncillaLatticeState(b0, b1)


def evolve_ancilla_state(
    state: AncillaLatticeState,
    ham0: SparseHamiltonian,
    ham1: SparseHamiltonian,
    t: float,
    config: KrylovConfig | None = None,
) -> AncillaLatticeState:
    """Evolve both lattice branches by t; the ancilla does nothing."""
    return AncillaLatticeState(
        evolve(ham0, state.branch0, t, config),
        evolve(ham1, state.branch1, t, config),
    )


def equal_bipartition(site_count: int, start: int = 0) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split a ring into two contiguous halves beginning at ``start``."""
    if site_count % 2:
        raise ValueError(f"equal bipartition needs an even site count, got {site_count}")
    order = [(start + k) % site_count for k in range(site_count)]
    half = site_count // 2
    return tuple(sorted(order[:half])), tuple(sorted(order[half:]))


def ring_tmi_partition(site_count: int, start: int = 0) -> SubsystemPartition:
    """A = ancilla, B = one site, C = next two, D = the rest, in ring order."""
    if site_count < 4:
        raise ValueError(f"TMI partition needs at least 4 sites, got {site_count}")
    order = [(start + k) % site_count for k in range(site_count)]
    return SubsystemPartition(
        site_count,
        subset_a=(),
        subset_b=(order[0],),
        subset_c=tuple(sorted(order[1:3])),
        ancilla_a=True,
    )


def compute_mi_series(
    graph: LatticeGraph,
    params: BoseHubbardParams,
    initial_occupation,
    subset_a,
    subset_b,
    grid: TimeGrid,
    n_max: int | None = None,
    config: KrylovConfig | None = None,
    hamiltonian: SparseHamiltonian | None = None,
) -> dict[str, np.ndarray]:
    """Bipartite MI of the evolving lattice state; columns keyed for the CSV."""
    occ = tuple(int(n) for n in initial_occupation)
    a = tuple(int(s) for s in subset_a)
    b = tuple(int(s) for s in subset_b)
    if hamiltonian is None:
        cap = sum(occ) if n_max is None else n_max
        basis = enumerate_basis(graph.site_count, sum(occ), cap)
        hamiltonian = build_hamiltonian(graph, basis, params)
    psi = basis_state(hamiltonian.basis, occ)
    times = grid.times(params.hopping)
    cols = {
        name: np.empty(len(times)) for name in ("jt", "s_a", "s_b", "s_ab", "mi")
    }
    cols["jt"] = grid.jt.copy()
    t_prev = 0.0
    for idx, t in enumerate(times):
        if t > t_prev:
            psi = evolve(hamiltonian, psi, t - t_prev, config)
            t_prev = t
        s_a, s_b, s_ab = _entropy_triple(psi, a, b)
        cols["s_a"][idx] = s_a
        cols["s_b"][idx] = s_b
        cols["s_ab"][idx] = s_ab
        cols["mi"][idx] = s_a + s_b - s_ab
    return cols


def compute_tmi_series(
    graph: LatticeGraph,
    params: BoseHubbardParams,
    initial_occupation,
    partition: SubsystemPartition,
    grid: TimeGrid,
    n_max: int | None = None,
    config: KrylovConfig | None = None,
) -> dict[str, np.ndarray]:
    """Ancilla TMI along the trajectory; columns keyed for the CSV.

    The ancilla pairs with partition subset B's first site: the |1> branch
    removes one boson there, per the hole construction.
    """
    if not partition.ancilla_a:
        raise ValueError("TMI series expects an ancilla-A partition")
    occ = tuple(int(n) for n in initial_occupation)
    hole_site = partition.subset_b[0]
    state = entangled_ancilla_state(graph, occ, hole_site, n_max)
    cap = state.branch0.basis.n_max
    ham0 = build_hamiltonian(graph, state.branch0.basis, params)
    ham1 = build_hamiltonian(graph, state.branch1.basis, params)
    a = state.ancilla_position
    b, c = partition.subset_b, partition.subset_c
    times = grid.times(params.hopping)
    cols = {
        name: np.empty(len(times)) for name in ("jt", "i_ab", "i_ac", "i_abc", "tmi")
    }
    cols["jt"] = grid.jt.copy()
    t_prev = 0.0
    for idx, t in enumerate(times):
        if t > t_prev:
            state = evolve_ancilla_state(state, ham0, ham1, t - t_prev, config)
            t_prev = t
        i_ab = mutual_information(state, (a,), b)
        i_ac = mutual_information(state, (a,), c)
        i_abc = mutual_information(state, (a,), tuple(b) + tuple(c))
        cols["i_ab"][idx] = i_ab
        cols["i_ac"][idx] = i_ac
        cols["i_abc"][idx] = i_abc
        cols["tmi"][idx] = i_ab + i_ac - i_abc
    return cols


@dataclass(frozen=True)
class BoundCheckRow:
    jt: float
    delta_otoc: float
    delta_mi: float
    satisfied: bool


@dataclass(frozen=True)
class BoundCheckReport:
    rows: tuple[BoundCheckRow, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)

    def violations(self) -> tuple[BoundCheckRow, ...]:
        return tuple(r for r in self.rows if not r.satisfied)


def otoc_mi_bound_check(
    otoc: OTOCSeries,
    mi_jt: np.ndarray,
    mi_values: np.ndarray,
    slack: float = 1e-9,
) -> BoundCheckReport:
    """Report 1 - Re F(t) against the MI growth I(t) - I(0), pointwise.

    The inequality is proven for the Haar-averaged correlator; for a single
    operator pair it is an empirical regularity, so this reports rather than
    asserts. ``slack`` absorbs numerical noise around equality at t = 0.
    """
    mi_jt = np.asarray(mi_jt, dtype=np.float64)
    if len(mi_jt) != len(otoc.grid) or not np.allclose(mi_jt, otoc.grid.jt):
        raise ValueError("OTOC and MI series must share one time grid")
    delta_otoc = otoc.decay()
    delta_mi = np.asarray(mi_values, dtype=np.float64) - float(mi_values[0])
    rows = tuple(
        BoundCheckRow(
            float(jt), float(do), float(dm), bool(do <= dm + slack)
        )
        for jt, do, dm in zip(otoc.grid.jt, delta_otoc, delta_mi)
    )
    return BoundCheckReport(rows)


def nats_to_bits(value: float) -> float:
    return value / np.log(2.0)
