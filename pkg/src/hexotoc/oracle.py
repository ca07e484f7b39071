"""Dense brute-force reference implementations for cross-checking.

Everything here is deliberately independent of the sparse machinery: bases
are enumerated recursively and looked up through plain dicts, Hamiltonians
are assembled term by term from dense ladder matrices, and propagation goes
through a full eigendecomposition. Intended for small sectors only; all
entry points refuse dimensions above ORACLE_DIM_CAP.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hamiltonian import BoseHubbardParams
from .lattice import LatticeGraph

ORACLE_DIM_CAP = 2000


class OracleSizeError(ValueError):
    """Raised when a dense reference computation would exceed the cap."""


def dense_basis(site_count: int, total_bosons: int, n_max: int) -> list[tuple[int, ...]]:
    """All occupation tuples of the sector, ascending lexicographic order."""

    def rec(sites_left: int, budget: int) -> list[tuple[int, ...]]:
        if sites_left == 1:
            return [(budget,)] if budget <= n_max else []
        out = []
        for k in range(min(n_max, budget) + 1):
            out.extend((k,) + tail for tail in rec(sites_left - 1, budget - k))
        return out

    states = rec(site_count, total_bosons)
    _check_cap(len(states))
    return states


def _check_cap(dim: int) -> None:
    if dim > ORACLE_DIM_CAP:
        raise OracleSizeError(
            f"dense oracle refuses dimension {dim} > {ORACLE_DIM_CAP}"
        )


def _index(states: list[tuple[int, ...]]) -> dict[tuple[int, ...], int]:
    return {occ: k for k, occ in enumerate(states)}


def dense_ladder(
    site_count: int, total_bosons: int, n_max: int, site: int
) -> np.ndarray:
    """Dense lowering operator at ``site``, mapping sector N to sector N-1."""
    src = dense_basis(site_count, total_bosons, n_max)
    dst = dense_basis(site_count, total_bosons - 1, n_max)
    lut = _index(dst)
    mat = np.zeros((len(dst), len(src)))
    for col, occ in enumerate(src):
        n = occ[site]
        if n == 0:
            continue
        lowered = occ[:site] + (n - 1,) + occ[site + 1 :]
        mat[lut[lowered], col] = np.sqrt(n)
    return mat


def dense_number_op(site_count: int, total_bosons: int, n_max: int, site: int) -> np.ndarray:
    states = dense_basis(site_count, total_bosons, n_max)
    return np.diag([float(occ[site]) for occ in states])


def dense_hamiltonian(
    graph: LatticeGraph,
    total_bosons: int,
    n_max: int,
    params: BoseHubbardParams,
) -> np.ndarray:
    """Sector Hamiltonian assembled term by term from ladder matrices."""
    L = graph.site_count
    states = dense_basis(L, total_bosons, n_max)
    dim = len(states)
    H = np.zeros((dim, dim))
    if total_bosons > 0:
        ladders = [dense_ladder(L, total_bosons, n_max, i) for i in range(L)]
        for i, j in graph.edges:
            hop = ladders[i].T @ ladders[j]
            H -= params.hopping * (hop + hop.T)
        for i in range(L):
            num = ladders[i].T @ ladders[i]
            H += 0.5 * params.interaction * (num @ num - num)
    return H


@dataclass(eq=False)
class DenseEvolver:
    """Exact propagator exp(-iHt) through a cached eigendecomposition."""

    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_matrix(cls, H: np.ndarray) -> "DenseEvolver":
        _check_cap(H.shape[0])
        if not np.allclose(H, H.T):
            raise ValueError("dense oracle expects a real symmetric matrix")
        energies, vectors = np.linalg.eigh(H)
        return cls(energies, vectors)

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        coeff = self.vectors.T @ psi
        return self.vectors @ (np.exp(-1j * self.energies * t) * coeff)

    def propagator(self, t: float) -> np.ndarray:
        phase = np.exp(-1j * self.energies * t)
        return (self.vectors * phase) @ self.vectors.T


@lru_cache(maxsize=32)
def _sector_pieces(
    graph_key: tuple, total_bosons: int, n_max: int, J: float, U: float
) -> tuple[DenseEvolver, ...]:
    site_count, edges = graph_key
    graph = LatticeGraph(site_count, edges)
    params = BoseHubbardParams(J, U)
    return tuple(
        DenseEvolver.from_matrix(dense_hamiltonian(graph, n, n_max, params))
        for n in (total_bosons, total_bosons - 1, total_bosons - 2)
    )


def dense_otoc(
    graph: LatticeGraph,
    occupation: tuple[int, ...],
    site_i: int,
    site_j: int,
    params: BoseHubbardParams,
    t: float,
    n_max: int | None = None,
    form: str = "heisenberg",
) -> complex:
    """F(t) = <psi| a_j^dag(t) a_i^dag a_j(t) a_i |psi> for a Fock state psi.

    ``form="heisenberg"`` multiplies explicit evolved operator matrices;
    ``form="states"`` evolves two vectors and takes one inner product. The
    two must agree, which guards the operator-ordering algebra itself.
    """
    N = int(sum(occupation))
    if N < 2:
        raise ValueError(f"need at least two bosons for a two-ladder OTOC, got N={N}")
    L = graph.site_count
    cap = N if n_max is None else n_max
    evo_n, evo_m, evo_k = _sector_pieces(
        (L, graph.edges), N, cap, params.hopping, params.interaction
    )
    a_i_top = dense_ladder(L, N, cap, site_i)  # N -> N-1
    a_j_top = dense_ladder(L, N, cap, site_j)
    a_i_mid = dense_ladder(L, N - 1, cap, site_i)  # N-1 -> N-2
    a_j_mid = dense_ladder(L, N - 1, cap, site_j)

    lut = _index(dense_basis(L, N, cap))
    psi = np.zeros(len(lut), dtype=complex)
    psi[lut[tuple(occupation)]] = 1.0

    if form == "heisenberg":
        u_n = evo_n.propagator(t)
        u_m = evo_m.propagator(t)
        u_k = evo_k.propagator(t)
        aj_t_top = u_m.conj().T @ a_j_top @ u_n  # N -> N-1 at time t
        aj_t_mid = u_k.conj().T @ a_j_mid @ u_m
        op = aj_t_top.conj().T @ a_i_mid.T @ aj_t_mid @ a_i_top
        return complex(np.vdot(psi, op @ psi))
    if form == "states":
        # |p> = U(-t) a_j U(t) |psi>            (sector N-1)
        # |q> = U(-t) a_j U(t) a_i |psi>        (sector N-2)
        # F(t) = <a_i p | q>
        p = evo_m.evolve(a_j_top @ evo_n.evolve(psi, t), -t)
        q = evo_k.evolve(a_j_mid @ evo_m.evolve(a_i_top @ psi, t), -t)
        return complex(np.vdot(a_i_mid @ p, q))
    raise ValueError(f"unknown form {form!r}; use 'heisenberg' or 'states'")


def dense_otoc_series(
    graph: LatticeGraph,
    occupation: tuple[int, ...],
    site_i: int,
    site_j: int,
    params: BoseHubbardParams,
    times: np.ndarray,
    n_max: int | None = None,
    form: str = "heisenberg",
) -> np.ndarray:
    return np.array(
        [
            dense_otoc(graph, occupation, site_i, site_j, params, float(t), n_max, form)
            for t in times
        ]
    )


def dense_partial_trace(
    amplitudes: np.ndarray,
    labels: list[tuple[int, ...]],
    keep: tuple[int, ...],
) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Reduced density matrix over label positions ``keep``.

    ``labels[k]`` is the full configuration tuple of basis vector k; the
    reduction groups configurations by their restriction to ``keep`` and
    sums outer products over the complement. Returns (rho, kept_labels).
    """
    _check_cap(len(labels))
    width = len(labels[0])
    rest = tuple(p for p in range(width) if p not in keep)
    groups: dict[tuple[int, ...], dict[tuple[int, ...], complex]] = {}
    for amp, lab in zip(amplitudes, labels):
        sub = tuple(lab[p] for p in keep)
        env = tuple(lab[p] for p in rest)
        groups.setdefault(env, {}).setdefault(sub, 0.0)
        groups[env][sub] += amp
    kept = sorted({tuple(lab[p] for p in keep) for lab in labels})
    lut = {s: k for k, s in enumerate(kept)}
    rho = np.zeros((len(kept), len(kept)), dtype=complex)
    for env_amps in groups.values():
        vec = np.zeros(len(kept), dtype=complex)
        for sub, amp in env_amps.items():
            vec[lut[sub]] = amp
        rho += np.outer(vec, vec.conj())
    return rho, kept


def dense_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats from a dense density matrix."""
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log(lam)))
