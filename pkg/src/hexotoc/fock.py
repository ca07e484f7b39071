"""Fixed-particle-number bosonic occupation bases and ladder operators.

A basis enumerates all occupation vectors of ``L`` sites summing to ``N``
with every entry at most ``n_max``, in ascending lexicographic order. Ranking
is combinatorial (counting tables, no scan), so state indices are stable and
cheap at any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp


def sector_dimension(site_count: int, total_bosons: int, n_max: int | None = None) -> int:
    """Number of occupation vectors without enumerating them."""
    if n_max is None:
        n_max = total_bosons
    counts = _count_table(site_count, total_bosons, n_max)
    return int(counts[site_count, total_bosons])


def _count_table(L: int, N: int, cap: int) -> np.ndarray:
    """counts[l, n] = number of l-site vectors summing to n with entries <= cap."""
    counts = np.zeros((L + 1, N + 1), dtype=np.int64)
    counts[0, 0] = 1
    for l in range(1, L + 1):
        # counts[l, n] = sum_{k=0..min(cap,n)} counts[l-1, n-k]
        csum = np.concatenate(([0], np.cumsum(counts[l - 1])))
        for n in range(N + 1):
            lo = max(0, n - cap)
            counts[l, n] = csum[n + 1] - csum[lo]
    return counts


def _enumerate_states(L: int, N: int, cap: int) -> np.ndarray:
    """All occupation vectors in ascending lexicographic order, shape (dim, L)."""
    memo: dict[tuple[int, int], np.ndarray] = {}

    def block(l: int, n: int) -> np.ndarray:
        if (l, n) in memo:
            return memo[(l, n)]
        if l == 1:
            out = (
                np.array([[n]], dtype=np.int8)
                if n <= cap
                else np.empty((0, 1), dtype=np.int8)
            )
        else:
            parts = []
            for k in range(max(0, n - cap * (l - 1)), min(cap, n) + 1):
                tail = block(l - 1, n - k)
                if len(tail):
                    head = np.full((len(tail), 1), k, dtype=np.int8)
                    parts.append(np.hstack([head, tail]))
            out = (
                np.vstack(parts) if parts else np.empty((0, l), dtype=np.int8)
            )
        memo[(l, n)] = out
        return out

    return block(L, N)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Ordered occupation basis of the (L sites, N bosons, cap n_max) sector."""

    site_count: int
    total_bosons: int
    n_max: int
    states: np.ndarray = field(repr=False)
    _rank_prefix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def truncated(self) -> bool:
        """True when the per-site cap actually constrains this sector."""
        return self.n_max < self.total_bosons

    @property
    def sector(self) -> tuple[int, int, int]:
        return (self.site_count, self.total_bosons, self.n_max)

    def occupation(self, index: int) -> tuple[int, ...]:
        """Inverse of rank: k-th occupation vector in lexicographic order."""
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} out of range [0, {self.dim})")
        return tuple(int(n) for n in self.states[index])

    def rank(self, occupation) -> int:
        """Lexicographic position of a single occupation vector."""
        occ = np.asarray(occupation, dtype=np.int64)
        if occ.shape != (self.site_count,):
            raise ValueError(
                f"occupation must have {self.site_count} entries, got shape {occ.shape}"
            )
        if occ.min() < 0 or occ.max() > self.n_max or occ.sum() != self.total_bosons:
            raise ValueError(
                f"occupation {tuple(int(n) for n in occ)} is not in sector "
                f"(L={self.site_count}, N={self.total_bosons}, n_max={self.n_max})"
            )
        return int(self.rank_array(occ[None, :])[0])

    def rank_array(self, occs: np.ndarray) -> np.ndarray:
        """Vectorized rank of valid occupation vectors, shape (M, L) -> (M,)."""
        occs = np.asarray(occs, dtype=np.int64)
        L = self.site_count
        remaining = self.total_bosons - np.concatenate(
            [np.zeros((len(occs), 1), dtype=np.int64), np.cumsum(occs, axis=1)[:, :-1]],
            axis=1,
        )
        ranks = np.zeros(len(occs), dtype=np.int64)
        for i in range(L):
            ranks += self._rank_prefix[L - 1 - i, remaining[:, i], occs[:, i]]
        return ranks


def enumerate_basis(site_count: int, total_bosons: int, n_max: int | None = None) -> FockBasis:
    """Build the full occupation basis of one particle-number sector.

    With the default cap ``n_max = total_bosons`` the sector is untruncated
    and its dimension is the stars-and-bars count C(N+L-1, N).
    """
    L, N = site_count, total_bosons
    if L < 1:
        raise ValueError(f"site_count must be >= 1, got {L}")
    if N < 0:
        raise ValueError(f"total_bosons must be >= 0, got {N}")
    cap = N if n_max is None else n_max
    if cap < 0:
        raise ValueError(f"n_max must be >= 0, got {cap}")
    if cap * L < N:
        raise ValueError(
            f"empty sector: {N} bosons do not fit on {L} sites with n_max={cap}"
        )
    states = _enumerate_states(L, N, cap)
    counts = _count_table(L, N, cap)
    # prefix[l, n, c] = number of l-site tails with budget n whose first entry < c
    prefix = np.zeros((L, N + 1, cap + 1), dtype=np.int64)
    for l in range(1, L):
        for c in range(1, cap + 1):
            n_idx = np.arange(N + 1)
            prev = n_idx - (c - 1)
            add = np.where(prev >= 0, counts[l, np.maximum(prev, 0)], 0)
            prefix[l, :, c] = prefix[l, :, c - 1] + add
    basis = FockBasis(L, N, cap, states, prefix)
    assert basis.dim == counts[L, N]
    return basis


@dataclass(eq=False)
class QuantumState:
    """Complex amplitude vector over one FockBasis.

    ``truncated`` marks any ancestry through a capped creation operator;
    ``error_estimate`` accumulates propagation error bounds.
    """

    amplitudes: np.ndarray
    basis: FockBasis
    truncated: bool = False
    error_estimate: float = 0.0

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitudes shape {amp.shape} does not match basis dim {self.basis.dim}"
            )
        if not np.all(np.isfinite(amp.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        self.amplitudes = amp

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "QuantumState") -> complex:
        """<self | other>; bases must be the same sector."""
        if self.basis.sector != other.basis.sector:
            raise ValueError(
                f"overlap between different sectors {self.basis.sector} and {other.basis.sector}"
            )
        # pairwise np.sum keeps the reduction order independent of BLAS threading
        return complex(np.sum(np.conjugate(self.amplitudes) * other.amplitudes))

    def copy(self) -> "QuantumState":
        return QuantumState(
            self.amplitudes.copy(), self.basis, self.truncated, self.error_estimate
        )


def basis_state(basis: FockBasis, occupation) -> QuantumState:
    """Unit-amplitude Fock state for one occupation vector."""
    amp = np.zeros(basis.dim, dtype=np.complex128)
    amp[basis.rank(occupation)] = 1.0
    return QuantumState(amp, basis)


def annihilation_matrix(src: FockBasis, dst: FockBasis, site: int) -> sp.csr_matrix:
    """Sparse matrix of the lowering operator at ``site``: sector N -> N-1.

    Entry rule: |..., n, ...> maps to sqrt(n) |..., n-1, ...>.
    """
    _check_sectors(src, dst, delta=-1)
    if not 0 <= site < src.site_count:
        raise IndexError(f"site {site} out of range [0, {src.site_count})")
    occ = src.states
    mask = occ[:, site] > 0
    cols = np.nonzero(mask)[0]
    targets = occ[mask].astype(np.int64)
    targets[:, site] -= 1
    rows = dst.rank_array(targets)
    vals = np.sqrt(occ[mask, site].astype(np.float64))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dst.dim, src.dim))


def _check_sectors(src: FockBasis, dst: FockBasis, delta: int) -> None:
    if src.site_count != dst.site_count:
        raise ValueError(
            f"site counts differ: {src.site_count} vs {dst.site_count}"
        )
    if dst.total_bosons != src.total_bosons + delta:
        raise ValueError(
            f"destination sector N={dst.total_bosons} is not source N{delta:+d}"
        )
    if dst.n_max != src.n_max:
        raise ValueError(f"caps differ: {src.n_max} vs {dst.n_max}")


def apply_annihilation(
    state: QuantumState, site: int, dst: FockBasis | None = None
) -> QuantumState:
    """Lower the occupation at ``site``, landing in the N-1 sector."""
    src = state.basis
    if src.total_bosons == 0:
        raise ValueError("cannot annihilate in the zero-boson sector")
    if dst is None:
        dst = enumerate_basis(src.site_count, src.total_bosons - 1, src.n_max)
    out = annihilation_matrix(src, dst, site) @ state.amplitudes
    return QuantumState(out, dst, state.truncated, state.error_estimate)


def apply_creation(
    state: QuantumState, site: int, dst: FockBasis | None = None
) -> QuantumState:
    """Raise the occupation at ``site``, landing in the N+1 sector.

    Components already at the cap are dropped and the result is flagged
    ``truncated`` when that actually removes weight.
    """
    src = state.basis
    if dst is None:
        dst = enumerate_basis(src.site_count, src.total_bosons + 1, src.n_max)
    _check_sectors(src, dst, delta=+1)
    if not 0 <= site < src.site_count:
        raise IndexError(f"site {site} out of range [0, {src.site_count})")
    mat = annihilation_matrix(dst, src, site)  # adjoint of lowering on the N+1 sector
    out = mat.T @ state.amplitudes
    capped = src.states[:, site] >= src.n_max
    dropped = bool(np.any(np.abs(state.amplitudes[capped]) > 0))
    return QuantumState(out, dst, state.truncated or dropped, state.error_estimate)


def untruncated_dimension(site_count: int, total_bosons: int) -> int:
    """Stars-and-bars count C(N+L-1, N)."""
    return comb(total_bosons + site_count - 1, total_bosons)
