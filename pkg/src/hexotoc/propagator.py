"""Krylov-subspace time evolution under real-symmetric sparse Hamiltonians.

Lanczos with full reorthogonalization builds a real symmetric tridiagonal
projection T; the step is V exp(-i dt T) e1 scaled by the input norm. The
standard a-posteriori residual estimate drives step-halving, so a requested
time is always reached exactly with an accumulated error bound attached.
Complex vectors are fine: H is real, so the Lanczos coefficients stay real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fock import QuantumState
from .hamiltonian import SparseHamiltonian


class PropagationError(RuntimeError):
    """Step control failed to reach the requested tolerance."""


@dataclass(frozen=True)
class KrylovConfig:
    """Step control knobs.

    ``max_step`` is measured in inverse-hopping units (1/J), so the same
    config is sensible across energy scales.
    """

    krylov_dim: int = 30
    tolerance: float = 1e-10
    max_step: float = 1.0
    breakdown_tol: float = 1e-14
    max_halvings: int = 60

    def __post_init__(self) -> None:
        if self.krylov_dim < 2:
            raise ValueError(f"krylov_dim must be >= 2, got {self.krylov_dim}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_step <= 0:
            raise ValueError(f"max_step must be > 0, got {self.max_step}")


def _lanczos(
    H: SparseHamiltonian, vec: np.ndarray, m: int, breakdown_tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Run m Lanczos steps from vec/||vec||.

    Returns (V, alphas, betas, broke_down) with V of shape (dim, k). betas
    holds k entries; betas[k-1] couples to the discarded next vector unless
    the recursion terminated (invariant subspace found).
    """
    norm = np.linalg.norm(vec)
    V = np.empty((len(vec), m), dtype=np.complex128)
    alphas = np.empty(m)
    betas = np.empty(m)
    V[:, 0] = vec / norm
    k = 0
    broke_down = False
    for k in range(m):
        w = H.matvec(V[:, k])
        alphas[k] = np.real(np.sum(np.conjugate(V[:, k]) * w))
        w -= alphas[k] * V[:, k]
        if k > 0:
            w -= betas[k - 1] * V[:, k - 1]
        # full reorthogonalization; keeps T real to roundoff
        w -= V[:, : k + 1] @ (V[:, : k + 1].conj().T @ w)
        betas[k] = np.linalg.norm(w)
        if betas[k] < breakdown_tol * max(1.0, abs(alphas[k])):
            broke_down = True
            break
        if k + 1 < m:
            V[:, k + 1] = w / betas[k]
    k += 1
    return V[:, :k], alphas[:k], betas[:k], broke_down


def krylov_step(
    H: SparseHamiltonian, amplitudes: np.ndarray, dt: float, config: KrylovConfig
) -> tuple[np.ndarray, float, int]:
    """One projected step exp(-i dt H) @ amplitudes.

    Returns (new_amplitudes, error_estimate, subspace_dim). The estimate is
    ||v|| * |dt| * beta_next * |[exp(-i dt T)]_{last,0}|, zero on breakdown
    (the subspace is then exactly invariant).
    """
    norm = float(np.linalg.norm(amplitudes))
    if norm == 0.0:
        return amplitudes.copy(), 0.0, 0
    V, alphas, betas, broke_down = _lanczos(
        H, amplitudes, config.krylov_dim, config.breakdown_tol
    )
    k = len(alphas)
    if k == 1:
        phase = np.exp(-1j * dt * alphas[0])
        y = np.array([phase])
    else:
        theta, S = eigh_tridiagonal(alphas, betas[: k - 1])
        y = S @ (np.exp(-1j * dt * theta) * S[0, :])
    out = (V @ y) * norm
    err = 0.0 if broke_down else float(norm * abs(dt) * betas[k - 1] * abs(y[-1]))
    return out, err, k


def evolve(
    H: SparseHamiltonian,
    state: QuantumState,
    t: float,
    config: KrylovConfig | None = None,
) -> QuantumState:
    """Propagate ``state`` by physical time ``t`` (either sign), exactly.

    The requested endpoint is hit by construction: the last substep is
    trimmed, never extrapolated. Accepted-step error estimates accumulate
    into the returned state's ``error_estimate``.
    """
    if state.basis.sector != H.basis.sector:
        raise ValueError(
            f"state sector {state.basis.sector} does not match "
            f"Hamiltonian sector {H.basis.sector}"
        )
    if config is None:
        config = KrylovConfig()
    if t == 0.0:
        return state.copy()

    dt_cap = config.max_step / H.params.hopping
    sign = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    # The step error scales roughly like (||H|| dt / m)^m, so seed dt where
    # that is small and only regrow on near-exact steps; blind doubling just
    # oscillates against the halving branch.
    scale = H.spectral_scale()
    dt = min(remaining, dt_cap)
    if scale > 0.0:
        dt = min(dt, 0.5 * config.krylov_dim / scale)
    amps = state.amplitudes
    total_err = 0.0
    while remaining > 0.0:
        step = min(dt, remaining)
        halvings = 0
        while True:
            new_amps, err, _ = krylov_step(H, amps, sign * step, config)
            if err <= config.tolerance:
                break
            halvings += 1
            if halvings > config.max_halvings:
                raise PropagationError(
                    f"step control stalled at dt={step:.3e} with error {err:.3e} "
                    f"(tolerance {config.tolerance:.1e})"
                )
            step /= 2.0
        amps = new_amps
        total_err += err
        remaining -= step
        if remaining < 1e-15 * abs(t):
            remaining = 0.0
        dt = min(step, dt_cap)
        if err < 1e-6 * config.tolerance:
            dt = min(2.0 * step, dt_cap)
    return QuantumState(
        amps, state.basis, state.truncated, state.error_estimate + total_err
    )
