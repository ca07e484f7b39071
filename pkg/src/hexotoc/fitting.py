"""Early-time decay models for OTOC traces and their least-squares fits.

Three model families:

* exponential  f(t) = exp(lam (t - |x|/v))
* gaussian     f(t) = exp(lam (t - |x|/v)^2)
* convolution  f(t) = P e^{-tau t/2} Erfc(z-) + Q e^{tau t/2} Erfc(z+),
               z+- = (tau/2 +- sigma^2 t) / (sqrt(2) sigma)

|x| is the hop distance between the correlator's operator sites and v the
butterfly velocity; fitted v <= 0 is flagged unphysical. The convolution is
evaluated in an overflow-safe arrangement: both terms share the exponent
tau t/2 - z^2 = -tau^2/(8 sigma^2) - sigma^2 t^2 / 2 <= 0, which is combined
analytically before exponentiation, so the model is finite for any sigma > 0.

Fits run against physical time t = Jt / J by default; the decay-rate tables
this reproduces are stated in inverse physical time at J = 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .observables import OTOCSeries
from .special import erfc, erfcx

MODEL_KINDS = ("exponential", "gaussian", "convolution")
PARAM_NAMES = {
    "exponential": ("lam", "v"),
    "gaussian": ("lam", "v"),
    "convolution": ("p", "q", "tau", "sigma"),
}
# documented multi-start grid; magnitudes bracket the published decay rates
# (tau, sigma also reach the larger scales needed when fitting against
# physical time, where the front lives at t ~ 0.2-0.5)
GUESS_LAMBDAS = (-1.0, -5.0, -20.0)
GUESS_VELOCITIES = (5.0, 15.0)
GUESS_TAUS = (0.5, 2.0, 8.0, 32.0)
GUESS_SIGMAS = (0.1, 1.0, 4.0)

GAUSSIAN_LIKE_RATIO = 5.0
EXPONENTIAL_LIKE_RATIO = 0.8

# Guards optimizer probes only; converged fits sit far below.  Kept well
# under the float64 limit so finite-difference Jacobians (df / dx with
# dx ~ 1e-8) stay finite even at the clip.
_EXP_CLIP = 300.0
_MIN_WINDOW_POINTS = 5
# The unconstrained convolution has an asymptotically flat valley (tau and
# |P|, |Q| grow together at nearly constant residual), so the optimizer is
# stopped at a fixed evaluation budget and the convergence flag reports
# honestly whether it halted on tolerance or on the cap.
_CONV_MAX_NFEV = 1200


@dataclass(frozen=True)
class FitModel:
    """One decay model with bound parameter values."""

    kind: str
    values: tuple[float, ...]
    distance: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; one of {MODEL_KINDS}")
        names = PARAM_NAMES[self.kind]
        if len(self.values) != len(names):
            raise ValueError(
                f"{self.kind} takes {len(names)} parameters {names}, "
                f"got {len(self.values)}"
            )
        if self.kind == "convolution":
            p = self.params
            if p["sigma"] <= 0:
                raise ValueError(f"convolution sigma must be > 0, got {p['sigma']}")
            if p["tau"] < 0:
                raise ValueError(f"convolution tau must be >= 0, got {p['tau']}")
        elif self.distance < 0:
            raise ValueError(f"hop distance must be >= 0, got {self.distance}")

    @property
    def params(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES[self.kind], self.values))

    @property
    def physical(self) -> bool:
        """False when the fitted butterfly velocity is not positive."""
        if self.kind == "convolution":
            return True
        return self.params["v"] > 0

    @property
    def tau_over_sigma(self) -> float | None:
        if self.kind != "convolution":
            return None
        p = self.params
        return p["tau"] / p["sigma"]


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    rss: float
    window: tuple[float, float]
    converged: bool
    iterations: int
    time_units: str = "physical"
    quantity: str = "re"

    def __post_init__(self) -> None:
        if self.rss < 0:
            raise ValueError(f"residual sum of squares must be >= 0, got {self.rss}")

    @property
    def physical(self) -> bool:
        return self.model.physical

    @property
    def tau_over_sigma(self) -> float | None:
        return self.model.tau_over_sigma


def _eval_shifted_exp(lam: float, v: float, x: float, t: np.ndarray, power: int) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        shifted = t - x / v
        arg = lam * shifted**power
        arg = np.nan_to_num(arg, nan=_EXP_CLIP, posinf=_EXP_CLIP, neginf=-_EXP_CLIP)
        return np.exp(np.clip(arg, -_EXP_CLIP, _EXP_CLIP))


def _conv_basis(tau: float, sigma: float, t: float) -> tuple[float, float]:
    """The two convolution basis functions (minus term, plus term) at one t."""
    s2 = math.sqrt(2.0) * sigma
    z_minus = (tau / 2.0 - sigma * sigma * t) / s2
    z_plus = (tau / 2.0 + sigma * sigma * t) / s2
    shared = -(tau * tau / (8.0 * sigma * sigma) + sigma * sigma * t * t / 2.0)
    g_plus = erfcx(z_plus) * math.exp(shared)
    if z_minus >= 0.0:
        g_minus = erfcx(z_minus) * math.exp(shared)
    else:
        # e^{-tau t/2} <= 1 and erfc(z) < 2 here, so the direct form is safe
        g_minus = math.exp(-tau * t / 2.0) * erfc(z_minus)
    return g_minus, g_plus


def _eval_convolution(
    p: float, q: float, tau: float, sigma: float, t: np.ndarray
) -> np.ndarray:
    out = np.empty(len(t))
    for idx, ti in enumerate(np.asarray(t, dtype=float)):
        g_minus, g_plus = _conv_basis(tau, sigma, ti)
        out[idx] = p * g_minus + q * g_plus
    return out


def model_eval(model: FitModel, t) -> np.ndarray:
    """Evaluate the model on times ``t`` (same units the model was fit in)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if model.kind == "exponential":
        return _eval_shifted_exp(*model.values, model.distance, t, power=1)
    if model.kind == "gaussian":
        return _eval_shifted_exp(*model.values, model.distance, t, power=2)
    return _eval_convolution(*model.values, t)


def _fit_times(series: OTOCSeries, time_units: str) -> np.ndarray:
    if time_units == "physical":
        return series.grid.jt / series.params.hopping
    if time_units == "jt":
        return series.grid.jt.copy()
    raise ValueError(f"time_units must be 'physical' or 'jt', got {time_units!r}")


def _fit_values(series: OTOCSeries, quantity: str) -> np.ndarray:
    if quantity == "re":
        return series.values.real.copy()
    if quantity == "abs":
        return np.abs(series.values)
    raise ValueError(f"quantity must be 're' or 'abs', got {quantity!r}")


def threshold_crossing(
    series: OTOCSeries, level: float, time_units: str = "physical"
) -> float | None:
    """First fit-time where Re OTOC drops below ``level``; None if it never does."""
    t = _fit_times(series, time_units)
    below = np.nonzero(series.values.real < level)[0]
    return float(t[below[0]]) if len(below) else None


def first_local_minimum(series: OTOCSeries, time_units: str = "physical") -> float | None:
    y = series.values.real
    t = _fit_times(series, time_units)
    for k in range(1, len(y) - 1):
        if y[k] < y[k - 1] and y[k] < y[k + 1]:
            return float(t[k])
    return None


def default_window(series: OTOCSeries, time_units: str = "physical") -> float:
    """Early-time cutoff: first drop of Re OTOC below 0.1 or first local
    minimum, whichever comes first; the full grid if neither occurs."""
    t = _fit_times(series, time_units)
    candidates = [
        c
        for c in (
            threshold_crossing(series, 0.1, time_units),
            first_local_minimum(series, time_units),
        )
        if c is not None
    ]
    return min(candidates) if candidates else float(t[-1])


def front_window(
    series: OTOCSeries,
    start_level: float = 0.9,
    end_level: float = 0.05,
    time_units: str = "physical",
) -> tuple[float, float]:
    """Window spanning just the decay front, plateau excluded.

    Runs from the first drop of Re OTOC below ``start_level`` to the first
    drop below ``end_level`` (or the first local minimum, or the grid end,
    when the trace never gets that low).  Two-parameter front fits anchored
    at t = 0 are dominated by the flat plateau and push the front center to
    unphysically early times; this window isolates the decaying segment.
    """
    lo = threshold_crossing(series, start_level, time_units)
    if lo is None:
        raise ValueError(
            f"no decay front: trace never drops below start level {start_level}"
        )
    t = _fit_times(series, time_units)
    candidates = [
        c
        for c in (
            threshold_crossing(series, end_level, time_units),
            first_local_minimum(series, time_units),
        )
        if c is not None
    ]
    hi = min(candidates) if candidates else float(t[-1])
    if hi <= lo:
        raise ValueError(f"degenerate front window [{lo}, {hi}]")
    return (lo, hi)


def _normalize_window(
    series: OTOCSeries, window, time_units: str
) -> tuple[float, float]:
    """Accept a cutoff t_w, a (t_lo, t_w) pair, or None (default cutoff)."""
    if window is None:
        return (0.0, default_window(series, time_units))
    if np.ndim(window) == 0:
        return (0.0, float(window))
    lo, hi = (float(w) for w in window)
    if lo < 0 or hi <= lo:
        raise ValueError(f"fit window must satisfy 0 <= t_lo < t_w, got [{lo}, {hi}]")
    return (lo, hi)


def _seed_pq(basis: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Seed the linear (P, Q) pair for fixed (tau, sigma).

    Plain least squares explodes into huge cancelling +-(P, Q) pairs when
    the two basis columns are nearly collinear; a ridge term of relative
    size 1e-12 suppresses those while leaving well-conditioned seeds
    essentially unchanged.
    """
    gram = basis.T @ basis
    trace = float(np.trace(gram))
    if not np.isfinite(trace) or trace <= 0.0:
        return np.array([1.0, 1.0])
    coef = np.linalg.solve(gram + 1e-12 * trace * np.eye(2), basis.T @ y)
    if not np.all(np.isfinite(coef)):
        return np.array([1.0, 1.0])
    return coef


def _starts(kind: str, t: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    if kind in ("exponential", "gaussian"):
        return [
            np.array([lam, v])
            for lam in GUESS_LAMBDAS
            for v in GUESS_VELOCITIES
        ]
    starts = []
    for tau in GUESS_TAUS:
        for sigma in GUESS_SIGMAS:
            # the model is linear in (P, Q): seed them by linear least squares
            basis = np.array([_conv_basis(tau, sigma, ti) for ti in t])
            coef = _seed_pq(basis, y)
            starts.append(np.array([coef[0], coef[1], tau, sigma]))
    return starts


def _constrained_q(p: float, tau: float, sigma: float) -> float:
    """Q making the model pass through 1 at t = 0; inf when erfc underflows."""
    e0 = erfc(tau / (2.0 * math.sqrt(2.0) * sigma))
    if e0 < 1e-280:
        return math.inf
    return 1.0 / e0 - p


def fit_model(
    series: OTOCSeries,
    kind: str,
    window=None,
    distance: float | None = None,
    quantity: str = "re",
    time_units: str = "physical",
    constrain_origin: bool = False,
) -> FitResult:
    """Fit one model family to the early-time OTOC trace.

    ``window`` is the fit-time range in ``time_units``: a cutoff t_w meaning
    [0, t_w], an explicit (t_lo, t_w) pair, or None for ``default_window``.
    ``distance`` defaults to the hop distance carried by the series.
    ``constrain_origin`` (convolution only) eliminates Q through the
    requirement model(0) = 1.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; one of {MODEL_KINDS}")
    if constrain_origin and kind != "convolution":
        raise ValueError("constrain_origin applies to the convolution model only")
    t_all = _fit_times(series, time_units)
    y_all = _fit_values(series, quantity)
    t_lo, t_w = _normalize_window(series, window, time_units)
    mask = (t_all >= t_lo - 1e-12) & (t_all <= t_w * (1 + 1e-12))
    t, y = t_all[mask], y_all[mask]
    if len(t) < _MIN_WINDOW_POINTS:
        raise ValueError(
            f"fit window [{t_lo}, {t_w}] contains {len(t)} points; "
            f"need at least {_MIN_WINDOW_POINTS}"
        )
    max_nfev = None
    if kind == "convolution":
        x = 0.0
        method = "trf"
        max_nfev = _CONV_MAX_NFEV
        if constrain_origin:
            bounds = ([-np.inf, 0.0, 1e-6], np.inf)

            def residual(theta: np.ndarray) -> np.ndarray:
                q = _constrained_q(theta[0], theta[1], theta[2])
                if not math.isfinite(q):
                    return np.full_like(t, 1e6)
                return _eval_convolution(theta[0], q, theta[1], theta[2], t) - y

        else:
            bounds = ([-np.inf, -np.inf, 0.0, 1e-6], np.inf)

            def residual(theta: np.ndarray) -> np.ndarray:
                return _eval_convolution(*theta, t) - y

    else:
        if distance is None:
            distance = series.hop_distance
        if distance is None:
            raise ValueError(
                "series carries no hop distance; pass `distance` explicitly"
            )
        x = float(distance)
        bounds = (-np.inf, np.inf)
        method = "lm"
        power = 1 if kind == "exponential" else 2

        def residual(theta: np.ndarray) -> np.ndarray:
            return _eval_shifted_exp(theta[0], theta[1], x, t, power) - y

    starts = _starts(kind, t, y)
    if kind == "convolution" and constrain_origin:
        starts = [s[[0, 2, 3]] for s in starts]
    best = None
    for start in starts:
        res = least_squares(
            residual, start, method=method, bounds=bounds, max_nfev=max_nfev
        )
        rss = float(np.sum(res.fun**2))
        key = (rss, res.nfev)
        if best is None or key < best[0]:
            best = (key, res)
    (rss, nfev), res = best
    values = tuple(float(p) for p in res.x)
    if kind == "convolution" and constrain_origin:
        p0, tau, sigma = values
        values = (p0, _constrained_q(p0, tau, sigma), tau, sigma)
    model = FitModel(kind, values, distance=x)
    return FitResult(
        model,
        rss,
        (t_lo, t_w),
        converged=bool(res.success),
        iterations=int(nfev),
        time_units=time_units,
        quantity=quantity,
    )


def model_select(
    series: OTOCSeries,
    kinds=("exponential", "gaussian"),
    window=None,
    distance: float | None = None,
    quantity: str = "re",
    time_units: str = "physical",
) -> tuple[FitResult, ...]:
    """Fit several families and rank them: best residual first, any fit with
    an unphysical velocity last regardless of residual."""
    results = [
        fit_model(series, kind, window, distance, quantity, time_units)
        for kind in kinds
    ]
    order = sorted(
        range(len(results)),
        key=lambda k: (
            not results[k].physical,
            results[k].rss,
            results[k].iterations,
            k,
        ),
    )
    return tuple(results[k] for k in order)


def regime_classify(fit: FitResult | FitModel) -> str:
    """Place a convolution fit on the gaussian/exponential axis by tau/sigma."""
    model = fit.model if isinstance(fit, FitResult) else fit
    ratio = model.tau_over_sigma
    if ratio is None:
        raise ValueError("regime classification needs a convolution fit")
    if ratio > GAUSSIAN_LIKE_RATIO:
        return "gaussian-like"
    if ratio < EXPONENTIAL_LIKE_RATIO:
        return "exponential-like"
    return "intermediate"


def result_to_json(result: FitResult) -> dict:
    """JSON-ready report block for one fit."""
    block = {
        "model": result.model.kind,
        "params": result.model.params,
        "distance": result.model.distance,
        "rss": result.rss,
        "window": list(result.window),
        "time_units": result.time_units,
        "quantity": result.quantity,
        "converged": result.converged,
        "iterations": result.iterations,
        "physical": result.physical,
    }
    if result.model.kind == "convolution":
        block["tau_over_sigma"] = result.tau_over_sigma
        block["regime"] = regime_classify(result)
    return block
