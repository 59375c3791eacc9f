"""Covariance-change detection from windowed samples via trace U-statistics.

The squared Frobenius distance between two window covariances,
|Sigma_s - Sigma_t|_F^2 = tr(Sigma_s^2) + tr(Sigma_t^2) - 2 tr(Sigma_s Sigma_t),
is estimated without forming any covariance matrix: each trace has an
unbiased U-statistic computable from Gram matrices in O(p^2 n + p n^2),
which stays well-posed when the sensor count exceeds the per-window sample
count. Distances over all window pairs are pooled into one standardized
statistic whose null scale comes from a parametric bootstrap.

All estimators assume the rows (sensors) are centered; feed standardized
windows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

__all__ = [
    "WindowedStream",
    "UStatConfig",
    "TestReport",
    "trace_sq_estimator",
    "cross_trace_estimator",
    "pairwise_distance",
    "fap_threshold",
    "pooled_statistic",
    "detection_rate_estimate",
    "localize_sensitive_sensors",
]


@dataclass(frozen=True)
class WindowedStream:
    """A group of same-shape sampling windows, each sensors x samples."""

    windows: tuple

    def __post_init__(self):
        wins = tuple(np.asarray(w, dtype=float) for w in self.windows)
        if len(wins) < 2:
            raise ValueError("need at least two windows")
        shape = wins[0].shape
        for i, w in enumerate(wins):
            if w.ndim != 2:
                raise ValueError(f"window {i} is not 2-d")
            if w.shape != shape:
                raise ValueError(
                    f"window {i} shape {w.shape} disagrees with {shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"window {i} contains non-finite entries")
        for w in wins:
            w.setflags(write=False)
        object.__setattr__(self, "windows", wins)

    @property
    def q(self) -> int:
        return len(self.windows)

    @property
    def p(self) -> int:
        return self.windows[0].shape[0]

    @property
    def n_g(self) -> int:
        return self.windows[0].shape[1]


@dataclass(frozen=True)
class UStatConfig:
    """Shape and calibration parameters for the pooled test."""

    p: int
    n_g: int
    q: int
    alpha: float = 0.05
    nboot: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.n_g < 4:
            raise ValueError("per-window sample count must be at least 4")
        if self.q < 2:
            raise ValueError("need at least two windows")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.nboot < 10:
            raise ValueError("bootstrap needs at least 10 replicates")


@dataclass(frozen=True)
class TestReport:
    """Outcome of the pooled covariance-change test."""

    statistic: float
    sigma: float
    ratio: float
    threshold: float
    alpha: float
    decision: str
    excluded: tuple = ()
    notes: tuple = ()

    def __post_init__(self):
        if self.decision not in ("H0", "H1"):
            raise ValueError(f"decision must be H0 or H1, got {self.decision!r}")
        should_reject = self.ratio > self.threshold
        if (self.decision == "H1") != should_reject:
            raise ValueError("decision disagrees with ratio vs threshold")


# ---------------------------------------------------------------------------
# Gram-form estimators. The batched cores take stacks (..., n, n) of Gram
# matrices so bootstrap replicates and sensor downdates reuse one code path.
# ---------------------------------------------------------------------------

def _a_from_gram(g: np.ndarray, n: int) -> np.ndarray:
    d = np.diagonal(g, axis1=-2, axis2=-1)
    t1 = (g * g).sum(axis=(-2, -1)) - (d * d).sum(axis=-1)
    r = g.sum(axis=-1) - d
    t2 = (r * r).sum(axis=-1) - t1
    s1 = g.sum(axis=(-2, -1)) - d.sum(axis=-1)
    t3 = s1 * s1 - 2.0 * t1 - 4.0 * t2
    return (t1 / (n * (n - 1))
            - 2.0 * t2 / (n * (n - 1) * (n - 2))
            + t3 / (n * (n - 1) * (n - 2) * (n - 3)))


def _c_from_gram(h: np.ndarray, n: int) -> np.ndarray:
    f2 = (h * h).sum(axis=(-2, -1))
    r = h.sum(axis=-1)
    c = h.sum(axis=-2)
    s = h.sum(axis=(-2, -1))
    term1 = f2 / n**2
    term2 = ((c * c).sum(axis=-1) - f2) / ((n - 1) * n**2)
    term3 = ((r * r).sum(axis=-1) - f2) / ((n - 1) * n**2)
    term4 = (s * s - (r * r).sum(axis=-1) - (c * c).sum(axis=-1) + f2) \
        / ((n - 1) ** 2 * n**2)
    return term1 - term2 - term3 + term4


def trace_sq_estimator(z) -> float:
    """Unbiased estimate of tr(Sigma^2) from one window (needs n >= 4)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise ValueError("window must be 2-d (sensors x samples)")
    n = z.shape[1]
    if n < 4:
        raise ValueError("trace-square estimator needs at least 4 samples")
    return float(_a_from_gram(z.T @ z, n))


def cross_trace_estimator(zs, zt) -> float:
    """Unbiased estimate of tr(Sigma_s Sigma_t) from two windows."""
    zs = np.asarray(zs, dtype=float)
    zt = np.asarray(zt, dtype=float)
    if zs.shape != zt.shape or zs.ndim != 2:
        raise ValueError("windows must share one 2-d shape")
    n = zs.shape[1]
    if n < 2:
        raise ValueError("cross-trace estimator needs at least 2 samples")
    return float(_c_from_gram(zs.T @ zt, n))


def pairwise_distance(zs, zt) -> float:
    """Estimated |Sigma_s - Sigma_t|_F^2 for one window pair."""
    return (trace_sq_estimator(zs) + trace_sq_estimator(zt)
            - 2.0 * cross_trace_estimator(zs, zt))


def _v1_batch(z: np.ndarray) -> np.ndarray:
    """Pooled statistic for stacked window groups of shape (..., q, p, n)."""
    q, p, n = z.shape[-3:]
    lead = z.shape[:-3]
    # One Gram of the column-concatenated windows holds every block needed:
    # diagonal blocks feed the trace-square core, off-diagonal the cross core.
    flat = np.moveaxis(z, -3, -2).reshape(lead + (p, q * n))
    big = np.swapaxes(flat, -2, -1) @ flat
    a = np.stack([_a_from_gram(big[..., s * n:(s + 1) * n, s * n:(s + 1) * n], n)
                  for s in range(q)], axis=-1)
    total = np.zeros(lead)
    for s in range(q):
        for t in range(s + 1, q):
            c = _c_from_gram(big[..., s * n:(s + 1) * n, t * n:(t + 1) * n], n)
            total = total + a[..., s] + a[..., t] - 2.0 * c
    return 2.0 * total / (q * (q - 1))


def fap_threshold(alpha: float) -> float:
    """Upper-tail standard normal quantile used as the rejection threshold."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return float(norm.isf(alpha))


def _null_scale(windows, nboot: int, rng) -> tuple:
    """Bootstrap sd of the pooled statistic under a matched Gaussian null.

    Replicates are drawn from N(0, pooled covariance). The plug-in
    covariance inflates tr(Sigma^2) at these dimensions, so the scale is
    deflated by the ratio of the unbiased trace-square estimate to the
    plug-in one whenever the former is positive.
    """
    q = len(windows)
    p, n = windows[0].shape
    pooled = np.hstack(windows)
    sig = (pooled @ pooled.T) / pooled.shape[1]
    try:
        chol = np.linalg.cholesky(sig)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sig)
        chol = v * np.sqrt(np.clip(w, 0.0, None))
    sims = chol @ rng.standard_normal((nboot, q, p, n))
    scale = float(_v1_batch(sims).std())
    notes = []
    tau = float(np.mean([trace_sq_estimator(w) for w in windows]))
    tr2_plugin = float((sig * sig).sum())
    if tau > 0.0 and tr2_plugin > 0.0:
        scale *= np.sqrt(tau / tr2_plugin)
    else:
        notes.append("trace-square estimate nonpositive; scale left uncorrected")
    return scale, notes


def pooled_statistic(stream: WindowedStream, alpha: float = 0.05,
                     nboot: int = 300, seed: int = 0) -> TestReport:
    """Standardized pooled covariance-change statistic over all window pairs.

    Constant windows (no sample variation) are excluded with a note before
    testing; at least two usable windows must remain. The decision is H1
    exactly when the standardized ratio exceeds the upper-alpha normal
    quantile.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if stream.n_g < 4:
        raise ValueError("pooled statistic needs at least 4 samples per window")
    notes = []
    excluded = []
    usable = []
    for i, w in enumerate(stream.windows):
        if float(np.abs(w - w.mean(axis=1, keepdims=True)).max()) < 1e-12:
            excluded.append(i)
            notes.append(f"window {i} excluded: no sample variation")
        else:
            usable.append(w)
    if len(usable) < 2:
        raise ValueError("fewer than two usable windows after exclusion")

    z = np.stack(usable)
    v1 = float(_v1_batch(z[None])[0])
    rng = np.random.default_rng(seed)
    sigma, scale_notes = _null_scale(usable, nboot, rng)
    notes.extend(scale_notes)
    if sigma <= 0.0:
        raise ArithmeticError("bootstrap null scale vanished")
    ratio = v1 / sigma
    threshold = fap_threshold(alpha)
    return TestReport(
        statistic=v1, sigma=sigma, ratio=ratio, threshold=threshold,
        alpha=alpha, decision="H1" if ratio > threshold else "H0",
        excluded=tuple(excluded), notes=tuple(notes))


def detection_rate_estimate(config: UStatConfig, alternative=None,
                            trials: int = 200, seed: int = 0) -> float:
    """Monte Carlo rejection rate of the pooled test at a given design.

    With ``alternative`` None every window is N(0, I): the result
    estimates the false-alarm probability. Otherwise ``alternative`` is a
    p x p covariance applied to the final window only, and the result
    estimates power against that shift.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    p, n, q = config.p, config.n_g, config.q
    chol_alt = None
    if alternative is not None:
        alt = np.asarray(alternative, dtype=float)
        if alt.shape != (p, p):
            raise ValueError(f"alternative covariance must be {p} x {p}")
        chol_alt = np.linalg.cholesky(alt)
    rng = np.random.default_rng(seed)
    threshold = fap_threshold(config.alpha)
    hits = 0
    for _ in range(trials):
        z = rng.standard_normal((q, p, n))
        if chol_alt is not None:
            z[-1] = chol_alt @ z[-1]
        v1 = float(_v1_batch(z[None])[0])
        sigma, _ = _null_scale(list(z), config.nboot, rng)
        hits += (v1 / sigma) > threshold
    return hits / trials


def localize_sensitive_sensors(stream: WindowedStream,
                               event_window: int | None = None) -> list:
    """Rank sensors by how much of the pooled change signal they carry.

    For each sensor the Gram matrices are downdated by that sensor's
    rank-one contribution and the pooled statistic recomputed; the score
    is the drop relative to the full-sensor statistic, so sensors driving
    the covariance change score highest. With ``event_window`` set, only
    pairs involving that window enter the statistic. Returns
    (sensor index, score) pairs sorted by descending score.
    """
    z = np.stack([np.asarray(w, dtype=float) for w in stream.windows])
    q, p, n = z.shape
    if p < 2:
        raise ValueError("localization needs at least 2 sensors")
    if n < 4:
        raise ValueError("localization needs at least 4 samples per window")
    if event_window is not None and not 0 <= event_window < q:
        raise ValueError(f"event_window {event_window} out of range")

    grams = np.einsum("qpi,qpj->qij", z, z)
    down_g = grams[:, None, :, :] - np.einsum("qrn,qrm->qrnm", z, z)
    a_full = _a_from_gram(grams, n)
    a_down = _a_from_gram(down_g, n)

    pairs = [(s, t) for s in range(q) for t in range(s + 1, q)
             if event_window is None or event_window in (s, t)]
    v_full = 0.0
    v_down = np.zeros(p)
    for s, t in pairs:
        h = z[s].T @ z[t]
        h_down = h[None] - np.einsum("rn,rm->rnm", z[s], z[t])
        v_full += a_full[s] + a_full[t] - 2.0 * float(_c_from_gram(h, n))
        v_down += a_down[s] + a_down[t] - 2.0 * _c_from_gram(h_down, n)
    norm_const = len(pairs)
    v_full /= norm_const
    v_down /= norm_const

    scores = v_full - v_down
    order = np.argsort(-scores, kind="stable")
    return [(int(i), float(scores[i])) for i in order]
