"""Asymptotic spectral laws and empirical-spectral-distribution machinery.

Closed forms ship for the densities; cumulative distribution values are
produced by adaptive quadrature of those densities (plus the point mass at
zero in the tall Marchenko-Pastur regime), so the CDF path exercises the
same quadrature kernel the rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SpectrumSample, quad_integrate

__all__ = [
    "LawSpec",
    "Esd",
    "DensityBoundReport",
    "semicircle_density",
    "mp_density",
    "mp_atom",
    "mp_cdf",
    "single_ring_radii",
    "esd_from_spectrum",
    "averaged_esd",
    "law_cdf",
    "law_density",
    "convergence_gap",
    "density_bound_check",
]

LAW_KINDS = ("semicircle", "marchenko-pastur", "circular", "single-ring")


@dataclass(frozen=True)
class LawSpec:
    """A named limit law plus its shape parameters.

    c is the aspect ratio rows/samples for Marchenko-Pastur; sigma scales
    the semicircle support to [-2 sigma, 2 sigma] (and acts as a variance
    scale for M-P); ring_a/ring_b are the annulus radii of the single-ring
    law.
    """

    kind: str
    c: float | None = None
    sigma: float = 1.0
    ring_a: float | None = None
    ring_b: float | None = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind == "marchenko-pastur":
            if self.c is None or self.c <= 0:
                raise ValueError("marchenko-pastur needs an aspect ratio c > 0")
        if self.kind == "single-ring":
            a, b = self.ring_a, self.ring_b
            if a is None or b is None or not (0 <= a <= b):
                raise ValueError("single-ring needs radii 0 <= ring_a <= ring_b")

    @property
    def support(self) -> tuple[float, float]:
        """Endpoints of the real spectral support (continuous part)."""
        if self.kind == "semicircle":
            return (-2.0 * self.sigma, 2.0 * self.sigma)
        if self.kind == "marchenko-pastur":
            rc = np.sqrt(self.c)
            s2 = self.sigma ** 2
            return ((1.0 - rc) ** 2 * s2, (1.0 + rc) ** 2 * s2)
        raise ValueError(f"{self.kind} has no real support interval")


@dataclass(frozen=True)
class Esd:
    """Empirical spectral distribution: step CDF plus a binned density."""

    grid: np.ndarray
    cdf: np.ndarray
    hist: np.ndarray
    bin_edges: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        hist = np.asarray(self.hist, dtype=float)
        edges = np.asarray(self.bin_edges, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or grid.shape != cdf.shape:
            raise ValueError("grid and cdf must be matching nonempty 1-d arrays")
        if np.any(np.diff(grid) < 0):
            raise ValueError("grid must be ascending")
        if np.any(np.diff(cdf) < -1e-12) or cdf[0] < -1e-12 or cdf[-1] > 1 + 1e-12:
            raise ValueError("cdf must be nondecreasing within [0, 1]")
        if abs(cdf[-1] - 1.0) > 1e-9:
            raise ValueError("cdf must reach 1 at the last grid point")
        if np.any(hist < 0):
            raise ValueError("density bins must be nonnegative")
        mass = float(np.sum(hist * np.diff(edges)))
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"binned density integrates to {mass}, not 1")
        for name, arr in (("grid", grid), ("cdf", cdf), ("hist", hist),
                          ("bin_edges", edges)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def cdf_at(self, x) -> np.ndarray:
        """Right-continuous step-CDF evaluation at arbitrary points."""
        idx = np.searchsorted(self.grid, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate([[0.0], self.cdf])
        return padded[idx]


def semicircle_density(x, sigma: float = 1.0):
    """Semicircle density on [-2 sigma, 2 sigma]; 1/pi at the center for sigma=1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 2.0 * sigma
    out[inside] = np.sqrt(4.0 * sigma**2 - x[inside] ** 2) / (2.0 * np.pi * sigma**2)
    return out if out.ndim else float(out)


def mp_density(x, c: float):
    """Continuous Marchenko-Pastur density for aspect ratio c = rows/samples.

    sqrt((x-a)(b-x)) / (2 pi c x) on [a, b] with a = (1-sqrt(c))^2 and
    b = (1+sqrt(c))^2. For c > 1 the continuous part carries mass 1/c; the
    remaining 1 - 1/c sits in a point mass at zero (see ``mp_atom``).
    """
    if c <= 0:
        raise ValueError("aspect ratio c must be positive")
    x = np.asarray(x, dtype=float)
    a = (1.0 - np.sqrt(c)) ** 2
    b = (1.0 + np.sqrt(c)) ** 2
    out = np.zeros_like(x)
    inside = (x > a) & (x < b)
    xi = x[inside]
    out[inside] = np.sqrt((xi - a) * (b - xi)) / (2.0 * np.pi * c * xi)
    return out if out.ndim else float(out)


def mp_atom(c: float) -> float:
    """Weight of the Marchenko-Pastur point mass at zero: (1 - 1/c)^+."""
    if c <= 0:
        raise ValueError("aspect ratio c must be positive")
    return max(0.0, 1.0 - 1.0 / c)


def _cumulative_quad(density, lo: float, hi: float, xs: np.ndarray,
                     tol: float) -> np.ndarray:
    """CDF increments of `density` on [lo, hi] accumulated at sorted xs."""
    pts = np.clip(xs, lo, hi)
    knots = np.unique(np.concatenate([[lo], pts]))
    segs = [quad_integrate(density, knots[i], knots[i + 1], tol=tol,
                           max_panels=400)
            for i in range(knots.size - 1)]
    cum = np.concatenate([[0.0], np.cumsum(segs)])
    return cum[np.searchsorted(knots, pts)]


def mp_cdf(x, c: float, tol: float = 1e-10):
    """Marchenko-Pastur CDF by adaptive quadrature, point mass included."""
    if c <= 0:
        raise ValueError("aspect ratio c must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    a = (1.0 - np.sqrt(c)) ** 2
    b = (1.0 + np.sqrt(c)) ** 2
    out = _cumulative_quad(lambda t: mp_density(t, c), a, b, xs, tol)
    out = out + np.where(xs >= 0, mp_atom(c), 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _semicircle_cdf(x, sigma: float, tol: float = 1e-10):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _cumulative_quad(lambda t: semicircle_density(t, sigma),
                            -2.0 * sigma, 2.0 * sigma, x, tol)


def law_cdf(law: LawSpec, x, tol: float = 1e-10) -> np.ndarray:
    """CDF of a real-supported law evaluated at (array) x."""
    if law.kind == "semicircle":
        return _semicircle_cdf(x, law.sigma, tol)
    if law.kind == "marchenko-pastur":
        s2 = law.sigma ** 2
        return np.atleast_1d(mp_cdf(np.asarray(x, dtype=float) / s2, law.c, tol))
    raise ValueError(f"{law.kind} has no scalar CDF")


def law_density(law: LawSpec, x) -> np.ndarray:
    """Continuous density of a real-supported law evaluated at (array) x."""
    if law.kind == "semicircle":
        return np.atleast_1d(semicircle_density(x, law.sigma))
    if law.kind == "marchenko-pastur":
        s2 = law.sigma ** 2
        return np.atleast_1d(mp_density(np.asarray(x, dtype=float) / s2, law.c)) / s2
    raise ValueError(f"{law.kind} has no scalar density")


def single_ring_radii(theta_moment_neg2: float,
                      theta_moment_pos2: float) -> tuple[float, float]:
    """Annulus radii from the +/-2nd moments of the singular-value law.

    inner a = (E[x^-2])^(-1/2), outer b = (E[x^2])^(1/2). Scaling the
    singular-value law by s scales both radii by s.
    """
    if not (np.isfinite(theta_moment_neg2) and np.isfinite(theta_moment_pos2)):
        raise ValueError("moments must be finite")
    if theta_moment_neg2 <= 0 or theta_moment_pos2 <= 0:
        raise ValueError("moments must be positive")
    return (theta_moment_neg2 ** -0.5, theta_moment_pos2 ** 0.5)


def esd_from_spectrum(s: SpectrumSample, bins: int = 50) -> Esd:
    """Step CDF (jump 1/N per eigenvalue) plus an equal-width histogram."""
    if s.kind == "eigen-general":
        raise ValueError("esd needs a real spectrum; got complex eigenvalues")
    vals = np.sort(np.real(s.values))
    n = vals.size
    if bins < 1:
        raise ValueError("bins must be >= 1")
    cdf = np.arange(1, n + 1, dtype=float) / n
    span = vals[-1] - vals[0]
    if span == 0:
        edges = np.array([vals[0] - 0.5, vals[0] + 0.5])
        hist = np.array([1.0])
    else:
        hist, edges = np.histogram(vals, bins=bins, density=True)
    return Esd(grid=vals, cdf=cdf, hist=hist, bin_edges=edges)


def averaged_esd(spectra, grid_points: int = 2000, bins: int = 60) -> Esd:
    """Seed-averaged ESD: mean of step CDFs on a shared grid.

    Approximates the expected spectral distribution; the caller controls
    how many independent spectra go in (50 is the package-wide default for
    convergence studies).
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("need at least one spectrum")
    allvals = [np.sort(np.real(s.values)) for s in spectra]
    lo = min(v[0] for v in allvals)
    hi = max(v[-1] for v in allvals)
    if hi == lo:
        hi = lo + 1e-12
    grid = np.linspace(lo, hi, grid_points)
    cdf = np.zeros(grid_points)
    edges = np.linspace(lo, hi, bins + 1)
    hist = np.zeros(bins)
    for v in allvals:
        cdf += np.searchsorted(v, grid, side="right") / v.size
        h, _ = np.histogram(v, bins=edges, density=True)
        hist += h
    cdf /= len(allvals)
    hist /= len(allvals)
    return Esd(grid=grid, cdf=cdf, hist=hist, bin_edges=edges)


def convergence_gap(esd: Esd, law: LawSpec) -> float:
    """sup_x |F(x) - G(x)| over the ESD's own evaluation grid."""
    g = law_cdf(law, esd.grid)
    return float(np.max(np.abs(esd.cdf - g)))


@dataclass(frozen=True)
class DensityBoundReport:
    """Outcome of the bulk density-deviation check."""

    law_kind: str
    interval: tuple[float, float]
    points_used: int
    max_abs_dev: float
    c_statistic: float
    estimator: str


def density_bound_check(spectrum: SpectrumSample, law: LawSpec,
                        epsilon: float, estimator: str = "histogram",
                        density_estimate=None) -> DensityBoundReport:
    """Compare an estimated spectral density to the limit law on the bulk.

    The bulk interval shrinks toward the edges at the law's own rate
    (N^{-1/3} for the semicircle, N^{-2/3} for Marchenko-Pastur) and the
    deviation is weighted by N times the edge factor -- (4 - x^2) for the
    semicircle, (x - a)(b - x) for M-P -- so the reported statistic is the
    effective constant in the density bound. Histogram estimation uses the
    Freedman-Diaconis width; pass estimator="kde" for a Gaussian kernel.
    """
    if law.kind not in ("semicircle", "marchenko-pastur"):
        raise ValueError("density bounds cover semicircle and marchenko-pastur")
    vals = np.real(spectrum.values)
    n = vals.size
    if law.kind == "semicircle":
        u = vals / law.sigma
        lo = -2.0 + n ** (-1.0 / 3.0) * epsilon
        hi = 2.0 - n ** (-1.0 / 3.0) * epsilon
        ref = lambda t: semicircle_density(t, 1.0)
        edge = lambda t: 4.0 - t**2
    else:
        u = vals / law.sigma ** 2
        a, b = (1.0 - np.sqrt(law.c)) ** 2, (1.0 + np.sqrt(law.c)) ** 2
        lo = a + n ** (-2.0 / 3.0) * epsilon
        hi = b - n ** (-2.0 / 3.0) * epsilon
        ref = lambda t: mp_density(t, law.c)
        edge = lambda t: (t - a) * (b - t)
    if lo >= hi:
        raise ValueError(
            f"bulk interval empty: N={n} too small for epsilon={epsilon}")
    if density_estimate is not None:
        centers, phat = (np.asarray(v, dtype=float) for v in density_estimate)
    elif estimator == "histogram":
        phat, edges_ = np.histogram(u, bins="fd", density=True)
        centers = 0.5 * (edges_[1:] + edges_[:-1])
    elif estimator == "kde":
        from scipy.stats import gaussian_kde

        centers = np.linspace(lo, hi, 200)
        phat = gaussian_kde(u)(centers)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    mask = (centers >= lo) & (centers <= hi)
    if not np.any(mask):
        raise ValueError("no density estimate points fall in the bulk interval")
    dev = np.abs(phat[mask] - ref(centers[mask]))
    cstat = float(np.max(dev * n * edge(centers[mask])))
    return DensityBoundReport(
        law_kind=law.kind,
        interval=(float(lo), float(hi)),
        points_used=int(mask.sum()),
        max_abs_dev=float(np.max(dev)),
        c_statistic=cstat,
        estimator="provided" if density_estimate is not None else estimator,
    )
