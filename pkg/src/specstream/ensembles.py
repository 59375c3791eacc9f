"""Seeded samplers for the classical matrix ensembles and data-matrix prep.

Everything here is deterministic given the spec's seed: same seed, same
bits. Scaling conventions follow the aspect ratio c = rows / samples and
sample covariance W = X X^H / T throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DataMatrix

__all__ = [
    "EnsembleSpec",
    "sample",
    "sample_gue",
    "sample_lue",
    "sample_ginibre",
    "sample_gaussian_rect",
    "standardize",
    "haar_unitary",
    "singular_value_equivalent",
]

ENSEMBLE_KINDS = ("gue", "lue", "ginibre", "gaussian-rect")


@dataclass(frozen=True)
class EnsembleSpec:
    """What to sample: ensemble kind, dimensions, scale and seed.

    ``n`` is the row count; ``t`` the sample count for rectangular kinds
    (ignored by gue/ginibre). ``atom`` selects the entry distribution:
    "gaussian" (default) or "bernoulli" (+/-1, illustrating universality).
    """

    kind: str
    n: int
    t: int | None = None
    sigma: float = 1.0
    seed: int = 0
    complex_entries: bool = False
    atom: str = "gaussian"

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind in ("lue", "gaussian-rect"):
            if self.t is None or self.t < 1:
                raise ValueError(f"{self.kind} needs a sample count t >= 1")
        if self.atom not in ("gaussian", "bernoulli"):
            raise ValueError(f"unknown atom {self.atom!r}")


def _entry_block(rng, shape, atom: str) -> np.ndarray:
    if atom == "bernoulli":
        return rng.integers(0, 2, size=shape) * 2.0 - 1.0
    return rng.standard_normal(shape)


def sample(spec: EnsembleSpec) -> DataMatrix:
    """Dispatch on spec.kind."""
    fn = {
        "gue": sample_gue,
        "lue": sample_lue,
        "ginibre": sample_ginibre,
        "gaussian-rect": sample_gaussian_rect,
    }[spec.kind]
    return fn(spec)


def sample_gue(spec: EnsembleSpec) -> DataMatrix:
    """One n x n GUE draw.

    Diagonal entries are real N(0, sigma^2); off-diagonal entries are
    complex with independent N(0, sigma^2 / 2) real and imaginary parts,
    conjugate-symmetric across the diagonal. The spectrum of Y / sqrt(n)
    approaches the semicircle on [-2 sigma, 2 sigma].
    """
    if spec.kind != "gue":
        raise ValueError("spec.kind must be 'gue'")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    re = _entry_block(rng, (n, n), spec.atom)
    im = _entry_block(rng, (n, n), spec.atom)
    upper = spec.sigma * (re + 1j * im) / np.sqrt(2.0)
    y = np.triu(upper, 1)
    y = y + y.conj().T
    diag = spec.sigma * _entry_block(rng, n, spec.atom)
    y[np.arange(n), np.arange(n)] = diag
    return DataMatrix(y, hermitian=True, meta={"ensemble": "gue", "seed": spec.seed})


def sample_lue(spec: EnsembleSpec) -> DataMatrix:
    """One p x p Wishart (LUE) draw W = X X^H / t.

    X is p x t with independent complex entries of unit variance
    (N(0, sigma^2/2) real and imaginary parts, scaled by sigma). W is
    Hermitian positive semidefinite; its spectrum approaches the
    Marchenko-Pastur law with aspect ratio c = p / t.
    """
    if spec.kind != "lue":
        raise ValueError("spec.kind must be 'lue'")
    rng = np.random.default_rng(spec.seed)
    p, t = spec.n, spec.t
    re = _entry_block(rng, (p, t), spec.atom)
    im = _entry_block(rng, (p, t), spec.atom)
    x = spec.sigma * (re + 1j * im) / np.sqrt(2.0)
    w = x @ x.conj().T / t
    w = (w + w.conj().T) / 2.0
    return DataMatrix(w, hermitian=True, meta={"ensemble": "lue", "seed": spec.seed})


def sample_ginibre(spec: EnsembleSpec) -> DataMatrix:
    """One n x n Ginibre draw: iid entries, real by default.

    With ``complex_entries=True`` the entries are complex with unit total
    variance. Eigenvalues of X / sqrt(n) fill the disk of radius sigma.
    """
    if spec.kind != "ginibre":
        raise ValueError("spec.kind must be 'ginibre'")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.complex_entries:
        x = (_entry_block(rng, (n, n), spec.atom)
             + 1j * _entry_block(rng, (n, n), spec.atom)) / np.sqrt(2.0)
    else:
        x = _entry_block(rng, (n, n), spec.atom).astype(float)
    return DataMatrix(spec.sigma * x, meta={"ensemble": "ginibre", "seed": spec.seed})


def sample_gaussian_rect(spec: EnsembleSpec) -> DataMatrix:
    """A plain p x t data matrix with iid entries (the noise stream stand-in)."""
    if spec.kind != "gaussian-rect":
        raise ValueError("spec.kind must be 'gaussian-rect'")
    rng = np.random.default_rng(spec.seed)
    shape = (spec.n, spec.t)
    if spec.complex_entries:
        x = (_entry_block(rng, shape, spec.atom)
             + 1j * _entry_block(rng, shape, spec.atom)) / np.sqrt(2.0)
    else:
        x = _entry_block(rng, shape, spec.atom).astype(float)
    return DataMatrix(spec.sigma * x,
                      meta={"ensemble": "gaussian-rect", "seed": spec.seed})


def standardize(m, replacement_seed: int = 0) -> DataMatrix:
    """Center and scale every row to mean 0, variance 1 (population norm).

    Rows with zero variance carry no spectral information and would divide
    by zero; they are replaced by a seeded standard-normal row (itself
    standardized) and listed in ``meta['replaced_rows']``. Idempotent to
    1e-12: standardizing twice changes nothing.
    """
    x = m.entries if isinstance(m, DataMatrix) else np.asarray(m)
    if x.ndim != 2:
        raise ValueError("standardize expects a 2-d matrix")
    x = np.array(x, dtype=complex if np.iscomplexobj(x) else float)
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    flat = np.nonzero(np.abs(sd[:, 0]) < 1e-14 * max(1.0, np.abs(mu).max()))[0]
    if flat.size:
        rng = np.random.default_rng(replacement_seed)
        noise = rng.standard_normal((flat.size, x.shape[1]))
        noise -= noise.mean(axis=1, keepdims=True)
        noise /= noise.std(axis=1, keepdims=True)
        x[flat] = noise
        mu[flat] = 0.0
        sd[flat] = 1.0
    out = (x - mu) / sd
    meta = dict(m.meta) if isinstance(m, DataMatrix) else {}
    meta["standardized"] = True
    meta["replaced_rows"] = [int(i) for i in flat]
    return DataMatrix(out, meta=meta)


def haar_unitary(n: int, rng) -> np.ndarray:
    """A Haar-distributed n x n unitary via QR with phase-fixed diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    g /= np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def singular_value_equivalent(m, rng=None, seed: int = 0,
                              rescale: bool = True) -> DataMatrix:
    """Square matrix with the singular values of X / sqrt(T) and Haar angles.

    For a p x T data matrix X (p <= T) this returns U (X X^H / T)^{1/2}
    with U Haar unitary, optionally rescaled so the mean squared entry is
    1/p (for standardized X the rescale factor is exactly 1). Eigenvalues
    of the result follow the single-ring annulus with inner radius
    sqrt(1 - p/T). The applied scale is recorded in ``meta['sv_scale']``.
    """
    x = m.entries if isinstance(m, DataMatrix) else _as_array(m)
    p, t = x.shape
    if p > t:
        raise ValueError(f"need at least as many samples as rows, got {p}x{t}")
    if rng is None:
        rng = np.random.default_rng(seed)
    w = x @ x.conj().T / t
    w = (w + w.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(w)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    u = haar_unitary(p, rng)
    xu = u @ root
    scale = 1.0
    if rescale:
        msq = (np.abs(xu) ** 2).mean()
        if msq <= 0:
            raise ValueError("zero matrix has no singular-value equivalent")
        scale = np.sqrt(1.0 / (p * msq))
        xu = xu * scale
    meta = dict(m.meta) if isinstance(m, DataMatrix) else {}
    meta["sv_scale"] = float(scale)
    meta["aspect_c"] = p / t
    return DataMatrix(xu, meta=meta)


def _as_array(m) -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return arr
