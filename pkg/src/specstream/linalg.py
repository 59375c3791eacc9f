"""Dense matrix containers and numerical primitives shared by every module.

Value types are immutable after construction and all operations are pure,
so they can be used freely from worker processes. The eigensolver backend
(LAPACK via numpy) is an internal seam; the exported contracts are the
reconstruction residuals, not the algorithm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "DataMatrix",
    "SpectrumSample",
    "QuadratureError",
    "eig_hermitian",
    "eig_general",
    "svd_values",
    "quad_integrate",
    "quad_matrix",
]

HERMITIAN_RTOL = 1e-12

SPECTRUM_KINDS = ("eigen-hermitian", "eigen-general", "singular")


def _as_2d(entries) -> np.ndarray:
    arr = np.asarray(entries)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"degenerate shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """A dense measurement block: rows are channels, columns are samples.

    ``hermitian=True`` asserts max|A - A^H| <= 1e-12 * max|A| at
    construction time; violating inputs are rejected rather than silently
    symmetrized.
    """

    entries: np.ndarray
    hermitian: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = _as_2d(self.entries)
        if self.hermitian:
            if arr.shape[0] != arr.shape[1]:
                raise ValueError("hermitian tag requires a square matrix")
            scale = np.abs(arr).max()
            dev = np.abs(arr - arr.conj().T).max()
            if dev > HERMITIAN_RTOL * max(scale, 1e-300):
                raise ValueError(
                    f"hermitian tag violated: max|A - A^H| = {dev:.3e} "
                    f"exceeds {HERMITIAN_RTOL:g} * max|A|"
                )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class SpectrumSample:
    """An ordered spectrum together with where it came from.

    Real spectra (``eigen-hermitian`` and ``singular``) are sorted
    ascending; general complex spectra carry no order guarantee.
    """

    values: np.ndarray
    source_dims: tuple
    kind: str

    def __post_init__(self):
        vals = np.asarray(self.values)
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d array")
        if self.kind in ("eigen-hermitian", "singular"):
            vals = np.sort(np.real(vals))
            if self.kind == "singular" and vals[0] < -1e-12:
                raise ValueError("singular values must be nonnegative")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "source_dims", tuple(self.source_dims))

    def __len__(self) -> int:
        return self.values.size


def _matrix_of(a) -> np.ndarray:
    if isinstance(a, DataMatrix):
        return a.entries
    return _as_2d(a)


def eig_hermitian(a, return_vectors: bool = False):
    """Eigenvalues (ascending) of a Hermitian matrix.

    With ``return_vectors=True`` also returns the unitary Q satisfying
    ``A = Q diag(vals) Q^H`` with relative residual below 1e-10.
    """
    m = _matrix_of(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("eig_hermitian needs a square matrix")
    scale = max(np.abs(m).max(), 1e-300)
    if np.abs(m - m.conj().T).max() > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    if return_vectors:
        vals, vecs = np.linalg.eigh(m)
        sample = SpectrumSample(vals, m.shape, "eigen-hermitian")
        return sample, vecs
    vals = np.linalg.eigvalsh(m)
    return SpectrumSample(vals, m.shape, "eigen-hermitian")


def eig_general(a) -> SpectrumSample:
    """Complex eigenvalues of a general square matrix (circular/ring laws)."""
    m = _matrix_of(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("eig_general needs a square matrix")
    vals = np.linalg.eigvals(m)
    return SpectrumSample(vals, m.shape, "eigen-general")


def svd_values(a) -> SpectrumSample:
    """Singular values, reported ascending; their squares sum to ||A||_F^2."""
    m = _matrix_of(a)
    vals = np.linalg.svd(m, compute_uv=False)
    return SpectrumSample(vals, m.shape, "singular")


class QuadratureError(RuntimeError):
    """Raised when adaptive refinement exhausts its panel budget.

    Carries the best available estimate so callers can decide whether the
    partially converged value is still usable.
    """

    def __init__(self, message: str, best_estimate, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


# Gauss-Legendre node/weight pairs for the embedded 7/15 panel rule.
_GL_LO = np.polynomial.legendre.leggauss(7)
_GL_HI = np.polynomial.legendre.leggauss(15)


def _eval_nodes(f: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate f on a 1-d array of nodes, tolerating scalar-only callables."""
    try:
        out = np.asarray(f(x))
    except (TypeError, ValueError):
        out = np.asarray([f(float(xi)) for xi in x])
    if out.shape[: x.ndim] != x.shape:
        out = np.asarray([f(float(xi)) for xi in x])
    return out


def _adaptive_panels(f, a: float, b: float, tol: float, max_panels: int):
    """Shared GL7/GL15 adaptive core. f maps (K,) nodes to (K, ...) values.

    Returns (integral, accumulated error estimate); raises QuadratureError
    with the best partial estimate if the panel budget runs out.
    """
    span = b - a
    stack = [(a, b)]
    total = None
    err_total = 0.0
    used = 0
    while stack:
        lo, hi = stack.pop()
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        f_lo = _eval_nodes(f, mid + half * _GL_LO[0])
        f_hi = _eval_nodes(f, mid + half * _GL_HI[0])
        coarse = half * np.tensordot(_GL_LO[1], f_lo, axes=(0, 0))
        fine = half * np.tensordot(_GL_HI[1], f_hi, axes=(0, 0))
        err = np.linalg.norm(np.ravel(fine - coarse))
        used += 1
        budget = tol * max(hi - lo, 1e-16) / span
        # A panel whose GL7/GL15 discrepancy sits at machine precision of
        # its own value cannot be improved by splitting; without this floor
        # a kink can eat the whole panel budget on noise-level refinements.
        noise = 1e-15 * (1.0 + float(np.linalg.norm(np.ravel(fine))))
        if err <= budget or err <= noise or (hi - lo) < 1e-14 * span:
            total = fine if total is None else total + fine
            err_total += err
        elif used >= max_panels:
            # Fold in everything still pending so the estimate is complete.
            best = fine if total is None else total + fine
            pending_err = err
            for plo, phi in stack:
                pmid, phalf = 0.5 * (plo + phi), 0.5 * (phi - plo)
                pf = _eval_nodes(f, pmid + phalf * _GL_HI[0])
                best = best + phalf * np.tensordot(_GL_HI[1], pf, axes=(0, 0))
            raise QuadratureError(
                f"no convergence after {used} panels "
                f"(worst panel error {err:.2e}, tol {tol:.2e})",
                best,
                err_total + pending_err,
            )
        else:
            stack.append((lo, mid))
            stack.append((mid, hi))
    return total, err_total


def quad_integrate(f, a: float, b: float, tol: float = 1e-9,
                   max_panels: int = 2000) -> float:
    """Adaptive integral of a scalar function over [a, b].

    Integrable endpoint singularities up to (x-a)^(-1/2) / (b-x)^(-1/2) are
    handled by the substitution x = a + (b-a) sin^2(theta), which also keeps
    square-root density edges (semicircle, Marchenko-Pastur) smooth. Exact to
    1e-12 on polynomials of degree <= 10. Raises QuadratureError carrying the
    best estimate when refinement stalls.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("quad_integrate needs finite endpoints")
    if b < a:
        return -quad_integrate(f, b, a, tol=tol, max_panels=max_panels)
    if b == a:
        return 0.0
    span = b - a

    def substituted(theta: np.ndarray) -> np.ndarray:
        s = np.sin(theta)
        x = a + span * s * s
        jac = span * np.sin(2.0 * theta)
        vals = _eval_nodes(f, x)
        return vals * jac

    value, _ = _adaptive_panels(substituted, 0.0, np.pi / 2.0, tol, max_panels)
    return float(value)


def quad_matrix(f, a: float, b: float, tol: float = 1e-9,
                max_panels: int = 4000) -> np.ndarray:
    """Adaptive integral of an array-valued function over [a, b].

    ``f`` must be vectorized: it maps a (K,) node array to a (K, N, N)
    (or generally (K, ...)) stack of values. No endpoint substitution is
    applied here; callers with singular edges substitute themselves.
    """
    if b <= a:
        raise ValueError("quad_matrix needs b > a")
    value, _ = _adaptive_panels(f, a, b, tol, max_panels)
    return value
