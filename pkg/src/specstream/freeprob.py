"""Free-probability engine: linearization pencils and operator subordination.

A degree-2 polynomial in noncommuting variables is linearized into a pencil
L = b0 + sum_j bj xj with Hermitian matrix coefficients, after which the
scalar spectral problem becomes matrix-valued: the polynomial's Cauchy
transform sits in the (0,0) entry of the operator-valued transform of L.
Free independence between the variables enters through the subordination
fixed point, solved here by a damped Picard iteration.

Operator convention (matching the scalar one): for a scalar law rho,

    M(b) = integral inv(t * coeff - b) rho(t) dt,

so a 1x1 b = [[z]] with coeff = [[1]] reduces to the scalar transform and
a zero coefficient gives -inv(b).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, sample
from .laws import LawSpec, law_density, mp_atom
from .linalg import quad_matrix
from .transforms import CauchyEvaluator

__all__ = [
    "LinearPencil",
    "pencil_anticommutator",
    "pencil_anticommutator_plus_square",
    "operator_cauchy_law",
    "operator_cauchy_semicircle",
    "OperatorCauchyState",
    "subordination_solve",
    "free_add_cauchy",
    "PolynomialSpectrum",
    "polynomial_spectrum",
    "MonteCarloSpectrum",
    "monte_carlo_spectrum",
    "ks_distance",
]

_HERM_TOL = 1e-12


def _require_hermitian(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > _HERM_TOL * scale:
        raise ValueError(f"{name} is not Hermitian")
    return m


@dataclass(frozen=True)
class LinearPencil:
    """Hermitian pencil L(x) = coeffs[0] + sum_j coeffs[j] x_j.

    ``coeffs[0]`` is the constant block; the remaining entries multiply the
    noncommuting variables. All blocks share one dimension and must be
    Hermitian so that L inherits self-adjointness from Hermitian inputs.
    """

    coeffs: tuple
    label: str = ""

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise ValueError("need a constant block plus at least one variable")
        checked = tuple(_require_hermitian(c, f"coeffs[{i}]")
                        for i, c in enumerate(self.coeffs))
        dims = {c.shape[0] for c in checked}
        if len(dims) != 1:
            raise ValueError(f"coefficient dimensions disagree: {sorted(dims)}")
        for c in checked:
            c.setflags(write=False)
        object.__setattr__(self, "coeffs", checked)

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def var_count(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, mats) -> np.ndarray:
        """L(x) = b0 (x) I + sum bj (x) X_j as one (d*n) x (d*n) matrix."""
        mats = [np.asarray(m) for m in mats]
        if len(mats) != self.var_count:
            raise ValueError(
                f"pencil takes {self.var_count} matrices, got {len(mats)}")
        n = mats[0].shape[0]
        eye = np.eye(n)
        big = np.kron(self.coeffs[0], eye).astype(complex)
        for bj, xj in zip(self.coeffs[1:], mats):
            if xj.shape != (n, n):
                raise ValueError("all variable matrices must share one shape")
            big += np.kron(bj, xj)
        return big

    def reconstruct(self, mats) -> np.ndarray:
        """Recover the polynomial p(X) by the Schur complement of L(X).

        With the (0,0) block row/column split off, p = L00 - u inv(Q) v;
        for the pencils shipped here L00 vanishes, but the generic formula
        is used so externally supplied pencils work too.
        """
        big = self.evaluate(mats)
        n = np.asarray(mats[0]).shape[0]
        l00 = big[:n, :n]
        u = big[:n, n:]
        v = big[n:, :n]
        q = big[n:, n:]
        out = l00 - u @ np.linalg.solve(q, v)
        if np.abs(out.imag).max() < 1e-10 * max(1.0, np.abs(out).max()):
            out = out.real
        return out


def pencil_anticommutator() -> LinearPencil:
    """Pencil for p(x1, x2) = x1 x2 + x2 x1."""
    b0 = np.array([[0, 0, 0], [0, 0, -1], [0, -1, 0]], dtype=complex)
    b1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    b2 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    return LinearPencil((b0, b1, b2), label="x1 x2 + x2 x1")


def pencil_anticommutator_plus_square() -> LinearPencil:
    """Pencil for p(x1, x2) = x1 x2 + x2 x1 + x1^2."""
    b0 = np.array([[0, 0, 0], [0, 0, -1], [0, -1, 0]], dtype=complex)
    b1 = np.array([[0, 1, 0.5], [1, 0, 0], [0.5, 0, 0]], dtype=complex)
    b2 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    return LinearPencil((b0, b1, b2), label="x1 x2 + x2 x1 + x1^2")


def _im_part(m: np.ndarray) -> np.ndarray:
    return (m - m.conj().T) / 2j


def _check_upper(b: np.ndarray, name: str = "b") -> np.ndarray:
    b = np.asarray(b, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"{name} must be square")
    im_eigs = np.linalg.eigvalsh(_im_part(b))
    if im_eigs.min() <= 0:
        raise ValueError(
            f"{name} must have positive-definite imaginary part "
            f"(min eigenvalue {im_eigs.min():.3e})")
    return b


def _check_definite_im(b: np.ndarray, name: str = "b") -> np.ndarray:
    """Require Im(b) definite of either sign.

    The defining integral for the operator Cauchy transform only needs
    t*coeff - b invertible along the real support, which holds whenever
    Im(b) is definite; accepting the lower half-plane keeps the
    conjugation symmetry G(b)^H = G(b^H) directly evaluable.
    """
    b = np.asarray(b, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"{name} must be square")
    im_eigs = np.linalg.eigvalsh(_im_part(b))
    if not (im_eigs.min() > 0 or im_eigs.max() < 0):
        raise ValueError(
            f"{name} must have definite imaginary part "
            f"(eigenvalue range [{im_eigs.min():.3e}, {im_eigs.max():.3e}])")
    return b


def operator_cauchy_law(b, coeff, law: LawSpec, tol: float = 1e-9) -> np.ndarray:
    """Operator-valued Cauchy transform of ``coeff`` carrying a scalar law.

    Integrates inv(t * coeff - b) against the law's density over its
    support with a sin^2 endpoint substitution, which absorbs the
    inverse-square-root edges of both supported laws. A Marchenko-Pastur
    atom at zero (aspect ratio above one) contributes -inv(b) times its
    mass.
    """
    b = _check_definite_im(b)
    coeff = _require_hermitian(coeff, "coeff")
    if coeff.shape != b.shape:
        raise ValueError("coeff and b dimensions disagree")
    if law.kind not in ("semicircle", "marchenko-pastur"):
        raise ValueError(f"no scalar density available for law kind {law.kind!r}")
    lo, hi = law.support
    span = hi - lo

    def integrand(theta):
        t = lo + span * np.sin(theta) ** 2
        jac = span * np.sin(2.0 * theta)
        w = law_density(law, t) * jac
        mats = t[:, None, None] * coeff[None, :, :] - b[None, :, :]
        return w[:, None, None] * np.linalg.inv(mats)

    out = quad_matrix(integrand, 0.0, np.pi / 2.0, tol=tol)
    if law.kind == "marchenko-pastur":
        atom = mp_atom(law.c)
        if atom > 0.0:
            out = out - atom * np.linalg.inv(b)
    return out


def operator_cauchy_semicircle(b, coeff, sigma: float = 1.0,
                               tol: float = 1e-9) -> np.ndarray:
    """Operator Cauchy transform against a semicircle of scale ``sigma``."""
    return operator_cauchy_law(b, coeff, LawSpec("semicircle", sigma=sigma),
                               tol=tol)


@dataclass(frozen=True)
class OperatorCauchyState:
    """Result of one subordination solve at a spectral parameter ``b``.

    ``g`` is the operator Cauchy transform of the sum at ``b`` (the first
    summand's transform evaluated at its subordinate ``omega1``). When
    ``converged`` is false the state carries the best iterate reached and
    the residual that remained; callers decide whether to flag or retry.
    """

    b: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    g: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def imaginary_ordering_gap(self) -> float:
        """Min eigenvalue of Im(omega1) - Im(b); nonnegative when valid."""
        gap = np.linalg.eigvalsh(_im_part(self.omega1) - _im_part(self.b))
        return float(gap.min())


def subordination_solve(Gx, Gy, b, tol: float = 1e-11, max_iter: int = 800,
                        omega0=None) -> OperatorCauchyState:
    """Solve the additive subordination fixed point at parameter ``b``.

    ``Gx`` and ``Gy`` map a matrix argument to the operator Cauchy
    transform of each free summand. With h_j(w) = -inv(G_j(w)) - w, the
    first subordinate solves w = h_y(h_x(w) + b) + b; iteration is damped
    Picard with the step halved whenever the residual grows (floored at
    0.05). The iterate keeps Im(omega) at or above Im(b) throughout, which
    is asserted on the returned state.
    """
    b = _check_upper(b)
    omega = np.array(b if omega0 is None else omega0, dtype=complex)
    if omega.shape != b.shape:
        raise ValueError("omega0 shape disagrees with b")
    alpha = 0.5
    res = np.inf
    res_prev = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        h1 = -np.linalg.inv(Gx(omega)) - omega
        omega2 = h1 + b
        f = -np.linalg.inv(Gy(omega2)) - omega2 + b
        res = float(np.linalg.norm(f - omega))
        if res > res_prev and alpha > 0.05:
            alpha *= 0.5
        omega = omega + alpha * (f - omega)
        if res < tol * max(1.0, float(np.linalg.norm(omega))):
            break
        res_prev = res
    converged = res < tol * max(1.0, float(np.linalg.norm(omega)))
    omega2 = -np.linalg.inv(Gx(omega)) - omega + b
    state = OperatorCauchyState(
        b=b, omega1=omega, omega2=omega2, g=Gx(omega),
        residual=res, iterations=it, converged=converged)
    if state.imaginary_ordering_gap() < -1e-8:
        raise ArithmeticError(
            "subordination iterate lost the imaginary-part ordering "
            f"(gap {state.imaginary_ordering_gap():.3e})")
    return state


def _scalar_transform(law: LawSpec):
    from .transforms import cauchy_from_law

    ev = cauchy_from_law(law)

    def M(w):
        return np.array([[ev(complex(w[0, 0]))]], dtype=complex)

    return ev, M


def free_add_cauchy(law_a: LawSpec, law_b: LawSpec) -> CauchyEvaluator:
    """Scalar Cauchy transform of the free additive convolution of two laws.

    Wraps the operator subordination solver at 1x1 arguments. The lower
    half-plane is reached by Schwarz reflection, exact for transforms of
    real measures; exactly real arguments are rejected.
    """
    ev_a, Ma = _scalar_transform(law_a)
    ev_b, Mb = _scalar_transform(law_b)
    mean = ev_a.mean + ev_b.mean

    def fn(z):
        z = complex(z)
        if z.imag == 0.0:
            raise ValueError("free convolution evaluator needs Im z != 0")
        zz = z if z.imag > 0 else z.conjugate()
        state = subordination_solve(Ma, Mb, np.array([[zz]], dtype=complex))
        if not state.converged:
            raise ArithmeticError(
                f"subordination stalled at z={zz} (residual {state.residual:.2e})")
        g = complex(state.g[0, 0])
        return g if z.imag > 0 else g.conjugate()

    return CauchyEvaluator("law", fn, mean,
                           label=f"boxplus({ev_a.label}, {ev_b.label})")


@dataclass(frozen=True)
class PolynomialSpectrum:
    """Algorithmic spectral density of a polynomial in free variables."""

    grid: np.ndarray
    density: np.ndarray
    eta: float
    mass: float
    flagged: tuple = ()

    def cdf(self) -> np.ndarray:
        steps = np.diff(self.grid) * 0.5 * (self.density[1:] + self.density[:-1])
        cdf = np.concatenate([[0.0], np.cumsum(steps)])
        return cdf / cdf[-1]


def _sample_matrix(law: LawSpec, n: int, rng) -> np.ndarray:
    """One n x n matrix draw whose spectrum follows ``law`` asymptotically."""
    if law.kind == "semicircle":
        seed = int(rng.integers(0, 2**63 - 1))
        g = sample(EnsembleSpec("gue", n, sigma=law.sigma, seed=seed))
        return g.entries / np.sqrt(n)
    if law.kind == "marchenko-pastur":
        t = int(round(n / law.c))
        z = rng.standard_normal((n, t))
        return (law.sigma ** 2 / t) * (z @ z.T)
    raise ValueError(f"cannot sample matrices for law kind {law.kind!r}")


def monte_carlo_spectrum(pencil: LinearPencil, laws, n: int = 1000,
                         draws: int = 10, seed: int = 0):
    """Pooled eigenvalues of the reconstructed polynomial over random draws."""
    laws = tuple(laws)
    if len(laws) != pencil.var_count:
        raise ValueError(
            f"pencil takes {pencil.var_count} laws, got {len(laws)}")
    rng = np.random.default_rng(seed)
    pool = []
    for _ in range(draws):
        mats = [_sample_matrix(law, n, rng) for law in laws]
        p = pencil.reconstruct(mats)
        pool.append(np.linalg.eigvalsh((p + p.conj().T) / 2.0))
    values = np.sort(np.concatenate(pool))
    return MonteCarloSpectrum(values=values, n=n, draws=draws, seed=seed)


@dataclass(frozen=True)
class MonteCarloSpectrum:
    """Pooled polynomial eigenvalues from finite random-matrix draws."""

    values: np.ndarray
    n: int
    draws: int
    seed: int

    @property
    def support(self) -> tuple:
        return float(self.values[0]), float(self.values[-1])


def polynomial_spectrum(pencil: LinearPencil, laws, grid=None,
                        grid_points: int = 400, eta: float = 1e-3,
                        quad_tol: float = 1e-8, sub_tol: float = 1e-9,
                        max_iter: int = 400, seed: int = 0) -> PolynomialSpectrum:
    """Spectral density of p(X1, ..., Xk) for freely independent variables.

    Each grid point x is lifted to the pencil parameter
    Lambda = diag(x + i eta, i eta, ..., i eta) shifted by the constant
    block; the (0,0) entry of the operator transform gives the smoothed
    density Im G / pi. With two or more variables the transform of the sum
    sum_j bj xj comes from the subordination solver, warm-started from the
    previous grid point. Points whose solve does not converge are recorded
    in ``flagged`` and filled by linear interpolation from their
    neighbors.
    """
    laws = tuple(laws)
    if len(laws) != pencil.var_count:
        raise ValueError(
            f"pencil takes {pencil.var_count} laws, got {len(laws)}")
    if pencil.var_count > 2:
        raise ValueError("pairwise subordination covers at most two variables")
    if grid is None:
        probe = monte_carlo_spectrum(pencil, laws, n=300, draws=2, seed=seed)
        lo, hi = probe.support
        grid = np.linspace(lo - 1.0, hi + 1.0, grid_points)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a 1-d increasing array")

    d = pencil.dim
    b0 = pencil.coeffs[0]
    transforms = [
        (lambda w, c=cj, l=lj: operator_cauchy_law(w, c, l, tol=quad_tol))
        for cj, lj in zip(pencil.coeffs[1:], laws)
    ]

    density = np.empty_like(grid)
    flagged = []
    omega_prev = None
    for i, x in enumerate(grid):
        lam = np.diag([x + 1j * eta] + [1j * eta] * (d - 1)).astype(complex)
        beff = lam - b0
        if pencil.var_count == 1:
            g = transforms[0](beff)
            density[i] = max(float(g[0, 0].imag) / np.pi, 0.0)
            continue
        state = subordination_solve(transforms[0], transforms[1], beff,
                                    tol=sub_tol, max_iter=max_iter,
                                    omega0=omega_prev)
        if state.converged:
            density[i] = max(float(state.g[0, 0].imag) / np.pi, 0.0)
            omega_prev = state.omega1
        else:
            density[i] = np.nan
            flagged.append(i)
            omega_prev = None

    if flagged:
        good = ~np.isnan(density)
        if good.sum() < 2:
            raise ArithmeticError("subordination failed on nearly every point")
        density = np.where(
            good, density,
            np.interp(grid, grid[good], density[good]))
    mass = float(np.trapezoid(density, grid))
    return PolynomialSpectrum(grid=grid, density=density, eta=eta,
                              mass=mass, flagged=tuple(flagged))


def ks_distance(result: PolynomialSpectrum, values) -> float:
    """Two-sided KS statistic between an algorithmic CDF and sample values."""
    values = np.sort(np.asarray(values, dtype=float))
    cdf = result.cdf()
    at = np.interp(values, result.grid, cdf, left=0.0, right=1.0)
    k = values.size
    hi = np.abs(np.arange(1, k + 1) / k - at).max()
    lo = np.abs(np.arange(0, k) / k - at).max()
    return float(max(hi, lo))
