"""Functional PCA over penalized basis expansions of selected series.

Pipeline: build a basis on the sample grid, smooth each selected series by
penalized least squares (roughness penalty on a derivative, smoothing
parameter fixed or chosen by GCV), then eigendecompose the coefficient
covariance in the basis metric.  All functions are pure over immutable
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .errors import ConfigurationError, DataQualityError

QUADRATURE_REFINEMENT = 10


@dataclass(frozen=True)
class BasisSpec:
    """Basis family and size for smoothing.

    ``spline_order`` 4 means cubic B-splines.  Fourier bases need an odd
    ``n_basis`` (constant plus sine/cosine pairs).
    """

    kind: str = "bspline"
    n_basis: int = 12
    domain: Optional[tuple[float, float]] = None
    penalty_order: int = 2
    spline_order: int = 4

    def validate(self) -> None:
        if self.kind not in ("bspline", "fourier"):
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if self.penalty_order < 0:
            raise ConfigurationError("penalty_order must be >= 0")
        if self.kind == "fourier":
            # a fourier pair plus the constant is always differentiable, so only
            # parity and a minimum size apply
            if self.n_basis % 2 == 0:
                raise ConfigurationError("fourier basis needs an odd n_basis")
            if self.n_basis < 3:
                raise ConfigurationError("fourier basis needs n_basis >= 3")
        else:
            if self.n_basis < max(self.spline_order, self.penalty_order + 2):
                raise ConfigurationError(
                    "bspline basis needs n_basis >= max(spline_order, penalty_order + 2) "
                    f"({max(self.spline_order, self.penalty_order + 2)})"
                )


@dataclass(frozen=True)
class Basis:
    """A basis evaluated on a sample grid, with exact-enough inner products.

    ``gram``[i][j] approximates the integral of basis_i * basis_j over the
    domain and ``penalty`` the same for the penalty_order-th derivatives,
    both by the trapezoid rule on a grid refined 10x beyond the samples.
    """

    spec: BasisSpec
    sample_times: np.ndarray
    eval_matrix: np.ndarray
    gram: np.ndarray
    penalty: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.spec.n_basis

    @property
    def domain(self) -> tuple[float, float]:
        return self.spec.domain

    def evaluate(self, times, deriv: int = 0) -> np.ndarray:
        return _evaluate_basis(self.spec, np.asarray(times, dtype=float), deriv)


def _bspline_knots(spec: BasisSpec) -> np.ndarray:
    a, b = spec.domain
    k = spec.spline_order - 1
    n_interior = spec.n_basis - spec.spline_order
    interior = np.linspace(a, b, n_interior + 2)[1:-1]
    return np.concatenate([np.full(k + 1, a), interior, np.full(k + 1, b)])


def _evaluate_basis(spec: BasisSpec, times: np.ndarray, deriv: int = 0) -> np.ndarray:
    if spec.kind == "bspline":
        k = spec.spline_order - 1
        spl = BSpline(_bspline_knots(spec), np.eye(spec.n_basis), k, extrapolate=True)
        if deriv:
            spl = spl.derivative(deriv)
        return spl(times)
    # fourier: constant then sine/cosine pairs, scaled orthonormal on the domain
    a, b = spec.domain
    length = b - a
    out = np.zeros((times.size, spec.n_basis))
    out[:, 0] = 0.0 if deriv else 1.0 / math.sqrt(length)
    amp = math.sqrt(2.0 / length)
    phase = deriv * math.pi / 2.0
    for pair in range(1, (spec.n_basis - 1) // 2 + 1):
        w = 2.0 * math.pi * pair / length
        arg = w * (times - a)
        scale = amp * w**deriv
        out[:, 2 * pair - 1] = scale * np.sin(arg + phase)
        out[:, 2 * pair] = scale * np.cos(arg + phase)
    return out


def build_basis(spec: BasisSpec, sample_times) -> Basis:
    """Evaluate a basis on the sample grid and integrate its gram/penalty."""
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ConfigurationError("sample_times must be a 1-d grid with at least 2 points")
    if times.size < spec.n_basis:
        raise ConfigurationError(
            f"need at least n_basis={spec.n_basis} sample points, got {times.size}"
        )
    if spec.domain is None:
        spec = BasisSpec(
            kind=spec.kind,
            n_basis=spec.n_basis,
            domain=(float(times[0]), float(times[-1])),
            penalty_order=spec.penalty_order,
            spline_order=spec.spline_order,
        )
    spec.validate()

    a, b = spec.domain
    fine = np.linspace(a, b, (times.size - 1) * QUADRATURE_REFINEMENT + 1)
    h = fine[1] - fine[0]
    weights = np.full(fine.size, h)
    weights[0] = weights[-1] = h / 2.0

    ef = _evaluate_basis(spec, fine)
    gram = ef.T @ (ef * weights[:, None])
    dm = _evaluate_basis(spec, fine, deriv=spec.penalty_order)
    penalty = dm.T @ (dm * weights[:, None])
    return Basis(
        spec=spec,
        sample_times=times,
        eval_matrix=_evaluate_basis(spec, times),
        gram=_clip_psd((gram + gram.T) / 2.0),
        penalty=_clip_psd((penalty + penalty.T) / 2.0),
    )


def _clip_psd(matrix: np.ndarray) -> np.ndarray:
    """Remove the tiny negative eigenvalues quadrature rounding leaves behind."""
    w, v = np.linalg.eigh(matrix)
    if w.min() >= 0:
        return matrix
    return (v * np.maximum(w, 0.0)) @ v.T


@dataclass(frozen=True)
class SmoothedCurve:
    coefficients: np.ndarray
    lambda_: float
    series_id: Optional[str] = None


def smooth_curve(values, basis: Basis, lambda_: float, series_id: Optional[str] = None) -> SmoothedCurve:
    """Penalized least-squares fit of one series onto the basis."""
    coefs = smooth_curves(np.asarray(values, dtype=float).reshape(1, -1), basis, lambda_)
    return SmoothedCurve(coefficients=coefs[0], lambda_=float(lambda_), series_id=series_id)


def _penalized_factors(basis: Basis):
    """Reparameterize the normal equations so any lambda solves stably.

    With E'E = R'R and R^-T P R^-1 = U diag(d) U', the solution of
    (E'E + lambda P) c = E'y becomes a diagonal shrink by 1/(1 + lambda d),
    which stays accurate even for lambda around 1e12 where a direct solve
    loses the penalty null space; the effective degrees of freedom fall out
    as sum(1 / (1 + lambda d)).
    """
    e = basis.eval_matrix
    ete = e.T @ e
    try:
        r = cholesky(ete, lower=False)
    except LinAlgError:
        raise ConfigurationError(
            "smoothing system is singular (design matrix is rank-deficient); "
            "increase lambda only after using fewer basis functions or more sample points"
        ) from None
    r_inv = solve_triangular(r, np.eye(basis.n_basis), lower=False)
    p_tilde = r_inv.T @ basis.penalty @ r_inv
    d, u = np.linalg.eigh((p_tilde + p_tilde.T) / 2.0)
    d = np.maximum(d, 0.0)
    # exact zeros for the penalty null space, so extreme lambdas cannot
    # shrink the unpenalized (e.g. linear) components through rounding noise
    if d.size and d.max() > 0:
        d[d <= d.max() * 1e-12] = 0.0
    return e, r_inv, u, d


def smooth_curves(matrix, basis: Basis, lambda_: float) -> np.ndarray:
    """Smooth several series at once; returns one coefficient row per series."""
    if lambda_ < 0:
        raise ConfigurationError("lambda must be >= 0")
    y = np.asarray(matrix, dtype=float)
    t = basis.sample_times.size
    if y.ndim != 2 or y.shape[1] != t:
        raise ConfigurationError(f"expected series of length {t}, got {y.shape}")
    e, r_inv, u, d = _penalized_factors(basis)
    projected = u.T @ (r_inv.T @ (e.T @ y.T))
    shrunk = projected / (1.0 + lambda_ * d)[:, None]
    return (r_inv @ (u @ shrunk)).T


def select_lambda_gcv(matrix, basis: Basis, grid=None) -> float:
    """Smoothing parameter minimizing mean generalized cross-validation.

    GCV(lambda) = (RSS / T) / (1 - df(lambda) / T)^2 with df the trace of the
    smoother matrix, averaged across the given series.  Ties and near-ties
    resolve to the smaller lambda.
    """
    if grid is None:
        grid = np.logspace(-6, 6, 13)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("lambda grid must be non-empty")
    y = np.atleast_2d(np.asarray(matrix, dtype=float))
    t = basis.sample_times.size
    e, r_inv, u, d = _penalized_factors(basis)
    projected = u.T @ (r_inv.T @ (e.T @ y.T))
    back = e @ (r_inv @ u)

    best_lambda = None
    best_gcv = math.inf
    for lam in np.sort(grid):
        shrink = 1.0 / (1.0 + lam * d)
        fitted = back @ (projected * shrink[:, None])
        rss = np.sum((y.T - fitted) ** 2, axis=0)
        df = float(shrink.sum())
        denom = 1.0 - df / t
        gcv = math.inf if denom <= 0 else float(np.mean(rss / t) / denom**2)
        if gcv < best_gcv:
            best_gcv = gcv
            best_lambda = float(lam)
    if best_lambda is None:  # pragma: no cover - grid is non-empty
        raise ConfigurationError("no lambda on the grid produced a solvable system")
    return best_lambda


@dataclass
class FpcaModel:
    """Eigenstructure of the smoothed selection.

    ``components`` holds one coefficient row per FPC, orthonormal in the
    basis metric (b_i @ gram @ b_j = delta_ij); ``eigenvalues`` are their
    variances, descending; ``explained_ratio`` is cumulative.
    """

    mean_coefficients: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    explained_ratio: np.ndarray
    scores: np.ndarray
    series_ids: tuple[Optional[str], ...]
    basis: Basis

    @property
    def n_components(self) -> int:
        return self.eigenvalues.size


def fit_fpca(curves: Sequence[SmoothedCurve], basis: Basis) -> FpcaModel:
    """Functional PCA of smoothed curves in the basis metric.

    Solves the symmetric eigenproblem of W^(1/2) S W^(1/2) where S is the
    coefficient covariance and W the basis gram matrix, then maps the
    eigenvectors back through W^(-1/2).  Retains min(n_basis, N-1)
    components; each FPC is oriented so its first nonzero value on the
    sample grid is positive.
    """
    if len(curves) < 2:
        raise ConfigurationError("FPCA needs at least 2 curves")
    n = basis.n_basis
    coef = np.stack([np.asarray(c.coefficients, dtype=float) for c in curves])
    if coef.shape[1] != n:
        raise DataQualityError(f"curve coefficients of length {coef.shape[1]} do not match n_basis={n}")

    mean = coef.mean(axis=0)
    centered = coef - mean
    w_vals, w_vecs = np.linalg.eigh(basis.gram)
    floor = max(w_vals.max(), 0.0) * 1e-12
    if w_vals.max() <= 0:
        raise ConfigurationError("basis gram matrix is not positive definite")
    w_vals = np.maximum(w_vals, floor)
    w_half = (w_vecs * np.sqrt(w_vals)) @ w_vecs.T
    w_inv_half = (w_vecs / np.sqrt(w_vals)) @ w_vecs.T

    n_curves = coef.shape[0]
    target = w_half @ (centered.T @ centered) @ w_half / (n_curves - 1)
    target = (target + target.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(target)
    eigvals = np.maximum(eigvals[::-1], 0.0)
    eigvecs = eigvecs[:, ::-1]

    keep = min(n, n_curves - 1)
    components = (w_inv_half @ eigvecs[:, :keep]).T
    components = _orient_components(components, basis)
    eigenvalues = eigvals[:keep]

    total = float(eigvals.sum())
    if total > 0:
        explained = np.cumsum(eigenvalues) / total
    else:
        explained = np.ones(keep)

    scores = centered @ basis.gram @ components.T
    return FpcaModel(
        mean_coefficients=mean,
        components=components,
        eigenvalues=eigenvalues,
        explained_ratio=explained,
        scores=scores,
        series_ids=tuple(c.series_id for c in curves),
        basis=basis,
    )


def _orient_components(components: np.ndarray, basis: Basis) -> np.ndarray:
    sampled = components @ basis.eval_matrix.T
    oriented = components.copy()
    for j in range(components.shape[0]):
        row = sampled[j]
        peak = np.max(np.abs(row))
        if peak == 0:
            continue
        nz = np.flatnonzero(np.abs(row) > 1e-10 * peak)
        if nz.size and row[nz[0]] < 0:
            oriented[j] = -oriented[j]
    return oriented


def fpc_scores(model: FpcaModel, curves: Sequence[SmoothedCurve]) -> np.ndarray:
    """Project curves onto the fitted FPCs: (c - mean) @ gram @ fpc."""
    coef = np.stack([np.asarray(c.coefficients, dtype=float) for c in curves])
    if coef.shape[1] != model.mean_coefficients.size:
        raise DataQualityError(
            f"curve coefficients of length {coef.shape[1]} do not match the fitted basis "
            f"({model.mean_coefficients.size})"
        )
    return (coef - model.mean_coefficients) @ model.basis.gram @ model.components.T


def top_k_series(
    series_ids: Sequence[str],
    scores: np.ndarray,
    component_index: int,
    k: int,
    mode: str = "top",
    threshold: Optional[float] = None,
) -> list[str]:
    """Series ranked by |score| on one FPC (1-based index).

    ``mode="top"`` returns the k most influential, ``"bottom"`` the k least
    influential; ties break by series id.  ``threshold`` drops candidates
    with |score| below it before ranking.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if mode not in ("top", "bottom"):
        raise ConfigurationError(f"mode must be 'top' or 'bottom', got {mode!r}")
    if not 1 <= component_index <= scores.shape[1]:
        raise ConfigurationError(
            f"component {component_index} out of range [1, {scores.shape[1]}]"
        )
    magnitudes = np.abs(scores[:, component_index - 1])
    entries = [(str(sid), float(m)) for sid, m in zip(series_ids, magnitudes)]
    if threshold is not None:
        entries = [e for e in entries if e[1] >= threshold]
    if mode == "top":
        entries.sort(key=lambda e: (-e[1], e[0]))
    else:
        entries.sort(key=lambda e: (e[1], e[0]))
    return [sid for sid, _ in entries[:k]]


def perturbation_curves(model: FpcaModel, component_index: int) -> dict:
    """Mean curve plus/minus sqrt(2 * eigenvalue) times the chosen FPC."""
    if not 1 <= component_index <= model.n_components:
        raise ConfigurationError(
            f"component {component_index} out of range [1, {model.n_components}]"
        )
    e = model.basis.eval_matrix
    mean_curve = e @ model.mean_coefficients
    fpc_curve = e @ model.components[component_index - 1]
    multiple = math.sqrt(2.0 * float(model.eigenvalues[component_index - 1]))
    return {
        "times": model.basis.sample_times.tolist(),
        "mean": mean_curve.tolist(),
        "plus": (mean_curve + multiple * fpc_curve).tolist(),
        "minus": (mean_curve - multiple * fpc_curve).tolist(),
    }


def scree(model: FpcaModel, max_components: Optional[int] = None) -> list[dict]:
    """Per-component and cumulative explained-variance ratios."""
    k = model.n_components if max_components is None else min(max_components, model.n_components)
    cumulative = model.explained_ratio[:k]
    ratios = np.diff(cumulative, prepend=0.0)
    return [
        {
            "index": j + 1,
            "ratio": float(ratios[j]),
            "cumulative_ratio": float(cumulative[j]),
        }
        for j in range(k)
    ]
