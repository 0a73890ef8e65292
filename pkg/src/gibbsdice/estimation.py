"""Maximum-likelihood estimation of the inverse temperature ``beta``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _backend
from .errors import InvalidGeometryError, InvalidParameterError
from .model import Normalization, check_beta, gibbs_probabilities, xxy_energies

DEFAULT_BRACKET = (0.0, 100.0)
DEFAULT_TOL = 1e-6
MAXITER = 500


@dataclass(frozen=True)
class TossCounts:
    """Observed number of times each state came up."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise InvalidParameterError("empty counts")
        if any(c < 0 for c in counts):
            raise InvalidParameterError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.N

    def __len__(self):
        return len(self.counts)


@dataclass(frozen=True)
class XxyObservation:
    """One xxy-cuboid: sides ``sx, sx, sy``, ``N`` tosses, ``nxx`` square-face-up."""

    sx: float
    sy: float
    N: int
    nxx: int

    def __post_init__(self):
        for name in ("sx", "sy"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0:
                raise InvalidGeometryError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)
        N, nxx = int(self.N), int(self.nxx)
        if N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {N}")
        if not 0 <= nxx <= N:
            raise InvalidParameterError(f"need 0 <= nxx <= N, got nxx={nxx}, N={N}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "nxx", nxx)

    @property
    def fxx(self) -> float:
        return self.nxx / self.N

    @property
    def ratio(self) -> float:
        return self.sy / self.sx


@dataclass(frozen=True)
class FitResult:
    beta_hat: float
    neg_log_likelihood_at_min: float
    iterations: int
    bracket: tuple[float, float]
    converged: bool
    boundary: Optional[str] = None  # "lower" or "upper" when the optimum sits on an edge


CountsLike = Union[TossCounts, Sequence[int]]


def _as_counts(counts: CountsLike) -> TossCounts:
    return counts if isinstance(counts, TossCounts) else TossCounts(tuple(counts))


def _prepare(E, counts: CountsLike):
    E = np.ascontiguousarray(E, dtype=float)
    counts = _as_counts(counts)
    if E.ndim != 1 or E.size != counts.k:
        raise InvalidParameterError(
            f"dimension mismatch: {E.size} energies but {counts.k} count cells"
        )
    if counts.N < 1:
        raise InvalidParameterError("no observations (all counts are zero)")
    return E, np.ascontiguousarray(counts.counts, dtype=float)


def neg_log_likelihood(E, counts: CountsLike, beta: float) -> float:
    """``-ln L(beta) = N [ln Z(beta) + beta * sum_i E_i f_i]``."""
    E, n = _prepare(E, counts)
    return _backend.kernels.gibbs_nll(E, n, check_beta(beta))


def nll_derivative(E, counts: CountsLike, beta: float) -> float:
    """Analytic d/dbeta of :func:`neg_log_likelihood`: ``N (mean_data(E) - mean_model(E))``."""
    E, n = _prepare(E, counts)
    p = gibbs_probabilities(E, beta)
    N = n.sum()
    return float(N * ((E * n).sum() / N - (E * p).sum()))


def nll_curvature(E, counts: CountsLike, beta: float) -> float:
    """Second derivative ``N Var_p(E)``; positive unless all energies coincide."""
    E, n = _prepare(E, counts)
    p = gibbs_probabilities(E, beta)
    mean = (E * p).sum()
    return float(n.sum() * (p * (E - mean) ** 2).sum())


def _check_bracket(bracket, tol):
    lo, hi = (float(b) for b in bracket)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or hi <= lo:
        raise InvalidParameterError(f"invalid bracket {bracket!r}")
    if not tol > 0:
        raise InvalidParameterError(f"tol must be positive, got {tol!r}")
    return lo, hi


def _golden_fit(fit, nll, args, bracket, tol) -> FitResult:
    lo, hi = _check_bracket(bracket, tol)

    def no_better(edge, fx):
        # a flat tail lets the search stop short of the edge, so compare values too
        return nll(*args, edge) <= fx + 1e-12 * max(1.0, abs(fx))

    x, fx, it, a, b = fit(*args, lo, hi, tol, MAXITER)
    if b >= hi or no_better(hi, fx):
        # optimum at the upper edge: widen once before giving up
        hi *= 10.0
        x, fx, it2, a, b = fit(*args, lo, hi, tol, MAXITER)
        it += it2
    boundary = None
    if b >= hi or no_better(hi, fx):
        boundary = "upper"
    elif a <= lo or no_better(lo, fx):
        boundary = "lower"
    converged = boundary != "upper" and (b - a) <= tol
    return FitResult(
        beta_hat=float(x),
        neg_log_likelihood_at_min=float(fx),
        iterations=int(it),
        bracket=(lo, hi),
        converged=bool(converged),
        boundary=boundary,
    )


def fit_beta(E, counts: CountsLike, bracket=DEFAULT_BRACKET, tol=DEFAULT_TOL) -> FitResult:
    """Fit ``beta`` to counts from a single die by golden-section search.

    The objective is strictly convex in ``beta`` whenever the data occupy
    states of different energy, so the bracketed search finds the unique
    minimizer.  If every observation sits in the minimal-energy states the
    likelihood keeps increasing with ``beta``; the result then carries
    ``boundary="upper"`` and ``converged=False``.
    """
    E, n = _prepare(E, counts)
    return _golden_fit(_backend.kernels.gibbs_fit, _backend.kernels.gibbs_nll, (E, n), bracket, tol)


def xxy_arrays(obs: Sequence[XxyObservation], norm=Normalization.GEOMETRIC_MEAN):
    """Kernel inputs ``(E_x, E_y, N, n_xx)`` as contiguous float arrays."""
    if len(obs) == 0:
        raise InvalidParameterError("need at least one xxy observation")
    sx = np.array([o.sx for o in obs], dtype=float)
    sy = np.array([o.sy for o in obs], dtype=float)
    ex, ey = xxy_energies(sx, sy, norm)
    N = np.array([o.N for o in obs], dtype=float)
    n = np.array([o.nxx for o in obs], dtype=float)
    return (np.ascontiguousarray(ex), np.ascontiguousarray(ey), N, n)


def global_neg_log_likelihood(
    obs: Sequence[XxyObservation], beta: float, norm=Normalization.GEOMETRIC_MEAN
) -> float:
    """Joint negative log-likelihood of a family of xxy-cuboids sharing ``beta``.

    ``sum_j N_j ln Z_j + beta (n_xx,j E_y,j + (N_j - n_xx,j) E_x,j)``
    """
    return _backend.kernels.xxy_nll(*xxy_arrays(obs, norm), check_beta(beta))


def fit_beta_global(
    obs: Sequence[XxyObservation],
    bracket=DEFAULT_BRACKET,
    tol=DEFAULT_TOL,
    norm=Normalization.GEOMETRIC_MEAN,
) -> FitResult:
    """One ``beta`` shared by a family of xxy-cuboids (joint likelihood)."""
    return _golden_fit(_backend.kernels.xxy_fit, _backend.kernels.xxy_nll, xxy_arrays(obs, norm), bracket, tol)


def fit_beta_xxy_arrays(ex, ey, N, n, bracket=DEFAULT_BRACKET, tol=DEFAULT_TOL) -> FitResult:
    """:func:`fit_beta_global` on precomputed energies; used in the bootstrap loop."""
    return _golden_fit(_backend.kernels.xxy_fit, _backend.kernels.xxy_nll, (ex, ey, N, n), bracket, tol)
