"""Goodness of fit: Pearson statistics and the parametric bootstrap.

The bootstrap tests whether a family of xxy-cuboids shares one ``beta`` once
manufacturing tolerances on the side lengths are allowed for.  Each iteration
draws its own random stream from ``(master_seed, iteration)``, so results do
not depend on how iterations are spread over worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from ._pykernels import xxy_cells
from .errors import DegenerateCellError, InvalidParameterError
from .estimation import (
    CountsLike,
    XxyObservation,
    _as_counts,
    fit_beta_xxy_arrays,
    xxy_arrays,
)
from .model import Normalization, check_beta, xxy_energies, xxy_pxx


@dataclass(frozen=True)
class GofResult:
    chi2: float
    m: int
    chi2_per_m: float
    verdict: str  # "consistent" if chi2/m <= 1 else "rejected"


def _gof(chi2: float, m: int) -> GofResult:
    per_m = chi2 / m
    return GofResult(chi2, m, per_m, "consistent" if per_m <= 1.0 else "rejected")


def chi_square_xxy(
    obs: Sequence[XxyObservation], beta: float, norm=Normalization.GEOMETRIC_MEAN
) -> GofResult:
    """Pearson statistic over the two macro-states of every cuboid, ``m`` = number of cuboids."""
    beta = check_beta(beta)
    ex, ey, N, n = xxy_arrays(obs, norm)
    p, q = xxy_cells(ex, ey, beta)
    for j, (o, pj, qj) in enumerate(zip(obs, p, q), start=1):
        if o.N * pj <= 0.0 or o.N * qj <= 0.0:
            raise DegenerateCellError(
                f"cuboid {j} (sx={o.sx:g}, sy={o.sy:g}) has zero expected count at beta={beta:g}"
            )
    return _gof(_backend.kernels.xxy_chi2(ex, ey, N, n, beta), len(obs))


def chi_square_full(counts: CountsLike, p) -> GofResult:
    """Pearson statistic over the ``k`` states of a single die (``m = k``)."""
    counts = _as_counts(counts)
    p = np.asarray(p, dtype=float)
    if p.shape != (counts.k,):
        raise InvalidParameterError(
            f"dimension mismatch: {p.size} probabilities but {counts.k} count cells"
        )
    n = np.asarray(counts.counts, dtype=float)
    expected = counts.N * p
    bad = np.flatnonzero(expected <= 0.0)
    if bad.size:
        raise DegenerateCellError(f"state {bad[0] + 1} has zero expected count")
    return _gof(float(((n - expected) ** 2 / expected).sum()), counts.k)


def simulate_tosses(p, N: int, stream: np.random.Generator):
    """Binomial draw for a scalar ``p``, multinomial for a probability vector."""
    N = int(N)
    if N < 0:
        raise InvalidParameterError(f"N must be >= 0, got {N}")
    p_arr = np.asarray(p, dtype=float)
    if p_arr.ndim == 0:
        pv = float(p_arr)
        if not 0.0 <= pv <= 1.0:
            raise InvalidParameterError(f"probability out of range: {pv!r}")
        return int(stream.binomial(N, pv))
    if np.any(p_arr < 0) or not math.isclose(p_arr.sum(), 1.0, rel_tol=1e-9):
        raise InvalidParameterError("probabilities must be non-negative and sum to 1")
    return stream.multinomial(N, p_arr / p_arr.sum())


def iteration_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for bootstrap iteration ``index``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)))
    )


@dataclass(frozen=True)
class BootstrapConfig:
    beta0: float
    epsilon: float
    iterations: int = 999
    master_seed: int = 0
    # which side lengths enter the energies when refitting beta*:
    # "nominal" (what an analyst knows) or "perturbed" (sensitivity check)
    refit_lengths: str = "nominal"
    workers: int = 1
    norm: Normalization = Normalization.GEOMETRIC_MEAN

    def __post_init__(self):
        check_beta(self.beta0)
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if int(self.iterations) < 1:
            raise InvalidParameterError("iterations must be >= 1")
        if int(self.master_seed) < 0 or int(self.master_seed) >= 2**64:
            raise InvalidParameterError("master_seed must be an unsigned 64-bit integer")
        if self.refit_lengths not in ("nominal", "perturbed"):
            raise InvalidParameterError("refit_lengths must be 'nominal' or 'perturbed'")
        if int(self.workers) < 1:
            raise InvalidParameterError("workers must be >= 1")
        object.__setattr__(self, "norm", Normalization.parse(self.norm))


@dataclass(frozen=True)
class BootstrapResult:
    chi2_observed: float
    chi2_simulated: np.ndarray = field(repr=False)
    beta_simulated: np.ndarray = field(repr=False)
    p_value: float
    config: BootstrapConfig


def _perturb(rng: np.random.Generator, nominal: np.ndarray, epsilon: float) -> np.ndarray:
    out = rng.normal(nominal, epsilon * nominal)
    bad = out <= 0.0
    while bad.any():
        out[bad] = rng.normal(nominal[bad], epsilon * nominal[bad])
        bad = out <= 0.0
    return out


class _Iteration:
    """One bootstrap replicate; a callable so thread pools can map over it."""

    def __init__(self, obs, cfg: BootstrapConfig):
        self.cfg = cfg
        self.sx = np.array([o.sx for o in obs], dtype=float)
        self.sy = np.array([o.sy for o in obs], dtype=float)
        self.ex, self.ey, self.N, _ = xxy_arrays(obs, cfg.norm)
        self.N_int = self.N.astype(np.int64)

    def __call__(self, index: int) -> tuple[float, float]:
        cfg = self.cfg
        rng = iteration_stream(cfg.master_seed, index)
        sx_star = _perturb(rng, self.sx, cfg.epsilon)
        sy_star = _perturb(rng, self.sy, cfg.epsilon)
        p_star = xxy_pxx(sx_star, sy_star, cfg.beta0, cfg.norm)
        n_star = rng.binomial(self.N_int, p_star).astype(float)
        if cfg.refit_lengths == "nominal":
            ex, ey = self.ex, self.ey
        else:
            ex, ey = (np.ascontiguousarray(a) for a in xxy_energies(sx_star, sy_star, cfg.norm))
        beta_star = fit_beta_xxy_arrays(ex, ey, self.N, n_star).beta_hat
        chi2 = _backend.kernels.xxy_chi2(self.ex, self.ey, self.N, n_star, beta_star)
        return chi2, beta_star


def bootstrap_constant_beta(obs: Sequence[XxyObservation], cfg: BootstrapConfig) -> BootstrapResult:
    """Parametric bootstrap p-value of the constant-``beta`` hypothesis.

    Per iteration: perturb every cuboid's sides with Gaussian relative error
    ``epsilon``, simulate ``N_j`` tosses at ``cfg.beta0`` on the perturbed
    cuboids, refit ``beta*`` jointly, and evaluate the Pearson statistic on the
    nominal geometry.  The p-value is the fraction of replicates whose
    statistic reaches the observed one (computed at ``cfg.beta0``).
    """
    if len(obs) == 0:
        raise InvalidParameterError("need at least one xxy observation")
    chi2_obs = chi_square_xxy(obs, cfg.beta0, cfg.norm).chi2
    step = _Iteration(obs, cfg)
    indices = range(int(cfg.iterations))
    if cfg.workers == 1:
        results = [step(b) for b in indices]
    else:
        with ThreadPoolExecutor(max_workers=int(cfg.workers)) as pool:
            results = list(pool.map(step, indices))
    chi2_sim = np.array([r[0] for r in results])
    beta_sim = np.array([r[1] for r in results])
    p_value = float(np.count_nonzero(chi2_sim >= chi2_obs)) / len(chi2_sim)
    return BootstrapResult(chi2_obs, chi2_sim, beta_sim, p_value, cfg)
