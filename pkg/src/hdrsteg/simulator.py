"""Payload-constrained optimal embedding: solve for lambda and simulate flips.

Flip probabilities follow the Gibbs form p = exp(-lam*rho) / (1 + exp(-lam*rho)),
with lam chosen so that the summed binary entropy equals the payload m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import PayloadError

LAMBDA_BRACKET = (2.0**-20, 2.0**20)
MAX_ITER = 80
RTOL = 1e-9


def binary_entropy(p):
    """h(p) in bits, elementwise, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return h


def flip_probabilities(rho, lam: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    wet = ~np.isfinite(rho)
    t = lam * np.where(wet, 0.0, rho)
    p = expit(-t)
    p[wet] = 0.0
    return p


def _entropy_bits(rho_finite, lam):
    # h(p) for p = 1/(1+e^t) is p*t + log(1+e^-t) nats; accurate for large t
    t = lam * rho_finite
    p = expit(-t)
    return float(np.sum(p * t + np.log1p(np.exp(-t)))) / math.log(2.0)


@dataclass
class EmbeddingPlan:
    probabilities: np.ndarray
    lam: float
    m: float

    @property
    def entropy(self) -> float:
        return float(binary_entropy(self.probabilities).sum())

    @property
    def expected_flips(self) -> float:
        return float(self.probabilities.sum())


def solve_lambda(costs, m: float) -> EmbeddingPlan:
    """Find lam so that sum of h(p(lam)) == m within RTOL relative error.

    ``costs`` is a CostMap or a raw array; infinite entries are wet.
    """
    rho = np.asarray(getattr(costs, "rho", costs), dtype=np.float64)
    finite = np.isfinite(rho)
    n_finite = int(finite.sum())
    if n_finite == 0:
        raise PayloadError("every pixel is wet; nothing can be embedded")
    if m < 0:
        raise ValueError("payload must be non-negative")
    if m == 0:
        return EmbeddingPlan(np.zeros(rho.shape), math.inf, 0.0)
    if m > n_finite:
        raise PayloadError(f"payload {m} exceeds the {n_finite} bits of entropy available")
    if m == n_finite:
        return EmbeddingPlan(flip_probabilities(rho, 0.0), 0.0, float(m))

    r = rho[finite]
    floor = int(np.count_nonzero(r == 0))
    if m <= floor:
        raise PayloadError(f"payload {m} is below the {floor} bits forced by zero-cost pixels")

    def excess(lam):
        return _entropy_bits(r, lam) - m

    lo, hi = LAMBDA_BRACKET
    while excess(lo) < 0 and lo > 1e-300:
        lo *= 2.0**-20
    while excess(hi) > 0 and hi < 1e300:
        hi *= 2.0**20

    lam = math.sqrt(lo * hi)
    for _ in range(MAX_ITER):
        lam = math.sqrt(lo * hi)
        e = excess(lam)
        if abs(e) <= RTOL * m:
            break
        if e > 0:
            lo = lam
        else:
            hi = lam
    return EmbeddingPlan(flip_probabilities(rho, lam), lam, float(m))


def simulate(plan: EmbeddingPlan, seed) -> np.ndarray:
    """Flip each element independently with its planned probability."""
    rng = np.random.default_rng(seed)
    return rng.random(plan.probabilities.shape) < plan.probabilities
