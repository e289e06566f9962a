"""Priors over the mixing parameter, posterior moments and measurement scores.

The state under study is ``rho(lam) = lam rho1 + (1 - lam) rho2`` with an
unknown ``lam`` drawn from a prior on [0, 1].  Everything the estimator
needs from the prior is its first three moments plus a sampling rule, so
:class:`Prior` carries exactly that.

For a POVM outcome with effect E the posterior mean of ``lam`` (the Bayes
estimate) and the posterior variance follow from two effective states:

* ``rho_b = mean * rho1 + (1 - mean) * rho2`` fixes outcome probabilities,
* ``rho_a = w * rho1 + (1 - w) * rho2`` with ``w = second_moment / mean``
  fixes posterior means.

A measurement is scored by ``q_value = sum_m (mean * tr[E_m rho_a])^2 /
tr[E_m rho_b]``; the expected posterior variance ("mean variance") equals
``second_moment - q_value``, so maximizing the score minimizes the
expected squared estimation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import (
    BadParameter,
    DegenerateProblem,
    DimensionMismatch,
    NonPositiveParameter,
    NonUniformPrior,
    ZeroMeanPrior,
)
from .policy import DEFAULT_POLICY, NumericPolicy
from .states import DensityMatrix, Effect, Povm, as_povm, validate_state

if TYPE_CHECKING:  # pragma: no cover
    from .qubit import PlanarGeometry

UNIFORM = "uniform"
POINT_MASS = "point_mass"
TRUNC_RECIPROCAL = "trunc_reciprocal"
TABLE = "table"


def _moment_check(mean: float, second: float, tol: float = 1e-9) -> None:
    if not (0.0 < mean <= 1.0 + tol):
        raise BadParameter(f"prior mean must lie in (0, 1], got {mean}")
    if second < mean * mean - tol or second > mean + tol:
        raise BadParameter(
            f"prior moments violate mean^2 <= second_moment <= mean: mean={mean}, second={second}"
        )


@dataclass(frozen=True)
class Prior:
    """Distribution of the mixing parameter on [0, 1].

    Carries closed-form first three moments, the support interval and a
    named sampling rule.  Use the classmethod constructors.
    """

    kind: str
    mean: float
    second_moment: float
    third_moment: float
    support: tuple[float, float]
    params: tuple[float, ...] = ()
    table_lambda: np.ndarray | None = field(default=None, repr=False)
    table_density: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        _moment_check(self.mean, self.second_moment)
        lo, hi = self.support
        if not (-1e-12 <= lo <= hi <= 1.0 + 1e-12):
            raise BadParameter(f"support {self.support} not contained in [0, 1]")

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @classmethod
    def uniform(cls) -> "Prior":
        return cls(UNIFORM, 0.5, 1.0 / 3.0, 0.25, (0.0, 1.0))

    @classmethod
    def point_mass(cls, lam: float) -> "Prior":
        """Degenerate prior at a known value; for simulation ground truth only."""
        if not (0.0 < lam <= 1.0):
            raise BadParameter(f"point mass must lie in (0, 1], got {lam}")
        return cls(POINT_MASS, lam, lam**2, lam**3, (lam, lam), (lam,))

    @classmethod
    def truncated_reciprocal(cls, t_bmax: float) -> "Prior":
        """Density 1 / (lam * t_bmax) on [exp(-t_bmax), 1].

        This is the distribution of ``lam = exp(-B t)`` when the decay rate
        B is uniform on [0, B_max] and ``t_bmax = t * B_max``.
        """
        if t_bmax <= 0.0:
            raise NonPositiveParameter(f"t_bmax must be positive, got {t_bmax}")
        t = float(t_bmax)
        m1 = -math.expm1(-t) / t
        m2 = -math.expm1(-2 * t) / (2 * t)
        m3 = -math.expm1(-3 * t) / (3 * t)
        return cls(TRUNC_RECIPROCAL, m1, m2, m3, (math.exp(-t), 1.0), (t,))

    @classmethod
    def from_table(cls, lams, density) -> "Prior":
        """Piecewise-linear density on a grid; moments are integrated exactly."""
        x = np.asarray(lams, dtype=float)
        f = np.asarray(density, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
            raise BadParameter("table prior needs matching 1-d lambda and density arrays with >= 2 points")
        if np.any(np.diff(x) <= 0):
            raise BadParameter("table lambda grid must be strictly increasing")
        if x[0] < -1e-12 or x[-1] > 1.0 + 1e-12:
            raise BadParameter("table lambda grid must lie in [0, 1]")
        if np.any(f < 0):
            raise BadParameter("table density must be nonnegative")
        total = _table_moment(x, f, 0)
        if total <= 0:
            raise BadParameter("table density integrates to zero")
        f = f / total
        m1 = _table_moment(x, f, 1)
        m2 = _table_moment(x, f, 2)
        m3 = _table_moment(x, f, 3)
        fx = np.array(x)
        fx.setflags(write=False)
        ff = np.array(f)
        ff.setflags(write=False)
        return cls(TABLE, m1, m2, m3, (float(x[0]), float(x[-1])),
                   table_lambda=fx, table_density=ff)

    def density(self, lam):
        """Probability density; undefined for a point mass."""
        lam = np.asarray(lam, dtype=float)
        if self.kind == UNIFORM:
            return np.where((lam >= 0) & (lam <= 1), 1.0, 0.0)
        if self.kind == TRUNC_RECIPROCAL:
            t = self.params[0]
            lo, hi = self.support
            with np.errstate(divide="ignore"):
                d = 1.0 / (lam * t)
            return np.where((lam >= lo) & (lam <= hi), d, 0.0)
        if self.kind == TABLE:
            return np.interp(lam, self.table_lambda, self.table_density, left=0.0, right=0.0)
        raise BadParameter(f"prior kind {self.kind!r} has no density")

    def sample_from_uniform(self, u):
        """Map uniform variates on [0, 1) to prior samples.

        For the truncated reciprocal this is ``lam = exp(-u * t_bmax)``, the
        image of a uniformly drawn decay rate.
        """
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u)
        if self.kind == UNIFORM:
            out = flat
        elif self.kind == POINT_MASS:
            out = np.full_like(flat, self.params[0])
        elif self.kind == TRUNC_RECIPROCAL:
            out = np.exp(-flat * self.params[0])
        elif self.kind == TABLE:
            out = _table_inverse_cdf(self.table_lambda, self.table_density, flat)
        else:  # pragma: no cover
            raise BadParameter(f"unknown prior kind {self.kind!r}")
        return float(out[0]) if u.ndim == 0 else out.reshape(u.shape)

    def sample(self, rng: np.random.Generator, size=None):
        return self.sample_from_uniform(rng.random(size))


def _table_moment(x: np.ndarray, f: np.ndarray, n: int) -> float:
    """Exact integral of lam^n times a piecewise-linear density."""
    total = 0.0
    for i in range(len(x) - 1):
        x0, x1 = x[i], x[i + 1]
        slope = (f[i + 1] - f[i]) / (x1 - x0)
        a = f[i] - slope * x0  # f(lam) = a + slope * lam on the segment
        total += a * (x1 ** (n + 1) - x0 ** (n + 1)) / (n + 1)
        total += slope * (x1 ** (n + 2) - x0 ** (n + 2)) / (n + 2)
    return float(total)


def _table_inverse_cdf(x: np.ndarray, f: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Invert the piecewise-quadratic CDF of a piecewise-linear density."""
    seg = np.diff(x) * (f[:-1] + f[1:]) / 2.0
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    cdf = cdf / cdf[-1]
    idx = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(x) - 2)
    x0 = x[idx]
    h = x[idx + 1] - x0
    f0 = f[idx]
    slope = (f[idx + 1] - f0) / h
    rem = (u - cdf[idx]) * seg.sum()
    # solve f0 * s + slope * s^2 / 2 = rem for s in [0, h]
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * rem, 0.0))
        linear = rem / np.where(np.abs(f0) < 1e-300, 1.0, f0)
        quadratic = (disc - f0) / np.where(np.abs(slope) < 1e-300, 1.0, slope)
        s = np.where(np.abs(slope) * h > 1e-12 * np.abs(f0) + 1e-300, quadratic, linear)
    return x0 + np.clip(s, 0.0, h)


def prior_from_decoherence(t_bmax: float) -> Prior:
    """Prior induced on ``lam = exp(-B t)`` by a uniform decay rate B."""
    return Prior.truncated_reciprocal(t_bmax)


@dataclass(frozen=True)
class PosteriorMoments:
    """Posterior data for one outcome: probability, Bayes estimate, spread."""

    prob: float
    estimate: float
    second: float
    variance: float
    never_occurs: bool = False


@dataclass(frozen=True)
class MeasurementScore:
    """Score of a whole measurement: q_value high = mean variance low."""

    q_value: float
    mean_variance: float
    per_outcome: tuple[PosteriorMoments, ...]


@dataclass(frozen=True)
class EstimationReport:
    """A measurement together with its score and per-outcome estimates."""

    povm: Povm
    score: MeasurementScore
    prior: Prior
    alpha0: float | None = None
    geometry: "PlanarGeometry | None" = None
    degenerate: bool = False

    @property
    def estimates(self) -> tuple[float, ...]:
        return tuple(o.estimate for o in self.score.per_outcome)

    @property
    def mean_variance(self) -> float:
        return self.score.mean_variance


def effective_states(
    prior: Prior,
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> tuple[DensityMatrix, DensityMatrix]:
    """The two mixtures (rho_a, rho_b) that summarize the prior.

    For the uniform prior the weights are (2/3, 1/3) and (1/2, 1/2).
    """
    if rho1.dim != rho2.dim:
        raise DimensionMismatch(f"dims {rho1.dim} vs {rho2.dim}")
    if prior.mean <= 0.0:
        raise ZeroMeanPrior("prior mean must be positive")
    w = prior.second_moment / prior.mean
    rho_a = validate_state(w * rho1.matrix + (1.0 - w) * rho2.matrix, policy)
    rho_b = validate_state(prior.mean * rho1.matrix + (1.0 - prior.mean) * rho2.matrix, policy)
    return rho_a, rho_b


def _moments_against(
    effect: Effect,
    prior: Prior,
    rho_a: np.ndarray,
    rho_b: np.ndarray,
    rho_c: np.ndarray,
    policy: NumericPolicy,
) -> PosteriorMoments:
    prob = float(np.trace(effect.matrix @ rho_b).real)
    if prob < policy.zero_prob:
        return PosteriorMoments(
            prob=max(prob, 0.0),
            estimate=prior.mean,
            second=prior.second_moment,
            variance=prior.variance,
            never_occurs=True,
        )
    estimate = prior.mean * float(np.trace(effect.matrix @ rho_a).real) / prob
    second = prior.second_moment * float(np.trace(effect.matrix @ rho_c).real) / prob
    variance = second - estimate * estimate
    if variance < -1e-12:
        raise BadParameter(f"posterior variance came out negative: {variance:.3e}")
    return PosteriorMoments(prob, estimate, second, max(variance, 0.0))


def _weighted_states(prior: Prior, rho1: DensityMatrix, rho2: DensityMatrix):
    """Raw matrices of the three prior-weighted mixtures."""
    w = prior.second_moment / prior.mean
    wc = prior.third_moment / prior.second_moment
    rho_a = w * rho1.matrix + (1.0 - w) * rho2.matrix
    rho_b = prior.mean * rho1.matrix + (1.0 - prior.mean) * rho2.matrix
    rho_c = wc * rho1.matrix + (1.0 - wc) * rho2.matrix
    return rho_a, rho_b, rho_c


def posterior_moments(
    effect: Effect,
    prior: Prior,
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> PosteriorMoments:
    """Outcome probability and posterior moments of the mixing parameter.

    An outcome with probability below ``policy.zero_prob`` is flagged
    ``never_occurs`` and keeps the prior moments as its estimate.
    """
    if effect.dim != rho1.dim or rho1.dim != rho2.dim:
        raise DimensionMismatch("effect and states must share one dimension")
    if prior.mean <= 0.0:
        raise ZeroMeanPrior("prior mean must be positive")
    rho_a, rho_b, rho_c = _weighted_states(prior, rho1, rho2)
    return _moments_against(effect, prior, rho_a, rho_b, rho_c, policy)


def q_functional(
    povm,
    prior: Prior,
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> MeasurementScore:
    """Score a POVM; the mean variance is the expected squared error.

    Outcomes that never occur contribute zero to the score.  For the
    uniform prior ``q_value + mean_variance = 1/3`` holds identically.
    """
    povm = as_povm(povm, policy)
    if povm.dim != rho1.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs state dim {rho1.dim}")
    if prior.mean <= 0.0:
        raise ZeroMeanPrior("prior mean must be positive")
    rho_a, rho_b, rho_c = _weighted_states(prior, rho1, rho2)
    per = tuple(_moments_against(e, prior, rho_a, rho_b, rho_c, policy) for e in povm)
    # (mean * tr[E rho_a])^2 / tr[E rho_b] == prob * estimate^2
    q = sum(o.prob * o.estimate**2 for o in per if not o.never_occurs)
    return MeasurementScore(q_value=q, mean_variance=prior.second_moment - q, per_outcome=per)


def q_permutation_form(
    povm,
    prior: Prior,
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> float:
    """Uniform-prior score written symmetrically in the two states.

    Expanding the score around the midpoint mixture gives

        (1 + sum_m tr[E_m (rho1 - rho2)]^2 / (18 tr[E_m (rho1 + rho2)])) / 4,

    manifestly invariant under swapping rho1 and rho2 and equal to
    :func:`q_functional` for the uniform prior.
    """
    if prior.kind != UNIFORM:
        raise NonUniformPrior("the permutation-symmetric form is defined for the uniform prior")
    povm = as_povm(povm, policy)
    diff = rho1.matrix - rho2.matrix
    tot = rho1.matrix + rho2.matrix
    acc = 0.0
    for e in povm:
        den = float(np.trace(e.matrix @ tot).real)
        if den < 2.0 * policy.zero_prob:
            continue
        num = float(np.trace(e.matrix @ diff).real)
        acc += num * num / (18.0 * den)
    return 0.25 * (1.0 + acc)


def reject_degenerate_prior(prior: Prior, policy: NumericPolicy = DEFAULT_POLICY) -> None:
    """Optimizers refuse priors with (numerically) zero variance."""
    if prior.kind == POINT_MASS or prior.variance <= policy.degenerate_tol:
        raise DegenerateProblem("prior has zero variance; nothing to estimate")
