"""Inter-recruitment waiting-time distributions.

Each family exposes the raw cdf/pdf/survival curves, the conditional
survival and hazard curves used by the recruitment likelihood, and a
sampler.  All likelihood code consumes the log-scale curves; the raw-scale
curves exist mainly for tests and diagnostics.

Conditional curves, for a waiting time W with cdf F:

    S_s(t) = Pr[W > t | W > s] = (1 - F(t)) / (1 - F(s)),   t >= s
    H_s(t) = f(t) / (1 - F(t))          (conditioning cancels in the hazard)
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "WaitingTimeModel",
    "Exponential",
    "GammaWaiting",
    "GammaUnitMean",
    "PowerLaw",
    "make_model",
    "FAMILIES",
]


class WaitingTimeModel:
    """Base class for waiting-time families.

    Subclasses implement cdf/pdf/sf/log_sf/log_pdf/hazard/sample and set
    ``family`` plus ``theta_names``.  Parameters are strictly positive.
    """

    family: str = ""
    theta_names: tuple = ()

    # -- raw-scale curves (implemented by subclasses) --------------------

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def log_sf(self, t):
        raise NotImplementedError

    def log_pdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(t))

    def hazard(self, t):
        """Unconditional hazard f(t) / (1 - F(t))."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_pdf(t) - self.log_sf(t))

    def sample(self, rng, size=None):
        raise NotImplementedError

    # -- conditional curves ----------------------------------------------

    def _check_condition(self, s):
        if np.any(np.asarray(s) < 0):
            raise ValueError("conditioning time s must be nonnegative")
        if np.any(np.isneginf(self.log_sf(s))):
            raise ValueError("conditioning on impossible event: F(s) = 1")

    def cond_survival(self, s, t):
        """S_s(t) = (1 - F(t)) / (1 - F(s)) for t >= s."""
        self._check_condition(s)
        if np.any(np.asarray(t) < np.asarray(s)):
            raise ValueError("need t >= s")
        return np.exp(self.log_sf(t) - self.log_sf(s))

    def cond_hazard(self, s, t):
        """H_s(t) = f(t) / (1 - F(t)); independent of s on its domain."""
        self._check_condition(s)
        return self.hazard(t)

    def log_cond_survival(self, s, t):
        self._check_condition(s)
        return self.log_sf(t) - self.log_sf(s)

    def log_cond_hazard(self, s, t):
        self._check_condition(s)
        return self.log_pdf(t) - self.log_sf(t)

    # -- parameter vector --------------------------------------------------

    @property
    def theta(self):
        return np.array([getattr(self, name) for name in self.theta_names])

    def with_theta(self, theta):
        return type(self)(*np.asarray(theta, dtype=float))

    def to_dict(self):
        return {"family": self.family,
                **{k: float(v) for k, v in zip(self.theta_names, self.theta)}}

    def __repr__(self):
        params = ", ".join(f"{k}={getattr(self, k):g}" for k in self.theta_names)
        return f"{type(self).__name__}({params})"


class Exponential(WaitingTimeModel):
    """Exponential waiting times with constant hazard ``rate``."""

    family = "exponential"
    theta_names = ("rate",)

    def __init__(self, rate):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = float(rate)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * t), 0.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * t), 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, np.exp(-self.rate * t), 1.0)

    def log_sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -self.rate * t, 0.0)

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate, 0.0)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)


class GammaWaiting(WaitingTimeModel):
    """Gamma waiting times (shape, scale); shape 1 reduces to exponential.

    The survival curves go through the regularized incomplete gamma
    function; sampling uses numpy's shape-augmented rejection sampler.
    log-survival falls back to the leading asymptotic term of the upper
    incomplete gamma where the regularized value underflows.
    """

    family = "gamma"
    theta_names = ("shape", "scale")

    def __init__(self, shape, scale):
        if shape <= 0 or scale <= 0:
            raise ValueError("shape and scale must be positive")
        self.shape = float(shape)
        self.scale = float(scale)

    def cdf(self, t):
        x = np.maximum(np.asarray(t, dtype=float), 0.0) / self.scale
        return special.gammainc(self.shape, x)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            out = np.exp(self.log_pdf(t))
        return out

    def sf(self, t):
        x = np.maximum(np.asarray(t, dtype=float), 0.0) / self.scale
        return special.gammaincc(self.shape, x)

    def log_sf(self, t):
        x = np.maximum(np.asarray(t, dtype=float), 0.0) / self.scale
        q = special.gammaincc(self.shape, x)
        with np.errstate(divide="ignore"):
            out = np.log(q)
        tiny = q <= 0.0
        if np.any(tiny):
            # Q(a, x) ~ x^(a-1) e^(-x) / Gamma(a) for x >> a
            a = self.shape
            xt = np.asarray(x)[tiny] if np.ndim(x) else x
            asym = (a - 1.0) * np.log(xt) - xt - special.gammaln(a)
            if np.ndim(out):
                out[tiny] = asym
            else:
                out = float(asym)
        return out

    def log_pdf(self, t):
        t = np.asarray(t, dtype=float)
        a, s = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            body = ((a - 1.0) * np.log(t / s) - t / s
                    - np.log(s) - special.gammaln(a))
        return np.where(t > 0, body, np.where(t == 0, np.where(
            a < 1.0, np.inf, np.where(a == 1.0, -np.log(s), -np.inf)), -np.inf))

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size=size)


class PowerLaw(WaitingTimeModel):
    """Pareto-type power law on [x_min, inf): f(t) = (a-1) x_min^(a-1) t^(-a).

    The hazard is 0 on [0, x_min).  ``shape`` must exceed 1 so the density
    normalizes.
    """

    family = "power_law"
    theta_names = ("shape", "x_min")

    def __init__(self, shape, x_min):
        if shape <= 1:
            raise ValueError("power-law shape must exceed 1")
        if x_min <= 0:
            raise ValueError("x_min must be positive")
        self.shape = float(shape)
        self.x_min = float(x_min)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > self.x_min,
                        1.0 - (self.x_min / np.maximum(t, self.x_min)) ** (self.shape - 1.0),
                        0.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        a = self.shape
        with np.errstate(divide="ignore"):
            body = (a - 1.0) * self.x_min ** (a - 1.0) * np.maximum(t, self.x_min) ** (-a)
        return np.where(t >= self.x_min, body, 0.0)

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def log_sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > self.x_min,
                        (self.shape - 1.0) * (np.log(self.x_min) - np.log(np.maximum(t, self.x_min))),
                        0.0)

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            body = (self.shape - 1.0) / np.maximum(t, self.x_min)
        return np.where(t >= self.x_min, body, 0.0)

    def log_pdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(t))

    def sample(self, rng, size=None):
        u = rng.random(size=size)
        return self.x_min * (1.0 - u) ** (-1.0 / (self.shape - 1.0))


class GammaUnitMean(GammaWaiting):
    """One-parameter gamma family with the mean pinned to 1.

    scale is tied to 1/shape, so shape is the only free parameter; this is
    the natural family for bias studies where the time unit is fixed by the
    mean inter-recruitment time.
    """

    family = "gamma_unit_mean"
    theta_names = ("shape",)

    def __init__(self, shape):
        super().__init__(shape, 1.0 / float(shape))


FAMILIES = {
    "exponential": Exponential,
    "gamma": GammaWaiting,
    "gamma_unit_mean": GammaUnitMean,
    "power_law": PowerLaw,
}


def make_model(family, **params):
    """Build a model from a family name and named parameters."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    return cls(**params)
