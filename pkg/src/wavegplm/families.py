"""One-parameter exponential families with canonical links.

Each family exposes the cumulant b and its derivatives, the canonical link
G = bdot^{-1}, the loglikelihood l(y, eta) = y*eta - b(eta) (terms constant
in eta are dropped), and a deterministic sampler driven by a caller-owned
``numpy.random.Generator``.

The natural parameter is clamped to [-ETA_MAX, ETA_MAX] for the binomial
and poisson families before exponentials are taken; the statistically
meaningful range is far narrower, so the clamp only prevents overflow.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, NumericError

ETA_MAX = 30.0


def _check_finite(eta):
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise NumericError("natural parameter contains non-finite values")
    return eta


class Family:
    """Base class; subclasses define the cumulant and its derivatives."""

    kind: str
    phi: float

    # -- cumulant and derivatives -------------------------------------
    def cumulant(self, eta):
        raise NotImplementedError

    def mean(self, eta):
        """bdot(eta), the conditional mean mu."""
        raise NotImplementedError

    def b_ddot(self, eta):
        """Second derivative of the cumulant (unit variance function)."""
        raise NotImplementedError

    def variance(self, eta):
        """Conditional variance phi * bddot(eta)."""
        return self.phi * self.b_ddot(eta)

    # -- link ----------------------------------------------------------
    def link(self, mu):
        """Canonical link eta = G(mu) = bdot^{-1}(mu)."""
        raise NotImplementedError

    def dlink(self, mu):
        """d eta / d mu = 1 / bddot(G(mu))."""
        raise NotImplementedError

    def mean_domain_clamp(self, y):
        """Clamp raw responses into the mean domain so G(y) exists."""
        raise NotImplementedError

    # -- likelihood ----------------------------------------------------
    def loglik(self, y, eta):
        """Sum of y*eta - b(eta); dispersion and c(y, phi) terms dropped."""
        eta = _check_finite(eta)
        y = np.asarray(y, dtype=float)
        return float(np.sum(y * eta - self.cumulant(eta)))

    # -- sampling ------------------------------------------------------
    def sample(self, eta, rng: np.random.Generator):
        raise NotImplementedError

    def init_eta(self, y):
        """Initialization f^(0) = G(y), with the domain clamp applied."""
        return self.link(self.mean_domain_clamp(np.asarray(y, dtype=float)))

    def __repr__(self):
        return f"{type(self).__name__}(phi={self.phi!r})"


class Gaussian(Family):
    """Gaussian family with identity link; phi is the noise variance."""

    kind = "gaussian"

    def __init__(self, phi: float = 1.0):
        if phi < 0:
            raise ConfigurationError("gaussian dispersion must be nonnegative")
        self.phi = float(phi)

    def cumulant(self, eta):
        eta = _check_finite(eta)
        return eta ** 2 / 2.0

    def mean(self, eta):
        return _check_finite(eta)

    def b_ddot(self, eta):
        return np.ones_like(_check_finite(eta))

    def link(self, mu):
        return np.asarray(mu, dtype=float)

    def dlink(self, mu):
        return np.ones_like(np.asarray(mu, dtype=float))

    def mean_domain_clamp(self, y):
        return y

    def sample(self, eta, rng):
        eta = _check_finite(eta)
        if self.phi == 0.0:
            return eta.copy()
        return rng.normal(eta, np.sqrt(self.phi))


class Binomial(Family):
    """Scaled binomial: y*m ~ B(m, logistic(eta)), phi = 1/m, logit link."""

    kind = "binomial"

    def __init__(self, m: int = 1):
        if m < 1 or int(m) != m:
            raise ConfigurationError("binomial class count m must be a positive integer")
        self.m = int(m)
        self.phi = 1.0 / self.m

    def _clamped(self, eta):
        return np.clip(_check_finite(eta), -ETA_MAX, ETA_MAX)

    def cumulant(self, eta):
        # log(1 + e^eta) via the stable log1p branch
        eta = self._clamped(eta)
        return np.logaddexp(0.0, eta)

    def mean(self, eta):
        eta = self._clamped(eta)
        return 1.0 / (1.0 + np.exp(-eta))

    def b_ddot(self, eta):
        mu = self.mean(eta)
        return mu * (1.0 - mu)

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0.0) or np.any(mu >= 1.0):
            raise DomainError("binomial mean must lie in (0, 1)")
        return np.log(mu / (1.0 - mu))

    def dlink(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0.0) or np.any(mu >= 1.0):
            raise DomainError("binomial mean must lie in (0, 1)")
        return 1.0 / (mu * (1.0 - mu))

    def mean_domain_clamp(self, y):
        lo = 1.0 / (2.0 * self.m)
        return np.clip(y, lo, 1.0 - lo)

    def sample(self, eta, rng):
        p = self.mean(eta)
        return rng.binomial(self.m, p) / self.m


class Poisson(Family):
    """Poisson family with log link; phi is fixed at 1."""

    kind = "poisson"

    def __init__(self):
        self.phi = 1.0

    def _clamped(self, eta):
        return np.clip(_check_finite(eta), -ETA_MAX, ETA_MAX)

    def cumulant(self, eta):
        return np.exp(self._clamped(eta))

    def mean(self, eta):
        return np.exp(self._clamped(eta))

    def b_ddot(self, eta):
        return np.exp(self._clamped(eta))

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0.0):
            raise DomainError("poisson mean must be positive")
        return np.log(mu)

    def dlink(self, mu):
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0.0):
            raise DomainError("poisson mean must be positive")
        return 1.0 / mu

    def mean_domain_clamp(self, y):
        return np.maximum(y, 0.5)

    def sample(self, eta, rng):
        return rng.poisson(self.mean(eta)).astype(float)


def make_family(kind: str, m: int | None = None, phi: float | None = None) -> Family:
    """Build a family from its name and family-specific parameters."""
    if kind == "gaussian":
        return Gaussian(phi=1.0 if phi is None else phi)
    if kind == "binomial":
        if m is None:
            raise ConfigurationError("binomial family requires the class count m")
        return Binomial(m=m)
    if kind == "poisson":
        return Poisson()
    raise ConfigurationError(f"unknown family {kind!r}")


def estimate_dispersion(family: Family, y, mu, eta) -> float:
    """Moment estimator (1/n) sum (y_i - mu_i)^2 / bddot(eta_i).

    Diagnostic only; never used inside the fitting loop, where the
    dispersion is treated as known.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not (y.shape == mu.shape == eta.shape):
        raise DimensionError("y, mu and eta must have equal lengths")
    return float(np.mean((y - mu) ** 2 / family.b_ddot(eta)))
