"""Spatial ground-motion intensity fields from a parametric attenuation relation.

The median attenuation has the form

    ln(IM) = c0 + c1*(Mw - 6) + c2*ln(R + c3) + c4*ln(vs30/760)

with R the planar epicentral distance in km and IM the peak ground
acceleration in g.  Sampled fields add an inter-event residual (one standard
normal draw per event, scaled by tau) and per-site intra-event residuals
(scaled by sigma) that are optionally correlated in space with an exponential
kernel exp(-d/correlation_range).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class EventSpec:
    """An earthquake event: moment magnitude and planar epicenter (km)."""

    magnitude: float
    epicenter: tuple[float, float]
    fault_params: tuple[float, ...] = ()

    def __post_init__(self):
        if not 4.0 <= self.magnitude <= 9.0:
            raise ConfigurationError(f"magnitude {self.magnitude} outside [4, 9]")
        if not all(math.isfinite(v) for v in self.epicenter):
            raise ConfigurationError("epicenter must be finite")


@dataclass(frozen=True)
class Site:
    """A point where ground motion is evaluated."""

    location: tuple[float, float]
    vs30: float = 400.0

    def __post_init__(self):
        if self.vs30 <= 0:
            raise ConfigurationError(f"vs30 must be positive, got {self.vs30}")


@dataclass(frozen=True)
class AttenuationParams:
    """Coefficients and residual scales of the attenuation relation."""

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    sigma_intra: float = 0.0
    tau_inter: float = 0.0
    correlation_range: float = 0.0  # km; 0 disables spatial correlation

    def __post_init__(self):
        if self.c3 <= 0:
            raise ConfigurationError("c3 must be > 0 (log singularity at R = 0)")
        if self.sigma_intra < 0 or self.tau_inter < 0:
            raise ConfigurationError("residual scales must be non-negative")
        if self.correlation_range < 0:
            raise ConfigurationError("correlation_range must be >= 0")


@dataclass(frozen=True)
class ImField:
    """Sampled intensity measures: shape (n_realizations, n_sites), PGA in g."""

    values: np.ndarray

    def realization(self, i: int = 0) -> np.ndarray:
        return self.values[i]


def epicentral_distance(event: EventSpec, site: Site) -> float:
    ex, ey = event.epicenter
    sx, sy = site.location
    return math.hypot(sx - ex, sy - ey)


def median_ln_im(event: EventSpec, site: Site, params: AttenuationParams) -> float:
    """Median ln(PGA in g) at a site, residuals set to zero."""
    r = epicentral_distance(event, site)
    return (
        params.c0
        + params.c1 * (event.magnitude - 6.0)
        + params.c2 * math.log(r + params.c3)
        + params.c4 * math.log(site.vs30 / 760.0)
    )


def _correlation_factor(sites: list[Site], corr_range: float) -> np.ndarray:
    """A matrix L with L L^T equal to the exponential correlation matrix.

    Dense site clusters make the matrix numerically semi-definite even though
    the exponential kernel is strictly positive definite, so when Cholesky
    fails we fall back to a symmetric eigendecomposition square root of the
    same matrix.  Genuinely negative eigenvalues are a configuration error.
    """
    xy = np.array([s.location for s in sites])
    d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    corr = np.exp(-d / corr_range)
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(corr)
    if w.min() < -1e-8 * w.max():
        raise ConfigurationError(
            "intra-event correlation matrix is not positive definite "
            "(coincident sites?)"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_im_field(
    event: EventSpec,
    sites: list[Site],
    params: AttenuationParams,
    seed: int,
    n_realizations: int = 1,
) -> ImField:
    """Draw PGA fields over the given sites.

    ln(im) at each site is the median plus a per-site intra-event residual
    (sigma) and a shared inter-event residual (tau).  Reproducible from seed.
    """
    if not sites:
        raise ConfigurationError("at least one site required")
    rng = np.random.default_rng(seed)
    medians = np.array([median_ln_im(event, s, params) for s in sites])
    n_sites = len(sites)

    eps2 = rng.standard_normal((n_realizations, 1))
    eps1 = rng.standard_normal((n_realizations, n_sites))
    if params.correlation_range > 0 and n_sites > 1:
        factor = _correlation_factor(sites, params.correlation_range)
        eps1 = eps1 @ factor.T

    ln_im = medians[None, :] + params.sigma_intra * eps1 + params.tau_inter * eps2
    return ImField(values=np.exp(ln_im))
