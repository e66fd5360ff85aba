"""Ground-motion field tests: median attenuation, residual structure, seeds."""

import numpy as np
import pytest

from gridmend.errors import ConfigurationError
from gridmend.hazard import (
    AttenuationParams,
    EventSpec,
    Site,
    epicentral_distance,
    median_ln_im,
    sample_im_field,
)


def params(c0=0.0, c1=0.0, c2=0.0, c3=1.0, c4=0.0, **kw):
    return AttenuationParams(c0=c0, c1=c1, c2=c2, c3=c3, c4=c4, **kw)


def event(mag=6.0, epi=(0.0, 0.0)):
    return EventSpec(magnitude=mag, epicenter=epi)


class TestMedian:
    def test_constant_term_only(self):
        p = params(c0=0.1)
        site = Site(location=(3.0, 4.0), vs30=500.0)
        assert median_ln_im(event(), site, p) == pytest.approx(0.1, abs=1e-15)

    def test_zero_distance_unit_offset(self):
        p = params(c2=-1.0, c3=1.0)
        site = Site(location=(0.0, 0.0), vs30=760.0)
        assert median_ln_im(event(), site, p) == pytest.approx(0.0, abs=1e-15)

    def test_full_formula_value(self):
        # frozen reference value for c=(0, 0.5, -1, 10, 0.2), Mw=7, R=12,
        # vs30=270, computed independently from the closed form
        p = params(c1=0.5, c2=-1.0, c3=10.0, c4=0.2)
        site = Site(location=(12.0, 0.0), vs30=270.0)
        got = median_ln_im(event(mag=7.0), site, p)
        assert got == pytest.approx(-2.7980217482147163, rel=1e-12)

    def test_decreasing_with_distance(self):
        p = params(c0=1.0, c2=-0.9, c3=10.0)
        vals = [
            median_ln_im(event(), Site(location=(r, 0.0)), p) for r in (0.0, 5.0, 20.0, 80.0)
        ]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_distance_is_euclidean(self):
        assert epicentral_distance(event(epi=(1.0, 2.0)), Site(location=(4.0, 6.0))) == 5.0


class TestValidation:
    def test_magnitude_bounds(self):
        with pytest.raises(ConfigurationError):
            EventSpec(magnitude=3.9, epicenter=(0.0, 0.0))
        with pytest.raises(ConfigurationError):
            EventSpec(magnitude=9.1, epicenter=(0.0, 0.0))

    def test_vs30_positive(self):
        with pytest.raises(ConfigurationError):
            Site(location=(0.0, 0.0), vs30=0.0)

    def test_c3_positive(self):
        with pytest.raises(ConfigurationError):
            params(c3=0.0)

    def test_negative_residual_scales_rejected(self):
        with pytest.raises(ConfigurationError):
            params(sigma_intra=-0.1)

    def test_empty_site_list_rejected(self):
        with pytest.raises(ConfigurationError):
            sample_im_field(event(), [], params(), seed=0)


class TestSampling:
    def test_zero_residuals_give_exact_median(self):
        p = params(c0=0.3, c2=-0.5, c3=5.0)
        sites = [Site(location=(float(i), 0.0)) for i in range(4)]
        field = sample_im_field(event(), sites, p, seed=7)
        expected = np.exp([median_ln_im(event(), s, p) for s in sites])
        np.testing.assert_array_equal(field.realization(0), expected)

    def test_inter_event_residual_shared_across_sites(self):
        p = params(tau_inter=1.0)
        sites = [Site(location=(float(i), 0.0)) for i in range(5)]
        field = sample_im_field(event(), sites, p, seed=11, n_realizations=3)
        for r in range(3):
            resid = np.log(field.realization(r))
            np.testing.assert_allclose(resid, resid[0], atol=1e-12)

    def test_seed_determinism(self):
        p = params(sigma_intra=0.5, tau_inter=0.3, correlation_range=10.0)
        sites = [Site(location=(float(i), float(i % 3))) for i in range(6)]
        a = sample_im_field(event(), sites, p, seed=42, n_realizations=4)
        b = sample_im_field(event(), sites, p, seed=42, n_realizations=4)
        np.testing.assert_array_equal(a.values, b.values)
        c = sample_im_field(event(), sites, p, seed=43, n_realizations=4)
        assert not np.array_equal(a.values, c.values)

    def test_all_values_positive(self):
        p = params(c0=-8.0, sigma_intra=1.0, tau_inter=1.0)
        sites = [Site(location=(float(i), 0.0)) for i in range(3)]
        field = sample_im_field(event(), sites, p, seed=1, n_realizations=10)
        assert (field.values > 0).all()

    def test_marginal_moments(self):
        # ln(im) should be normal with mean median and variance sigma^2 + tau^2
        sigma, tau = 0.4, 0.3
        p = params(c0=0.2, sigma_intra=sigma, tau_inter=tau, correlation_range=15.0)
        sites = [Site(location=(0.0, 0.0)), Site(location=(3.0, 4.0))]
        n = 100_000
        field = sample_im_field(event(), sites, p, seed=5, n_realizations=n)
        ln_im = np.log(field.values)
        var = sigma**2 + tau**2
        for j, s in enumerate(sites):
            mu = median_ln_im(event(), s, p)
            se_mean = np.sqrt(var / n)
            assert abs(ln_im[:, j].mean() - mu) < 3 * se_mean
            se_var = var * np.sqrt(2.0 / (n - 1))
            assert abs(ln_im[:, j].var() - var) < 3 * se_var

    def test_exponential_spatial_correlation(self):
        p = params(sigma_intra=1.0, correlation_range=20.0)
        sites = [Site(location=(0.0, 0.0)), Site(location=(5.0, 0.0))]
        n = 100_000
        field = sample_im_field(event(), sites, p, seed=3, n_realizations=n)
        eps = np.log(field.values) - np.array(
            [median_ln_im(event(), s, p) for s in sites]
        )
        corr = np.corrcoef(eps[:, 0], eps[:, 1])[0, 1]
        assert corr == pytest.approx(np.exp(-5.0 / 20.0), abs=0.01)

    def test_dense_site_cluster_still_samples(self):
        # near-coincident sites make the correlation matrix numerically
        # semi-definite; sampling must still succeed with unit marginals
        p = params(sigma_intra=1.0, correlation_range=50.0)
        sites = [Site(location=(0.001 * i, 0.0)) for i in range(40)]
        field = sample_im_field(event(), sites, p, seed=9, n_realizations=100)
        assert np.isfinite(field.values).all()
