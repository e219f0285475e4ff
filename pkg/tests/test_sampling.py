import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmrf_telescope.errors import ModelError
from gmrf_telescope.lattice import joint_covariance
from gmrf_telescope.sampling import (
    FieldSample,
    covariance_rows,
    empirical_covariance,
    sample_field,
    sample_fields,
    standard_normals,
)
from helpers import homogeneous, identity_model, pipeline


class TestStandardNormals:
    def test_deterministic(self):
        a = standard_normals(12345, 1001)
        b = standard_normals(12345, 1001)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, standard_normals(12346, 1001))

    def test_prefix_stable(self):
        """Asking for more draws does not change the earlier ones."""
        assert np.array_equal(standard_normals(7, 10), standard_normals(7, 11)[:10])

    def test_large_seed(self):
        assert np.all(np.isfinite(standard_normals(2**64 - 1, 4)))

    def test_moments(self):
        x = standard_normals(3, 200_000)
        assert abs(x.mean()) < 5 / np.sqrt(len(x))
        assert abs(x.var() - 1) < 5 * np.sqrt(2 / len(x))

    def test_empty(self):
        assert standard_normals(0, 0).size == 0


class TestSampleField:
    def test_deterministic_bitwise(self):
        dec, _, model = pipeline(homogeneous(5, 6))
        a, b = sample_field(model, dec, 99), sample_field(model, dec, 99)
        assert a.interior.tobytes() == b.interior.tobytes()
        assert a.boundary.tobytes() == b.boundary.tobytes()
        assert a.seed == 99

    def test_batch_is_contiguous_stream(self):
        """Sample i of a batch uses the draws right after sample i-1."""
        dec, _, model = pipeline(homogeneous(3, 4))
        b, x = sample_fields(model, dec, 5, 3)
        per = sum(model.sizes)
        xi = standard_normals(5, 3 * per).reshape(3, per)
        assert x.shape == (3, 3, 4) and b.shape == (3, dec.sizes[0])
        # boundary factor of the identity is a permutation of columns
        assert np.allclose(np.sort(b[2]), np.sort(xi[2, :dec.sizes[0]]))

    def test_white_noise_zero_boundary(self):
        dec, _, model = pipeline(identity_model(3, 3, sigma2=0.0))
        b, x = sample_fields(model, dec, 1, 20_000)
        assert not b.any()
        var = x.reshape(len(x), -1).var(axis=0)
        assert np.all(np.abs(var - 1) < 5 * np.sqrt(2 / len(x)))

    def test_boundary_interior_uncorrelated(self):
        dec, _, model = pipeline(identity_model(2, 2))
        b, x = sample_fields(model, dec, 2, 20_000)
        samples = [FieldSample(b[i], x[i], 0) for i in range(len(x))]
        _, cross = empirical_covariance(samples, cross=True)
        assert np.max(np.abs(cross)) < 5 / np.sqrt(len(x))

    def test_matches_oracle(self):
        sys = homogeneous(3, 3)
        dec, _, model = pipeline(sys)
        _, x = sample_fields(model, dec, 11, 40_000)
        emp = covariance_rows(x.reshape(len(x), -1))
        ref, _ = joint_covariance(sys)
        sd = np.sqrt(np.diag(ref))
        se = (np.outer(sd, sd) + np.abs(ref)) / np.sqrt(len(x))
        assert np.all(np.abs(emp - ref) < 5 * se)

    def test_singular_boundary(self):
        sys = homogeneous(2, 3, sigma2=0.0)
        v = np.ones((sys.spec.n_boundary, 1))
        sys = type(sys)(sys.spec, sys.A, sys.A_b, v @ v.T)
        dec, _, model = pipeline(sys)
        b, _ = sample_fields(model, dec, 4, 50)
        # rank one: every boundary node carries the same value
        assert np.allclose(b, b[:, :1])

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**64 - 1))
    @settings(max_examples=20, deadline=None)
    def test_finite(self, n, m, seed):
        dec, _, model = pipeline(homogeneous(n, m))
        s = sample_field(model, dec, seed)
        assert s.interior.shape == (n, m)
        assert np.all(np.isfinite(s.interior)) and np.all(np.isfinite(s.boundary))

    def test_gaussian_shape(self):
        dec, _, model = pipeline(identity_model(2, 2, sigma2=0.0))
        _, x = sample_fields(model, dec, 8, 200_000)
        z = x.reshape(len(x), -1)
        z = (z - z.mean(axis=0)) / z.std(axis=0)
        skew = (z ** 3).mean(axis=0)
        kurt = (z ** 4).mean(axis=0)
        assert np.all(np.abs(skew) < 0.05)
        assert np.all(np.abs(kurt - 3) < 0.1)


class TestEmpiricalCovariance:
    def _s(self, v):
        v = np.asarray(v, dtype=float)
        return FieldSample(np.zeros(8), v.reshape(1, -1), 0)

    def test_identical(self):
        u = [1.0, -2.0, 3.0]
        assert not empirical_covariance([self._s(u), self._s(u)]).any()

    def test_plus_minus(self):
        u = np.array([1.0, -2.0, 0.5])
        got = empirical_covariance([self._s(u), self._s(-u)])
        # mean 0, (u u^T + u u^T) / (2 - 1)
        np.testing.assert_allclose(got, 2 * np.outer(u, u), atol=1e-15)

    def test_white_noise_off_diagonal(self):
        dec, _, model = pipeline(identity_model(2, 2, sigma2=0.0))
        b, x = sample_fields(model, dec, 6, 10_000)
        cov = empirical_covariance([FieldSample(b[i], x[i], 0) for i in range(len(x))])
        off = cov[~np.eye(4, dtype=bool)]
        assert np.max(np.abs(off)) < 5 / np.sqrt(len(x))

    def test_errors(self):
        with pytest.raises(ModelError):
            empirical_covariance([self._s([1.0])])
        with pytest.raises(ModelError, match="mismatched"):
            empirical_covariance([self._s([1.0]), self._s([1.0, 2.0])])
