import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from gmrf_telescope.errors import NotPositiveDefiniteError
from gmrf_telescope.factor import (
    chain_covariance,
    cholesky_blocks,
    factorize,
    factorize_oracle,
    shell_marginals,
)
from gmrf_telescope.lattice import LatticeSpec, NeighborhoodCoefficients, build_precision, joint_covariance
from gmrf_telescope.shells import permute_system, shells
from helpers import homogeneous, identity_model, pipeline, random_beta, random_system, rel_dev

dims = st.integers(min_value=1, max_value=6)


def oracle(sys, dec):
    cxx, cxb = joint_covariance(sys)
    return factorize_oracle(cxx, cxb, sys.boundary_cov, dec)


class TestFactorize:
    def test_identity_model(self):
        dec, _, model = pipeline(identity_model(4, 3))
        for k in range(1, model.tau + 1):
            assert not model.F[k].any()
            assert np.array_equal(model.Q[k], np.eye(dec.sizes[k]))

    def test_three_by_three_last_stage(self):
        """Q_2 = [1/9]; F_2 = Q_2 M-_2 with M-_2 the negated raw block."""
        sys = homogeneous(3, 3)
        dec, bt, model = pipeline(sys)
        assert model.Q[2].shape == (1, 1)
        assert model.Q[2][0, 0] == pytest.approx(1 / 9, rel=1e-15)
        np.testing.assert_allclose(model.F[2], np.full((1, 8), 1 / 9), rtol=1e-15)
        # positive, as the covariance route requires: interior couplings are -1 in A
        ref = oracle(sys, dec)
        np.testing.assert_allclose(model.F[2], ref.F[2], rtol=1e-10)
        q1_inv = bt.M0[1] - bt.Mplus[1] @ model.F[2]
        np.testing.assert_allclose(np.linalg.inv(q1_inv), model.Q[1], atol=1e-14)

    def test_chain_shapes(self):
        _, _, model = pipeline(homogeneous(5, 7))
        model.check()
        assert model.sizes == [28, 20, 12, 3]
        for k in range(1, model.tau + 1):
            assert model.F[k].shape == (model.sizes[k], model.sizes[k - 1])

    def test_not_pd_reports_stage(self):
        sys = homogeneous(3, 3, alpha=1.0)
        dec = shells(sys.spec)
        with pytest.raises(NotPositiveDefiniteError) as info:
            factorize(permute_system(sys, dec), sys.boundary_cov)
        assert info.value.stage in (1, 2)

    @given(dims, dims, st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_oracle_equivalence(self, n, m, seed):
        sys = random_system(np.random.default_rng(seed), n, m)
        dec, _, model = pipeline(sys)
        ref = oracle(sys, dec)
        for k in range(1, dec.tau + 1):
            assert rel_dev(model.F[k], ref.F[k]) < 1e-9
            assert rel_dev(model.Q[k], ref.Q[k]) < 1e-9

    def test_heterogeneous_five_by_five(self):
        rng = np.random.default_rng(20240501)
        spec = LatticeSpec(5, 5)
        coeffs = NeighborhoodCoefficients(np.full((5, 5), 9.0), random_beta(rng, 5, 5))
        sys = build_precision(spec, coeffs, np.eye(spec.n_boundary))
        dec, _, model = pipeline(sys)
        ref = oracle(sys, dec)
        for k in range(1, dec.tau + 1):
            assert rel_dev(model.F[k], ref.F[k]) < 1e-9
            assert rel_dev(model.Q[k], ref.Q[k]) < 1e-9

    @given(dims, dims, st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_cholesky_reassembly(self, n, m, seed):
        sys = random_system(np.random.default_rng(seed), n, m)
        dec, bt, model = pipeline(sys)
        L = cholesky_blocks(bt, model)
        pap = bt.assemble()
        assert np.linalg.norm(L.T @ L - pap) / np.linalg.norm(pap) < 1e-10
        # the alternative form F_k = U_k^-1 (U_k^-T M-_k)
        starts = np.concatenate([[0], np.cumsum(dec.sizes[1:])])
        for k in range(2, dec.tau + 1):
            a, b = starts[k - 1], starts[k]
            U, P = L[a:b, a:b], -L[a:b, starts[k - 2]:a]
            np.testing.assert_allclose(linalg.solve_triangular(U, P), model.F[k], atol=1e-12)

    @given(dims, dims, st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_chain_covariance_matches_joint(self, n, m, seed):
        sys = random_system(np.random.default_rng(seed), n, m)
        dec, _, model = pipeline(sys)
        cxx, cxb = joint_covariance(sys)
        o = dec.order
        ref = np.block([[sys.boundary_cov, cxb[o].T], [cxb[o], cxx[np.ix_(o, o)]]])
        got = chain_covariance(model)
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-8
        nb = dec.sizes[0]
        for k, cov in enumerate(shell_marginals(model)[1:], start=1):
            blk = dec.block(k)
            np.testing.assert_allclose(cov, ref[nb + blk.start:nb + blk.stop, nb + blk.start:nb + blk.stop], atol=1e-10)

    @given(dims, dims, st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_q_symmetric_pd(self, n, m, seed):
        _, _, model = pipeline(random_system(np.random.default_rng(seed), n, m))
        for k in range(1, model.tau + 1):
            Q = model.Q[k]
            assert np.max(np.abs(Q - Q.T)) < 1e-12
            assert np.all(np.diag(np.linalg.cholesky(Q)) > 0)


class TestOracle:
    def test_identity_model(self):
        sys = identity_model(3, 3)
        model = oracle(sys, shells(sys.spec))
        for k in range(1, model.tau + 1):
            assert np.allclose(model.F[k], 0.0, atol=1e-15)
            assert np.allclose(model.Q[k], np.eye(model.Q[k].shape[0]), atol=1e-15)

    def test_three_by_three_matches(self):
        sys = homogeneous(3, 3)
        dec, _, model = pipeline(sys)
        ref = oracle(sys, dec)
        for k in (1, 2):
            assert np.max(np.abs(model.F[k] - ref.F[k])) / np.max(np.abs(ref.F[k])) < 1e-10
            assert np.max(np.abs(model.Q[k] - ref.Q[k])) / np.max(np.abs(ref.Q[k])) < 1e-10

    def test_singular_boundary_still_factorizes(self):
        """The backward recursion never inverts Sigma_b."""
        sys = homogeneous(3, 4, sigma2=0.0)
        _, _, model = pipeline(sys)
        model.check()
