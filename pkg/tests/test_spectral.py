import numpy as np
import pytest

from cca.errors import CcaError, NoBoundPairError
from cca.lattice import (
    HoppingMatrix,
    ModularSpec,
    StaggeredSpec,
    build_field,
    build_staggered,
    parity_reduce,
)
from cca.spectral import (
    allowed_momenta,
    analytic_band_energy,
    analytic_bound_mode,
    analytic_unbound_state,
    band_gap,
    cluster_end_to_end,
    diagonalize,
    end_to_end_amplitude,
    fix_phase,
    identify_bound_pair,
    innermost_pair,
    perturbative_bound_pair,
    perturbative_bound_states,
)
from oracles import dense_chain, staggered_couplings

# small root of the 3x3 block characteristic polynomials
# lambda^3 -+ 0.5 lambda^2 - 2.5 lambda +- 0.125 (N = 6, eta = -0.5), solved with mpmath
N6_BOUND = 0.049557495134575537
# end-to-end amplitude of the same state, from the cubic's eigenvector recursion
N6_END_TO_END = 0.44692235963854834


def staggered(n, eta, j=1.0):
    return build_staggered(StaggeredSpec(n, eta, j))


class TestDiagonalize:
    def test_two_by_two(self):
        d = diagonalize(HoppingMatrix.from_couplings([1.0]))
        np.testing.assert_allclose(d.eigenvalues, [-1, 1])
        np.testing.assert_allclose(d.vector(0), [1 / np.sqrt(2), 1 / np.sqrt(2)])
        np.testing.assert_allclose(d.vector(1), [1 / np.sqrt(2), -1 / np.sqrt(2)])

    def test_diagonal(self):
        d = diagonalize(HoppingMatrix([0.5, -0.5], [0.0]))
        np.testing.assert_allclose(d.eigenvalues, [-0.5, 0.5])

    def test_six_site_pair(self):
        d = diagonalize(staggered(6, -0.5))
        np.testing.assert_allclose(d.eigenvalues, -d.eigenvalues[::-1], atol=1e-12)
        np.testing.assert_allclose(d.eigenvalues[2:4], [-N6_BOUND, N6_BOUND], atol=1e-14)

    def test_accepts_dense_array(self):
        h = dense_chain([1.0, 2.0, 3.0])
        d = diagonalize(h)
        assert d.parity is None
        assert d.residual(h) < 1e-12

    def test_phase_convention(self):
        d = diagonalize(staggered(14, -0.3))
        for j in range(d.dim):
            v = d.vector(j)
            i = int(np.argmax(np.abs(v) >= np.abs(v).max() * (1 - 1e-9)))
            assert v[i] > 0

    def test_fix_phase_tie_breaks_low_index(self):
        np.testing.assert_array_equal(fix_phase(np.array([-0.5, 0.5])), [0.5, -0.5])

    def test_outputs_read_only(self):
        d = diagonalize(staggered(4, 0.1))
        with pytest.raises(ValueError):
            d.eigenvalues[0] = 0.0

    def test_deterministic(self):
        a = diagonalize(staggered(30, -0.4))
        b = diagonalize(staggered(30, -0.4))
        np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)

    def test_dimerized_degenerate_edge_pair(self):
        d = diagonalize(staggered(10, -1.0))
        zero = np.flatnonzero(np.abs(d.eigenvalues) < 1e-12)
        assert len(zero) == 2
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(d.vector(zero[0])[[0, -1]], [s, s], atol=1e-12)
        np.testing.assert_allclose(d.vector(zero[1])[[0, -1]], [s, -s], atol=1e-12)
        assert list(d.parity[zero]) == [1, -1]

    def test_rejects_non_square(self):
        with pytest.raises(CcaError):
            diagonalize(np.zeros((2, 3)))


class TestAnalyticBoundMode:
    def test_single_site(self):
        mode = analytic_bound_mode(1, -0.4)
        np.testing.assert_allclose(np.abs(mode.amplitudes), [1.0])

    def test_three_sites_negative_eta(self):
        mode = analytic_bound_mode(3, -0.5)
        np.testing.assert_allclose(np.abs(mode.amplitudes), [np.sqrt(0.9), 0, np.sqrt(0.1)], atol=1e-12)
        assert mode.normalization ** 2 == pytest.approx(0.9)
        assert mode.distortion_ratio == pytest.approx(1 / 3)

    def test_three_sites_positive_eta(self):
        mode = analytic_bound_mode(3, 0.5)
        np.testing.assert_allclose(np.abs(mode.amplitudes), [np.sqrt(0.1), 0, np.sqrt(0.9)], atol=1e-12)

    @pytest.mark.parametrize("m,eta", [(3, -0.5), (7, 0.3), (11, -0.8)])
    def test_is_zero_mode_of_block(self, m, eta):
        mode = analytic_bound_mode(m, eta)
        block = dense_chain(staggered_couplings(m, 1 + eta, 1 - eta))
        assert np.linalg.norm(block @ mode.amplitudes) < 1e-12
        assert np.linalg.norm(mode.amplitudes) == pytest.approx(1.0, abs=1e-12)
        assert not mode.amplitudes[1::2].any()

    def test_error_codes(self):
        for args, code in [((4, -0.5), "invalid_parity"), ((5, 0.0), "no_bound_mode"),
                           ((5, 1.0), "degenerate_distortion"), ((5, -1.0), "degenerate_distortion"),
                           ((5, 1.2), "out_of_range")]:
            with pytest.raises(CcaError) as exc:
                analytic_bound_mode(*args)
            assert exc.value.code == code


class TestBands:
    def test_uniform_dispersion(self):
        assert analytic_band_energy(np.pi / 2, 0.0) == pytest.approx(np.sqrt(2))

    @pytest.mark.parametrize("k", [0.1, 1.0, 2.5])
    def test_flat_at_full_dimerization(self, k):
        assert analytic_band_energy(k, -1.0) == pytest.approx(2.0)
        assert analytic_band_energy(k, 1.0, 1.5) == pytest.approx(3.0)

    def test_five_site_block_spectrum(self):
        ks = allowed_momenta(5)
        np.testing.assert_allclose(ks, [np.pi / 3, 2 * np.pi / 3])
        e = analytic_band_energy(ks, -0.5)
        expect = np.sort(np.concatenate([[0.0], e, -e]))
        block = dense_chain(staggered_couplings(5, 0.5, 1.5))
        np.testing.assert_allclose(np.linalg.eigvalsh(block), expect, atol=1e-12)

    def test_unbound_three_site_uniform(self):
        v = analytic_unbound_state(np.pi / 2, 1, 3, 0.0)
        # ground state of the uniform 3-site chain (hand diagonalized)
        np.testing.assert_allclose(np.abs(v), [0.5, np.sqrt(0.5), 0.5], atol=1e-12)
        h = dense_chain([1.0, 1.0])
        np.testing.assert_allclose(h @ v, -np.sqrt(2) * v, atol=1e-12)

    @pytest.mark.parametrize("m,eta", [(5, -0.25), (9, 0.4), (7, -0.9)])
    def test_unbound_residuals_and_orthogonality(self, m, eta):
        block = dense_chain(staggered_couplings(m, 1 + eta, 1 - eta))
        bound = analytic_bound_mode(m, eta).amplitudes
        for k in allowed_momenta(m):
            e = analytic_band_energy(k, eta)
            for mu in (1, -1):
                v = analytic_unbound_state(k, mu, m, eta)
                assert np.linalg.norm(block @ v + mu * e * v) < 1e-10
                assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
                assert abs(bound @ v) < 1e-10

    def test_unbound_rejects(self):
        with pytest.raises(CcaError) as exc:
            analytic_unbound_state(1.0, 1, 5, -0.5)
        assert exc.value.code == "off_grid"
        with pytest.raises(CcaError):
            analytic_unbound_state(np.pi / 3, 0, 5, -0.5)
        with pytest.raises(CcaError):
            analytic_unbound_state(np.pi / 3, 1, 6, -0.5)


class TestPerturbative:
    def test_six_site_splitting_is_one_tenth(self):
        wp, wm, dw = perturbative_bound_pair(6, -0.5)
        assert dw == pytest.approx(0.1, rel=1e-12)
        assert wp == pytest.approx(-0.05, rel=1e-12)
        assert wm == pytest.approx(0.05, rel=1e-12)

    def test_six_site_overestimates_exact(self):
        _, _, dw = perturbative_bound_pair(6, -0.5)
        assert (dw - 2 * N6_BOUND) / (2 * N6_BOUND) == pytest.approx(0.0089, abs=2e-4)

    def test_even_state_energy_tracks_exact(self):
        d = diagonalize(staggered(10, -0.6))
        pair = identify_bound_pair(d)
        wp, wm, _ = perturbative_bound_pair(10, -0.6)
        assert np.sign(pair.omega_even) == np.sign(wp)
        assert pair.omega_even == pytest.approx(wp, rel=0.05)

    def test_splitting_vanishes_at_full_dimerization(self):
        gaps = [perturbative_bound_pair(10, eta)[2] for eta in (-0.9, -0.99, -0.999)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-10

    def test_rejects(self):
        with pytest.raises(CcaError):
            perturbative_bound_pair(8, -0.5)
        with pytest.raises(CcaError):
            perturbative_bound_pair(7, -0.5)
        for eta in (0.0, 1.0, -1.0):
            with pytest.raises(CcaError):
                perturbative_bound_pair(10, eta)

    def test_states_near_dimerized_limit(self):
        bp, bm = perturbative_bound_states(10, -0.999999)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(bp[[0, -1]], [s, s], atol=1e-5)
        np.testing.assert_allclose(bm[[0, -1]], [s, -s], atol=1e-5)

    def test_states_fifty_sites(self):
        d = diagonalize(staggered(50, -0.25))
        pair = identify_bound_pair(d)
        bp, bm = perturbative_bound_states(50, -0.25)
        assert abs(bp @ d.vector(pair.even_index)) >= 0.99
        assert abs(bm @ d.vector(pair.odd_index)) >= 0.99

    def test_first_order_improves_on_zeroth(self):
        d = diagonalize(staggered(14, -0.5))
        pair = identify_bound_pair(d)
        z = perturbative_bound_states(14, -0.5, order=0)[0]
        f = perturbative_bound_states(14, -0.5, order=1)[0]
        exact = d.vector(pair.even_index)
        assert abs(f @ exact) > abs(z @ exact)

    def test_zeroth_order_is_embedded_bound_mode(self):
        bp, bm = perturbative_bound_states(10, -0.4, order=0)
        mode = analytic_bound_mode(5, -0.4).amplitudes
        np.testing.assert_allclose(np.abs(bp[:5]), np.abs(mode) / np.sqrt(2), atol=1e-14)
        np.testing.assert_allclose(np.abs(bm[5:]), np.abs(mode[::-1]) / np.sqrt(2), atol=1e-14)


class TestBoundPair:
    def test_uniform_chain_has_none(self):
        with pytest.raises(NoBoundPairError):
            identify_bound_pair(diagonalize(staggered(10, 0.0)))

    def test_dimerized(self):
        pair = identify_bound_pair(diagonalize(staggered(10, -1.0)))
        assert pair.gap == pytest.approx(0.0, abs=1e-14)
        assert sorted(pair.end_to_end) == pytest.approx([-0.5, 0.5])

    def test_fifty_sites(self):
        d = diagonalize(staggered(50, -0.25))
        pair = identify_bound_pair(d)
        assert pair.gap < 1e-4 * band_gap(d, pair)
        for s in pair.states:
            assert abs(s[0]) > 0.5 and abs(s[-1]) > 0.5
        assert not pair.weak_localization

    def test_six_site_end_to_end(self):
        pair = identify_bound_pair(diagonalize(staggered(6, -0.5)))
        np.testing.assert_allclose(np.abs(pair.end_to_end), N6_END_TO_END, rtol=1e-12)
        assert abs(abs(pair.end_to_end[0]) - 0.45) < 0.01

    def test_energies_inside_band_gap(self):
        d = diagonalize(staggered(14, -0.4))
        pair = identify_bound_pair(d)
        rest = np.delete(np.abs(d.eigenvalues), [pair.index_minus, pair.index_plus])
        assert max(abs(pair.omega_minus), abs(pair.omega_plus)) < rest.min()

    def test_even_odd_labels(self):
        pair = identify_bound_pair(diagonalize(staggered(10, -0.5)))
        assert pair.omega_even < 0 < pair.omega_odd
        assert pair.parity == (1, -1)

    def test_end_to_end_amplitude(self):
        s = 1 / np.sqrt(2)
        assert end_to_end_amplitude([s, 0, 0, s]) == pytest.approx(0.5)
        assert end_to_end_amplitude([0, 1, 0, 0]) == 0.0

    def test_band_gap(self):
        d = diagonalize(staggered(50, -0.25))
        assert band_gap(d, identify_bound_pair(d)) >= 1.0 - 1e-9
        d = diagonalize(staggered(10, -1.0))
        assert band_gap(d, identify_bound_pair(d)) == pytest.approx(4.0)

    def test_cluster_end_to_end_is_basis_free(self):
        # decoupled modules: each module's bound pair is degenerate with its copy
        d = diagonalize(build_field(ModularSpec(StaggeredSpec(6, -0.5), 2, 0.0)))
        pair = innermost_pair(d)
        assert cluster_end_to_end(d, pair.index_minus) == pytest.approx(0.0, abs=1e-12)

    def test_needs_two_states(self):
        with pytest.raises(NoBoundPairError):
            innermost_pair(diagonalize(HoppingMatrix([0.0], [])))


def test_parity_labels_match_block_origin():
    h = staggered(10, -0.3)
    blocks = parity_reduce(h)
    d = diagonalize(h)
    even = np.sort(np.linalg.eigvalsh(blocks.even_block.to_dense()))
    np.testing.assert_allclose(np.sort(d.eigenvalues[d.parity == 1]), even, atol=1e-12)
