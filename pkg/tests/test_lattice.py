import numpy as np
import pytest

from cca.errors import CcaError
from cca.lattice import (
    HoppingMatrix,
    ModularSpec,
    StaggeredSpec,
    UniformBulkSpec,
    build_field,
    build_modular,
    build_staggered,
    build_uniform_bulk,
    parity_reduce,
)
from oracles import dense_chain, staggered_couplings


class TestStaggered:
    def test_two_sites_uniform(self):
        h = build_staggered(StaggeredSpec(2, 0.0))
        np.testing.assert_array_equal(h.to_dense(), [[0, -1], [-1, 0]])

    def test_four_sites(self):
        h = build_staggered(StaggeredSpec(4, -0.5))
        np.testing.assert_allclose(h.coupling, [0.5, 1.5, 0.5])
        np.testing.assert_array_equal(h.onsite, np.zeros(4))

    def test_fifty_sites_alternate(self):
        h = build_staggered(StaggeredSpec(50, -0.25))
        assert len(h.coupling) == 49
        np.testing.assert_allclose(h.coupling[0::2], 0.75)
        np.testing.assert_allclose(h.coupling[1::2], 1.25)

    def test_j_scale(self):
        h = build_staggered(StaggeredSpec(6, 0.2, 2.0))
        np.testing.assert_allclose(h.coupling, [2.4, 1.6, 2.4, 1.6, 2.4])

    @pytest.mark.parametrize("n", [3, 7, 11])
    def test_rejects_odd_size(self, n):
        with pytest.raises(CcaError) as exc:
            StaggeredSpec(n, 0.1)
        assert exc.value.code == "invalid_parity"

    @pytest.mark.parametrize("eta", [-1.01, 1.5, np.nan])
    def test_rejects_eta_out_of_range(self, eta):
        with pytest.raises(CcaError) as exc:
            StaggeredSpec(6, eta)
        assert exc.value.code == "out_of_range"

    def test_rejects_bad_scale(self):
        with pytest.raises(CcaError):
            StaggeredSpec(6, 0.1, 0.0)

    def test_from_couplings(self):
        spec = StaggeredSpec.from_couplings(24, 0.3, 1.0)
        assert spec.j1 == pytest.approx(0.3)
        assert spec.j2 == pytest.approx(1.0)
        np.testing.assert_allclose(build_staggered(spec).coupling, staggered_couplings(24, 0.3, 1.0))

    def test_parity_flag(self):
        assert StaggeredSpec(10, -0.5).parity_analytic_valid
        assert not StaggeredSpec(8, -0.5).parity_analytic_valid

    def test_dimerized_limit_isolates_ends(self):
        h = build_staggered(StaggeredSpec(10, -1.0))
        np.testing.assert_array_equal(h.coupling, [0, 2, 0, 2, 0, 2, 0, 2, 0])
        dense = h.to_dense()
        assert not dense[0].any() and not dense[-1].any()


class TestUniformBulk:
    def test_three_site_uniform(self):
        np.testing.assert_array_equal(build_uniform_bulk(UniformBulkSpec(3, 1.0, 1.0)).coupling, [1, 1])

    def test_weak_ends(self):
        h = build_uniform_bulk(UniformBulkSpec(10, 0.1, 1.0))
        np.testing.assert_allclose(h.coupling, [0.1] + [1.0] * 7 + [0.1])

    def test_equals_undistorted_staggered(self):
        assert build_uniform_bulk(UniformBulkSpec(10, 1.0)) == build_staggered(StaggeredSpec(10, 0.0))

    def test_rejects_short(self):
        with pytest.raises(CcaError):
            UniformBulkSpec(2, 0.5)


class TestModular:
    def test_single_module_is_staggered(self):
        mod = StaggeredSpec(10, -0.3)
        assert build_modular(ModularSpec(mod, 1, 0.7)) == build_staggered(mod)

    def test_two_dimers(self):
        h = build_modular(ModularSpec(StaggeredSpec(2, -0.5), 2, 0.3))
        np.testing.assert_allclose(h.coupling, [0.5, 0.3, 0.5])

    def test_j_mod_equal_j2_restores_full_array(self):
        mod = StaggeredSpec(14, -0.5)
        h = build_modular(ModularSpec(mod, 3, mod.j2))
        assert h == build_staggered(StaggeredSpec(42, -0.5))

    def test_length(self):
        spec = ModularSpec(StaggeredSpec(6, -0.8), 17, 0.01)
        assert spec.n_sites == 102
        assert build_modular(spec).dim == 102

    def test_rejects(self):
        with pytest.raises(CcaError):
            ModularSpec(StaggeredSpec(4, 0.0), 0, 0.1)
        with pytest.raises(CcaError):
            ModularSpec(StaggeredSpec(4, 0.0), 2, -0.1)


class TestHoppingMatrix:
    def test_sign_convention(self):
        h = HoppingMatrix.from_couplings([0.2, 0.7], onsite=[1.0, 0.0, -1.0])
        np.testing.assert_array_equal(h.to_dense(), dense_chain([0.2, 0.7], [1.0, 0.0, -1.0]))

    def test_immutable(self):
        h = HoppingMatrix.from_couplings([1.0, 2.0])
        with pytest.raises(ValueError):
            h.coupling[0] = 5.0

    def test_validation(self):
        with pytest.raises(CcaError):
            HoppingMatrix([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(CcaError):
            HoppingMatrix.from_couplings([-0.1])

    def test_build_field_dispatch(self):
        h = HoppingMatrix.from_couplings([1.0])
        assert build_field(h) is h
        with pytest.raises(TypeError):
            build_field("chain")


class TestParityReduce:
    def test_six_sites(self):
        blocks = parity_reduce(build_staggered(StaggeredSpec(6, -0.5)))
        np.testing.assert_allclose(blocks.even_block.coupling, [0.5, 1.5])
        np.testing.assert_allclose(blocks.odd_block.coupling, [0.5, 1.5])
        np.testing.assert_allclose(blocks.even_block.onsite, [0, 0, -0.5])
        np.testing.assert_allclose(blocks.odd_block.onsite, [0, 0, 0.5])
        assert blocks.defect_site == 2
        assert blocks.defect_values == (-0.5, 0.5)

    def test_two_sites(self):
        blocks = parity_reduce(build_staggered(StaggeredSpec(2, 0.0)))
        np.testing.assert_allclose(blocks.even_block.onsite, [-1.0])
        np.testing.assert_allclose(blocks.odd_block.onsite, [1.0])

    def test_joint_spectrum_n10(self):
        h = build_staggered(StaggeredSpec(10, -0.25))
        blocks = parity_reduce(h)
        joint = np.sort(np.concatenate([np.linalg.eigvalsh(blocks.even_block.to_dense()),
                                        np.linalg.eigvalsh(blocks.odd_block.to_dense())]))
        np.testing.assert_allclose(joint, np.linalg.eigvalsh(h.to_dense()), atol=1e-10)

    def test_half_length_even_uses_j2(self):
        # N/2 even: the bond across the mirror plane is a J2 bond
        h = build_staggered(StaggeredSpec(8, -0.5))
        blocks = parity_reduce(h)
        assert blocks.defect_values == (-1.5, 1.5)
        joint = np.sort(np.concatenate([np.linalg.eigvalsh(blocks.even_block.to_dense()),
                                        np.linalg.eigvalsh(blocks.odd_block.to_dense())]))
        np.testing.assert_allclose(joint, np.linalg.eigvalsh(h.to_dense()), atol=1e-10)

    def test_block_vector_maps_to_eigenvector(self):
        h = build_staggered(StaggeredSpec(6, -0.5))
        blocks = parity_reduce(h)
        for block, parity in ((blocks.even_block, 1), (blocks.odd_block, -1)):
            w, v = np.linalg.eigh(block.to_dense())
            full = blocks.to_site_basis(v[:, 0], parity)
            np.testing.assert_allclose(h.to_dense() @ full, w[0] * full, atol=1e-12)

    def test_rejects_odd_dim(self):
        with pytest.raises(CcaError) as exc:
            parity_reduce(HoppingMatrix.from_couplings([1.0, 1.0]))
        assert exc.value.code == "invalid_parity"

    def test_rejects_asymmetric(self):
        with pytest.raises(CcaError) as exc:
            parity_reduce(HoppingMatrix.from_couplings([1.0, 2.0, 3.0]))
        assert exc.value.code == "not_mirror_symmetric"
