import math

import numpy as np
import pytest

from sensvol import errors
from sensvol.ensemble import (
    Ensemble,
    GridDims,
    Parameter,
    ParameterSpace,
    SYNTHETIC_PARAMS,
    SamplingInfo,
    SyntheticConfig,
    generate_synthetic,
    saltelli_sample,
)
from sensvol.sensitivity import (
    FLAG_INERT,
    FLAG_OUT_OF_RANGE,
    sobol_first_order,
    sobol_volume,
)


def ishigami(X, a=7.0, b=0.1):
    return np.sin(X[:, 0]) + a * np.sin(X[:, 1]) ** 2 + b * X[:, 2] ** 4 * np.sin(X[:, 0])


def ishigami_first_order(a=7.0, b=0.1):
    # closed-form partial variances for inputs uniform on [-pi, pi]
    pi = math.pi
    D1 = b * pi**4 / 5 + b**2 * pi**8 / 50 + 0.5
    D2 = a**2 / 8
    D3 = 0.0
    D = a**2 / 8 + b * pi**4 / 5 + b**2 * pi**8 / 18 + 0.5
    return np.array([D1 / D, D2 / D, D3 / D])


class TestFirstOrder:
    def test_identity_in_p1(self):
        base_n = 4096
        ps = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=0)
        Y = ps.samples[:, 0]
        S = sobol_first_order(Y, 3, base_n)
        assert abs(S[0] - 1.0) < 0.02
        assert abs(S[1]) < 0.02
        assert abs(S[2]) < 0.02

    def test_constant_output(self):
        with pytest.raises(errors.VarianceZero):
            sobol_first_order(np.full(50, 3.0), 3, 10)

    def test_ishigami(self):
        base_n = 16384
        params = tuple(Parameter(f"x{i}", -math.pi, math.pi) for i in range(3))
        ps = saltelli_sample(params, base_n, seed=0)
        S = sobol_first_order(ishigami(ps.samples), 3, base_n)
        expected = ishigami_first_order()
        assert np.abs(S - expected).max() < 0.02
        # sanity on the oracle itself
        assert np.allclose(expected[:2], [0.3139, 0.4424], atol=5e-4)
        assert expected[2] == 0.0

    def test_layout_mismatch(self):
        with pytest.raises(errors.LayoutMismatch):
            sobol_first_order(np.random.rand(49), 3, 10)

    def test_affine_invariance(self):
        base_n = 256
        ps = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=1)
        Y = ps.samples[:, 0] + 0.3 * ps.samples[:, 1] ** 2
        S1 = sobol_first_order(Y, 3, base_n)
        S2 = sobol_first_order(-2.5 * Y + 7.0, 3, base_n)
        assert np.abs(S1 - S2).max() < 1e-12

    def test_never_varying_parameter_is_zero(self):
        base_n = 64
        params = (Parameter("a", 0, 1), Parameter("b", 0.5, 0.5), Parameter("c", 0, 1))
        ps = saltelli_sample(params, base_n, seed=2)
        Y = ps.samples[:, 0] ** 2 + ps.samples[:, 2]
        S = sobol_first_order(Y, 3, base_n)
        assert S[1] == 0.0


class TestVolume:
    def test_synthetic_peak_voxel(self):
        dims = GridDims(8, 8, 8)
        ps = saltelli_sample(SYNTHETIC_PARAMS, 512, seed=0)
        ens = generate_synthetic(SyntheticConfig(dims=dims, noise_max=0.0), ps)
        fs = sobol_volume(ens)
        v = dims.linear_index(7, 7, 7)
        assert abs(fs.field("P1")[v] - 1.0) < 0.05
        assert abs(fs.field("P2")[v]) < 0.05
        assert abs(fs.field("P3")[v]) < 0.05

    def test_noise_voxels_flagged_out_of_range(self):
        # outputs that are pure noise produce unstable variance attribution;
        # such voxels keep their values but carry the out-of-range flag
        dims = GridDims(4, 4, 1)
        base_n = 64
        ps = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=0)
        rng = np.random.default_rng(0)
        vols = rng.uniform(0, 0.01, (ps.n_runs, dims.voxel_count)).astype(np.float32)
        ens = Ensemble(dims, ps, vols)
        fs = sobol_volume(ens)
        assert fs.out_of_range_mask().any()
        flagged = fs.out_of_range_mask()
        vals = fs.fields[:, flagged]
        assert ((vals < 0) | (vals > 1)).any(axis=0).all()

    def test_one_voxel_ensemble(self):
        dims = GridDims(1, 1, 1)
        ps = saltelli_sample(SYNTHETIC_PARAMS, 16, seed=0)
        vols = ps.samples[:, [0]].astype(np.float32)
        ens = Ensemble(dims, ps, vols)
        fs = sobol_volume(ens)
        assert fs.fields.shape == (3, 1)

    def test_constant_voxel_inert(self):
        dims = GridDims(2, 1, 1)
        ps = saltelli_sample(SYNTHETIC_PARAMS, 8, seed=0)
        vols = np.zeros((ps.n_runs, 2), dtype=np.float32)
        vols[:, 1] = ps.samples[:, 0]
        fs = sobol_volume(Ensemble(dims, ps, vols))
        assert fs.flags[0] & FLAG_INERT
        assert fs.fields[:, 0].tolist() == [0.0, 0.0, 0.0]
        assert not (fs.flags[1] & FLAG_INERT)

    def test_requires_declared_layout(self):
        dims = GridDims(2, 1, 1)
        ps = ParameterSpace(SYNTHETIC_PARAMS, np.random.default_rng(0).random((40, 3)))
        ens = Ensemble(dims, ps, np.random.rand(40, 2).astype(np.float32))
        with pytest.raises(errors.NotSaltelliLayout):
            sobol_volume(ens)
        # explicit base_n overrides the missing declaration
        fs = sobol_volume(ens, base_n=8)
        assert fs.fields.shape == (3, 2)

    def test_volume_matches_scalar_path(self):
        dims = GridDims(3, 2, 1)
        base_n = 128
        ps = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=2)
        rng = np.random.default_rng(5)
        mix = rng.random((3, dims.voxel_count))
        vols = (ps.samples @ mix).astype(np.float32)
        ens = Ensemble(dims, ps, vols)
        fs = sobol_volume(ens)
        for v in range(dims.voxel_count):
            S = sobol_first_order(ens.volumes[:, v].astype(np.float64), 3, base_n)
            assert np.allclose(fs.fields[:, v], S, atol=1e-12)

    def test_permutation_equivariance(self):
        base_n = 64
        dims = GridDims(2, 2, 1)
        ps = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=3)
        rng = np.random.default_rng(9)
        mix = rng.random((3, dims.voxel_count))
        vols = ((ps.samples**2) @ mix).astype(np.float32)
        ens = Ensemble(dims, ps, vols)
        fs = sobol_volume(ens)

        perm = [2, 0, 1]
        # relabeling parameters permutes sample columns and the AB blocks
        cols = ps.samples[:, perm]
        n = 3
        blocks = [cols[:base_n], cols[base_n : 2 * base_n]]
        vol_blocks = [vols[:base_n], vols[base_n : 2 * base_n]]
        for j in range(n):
            src = perm[j]
            sl = slice((2 + src) * base_n, (3 + src) * base_n)
            blocks.append(cols[sl])
            vol_blocks.append(vols[sl])
        params_p = tuple(SYNTHETIC_PARAMS[i] for i in perm)
        ps_p = ParameterSpace(
            params_p,
            np.vstack(blocks),
            sampling=SamplingInfo("saltelli", base_n=base_n, seed=3),
        )
        ens_p = Ensemble(dims, ps_p, np.vstack(vol_blocks))
        fs_p = sobol_volume(ens_p)
        for j in range(n):
            assert np.allclose(fs_p.fields[j], fs.fields[perm[j]], atol=1e-12)
