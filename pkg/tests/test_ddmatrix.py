import csv
import dataclasses

import numpy as np
import pytest

from oddmsquint import (
    KNOT,
    ChannelRealization,
    DdFrame,
    FrameConfig,
    InfeasibleConfigError,
    apply_rcp,
    apply_zp,
    build_G,
    dd_to_time,
    dense_matrix,
    derive_path,
    dump_kernel_csv,
    nmse,
    phase_phi,
    propagate_exact,
    propagate_taps,
    sync_offset_taps,
    tap_response,
    time_to_dd,
    vectorize,
    zp_range,
)

from helpers import (
    dirichlet_mag,
    make_cfg,
    max_isi_cross_term,
    random_offgrid_channel,
    rel_max_err,
)


def random_frame(cfg, rng):
    return DdFrame(rng.standard_normal((cfg.M, cfg.N))
                   + 1j * rng.standard_normal((cfg.M, cfg.N)))


def zp_compliant_frame(cfg, bounds, rng):
    m_min, m_max = bounds
    data = np.zeros((cfg.M, cfg.N), dtype=complex)
    data[m_min:m_max + 1] = (rng.standard_normal((m_max - m_min + 1, cfg.N))
                             + 1j * rng.standard_normal((m_max - m_min + 1, cfg.N)))
    return DdFrame(data)


class TestPhasePhi:
    def test_values(self):
        cfg = make_cfg(M=32, N=8)
        assert phase_phi(3, 5, cfg) == 1
        assert phase_phi(-1, 0, cfg) == 1
        for n in range(8):
            val = phase_phi(-2, n, cfg)
            assert val == pytest.approx(np.exp(-2j * np.pi * n / 8), rel=1e-15)
            assert abs(val) == pytest.approx(1.0, rel=1e-15)

    def test_range_checked(self):
        cfg = make_cfg(M=32, N=8)
        phase_phi(31, 0, cfg)
        phase_phi(-31, 0, cfg)
        for bad in (32, -32):
            with pytest.raises(ValueError, match="m'"):
                phase_phi(bad, 0, cfg)


class TestBuildG:
    def test_on_grid_static_path_is_a_point(self):
        cfg = make_cfg(M=32, N=8, Q=3)
        d = cfg.Q + 2
        h = 0.6 + 0.3j
        p = derive_path(h, d * cfg.Ts, 0.0, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, 0.0, cfg)
        G = build_G(ch, cfg, dse=False).G
        assert G[d, 0, 0] == pytest.approx(h, rel=1e-13)
        mask = np.ones_like(G, dtype=bool)
        mask[d, :, 0] = False
        assert np.max(np.abs(G[mask])) < 1e-13
        assert np.max(np.abs(G[d, :, 0] - h)) < 1e-13

    def test_off_grid_doppler_gives_dirichlet_profile(self):
        cfg = FrameConfig(M=128, N=32, f_s=5e3, f_c=12.5e3, Q=8, beta=0.65)
        v = 1 * KNOT
        sync = sync_offset_taps(v, 1500.0, cfg)
        d = sync + 5  # integer delay tap
        p = derive_path(1.0, d * cfg.Ts, v, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, v, cfg)
        G = build_G(ch, cfg, dse=False).G
        k = np.arange(cfg.N)
        want = dirichlet_mag(k - p.k, cfg.N)
        for m in (0, 17, cfg.M - 1):
            assert np.allclose(np.abs(G[d, m, :]), want, atol=1e-12)
        # magnitude independent of the delay bin
        assert np.max(np.abs(np.abs(G[d]) - want[None, :])) < 1e-12

    def test_squint_kernel_matches_tap_route(self, rng):
        cfg = make_cfg(M=48, N=8, Q=5, beta=0.3)
        ch = random_offgrid_channel(cfg, seed=21)
        X = random_frame(cfg, rng)
        H = build_G(ch, cfg, dse=True)
        got = apply_rcp(H, X)
        want = time_to_dd(propagate_taps(dd_to_time(X, cfg),
                                         tap_response(ch, cfg), cfg), cfg)
        assert rel_max_err(got.data, want.data) < 1e-12

    def test_baseline_resync_shifts_delays(self):
        cfg = FrameConfig(M=128, N=32, f_s=5e3, f_c=12.5e3, Q=8, beta=0.65)
        v = 1 * KNOT
        sync = sync_offset_taps(v, 1500.0, cfg)
        drift_floor = sync - cfg.Q
        assert drift_floor >= 1
        p = derive_path(1.0, (sync + 2.0) * cfg.Ts, v, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, v, cfg)
        kept = build_G(ch, cfg, dse=False, baseline_sync="keep").G
        dropped = build_G(ch, cfg, dse=False, baseline_sync="drop").G
        # dropping the drift allowance moves the kernel down in delay
        assert rel_max_err(dropped[:-drift_floor], kept[drift_floor:]) < 1e-12
        with pytest.raises(ValueError, match="baseline_sync"):
            build_G(ch, cfg, dse=False, baseline_sync="maybe")


class TestApplyRcp:
    def test_identity_like_channel(self, rng):
        cfg = make_cfg(M=32, N=8, Q=3)
        p = derive_path(1.0, 0.0, 0.0, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, 0.0, cfg)
        X = random_frame(cfg, rng)
        Y = apply_rcp(build_G(ch, cfg, dse=True), X)
        assert rel_max_err(Y.data, X.data) < 1e-12

    @pytest.mark.parametrize("seed", [0, 1])
    def test_matches_end_to_end_chain(self, seed):
        rng = np.random.default_rng(300 + seed)
        cfg = make_cfg(M=48, N=8, Q=5, beta=0.3)
        ch = random_offgrid_channel(cfg, seed=seed)
        X = random_frame(cfg, rng)
        want = time_to_dd(propagate_exact(dd_to_time(X, cfg), ch, cfg), cfg)
        got = apply_rcp(build_G(ch, cfg, dse=True), X)
        assert rel_max_err(got.data, want.data) < 1e-9

    def test_mode_and_shape_checked(self, rng):
        cfg = make_cfg(M=32, N=8, Q=3, prefix_mode="ZP")
        ch = random_offgrid_channel(cfg, seed=2)
        H = build_G(ch, cfg)
        with pytest.raises(ValueError, match="mode"):
            apply_rcp(H, random_frame(cfg, rng))

    def test_dense_matrix_equivalence(self, rng):
        cfg = make_cfg(M=16, N=8, Q=1, beta=0.4)
        ch = random_offgrid_channel(cfg, seed=4)
        H = build_G(ch, cfg, dse=True)
        X = random_frame(cfg, rng)
        dense = dense_matrix(H)
        want = dense @ vectorize(X)
        got = vectorize(apply_rcp(H, X))
        assert rel_max_err(got, want) < 1e-12

    def test_dense_matrix_refuses_large_frames(self):
        cfg = FrameConfig(M=1024, N=64, f_s=15.36e6, f_c=5e9, Q=8, beta=0.1)
        ch = random_offgrid_channel(cfg, c=3e8, seed=0)
        H = build_G(ch, cfg, dse=False)
        with pytest.raises(ValueError, match="dense"):
            dense_matrix(H)


class TestZpRange:
    def test_narrowband_limit(self):
        cfg = make_cfg(M=64, N=8, Q=3)
        p = derive_path(1.0, (cfg.Q + 4) * cfg.Ts, 0.0, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, 0.0, cfg)
        m_min, m_max = zp_range(ch, cfg)
        assert m_min == 0
        assert m_max == cfg.M - cfg.Q - ch.l_max

    def test_underwater_single_path(self):
        cfg = FrameConfig(M=128, N=32, f_s=5e3, f_c=12.5e3, Q=8, beta=0.65)
        v = 1 * KNOT
        sync = sync_offset_taps(v, 1500.0, cfg)
        p = derive_path(1.0, (sync + 7.5) * cfg.Ts, v, 1500.0, cfg)
        ch = ChannelRealization.from_paths([p], 1500.0, v, cfg)
        assert zp_range(ch, cfg) == (0, 101)

    def test_rf_sub_tap_drift(self):
        cfg = FrameConfig(M=1024, N=64, f_s=15.36e6, f_c=5e9, Q=8, beta=0.1)
        v = 750 / 3.6
        sync = sync_offset_taps(v, 3e8, cfg)
        p = derive_path(1.0, (sync + 4) * cfg.Ts, v, 3e8, cfg)
        ch = ChannelRealization.from_paths([p], 3e8, v, cfg)
        drift = (v / 3e8) * (cfg.N - 1) * cfg.M
        assert drift < 1
        m_min, m_max = zp_range(ch, cfg)
        assert m_min == 0
        # the narrowband guard boundary sits exactly on an integer, so even
        # a sub-tap drift clips one more symbol off the usable range
        assert m_max == cfg.M - cfg.Q - ch.l_max - 1

    def test_frame_too_short(self):
        # unsynchronized early path plus a late one: the guard needed at the
        # head and tail together exceeds the frame
        cfg = make_cfg(M=32, N=8, Q=3)
        c = 1500.0
        b = 0.01786
        early = derive_path(1.0, 1.5 * cfg.Ts, b * c, c, cfg)
        late = derive_path(1.0, 21.5 * cfg.Ts, b * c, c, cfg)
        ch = ChannelRealization.from_paths([early, late], c, b * c, cfg)
        with pytest.raises(InfeasibleConfigError, match="too short"):
            zp_range(ch, cfg)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_no_isi_inside_the_bounds(self, seed):
        cfg = make_cfg(M=48, N=8, Q=3, beta=0.4, prefix_mode="ZP")
        ch = random_offgrid_channel(cfg, seed=seed)
        m_min, m_max = zp_range(ch, cfg)
        assert max_isi_cross_term(ch, cfg, m_min, m_max) == 0.0


class TestApplyZp:
    def test_equals_cyclic_form_on_compliant_frames(self, rng):
        cfg = make_cfg(M=48, N=8, Q=5, beta=0.3, prefix_mode="ZP")
        cfg_rcp = dataclasses.replace(cfg, prefix_mode="RCP")
        ch = random_offgrid_channel(cfg, seed=11)
        H_zp = build_G(ch, cfg, dse=True)
        H_rcp = build_G(ch, cfg_rcp, dse=True)
        X = zp_compliant_frame(cfg, H_zp.zp_bounds, rng)
        got = apply_zp(H_zp, X)
        want = apply_rcp(H_rcp, X)
        assert rel_max_err(got.data, want.data) < 1e-12

    def test_on_grid_narrowband_path_shifts(self, rng):
        cfg = make_cfg(M=64, N=8, Q=3, prefix_mode="ZP")
        d = cfg.Q + 2
        k = 3
        nu = k / (cfg.N * cfg.M * cfg.Ts)
        # static path carrying an integer Doppler bin: emulate with the
        # frozen-pulse kernel of a moving path whose k lands on the grid
        v = nu / cfg.f_c * 1500.0
        p = derive_path(0.9, d * cfg.Ts, v, 1500.0, cfg)
        assert p.k == pytest.approx(k, rel=1e-12)
        ch = ChannelRealization.from_paths([p], 1500.0, v, cfg)
        H = build_G(ch, cfg, dse=False)
        X = zp_compliant_frame(cfg, H.zp_bounds, rng)
        Y = apply_zp(H, X)
        # shift delay by d, Doppler by k (cyclic), scale by gain and m-phase
        phase = np.exp(2j * np.pi * p.k * np.arange(cfg.M) / (cfg.N * cfg.M))
        rolled = np.zeros_like(X.data)
        rolled[d:, :] = np.roll(X.data, k, axis=1)[:-d, :]
        expected = 0.9 * phase[:, None] * rolled
        assert rel_max_err(Y.data, expected) < 1e-12

    def test_support_violation_rejected(self, rng):
        cfg = make_cfg(M=48, N=8, Q=5, beta=0.3, prefix_mode="ZP")
        ch = random_offgrid_channel(cfg, seed=11)
        H = build_G(ch, cfg, dse=True)
        data = np.zeros((cfg.M, cfg.N), dtype=complex)
        data[H.zp_bounds[1] + 1, 0] = 1.0
        with pytest.raises(ValueError, match="ZP support"):
            apply_zp(H, DdFrame(data))

    def test_mode_checked(self, rng):
        cfg = make_cfg(M=32, N=8, Q=3)
        ch = random_offgrid_channel(cfg, seed=2)
        with pytest.raises(ValueError, match="mode"):
            apply_zp(build_G(ch, cfg), random_frame(cfg, rng))


class TestNmse:
    def test_identical_matrices(self):
        cfg = make_cfg(M=32, N=8, Q=3)
        ch = random_offgrid_channel(cfg, seed=6)
        H = build_G(ch, cfg, dse=True)
        assert nmse(H, H) == 0.0

    def test_zero_estimate(self):
        cfg = make_cfg(M=32, N=8, Q=3)
        ch = random_offgrid_channel(cfg, seed=6)
        H = build_G(ch, cfg, dse=True)
        H0 = dataclasses.replace(H, G=np.zeros_like(H.G))
        assert nmse(H, H0) == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(ValueError, match="zero norm"):
            nmse(H0, H)

    def test_banded_identity_matches_dense_frobenius(self):
        cfg = make_cfg(M=16, N=8, Q=1, beta=0.4)
        ch = random_offgrid_channel(cfg, seed=13)
        H = build_G(ch, cfg, dse=True)
        H_hat = build_G(ch, cfg, dse=False)
        banded = nmse(H, H_hat)
        Hd = dense_matrix(H)
        Hd_hat = dense_matrix(H_hat)
        dense = (np.linalg.norm(Hd - Hd_hat, "fro") ** 2
                 / np.linalg.norm(Hd, "fro") ** 2)
        assert abs(banded - dense) / dense < 1e-12

    def test_mismatched_inputs_rejected(self):
        cfg = make_cfg(M=32, N=8, Q=3)
        cfg_zp = dataclasses.replace(cfg, prefix_mode="ZP")
        ch = random_offgrid_channel(cfg, seed=6)
        H = build_G(ch, cfg, dse=True)
        with pytest.raises(ValueError, match="modes differ"):
            nmse(H, build_G(ch, cfg_zp, dse=True))


class TestSparsity:
    def test_squint_destroys_on_grid_sparsity(self):
        # perfectly on-grid channel, but a scaling drift of a tap or more:
        # far more kernel values light up than there are paths
        cfg = make_cfg(M=128, N=16, Q=8, f_s=5e3, f_c=12.5e3, beta=0.65)
        NM = cfg.N * cfg.M
        k1, k2 = 4, -3
        paths = []
        v_abs = []
        for k, d_extra in ((k1, 2), (k2, 5)):
            nu = k / (NM * cfg.Ts)
            v = nu / cfg.f_c * 1500.0
            v_abs.append(abs(v))
        v_max = max(v_abs)
        sync = sync_offset_taps(v_max, 1500.0, cfg)
        for k, d_extra in ((k1, 2), (k2, 5)):
            nu = k / (NM * cfg.Ts)
            v = nu / cfg.f_c * 1500.0
            paths.append(derive_path(1.0, (sync + d_extra) * cfg.Ts, v, 1500.0, cfg))
        ch = ChannelRealization.from_paths(paths, 1500.0, v_max, cfg)
        assert ch.b_max * NM >= 1
        for p in ch.paths:
            assert p.l == pytest.approx(round(p.l), abs=1e-9)
            assert p.k == pytest.approx(round(p.k), abs=1e-9)
        def occupied_cells(G):
            # distinct (delay tap, Doppler bin) positions above threshold
            peak = np.abs(G).max(axis=1)
            return int(np.sum(peak > 1e-6 * peak.max()))

        G = build_G(ch, cfg, dse=True).G
        assert occupied_cells(G) > ch.P
        # the squint-ignorant kernel keeps the per-path point sparsity
        G_hat = build_G(ch, cfg, dse=False).G
        assert occupied_cells(G_hat) == ch.P


class TestKernelDump:
    def test_csv_round_trip(self, tmp_path):
        cfg = make_cfg(M=32, N=8, Q=3)
        ch = random_offgrid_channel(cfg, seed=8)
        H = build_G(ch, cfg, dse=True)
        path = tmp_path / "kernel.csv"
        dump_kernel_csv(H, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0]) == {"l", "m", "k", "re", "im", "mag_db"}
        nz = np.nonzero(H.G)
        assert len(rows) == len(nz[0])
        r0 = rows[0]
        val = H.G[int(r0["l"]), int(r0["m"]), int(r0["k"])]
        assert float(r0["re"]) == pytest.approx(val.real, rel=1e-9)
        assert float(r0["im"]) == pytest.approx(val.imag, rel=1e-9)
        assert max(float(r["mag_db"]) for r in rows) == pytest.approx(0.0, abs=1e-6)
