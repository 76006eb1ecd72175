import io
import math
from dataclasses import replace

import numpy as np
import pytest

from framesim import fockops as fo
from framesim import frames as fr
from framesim import models, protocol, theory

TWO_PI = 2 * math.pi


def quick_config(P="1", kappa_hz=1e3, gamma_hz=10e3, switch_check=False):
    """Small, fast operating point for plumbing tests: g_OM/2pi = 200 kHz,
    n_target = 100, so the half swap lasts 1.25 us and dims stay small."""
    p = models.paper_params(kappa=kappa_hz, gamma=gamma_hz, g0=2e4)
    return protocol.ProtocolConfig(
        model=p,
        P=P,
        e1=200e6,
        t_ringup=protocol.ringup_time(100.0, 200e6),
        stepper=fr.StepperConfig(tau=2e-9, dt_safety=0.6, leak_tol=0.05),
        n_cav_dim=16,
        n_mech_dim=8,
        switch_check=switch_check,
    )


@pytest.fixture(scope="module")
def quick_transfer():
    cfg = quick_config()
    res = protocol.run_protocol(cfg)
    return cfg, res


class TestRingup:
    def test_undriven_alpha_stays_zero(self):
        cfg = quick_config()
        cfg = replace(cfg, e1=0.0, t_ringup=20e-9)
        st = protocol.run_ringup(cfg)
        assert abs(st.offsets["cavity"]) < 1e-10

    def test_qubit_free_lossless_quadratic_growth(self):
        # n(t_r) = (E t_r / 2)^2 exactly for the linear cavity
        p = models.ModelParams(
            omega_cav=5e9, omega_q=4.9e9, omega_m=1e6, g=0.0, g0=0.0,
            kappa=0.0, gamma=0.0,
        )
        cfg = protocol.ProtocolConfig(
            model=p, P="0", e1=100e6, t_ringup=40e-9,
            stepper=fr.StepperConfig(tau=2e-9), n_cav_dim=14, n_mech_dim=4,
        )
        st = protocol.run_ringup(cfg)
        expect = (TWO_PI * 100e6 * 40e-9 / 2) ** 2
        assert abs(st.offsets["cavity"]) ** 2 == pytest.approx(expect, rel=1e-9)

    def test_reaches_target(self, quick_transfer):
        cfg, res = quick_transfer
        assert res.n_cav_at_switch == pytest.approx(100.0, rel=0.05)


class TestSwitch:
    def test_switch_changes_schedule_not_state(self):
        cfg = quick_config()
        st = protocol.run_ringup(cfg)
        before = st.rho.entries.copy()
        offs = dict(st.offsets)
        e2 = protocol.switch_to_transfer(st, cfg)
        assert np.array_equal(st.rho.entries, before)
        assert st.offsets == offs
        assert e2 != 0

    def test_bare_cavity_amplitude_reduction(self):
        # g = g0 = 0: E2 = -2 Dc <a>
        p = models.ModelParams(
            omega_cav=5e9, omega_q=4.9e9, omega_m=1e6, g=0.0, g0=0.0,
            kappa=0.0, gamma=0.0,
        )
        cfg = protocol.ProtocolConfig(
            model=p, P="0", e1=100e6, t_ringup=40e-9,
            stepper=fr.StepperConfig(tau=2e-9), n_cav_dim=14, n_mech_dim=4,
            switch_check=False,
        )
        st = protocol.run_ringup(cfg)
        e2 = protocol.switch_to_transfer(st, cfg)
        alpha = st.offsets["cavity"]
        assert e2 == pytest.approx(-2 * 1e6 * alpha, rel=1e-6)

    def test_stationarity_check_passes_with_matched_drive(self):
        cfg = quick_config(switch_check=True)
        st = protocol.run_ringup(cfg)
        protocol.switch_to_transfer(st, cfg)  # should not raise

    def test_deliberate_failure_detected(self):
        # zeroed transfer amplitude -> |<a>| oscillates at Dc and the dry
        # run flags the misconfiguration
        cfg = quick_config(switch_check=True)
        st = protocol.run_ringup(cfg)
        with pytest.raises(protocol.MisconfiguredSwitchError):
            protocol._stationarity_dry_run(
                st, cfg, cfg.model.omega_cav - cfg.model.omega_m, 0.0
            )


class TestTransfer:
    def test_half_swap_duration(self, quick_transfer):
        cfg, res = quick_transfer
        g_om = cfg.model.g0 * math.sqrt(res.n_cav_at_switch)
        assert res.t_swap == pytest.approx(math.pi / (2 * TWO_PI * g_om), rel=1e-6)

    def test_excitation_curves_cross_mid_swap(self, quick_transfer):
        _, res = quick_transfer
        obs = res.observables
        nc = np.array(obs.n_cav_centered)
        nm = np.array(obs.n_mech_centered)
        k = int(np.argmin(np.abs(nc - nm)))
        mid = len(nc) / 2
        assert abs(k - mid) < 0.15 * len(nc)

    def test_excitation_conserved_lossless(self):
        # beam-splitter invariant of the linearized regime: needs the bare
        # cavity regime (n >> n_crit), where the qubit no longer trades
        # excitation with the centered state
        p = models.paper_params(kappa=0.0, gamma=0.0, g0=4e3)
        cfg = protocol.ProtocolConfig(
            model=p, P="1", e1=200e6,
            t_ringup=protocol.ringup_time(2500.0, 200e6),
            stepper=fr.StepperConfig(tau=2e-9, dt_safety=0.6, leak_tol=0.01),
            n_cav_dim=18, n_mech_dim=8, switch_check=False,
        )
        res = protocol.run_protocol(cfg)
        obs = res.observables
        tot = np.array(obs.n_cav_centered) + np.array(obs.n_mech_centered)
        ref = tot[0]
        assert np.abs(tot - ref).max() < 0.02 * ref

    def test_mech_receives_the_state(self, quick_transfer):
        _, res = quick_transfer
        assert res.observables.n_mech_centered[-1] > 0.8
        assert res.mech_fidelity > 0.6  # plumbing check; A6 asserts >= 0.9


class TestSweep:
    def test_single_point_matches_run(self, quick_transfer):
        cfg, res = quick_transfer
        rows = protocol.sweep(cfg, [protocol.SweepPoint(1e3, 10e3)], threads=1)
        assert rows[0]["error"] == ""
        assert rows[0]["mech_fidelity"] == pytest.approx(res.mech_fidelity, abs=1e-12)

    def test_errors_recorded_and_sweep_continues(self):
        cfg = quick_config()
        cfg = replace(cfg, n_cav_dim=6)  # guaranteed leakage failure
        rows = protocol.sweep(
            cfg, [protocol.SweepPoint(1e3, 10e3), protocol.SweepPoint(2e3, 10e3)],
            threads=1,
        )
        assert all(r["error"] != "" for r in rows)
        assert [r["index"] for r in rows] == [0, 1]

    def test_csv_deterministic(self, quick_transfer, tmp_path):
        cfg, _ = quick_transfer
        rows = protocol.sweep(cfg, [protocol.SweepPoint(1e3, 10e3)], threads=1)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        protocol.write_sweep_csv(str(p1), rows, ["x"])
        protocol.write_sweep_csv(str(p2), rows, ["x"])
        assert p1.read_bytes() == p2.read_bytes()

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("FRAMESIM_THREADS", "3")
        assert protocol.sweep_threads() == 3


class TestBenchmark:
    def test_safe_points_have_tiny_errors(self):
        rows = protocol.run_benchmark([50e6, 100e6], n_cav_dim=20, duration=30e-9)
        for r in rows:
            assert r.u < 10**-2.5
            assert r.r_eps < 1e-3
            assert r.r_disp < 1e-3

    def test_unsafe_point_flagged(self):
        rows = protocol.run_benchmark([1.2e9], n_cav_dim=20, duration=30e-9)
        assert rows[0].u > 10**-2.5

    def test_csv(self, tmp_path):
        rows = protocol.run_benchmark([50e6], n_cav_dim=12, duration=10e-9)
        path = tmp_path / "b.csv"
        protocol.write_benchmark_csv(str(path), rows, ["h"])
        text = path.read_text().splitlines()
        assert text[0] == "# h"
        assert text[1] == "e_c_hz,u,r_eps,r_disp"


class TestDisplacedJCExperiment:
    def test_dispersive_limit_phase_slope(self):
        # n_cav = 0, P = + : delta_phi slope = -chi0
        p = models.paper_params()
        series = protocol.run_displaced_jc_experiment(
            p, "+", 0.0, duration=0.4e-6, n_cav_dim=8, n_snapshots=12
        )
        chi_fit = series.fit_chi()
        assert chi_fit == pytest.approx(TWO_PI * (-250e3), rel=0.02)

    def test_squeeze_rate_at_moderate_n(self):
        p = models.paper_params()
        n_cav = 200.0  # 2 n_crit, the J peak
        series = protocol.run_displaced_jc_experiment(
            p, "0", n_cav, n_cav_dim=16, n_snapshots=12
        )
        s = models.derived_scales(p)
        j_fit = series.fit_j()
        j_th = abs(theory.j_of_n(n_cav, TWO_PI * s.chi0, s.n_crit))
        assert j_fit == pytest.approx(j_th, rel=0.05)

    def test_superposition_reuses_isotropic_trajectory(self):
        p = models.paper_params()
        ref = protocol.run_displaced_jc_experiment(
            p, "0", 25.0, duration=0.2e-6, n_cav_dim=14, n_snapshots=4
        )
        series = protocol.run_displaced_jc_experiment(
            p, "+", 25.0, duration=0.2e-6, n_cav_dim=14, n_snapshots=4,
            prescribed=ref.trajectory.increments(),
        )
        assert series.trajectory.alpha_final == pytest.approx(
            ref.trajectory.alpha_final, rel=1e-9
        )


class TestForcedJCExperiment:
    def test_oscillation_matches_analytic(self):
        p = models.paper_params()
        n_cav = 1e4
        s = models.derived_scales(p)
        period = theory.transfer_squeeze_period(
            n_cav, s.n_crit, TWO_PI * s.chi0, TWO_PI * p.omega_m
        )
        res = protocol.run_forced_jc_experiment(
            p, n_cav, duration=2.2 * period, n_cav_dim=10, stride=4
        )
        amp_th = abs(
            2 * theory.j_of_n(n_cav, TWO_PI * s.chi0, s.n_crit)
            / (TWO_PI * p.omega_m - theory.chi_of_n(n_cav, TWO_PI * s.chi0, s.n_crit))
        )
        assert res.oscillation_amplitude() == pytest.approx(amp_th, rel=0.1)

    def test_blockade_reporting(self):
        # a drive too weak to climb past the dispersive barrier stalls and
        # reports the maximum photon number reached
        p = models.ModelParams(
            omega_cav=5e9, omega_q=5e9 - 20e6, omega_m=1e6, g=5e6, g0=0.0,
            kappa=0.0, gamma=0.0,
        )  # n_crit = 4
        res = protocol.run_driven_jc_experiment(
            p, "0", e_c=1e6, n_targets=[400.0], n_cav_dim=16,
            max_duration=2e-6,
        )
        assert not res.reached_all
        assert res.max_n_reached < 400.0


class TestVariants:
    def test_run_variant_dispatch(self, quick_transfer):
        cfg, res = quick_transfer
        with pytest.raises(ValueError):
            protocol.run_variant("bogus", cfg)

    def test_transmon_quick_transfer(self):
        cfg = quick_config()
        cfg = replace(cfg, qubit_kind="transmon", transmon_dim=5,
                      transfer_duration=80e-9)
        res = protocol.run_protocol(cfg)
        assert res.transmon_excitation_max is not None
        assert res.transmon_excitation_max < 7.0

    def test_rabi_comparison_short(self):
        p = models.paper_params()
        res = protocol.run_rabi_comparison(
            p, n_cav=1e4, duration=50e-9, P_list=("1",), n_cav_dim=10,
            n_snapshots=5,
        )
        assert res.average_difference() < 0.05
        assert res.fidelity_jc["1"][-1] > 0.99


class TestObservableSeries:
    def test_csv_schema(self):
        s = protocol.ObservableSeries()
        s.append(1e-9, 1.0, 0.5, 1.01, 0.02, 0.99)
        buf = io.StringIO()
        s.to_csv(buf, ["meta"])
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "# meta"
        assert lines[1] == "t_ns,n_cav_centered,n_mech_centered,squeeze_ratio,delta_phi,fidelity"
        assert len(lines) == 3
