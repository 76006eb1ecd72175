import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framesim import fockops as fo
from framesim import models, theory

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def p():
    return models.paper_params()


class TestDerivedScales:
    def test_reference_values(self, p):
        s = models.derived_scales(p)
        assert s.delta == -100e6
        assert abs(s.chi0 + 250e3) < 1e-9
        assert abs(s.n_crit - 100.0) < 1e-12

    def test_consistency_identity(self, p):
        s = models.derived_scales(p, alpha_cav=25.0)
        assert abs(s.chi0 * s.delta - p.g**2) < 1e-3
        assert s.g_om == pytest.approx(p.g0 * 25.0)


class TestDressedParams:
    def test_zero_amplitude(self, p):
        d = models.dressed_params(p, 0.0, p.omega_cav)
        assert d.theta == 0.0
        assert d.g_1 == p.g
        assert d.g_2 == 0.0
        assert d.g_z == 0.0
        assert d.delta_tilde == pytest.approx(100e6)

    def test_reference_angle(self, p):
        # g/2pi = 5 MHz, Dq/2pi = -100 MHz, alpha = 10 -> theta = -pi/4
        d = models.dressed_params(p, 10.0, p.omega_cav)
        assert d.theta == pytest.approx(-math.pi / 4)

    def test_delta_tilde_at_ncrit(self, p):
        # 4 g^2 n_crit = Delta^2 -> tilde = |Delta| sqrt(2)
        d = models.dressed_params(p, 10.0, p.omega_cav)
        assert d.delta_tilde == pytest.approx(100e6 * math.sqrt(2))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 400.0))
    def test_identities(self, alpha):
        p = models.paper_params()
        d = models.dressed_params(p, alpha, p.omega_cav)
        assert d.g_1 + d.g_2 == pytest.approx(p.g, rel=1e-12)
        assert d.g_1 * d.g_2 == pytest.approx(d.g_z**2 / 4, abs=1e-9 * p.g**2)
        assert d.g_1 - d.g_2 == pytest.approx(p.g * math.cos(d.theta), rel=1e-12)

    def test_continuity_from_zero(self, p):
        thetas = [models.dressed_params(p, a, p.omega_cav).theta for a in np.linspace(0, 50, 200)]
        diffs = np.abs(np.diff(thetas))
        assert diffs.max() < 0.1  # no branch jumps

    def test_rejects_complex_amplitude(self, p):
        with pytest.raises(ValueError):
            models.dressed_params(p, 1.0j, p.omega_cav)


class TestHybridHamiltonian:
    layout = fo.HilbertLayout.of(("cavity", 5), ("qubit", 2), ("mech", 4))

    def test_uncoupled_limit(self):
        p = models.ModelParams(
            omega_cav=5e9, omega_q=4.9e9, omega_m=1e6, g=0, g0=0, kappa=0, gamma=0
        )
        h = models.hybrid_hamiltonian(p, 5e9 - 1e8, 0.0, self.layout)
        # diagonal: Dc n_c + Dq sz/2 + Om n_m (trace part removed)
        m = h.toarray()
        off = m - np.diag(np.diag(m))
        assert np.abs(off).max() < 1e-6

    @settings(max_examples=20, deadline=None)
    @given(st.complex_numbers(max_magnitude=1e9, allow_nan=False, allow_infinity=False))
    def test_hermitian_for_random_drive(self, e_c):
        p = models.paper_params(g0=100.0)
        h = models.hybrid_hamiltonian(p, p.omega_cav, e_c, self.layout)
        assert fo.hermiticity_defect(h.m) < 1e-12 * max(h.max_abs(), 1.0)

    def test_displaced_equals_dense_conjugation(self, p):
        # small space: substitution == D^dag H D within truncation tolerance
        lay = fo.HilbertLayout.of(("cavity", 12), ("qubit", 2), ("mech", 8))
        alpha, beta = 0.4 - 0.2j, 0.3 + 0.1j
        p2 = models.paper_params(g0=1e5)
        h0 = models.hybrid_hamiltonian(p2, p2.omega_cav - 1e6, 50e6, lay)
        h_sub = models.hybrid_hamiltonian(p2, p2.omega_cav - 1e6, 50e6, lay, alpha, beta)
        da = fo.displacement(alpha, 12, "cavity").toarray()
        db = fo.displacement(beta, 8, "mech").toarray()
        ents = fo.conjugate_factor(h0.toarray(), da.conj().T, lay, "cavity")
        ents = fo.conjugate_factor(ents, db.conj().T, lay, "mech")
        # compare the low-excitation block of every factor (truncation
        # corrupts the edges); remove the constant the builder dropped
        idxs = np.arange(lay.dim)
        cav = idxs // 16
        mech = idxs % 8
        sel = np.where((cav < 4) & (mech < 3))[0]
        blk = np.ix_(sel, sel)
        sub = h_sub.toarray()
        diffc = ents[blk] - sub[blk]
        c = np.trace(diffc) / len(sel)
        assert np.abs(diffc - c * np.eye(len(sel))).max() < 2e-6 * np.abs(sub).max()


class TestDisplacedJC:
    def test_alpha_zero_reduces_to_jc_rotated(self, p):
        lay = fo.HilbertLayout.of(("cavity", 6), ("qubit", 2))
        h = models.displaced_jc_hamiltonian(p, 0.0, lay)
        # theta = 0: -Dt sz/2 + g (a+ s- + a s+), Dt = |Delta| (Delta < 0)
        a = fo.embedded_ladder(lay, "cavity").m
        sm = fo.embedded_pauli(lay, "minus").m
        sz = fo.embedded_pauli(lay, "z").m
        expect = (
            -0.5 * TWO_PI * 100e6 * sz
            + TWO_PI * 5e6 * (a.conjugate().transpose() @ sm + (a.conjugate().transpose() @ sm).conjugate().transpose())
        )
        assert np.abs((h.m - expect).toarray()).max() < 1e-3

    def test_unitary_equivalence_of_spectra(self, p):
        # rotated-displaced form vs directly displaced JC: same spectrum
        # (dense diagonalization oracle on a small truncation)
        dim = 12
        lay = fo.HilbertLayout.of(("cavity", dim), ("qubit", 2))
        alpha = 0.8  # small so the displaced form is exact in the truncation
        h_rd = models.displaced_jc_hamiltonian(p, alpha, lay).toarray()
        # Eq. 15 route: displace the plain JC Hamiltonian by substitution
        h_d = models.jc_hamiltonian(p, p.omega_cav, 0.0, lay, alpha=alpha).toarray()
        ev_rd = np.linalg.eigvalsh(h_rd)
        ev_d = np.linalg.eigvalsh(h_d)
        # exact unitary equivalence at any truncation (the rotation acts on
        # the qubit factor only); spectra match to 1e-8 g after removing the
        # dropped constants
        g_ang = TWO_PI * p.g
        shift = (ev_rd - ev_d).mean()
        assert np.abs(ev_rd - ev_d - shift).max() < 1e-8 * g_ang

    def test_dressed_ground_state_stationary(self, p):
        lay = fo.HilbertLayout.of(("cavity", 6), ("qubit", 2))
        h = models.displaced_jc_hamiltonian(p, 5.0, lay)
        psi = models.initial_state("0", lay)
        # qubit-only part: |g> is an eigenstate of -Dt sz/2 -> stationary
        # under the qubit Hamiltonian; the full H couples it only at O(g)
        sz = fo.embedded_pauli(lay, "z").m
        val = complex(np.sum((sz @ psi.entries).diagonal()))
        assert val.real == pytest.approx(-1.0, abs=1e-12)


class TestInitialStates:
    def test_vacuum_product(self):
        lay = fo.HilbertLayout.of(("cavity", 4), ("qubit", 2), ("mech", 3))
        rho = models.initial_state("0", lay)
        v = np.zeros(24)
        v[0 * 6 + 1 * 3 + 0] = 1.0  # cavity 0, qubit |g> (index 1), mech 0
        assert np.abs(rho.entries - np.outer(v, v)).max() < 1e-14

    def test_plus_coherence(self):
        lay = fo.HilbertLayout.of(("cavity", 6), ("qubit", 2))
        rho = models.initial_state("+", lay)
        a = fo.embedded_ladder(lay, "cavity")
        assert a.expect(rho) == pytest.approx(0.5)

    def test_six_states_normalized_and_orthogonal(self):
        vecs = {P: models.cavity_init_vector(P, 8) for P in models.PAULI_SIX}
        for P, v in vecs.items():
            assert np.linalg.norm(v) == pytest.approx(1.0)
        assert abs(np.vdot(vecs["+"], vecs["-"])) < 1e-14
        assert abs(np.vdot(vecs["+i"], vecs["-i"])) < 1e-14
        assert abs(np.vdot(vecs["0"], vecs["1"])) < 1e-14

    def test_unknown_label(self):
        with pytest.raises(fo.UnknownLabelError):
            models.cavity_init_vector("2", 8)


class TestOffResonantCoefficients:
    def test_cancellation_condition(self, p):
        omega_d = p.omega_cav - p.omega_m
        alpha = 100.0
        e2 = models.forced_oscillation_amplitude(p, alpha, omega_d)
        _, _, net = models.off_resonant_effective_hamiltonian(p, alpha, omega_d, e2)
        assert abs(net) < 1e-9 * abs(p.omega_m * alpha)

    def test_matches_theory_coefficients(self, p):
        omega_d = p.omega_cav - p.omega_m
        alpha = 50.0
        det, sq, _ = models.off_resonant_effective_hamiltonian(p, alpha, omega_d, 0.0)
        s = models.derived_scales(p)
        assert det == pytest.approx(
            p.omega_m - theory.chi_of_n(2500, s.chi0, s.n_crit), rel=1e-12
        )
        assert sq == pytest.approx(-theory.j_of_n(2500, s.chi0, s.n_crit), rel=1e-12)

    def test_bare_limit(self, p):
        omega_d = p.omega_cav - p.omega_m
        det, sq, _ = models.off_resonant_effective_hamiltonian(p, 1e4, omega_d, 0.0)
        s = models.derived_scales(p)
        assert abs(det - p.omega_m) < 2e-3 * abs(s.chi0)
        assert abs(sq) < 2e-3 * abs(s.chi0)


class TestTransferDrive:
    def test_bare_cavity_reduction(self):
        p = models.ModelParams(
            omega_cav=5e9, omega_q=4.9e9, omega_m=1e6, g=0, g0=0, kappa=0, gamma=0
        )
        omega_d = p.omega_cav - p.omega_m
        snap = models.TransferSnapshot(mean_a=3 - 1j, mean_b=0, mean_sigma_minus=0)
        e2 = models.transfer_drive_amplitude(snap, p, omega_d)
        assert e2 == pytest.approx(-2 * 1e6 * (3 - 1j))

    def test_matches_analytic_condition_in_dressed_state(self, p):
        # g <sigma_-> evaluated in R_y(theta/2)|g> equals -g_z/2
        omega_d = p.omega_cav - p.omega_m
        alpha = 70.0
        d = models.dressed_params(p, alpha, omega_d)
        q = models.ground_qubit_vector(d.theta)
        sm = fo.pauli("minus").toarray()
        mean_sm = complex(np.vdot(q, sm @ q))
        assert mean_sm.real == pytest.approx(-math.sin(d.theta) / 2, rel=1e-12)
        snap = models.TransferSnapshot(mean_a=alpha, mean_b=0, mean_sigma_minus=mean_sm)
        e2 = models.transfer_drive_amplitude(snap, p, omega_d)
        analytic = models.forced_oscillation_amplitude(p, alpha, omega_d)
        assert e2 == pytest.approx(analytic, rel=1e-12)


class TestRabi:
    lay = fo.HilbertLayout.of(("cavity", 6), ("qubit", 2))

    def test_t0_form(self, p):
        h = models.rabi_hamiltonian(p, 0.0, self.lay)
        a = fo.embedded_ladder(self.lay, "cavity").m
        sm = fo.embedded_pauli(self.lay, "minus").m
        sp_ = sm.conjugate().transpose()
        sz = fo.embedded_pauli(self.lay, "z").m
        ad = a.conjugate().transpose()
        expect = (
            0.5 * TWO_PI * (-100e6) * sz
            + TWO_PI * 5e6 * (ad @ sm + a @ sp_)
            + TWO_PI * 5e6 * (ad @ sp_ + a @ sm)
        )
        assert np.abs((h.m - expect).toarray()).max() < 1e-3

    def test_hermitian_at_random_times(self, p):
        td = models.rabi_hamiltonian_parts(p, self.lay)
        for t in (0.0, 1.37e-10, 7.7e-9):
            h = td(t)
            assert fo.hermiticity_defect(h.m) < 1e-12 * h.max_abs()

    def test_counter_rotating_time_average(self, p):
        td = models.rabi_hamiltonian_parts(p, self.lay)
        period = 1.0 / (2 * p.omega_cav)
        static = td(0.0).toarray() * 0.0
        n = 64
        for k in range(n):
            static += td(k * period / n).toarray() / n
        h_jc = models.jc_hamiltonian(p, p.omega_cav, 0.0, self.lay).toarray()
        assert np.abs(static - h_jc).max() < 1e-6 * np.abs(h_jc).max()


class TestTransmon:
    def test_harmonic_limit_beam_splitter(self):
        # K = 0 at resonance: pure beam splitter, single-excitation
        # eigenvalues are exactly +-g
        p = models.ModelParams(
            omega_cav=5e9, omega_q=5e9, omega_m=1e6, g=5e6, g0=0, kappa=0, gamma=0
        )
        lay = fo.HilbertLayout.of(("cavity", 4), ("transmon", 4))
        h = models.transmon_jc_hamiltonian(p, 0.0, 5e9, 0.0, lay)
        ev = np.linalg.eigvalsh(h.toarray())
        g_ang = TWO_PI * 5e6
        assert abs(ev - g_ang).min() < 1e-3
        assert abs(ev + g_ang).min() < 1e-3

    def test_large_anharmonicity_matches_two_level(self, p):
        # K/2pi = 10 GHz freezes the transmon to its lowest two levels
        lay_t = fo.HilbertLayout.of(("cavity", 6), ("transmon", 5), ("mech", 2))
        lay_q = fo.HilbertLayout.of(("cavity", 6), ("qubit", 2), ("mech", 2))
        p2 = models.paper_params(g0=100.0)
        from framesim.lindblad import IntegratorConfig, integrate

        h_t = models.transmon_hamiltonian(p2, 10e9, p2.omega_cav, 20e6, lay_t)
        h_q = models.hybrid_hamiltonian(p2, p2.omega_cav, 20e6, lay_q)
        rho_t = models.initial_state("0", lay_t)
        rho_q = models.initial_state("0", lay_q)
        span = 20e-9
        cfg = IntegratorConfig(2e-12)
        out_t = integrate(rho_t, h_t, [], span, cfg)
        out_q = integrate(rho_q, h_q, [], span, cfg)
        n_t = fo.embedded_ladder(lay_t, "cavity").dag() @ fo.embedded_ladder(lay_t, "cavity")
        n_q = fo.embedded_ladder(lay_q, "cavity").dag() @ fo.embedded_ladder(lay_q, "cavity")
        # photon numbers agree once the transmon {0,1} block dominates
        assert n_t.expect(out_t).real == pytest.approx(n_q.expect(out_q).real, abs=2e-3)

    def test_transmon_sign_convention(self):
        # Kerr term lowers the ladder: eigenvalue of |2> is 2 Dq - K
        p = models.ModelParams(
            omega_cav=6e9, omega_q=5e9, omega_m=1e6, g=0, g0=0, kappa=0, gamma=0
        )
        lay = fo.HilbertLayout.of(("cavity", 2), ("transmon", 4), ("mech", 2))
        k_anh = 200e6
        h = models.transmon_jc_hamiltonian(
            p, k_anh, 5.5e9, 0.0, fo.HilbertLayout.of(("cavity", 2), ("transmon", 4))
        )
        m = h.toarray()
        # transmon-only diagonal: n Dq - K/2 n(n-1) (+ const from _drop_identity)
        dq = TWO_PI * -0.5e9
        k = TWO_PI * k_anh
        d0 = m[0, 0]
        d2 = m[2, 2]  # (cavity 0, transmon 2)
        assert (d2 - d0) == pytest.approx(2 * dq - k, rel=1e-12)


class TestConfigValidation:
    def test_round_trip(self, p):
        p2 = models.ModelParams(
            omega_cav=5e9, omega_q=4.9e9, omega_m=1e6, g=5e6, g0=100.0,
            kappa=1e3, gamma=1e4,
            drive=models.DriveSchedule.constant(200e6 + 1e6j, 5e9, 1e-6),
        )
        doc = models.model_config_dict(p2)
        back, errors = models.validate_model_config(doc)
        assert not errors
        assert back == p2

    def test_negative_kappa_rejected(self, p):
        doc = models.model_config_dict(p)
        doc["kappa_hz"] = -1.0
        params, errors = models.validate_model_config(doc)
        assert params is None
        assert any("kappa_hz" in e for e in errors)

    def test_unknown_key_rejected(self, p):
        doc = models.model_config_dict(p)
        doc["omega_cavity_hz"] = 1.0
        params, errors = models.validate_model_config(doc)
        assert params is None
        assert any("omega_cavity_hz" in e and "unknown" in e for e in errors)

    def test_missing_field_named(self, p):
        doc = models.model_config_dict(p)
        del doc["g_hz"]
        params, errors = models.validate_model_config(doc)
        assert params is None
        assert any(e.startswith("model.g_hz: missing") for e in errors)

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            models.DriveSegment(1e-6, 0.5e-6, 5e9, 1.0)
        with pytest.raises(ValueError):
            models.DriveSchedule(
                (
                    models.DriveSegment(0, 1e-6, 5e9, 1.0),
                    models.DriveSegment(2e-6, 3e-6, 5e9, 1.0),
                )
            )
