import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from framesim import analysis as an
from framesim import fockops as fo
from framesim import models

SQ2 = math.sqrt(2)


def pure(dim, vec, label="cavity"):
    return fo.DensityMatrix.from_pure(fo.single_mode_layout(dim, label), np.asarray(vec, complex))


def fock(dim, n, label="cavity"):
    return pure(dim, fo.basis_state(dim, n), label)


class TestCoherentAmplitudes:
    def test_vacuum(self):
        lay = fo.HilbertLayout.of(("cavity", 5), ("mech", 4))
        rho = fo.DensityMatrix.from_pure(
            lay, fo.kron_state(fo.basis_state(5, 0), fo.basis_state(4, 0))
        )
        a, b = an.coherent_amplitudes(rho)
        assert a == 0 and b == 0

    def test_coherent_state(self):
        alpha = 1 + 2j
        dim = 40
        vec = fo.displacement(alpha, dim).toarray() @ fo.basis_state(dim, 0)
        rho = pure(dim, vec)
        a, _ = an.coherent_amplitudes(rho)
        assert abs(a - alpha) < 1e-6

    def test_single_photon(self):
        a, _ = an.coherent_amplitudes(fock(10, 1))
        assert abs(a) < 1e-14


class TestSqueezeExtract:
    def test_vacuum(self):
        est = an.squeeze_extract(fock(10, 0))
        assert est.r == 0.0
        assert est.ratio == pytest.approx(1.0)

    def test_squeezed_vacuum(self):
        xi = 0.2
        dim = 40
        vec = fo.squeeze(xi, dim).toarray() @ fo.basis_state(dim, 0)
        est = an.squeeze_extract(pure(dim, vec))
        assert est.r == pytest.approx(0.2, abs=1e-6)
        assert est.theta == pytest.approx(0.0, abs=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 0.5), st.floats(-math.pi, math.pi))
    def test_round_trip(self, r, phi):
        xi = r * np.exp(1j * phi)
        dim = 40
        vec = fo.squeeze(xi, dim).toarray() @ fo.basis_state(dim, 0)
        est = an.squeeze_extract(pure(dim, vec))
        assert abs(est.r - r) < 1e-6
        # theta = arg(xi)/2 up to the pi ambiguity of the axis
        d = (est.theta - phi / 2) % math.pi
        assert min(d, math.pi - d) < 1e-6

    def test_fock_isotropic(self):
        est = an.squeeze_extract(fock(12, 1))
        assert est.r == 0.0
        assert est.theta == 0.0

    def test_rejects_displaced(self):
        dim = 30
        vec = fo.displacement(0.5, dim).toarray() @ fo.basis_state(dim, 0)
        with pytest.raises(an.NotCenteredError):
            an.squeeze_extract(pure(dim, vec))


class TestPhaseExtract:
    def test_rotated_plus(self):
        dim = 16
        plus = models.cavity_init_vector("+", dim)
        vec = fo.rotation(0.3, dim).toarray() @ plus
        pe = an.phase_extract(pure(dim, vec), "+")
        assert not pe.degenerate
        assert pe.delta_phi == pytest.approx(0.3, abs=2e-6)
        assert pe.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_vacuum(self):
        pe = an.phase_extract(fock(8, 0), "0")
        assert pe.degenerate
        assert pe.delta_phi == 0.0
        assert pe.fidelity == pytest.approx(1.0)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-2.5, 2.5), st.sampled_from(["+", "-", "+i", "-i"]))
    def test_rotation_covariance(self, phi, P):
        dim = 14
        base = models.cavity_init_vector(P, dim)
        # a slightly deformed state so the optimum is nontrivial
        base = base + 0.05 * fo.basis_state(dim, 2)
        base /= np.linalg.norm(base)
        rho_a = pure(dim, base)
        pe0 = an.phase_extract(rho_a, P)
        rot = fo.rotation(phi, dim).toarray()
        rho1 = fo.DensityMatrix(rho_a.layout, rot @ rho_a.entries @ rot.conj().T, check=False)
        pe1 = an.phase_extract(rho1, P)
        d = (pe1.delta_phi - pe0.delta_phi - phi) % (2 * math.pi)
        d = min(d, 2 * math.pi - d)
        assert d < 5e-6


class TestPhotonChange:
    def test_exact_initial_state(self):
        for P in ("0", "1"):
            dim = 10
            rho = pure(dim, models.cavity_init_vector(P, dim))
            assert an.photon_change(rho, P) == pytest.approx(0.0, abs=1e-14)

    def test_squeeze_correction_round_trip(self):
        dim = 40
        vec = fo.squeeze(0.1, dim).toarray() @ fo.basis_state(dim, 0)
        rep = an.deformation_report(pure(dim, vec), "0")
        assert abs(rep.delta_n) < 1e-6
        assert rep.squeeze.r == pytest.approx(0.1, abs=1e-6)

    def test_dephased_plus_populations(self):
        dim = 8
        plus = models.cavity_init_vector("+", dim)
        minus = models.cavity_init_vector("-", dim)
        mixed = 0.5 * (np.outer(plus, plus.conj()) + np.outer(minus, minus.conj()))
        rho = fo.DensityMatrix(fo.single_mode_layout(dim, "cavity"), mixed)
        assert an.photon_change(rho, "+") == pytest.approx(0.0, abs=1e-14)


class TestFidelity:
    def test_identical(self):
        v = models.cavity_init_vector("+i", 8)
        assert an.fidelity(pure(8, v), v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert an.fidelity(fock(8, 0), fo.basis_state(8, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_maximally_mixed(self):
        lay = fo.single_mode_layout(2)
        rho = fo.DensityMatrix(lay, np.eye(2) / 2)
        assert an.fidelity(rho, np.array([1, 0])) == pytest.approx(0.5)


class TestDeformationReport:
    def test_untouched_initial_state(self):
        for P in ("0", "1"):
            rep = an.deformation_report(pure(20, models.cavity_init_vector(P, 20)), P)
            assert abs(rep.delta_phi) < 1e-8
            assert abs(rep.delta_n) < 1e-8
            assert rep.fidelity == pytest.approx(1.0, abs=1e-8)
            assert abs(rep.squeeze.r) < 1e-8
        for P in ("+", "-i"):
            rep = an.deformation_report(pure(20, models.cavity_init_vector(P, 20)), P)
            assert abs(rep.delta_phi) < 2e-6
            assert rep.fidelity == pytest.approx(1.0, abs=1e-8)
            assert rep.squeeze is None

    def test_json_round_trip(self):
        import json

        rep = an.deformation_report(pure(12, models.cavity_init_vector("1", 12)), "1")
        doc = json.loads(rep.to_json())
        assert doc["fidelity"] == pytest.approx(1.0)


def wigner_parity_oracle(rho, pts):
    """Displaced-parity via dense matrix exponentials (independent route)."""
    dim = rho.layout.dim
    a = fo.ladder(dim).toarray()
    parity = np.diag((-1.0) ** np.arange(dim))
    out = []
    for z in np.ravel(pts):
        d = expm(z * a.conj().T - np.conj(z) * a)
        out.append((2 / math.pi) * np.real(np.trace(d.conj().T @ rho.entries @ d @ parity)))
    return np.array(out).reshape(np.shape(pts))


class TestWigner:
    def test_vacuum_origin(self):
        w = an.wigner(fock(12, 0), np.array([0.0j]))
        assert w[0] == pytest.approx(2 / math.pi)

    def test_single_photon_origin(self):
        w = an.wigner(fock(12, 1), np.array([0.0j]))
        assert w[0] == pytest.approx(-2 / math.pi)

    def test_coherent_peak(self):
        alpha0 = 0.9 - 0.4j
        dim = 30
        vec = fo.displacement(alpha0, dim).toarray() @ fo.basis_state(dim, 0)
        w_peak = an.wigner(pure(dim, vec), np.array([alpha0]))
        assert w_peak[0] == pytest.approx(2 / math.pi, rel=1e-6)

    def test_normalization(self):
        dim = 12
        rng = np.random.default_rng(5)
        m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho_m = m @ m.conj().T
        rho_m /= np.trace(rho_m).real
        rho = fo.DensityMatrix(fo.single_mode_layout(dim, "cavity"), rho_m)
        ax = np.linspace(-6, 6, 161)
        grid = an.wigner_grid(ax, ax)
        w = an.wigner(rho, grid)
        integral = w.sum() * (ax[1] - ax[0]) ** 2
        assert integral == pytest.approx(1.0, abs=2e-3)

    def test_against_displaced_parity_oracle(self):
        dim = 10
        rng = np.random.default_rng(6)
        m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho_m = m @ m.conj().T
        rho_m /= np.trace(rho_m).real
        rho = fo.DensityMatrix(fo.single_mode_layout(dim, "cavity"), rho_m)
        pts = np.array([0.3 + 0.2j, -0.8j, 1.1, -0.5 - 0.5j])
        got = an.wigner(rho, pts)
        # oracle in a larger space to render truncation differences negligible
        big = np.zeros((24, 24), complex)
        big[:dim, :dim] = rho_m
        rho_big = fo.DensityMatrix(fo.single_mode_layout(24, "cavity"), big)
        ref = wigner_parity_oracle(rho_big, pts)
        assert np.abs(got - ref).max() < 1e-6

    def test_marginal_matches_quadrature_distribution(self):
        # integral of W over p gives |psi(x)|^2; check the squeezed vacuum
        r = 0.25
        dim = 30
        vec = fo.squeeze(r, dim).toarray() @ fo.basis_state(dim, 0)
        rho = pure(dim, vec)
        xs = np.linspace(-4, 4, 121)
        ps = np.linspace(-5, 5, 161)
        # alpha = (x + i p)/sqrt(2)
        grid = (xs[None, :] + 1j * ps[:, None]) / SQ2
        w = an.wigner(rho, grid)
        marginal = w.sum(axis=0) * (ps[1] - ps[0]) / 2  # d2alpha = dx dp / 2
        var = math.exp(2 * r) / 2
        expect = np.exp(-(xs**2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        assert np.abs(marginal - expect).max() < 2e-3

    def test_csv_format(self):
        buf = io.StringIO()
        an.write_wigner_csv(buf, [0.0, 0.5], [0.0], np.array([[1.0, 2.0]]), ["hdr"])
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "# hdr"
        assert len(lines) == 4
        assert len(lines[1].split(",")) == 2
