"""State characterization: quadrature moments, squeezing, phase, Wigner.

Quadrature normalization is x = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/sqrt(2)
(vacuum variance 1/2), so the variance ratio of a squeezed vacuum is exactly
exp(4r).  The deformation decomposition follows
rho_centered ~ R(dphi) S(xi) rho_corrected S^dag R^dag: the rotation is
undone first, then the squeeze.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fockops import (
    DensityMatrix,
    Operator,
    conjugate_factor,
    ladder,
    number,
    rotation,
    squeeze as squeeze_op,
)
from .models import cavity_init_vector

CENTER_TOL = 1e-6
_ISOTROPIC = ("0", "1")


class NotCenteredError(ValueError):
    pass


def coherent_amplitudes(rho: DensityMatrix) -> tuple[complex, complex]:
    """(Tr[a rho], Tr[b rho]); zero for factors absent from the layout."""
    from .frames import mode_expectation

    alpha = mode_expectation(rho, "cavity") if rho.layout.has("cavity") else 0j
    beta = mode_expectation(rho, "mech") if rho.layout.has("mech") else 0j
    return alpha, beta


def _single_mode_moments(rho: DensityMatrix):
    d = rho.layout.dim
    a = ladder(d, rho.layout.labels[0]).m
    ents = rho.entries
    mean_a = complex(np.trace(a @ ents))
    a2 = complex(np.trace(a @ (a @ ents)))
    n = float(np.real(np.sum(np.arange(d) * np.real(np.diag(ents)))))
    return mean_a, a2, n


def quadrature_moments(rho: DensityMatrix) -> tuple[float, float, float]:
    """(<x^2>, <p^2>, <xp + px>) of a single-mode state."""
    _, a2, n = _single_mode_moments(rho)
    vx = float(np.real(a2)) + n + 0.5
    vp = -float(np.real(a2)) + n + 0.5
    cross = 2.0 * float(np.imag(a2))
    return vx, vp, cross


@dataclass(frozen=True)
class SqueezeEstimate:
    """Squeeze angle/parameter from second moments; ratio = exp(4r)."""

    theta: float
    r: float
    var_sq: float
    var_asq: float

    @property
    def ratio(self) -> float:
        return self.var_asq / self.var_sq

    @property
    def xi(self) -> complex:
        return self.r * np.exp(2j * self.theta)


def squeeze_extract(rho: DensityMatrix, center_tol: float = CENTER_TOL) -> SqueezeEstimate:
    """Squeezing angle and parameter of a centered single-mode state.

    theta points along the anti-squeezed quadrature (var(x_theta) maximal,
    cross moment zero); r = ln(var_asq/var_sq)/4.  Isotropic states return
    theta = 0.
    """
    mean_a, a2, n = _single_mode_moments(rho)
    if abs(mean_a) > center_tol:
        raise NotCenteredError(f"|<a>| = {abs(mean_a):.3e} exceeds {center_tol}")
    vx = float(np.real(a2)) + n + 0.5
    vp = -float(np.real(a2)) + n + 0.5
    cross = 2.0 * float(np.imag(a2))
    aniso = math.hypot(vx - vp, cross)
    mean_var = 0.5 * (vx + vp)
    if aniso < 1e-12 * mean_var:
        return SqueezeEstimate(theta=0.0, r=0.0, var_sq=mean_var, var_asq=mean_var)
    theta = 0.5 * math.atan2(cross, vx - vp)
    var_asq = mean_var + 0.5 * aniso
    var_sq = mean_var - 0.5 * aniso
    r = 0.25 * math.log(var_asq / var_sq)
    return SqueezeEstimate(theta=theta, r=r, var_sq=var_sq, var_asq=var_asq)


@dataclass(frozen=True)
class PhaseEstimate:
    delta_phi: float
    fidelity: float
    degenerate: bool


def _overlap_after_rotation(rho: DensityMatrix, psi0: np.ndarray, beta: float) -> float:
    # F(beta) = <psi0| R(beta) rho R(beta)^dag |psi0> = v^dag rho v,
    # v = R(-beta)... R(beta)^dag |psi0> has components e^{+i beta n} c_n
    n = np.arange(len(psi0))
    v = psi0 * np.exp(1j * beta * n)
    return float(np.real(np.vdot(v, rho.entries @ v)))


def phase_extract(
    rho: DensityMatrix,
    P: str,
    grid_points: int = 720,
    tol: float = 1e-6,
) -> PhaseEstimate:
    """Phase shift acquired by a centered cavity state, from overlap with |P>.

    Maximizes F(beta) = <P| R(beta) rho R^dag(beta) |P> over beta in
    [-pi, pi) (coarse grid, then golden-section to ``tol`` rad) and reports
    delta_phi = -argmax, i.e. R(delta_phi)|P> best matches the state.
    Fock-diagonal inputs |0>, |1> are rotation-degenerate.
    """
    psi0 = cavity_init_vector(P, rho.layout.dim)
    if P in _ISOTROPIC:
        return PhaseEstimate(0.0, _overlap_after_rotation(rho, psi0, 0.0), True)
    betas = np.linspace(-math.pi, math.pi, grid_points, endpoint=False)
    vals = np.array([_overlap_after_rotation(rho, psi0, b) for b in betas])
    k = int(np.argmax(vals))
    # golden-section refine inside the bracketing neighbors (periodic)
    lo = betas[k] - 2.0 * math.pi / grid_points
    hi = betas[k] + 2.0 * math.pi / grid_points
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    b1 = hi - gr * (hi - lo)
    b2 = lo + gr * (hi - lo)
    f1 = _overlap_after_rotation(rho, psi0, b1)
    f2 = _overlap_after_rotation(rho, psi0, b2)
    while hi - lo > tol:
        if f1 < f2:
            lo, b1, f1 = b1, b2, f2
            b2 = lo + gr * (hi - lo)
            f2 = _overlap_after_rotation(rho, psi0, b2)
        else:
            hi, b2, f2 = b2, b1, f1
            b1 = hi - gr * (hi - lo)
            f1 = _overlap_after_rotation(rho, psi0, b1)
    beta_opt = 0.5 * (lo + hi)
    fid = _overlap_after_rotation(rho, psi0, beta_opt)
    delta_phi = -beta_opt
    delta_phi = (delta_phi + math.pi) % (2.0 * math.pi) - math.pi
    return PhaseEstimate(delta_phi, min(max(fid, 0.0), 1.0), False)


def photon_change(rho_corrected: DensityMatrix, P: str) -> float:
    """Tr[n rho_corrected] - <P|n|P>."""
    d = rho_corrected.layout.dim
    n_now = float(np.real(np.sum(np.arange(d) * np.real(np.diag(rho_corrected.entries)))))
    psi0 = cavity_init_vector(P, d)
    n_ref = float(np.sum(np.arange(d) * np.abs(psi0) ** 2))
    return n_now - n_ref


def fidelity(rho: DensityMatrix, psi_target: np.ndarray) -> float:
    """Pure-target overlap <psi|rho|psi>, clipped to [0, 1]."""
    v = np.asarray(psi_target, dtype=np.complex128).ravel()
    v = v / np.linalg.norm(v)
    val = float(np.real(np.vdot(v, rho.entries @ v)))
    return min(max(val, 0.0), 1.0)


@dataclass(frozen=True)
class DeformationReport:
    """Phase shift, photon-number change, fidelity, squeeze estimate.

    The squeeze/photon-change stage is only defined for the isotropic Fock
    inputs |0>, |1> (superposition states carry internal first-moment
    coherence that would masquerade as squeezing); for the other Pauli
    eigenstates ``squeeze`` is None and ``delta_n`` is NaN.
    """

    delta_phi: float
    delta_n: float
    fidelity: float
    squeeze: SqueezeEstimate | None

    def to_dict(self) -> dict:
        out = {
            "delta_phi_rad": self.delta_phi,
            "delta_n": self.delta_n,
            "fidelity": self.fidelity,
        }
        if self.squeeze is not None:
            out.update(
                {
                    "squeeze_theta_rad": self.squeeze.theta,
                    "squeeze_r": self.squeeze.r,
                    "squeeze_var_sq": self.squeeze.var_sq,
                    "squeeze_var_asq": self.squeeze.var_asq,
                    "squeeze_ratio": self.squeeze.ratio,
                }
            )
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def deformation_report(rho_centered: DensityMatrix, P: str) -> DeformationReport:
    """Full correction pipeline on a centered single-mode cavity state.

    Extracts the phase shift first, un-rotates, extracts the squeeze from
    the de-rotated state, un-squeezes, then measures the residual photon
    change of the corrected state.
    """
    layout = rho_centered.layout
    d = layout.dim
    label = layout.labels[0]
    phase = phase_extract(rho_centered, P)
    if P not in _ISOTROPIC:
        return DeformationReport(
            delta_phi=phase.delta_phi,
            delta_n=float("nan"),
            fidelity=phase.fidelity,
            squeeze=None,
        )
    r1 = rotation(-phase.delta_phi, d, label).toarray()  # R(dphi)^dag rho R(dphi)
    ents = conjugate_factor(rho_centered.entries, r1, layout, label)
    rho1 = DensityMatrix(layout, ents, check=False)
    est = squeeze_extract(rho1)
    s = squeeze_op(est.xi, d, label).toarray()
    ents2 = conjugate_factor(rho1.entries, s.conj().T, layout, label)
    rho_c = DensityMatrix(layout, ents2, check=False)
    dn = photon_change(rho_c, P)
    return DeformationReport(
        delta_phi=phase.delta_phi, delta_n=dn, fidelity=phase.fidelity, squeeze=est
    )


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------


def wigner(rho: DensityMatrix, grid) -> np.ndarray:
    """Displaced-parity Wigner function W(alpha) on a complex grid.

    W(alpha) = (2/pi) Tr[rho D(2 alpha) Pi] evaluated with analytic
    displacement matrix elements (associated Laguerre form); normalized so
    that the integral over the complex plane (d Re x d Im) is 1.
    """
    pts = np.asarray(grid, dtype=np.complex128)
    shape = pts.shape
    beta = 2.0 * pts.ravel()
    d = rho.layout.dim
    ents = rho.entries
    x = np.abs(beta) ** 2
    env = np.exp(-0.5 * x)
    w = np.zeros(beta.shape, dtype=np.complex128)
    signs = (-1.0) ** np.arange(d)
    for m in range(d):
        for n in range(d):
            r = ents[n, m]
            if r == 0:
                continue
            # D_{mn}(beta); for m >= n: sqrt(n!/m!) beta^{m-n} e^{-|b|^2/2} L_n^{m-n}(|b|^2)
            if m >= n:
                k, order = n, m - n
                pref = math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
                amp = pref * beta**order
            else:
                k, order = m, n - m
                pref = math.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
                amp = pref * (-np.conj(beta)) ** order
            w += signs[n] * r * amp * _assoc_laguerre(k, order, x)
    w *= env * (2.0 / math.pi)
    return np.real(w).reshape(shape)


def _assoc_laguerre(n: int, k: int, x: np.ndarray) -> np.ndarray:
    """Stable upward recurrence for L_n^{(k)}(x) on an array."""
    l0 = np.ones_like(x)
    if n == 0:
        return l0
    l1 = 1.0 + k - x
    if n == 1:
        return l1
    for i in range(1, n):
        l0, l1 = l1, ((2 * i + 1 + k - x) * l1 - (i + k) * l0) / (i + 1)
    return l1


def wigner_grid(re_points: np.ndarray, im_points: np.ndarray) -> np.ndarray:
    """Complex grid alpha[i, j] = re[j] + i*im[i] (row-major image layout)."""
    re = np.asarray(re_points, dtype=float)
    im = np.asarray(im_points, dtype=float)
    return re[None, :] + 1j * im[:, None]


def write_wigner_csv(path_or_buf, re_points, im_points, values: np.ndarray,
                     header_lines=()):
    """Grid serialization: re row, im row, then row-major value rows."""
    own = isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__")
    f = open(path_or_buf, "w") if own else path_or_buf
    try:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write(",".join(f"{v:.16e}" for v in np.asarray(re_points, float)) + "\n")
        f.write(",".join(f"{v:.16e}" for v in np.asarray(im_points, float)) + "\n")
        for row in np.asarray(values, float):
            f.write(",".join(f"{v:.16e}" for v in row) + "\n")
    finally:
        if own:
            f.close()
