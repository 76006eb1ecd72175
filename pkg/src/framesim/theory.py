"""Closed-form perturbation-theory results used as oracles for the simulator.

All frequency-like inputs are angular (rad/s) and times are seconds, except
where a function is a pure ratio of same-unit quantities (noted per
function).  Conversion from ordinary frequencies happens at the caller.
"""

from __future__ import annotations

import math
import cmath

import numpy as np
from scipy.special import gammainc


def chi_of_n(n_cav: float, chi0: float, n_crit: float) -> float:
    """Photon-number-dependent dispersive shift.

    chi(n) = chi0 (1 + n/2nc) (1 + n/nc)^(-3/2).  Units follow ``chi0``.
    """
    if n_cav < 0 or n_crit <= 0:
        raise ValueError("need n_cav >= 0 and n_crit > 0")
    x = n_cav / n_crit
    return chi0 * (1.0 + 0.5 * x) * (1.0 + x) ** -1.5


def j_of_n(n_cav: float, chi0: float, n_crit: float) -> float:
    """Photon-number-dependent squeezing rate.

    J(n) = (chi0/4) (n/nc) (1 + n/nc)^(-3/2); peak chi0/(6 sqrt 3) at n = 2nc.
    """
    if n_cav < 0 or n_crit <= 0:
        raise ValueError("need n_cav >= 0 and n_crit > 0")
    x = n_cav / n_crit
    return 0.25 * chi0 * x * (1.0 + x) ** -1.5


def j_peak(chi0: float, n_crit: float) -> tuple[float, float]:
    """(location, value) of the |J(n)| maximum: n = 2 n_crit, |chi0|/(6 sqrt 3)."""
    return 2.0 * n_crit, chi0 / (6.0 * math.sqrt(3.0))


def cumulative_squeeze(n_final: float, n_crit: float, chi0: float, e_c: float) -> float:
    """Cumulative |xi| accrued while ringing up to ``n_final`` photons.

    |xi| = (|chi0| sqrt(nc) / E) [ln(sqrt(1+n/nc) + sqrt(n/nc))
                                  - sqrt(n/(n+nc))]
    with ``chi0`` and ``e_c`` in the same (angular) units, ``e_c > 0``.
    """
    if e_c <= 0:
        raise ValueError("drive amplitude must be positive")
    if n_final < 0 or n_crit <= 0:
        raise ValueError("need n_final >= 0 and n_crit > 0")
    if n_final == 0.0:
        return 0.0
    x = n_final / n_crit
    bracket = math.log(math.sqrt(1.0 + x) + math.sqrt(x)) - math.sqrt(
        n_final / (n_final + n_crit)
    )
    return abs(chi0) * math.sqrt(n_crit) / e_c * bracket


def cumulative_squeeze_simplified(
    n_final: float, n_crit: float, chi0: float, e_c: float
) -> float:
    """Large-n limit: (|chi0| sqrt(nc) / 2E) [ln(n/nc) + 2(ln 2 - 1)]."""
    if e_c <= 0:
        raise ValueError("drive amplitude must be positive")
    x = n_final / n_crit
    if x <= 0:
        raise ValueError("simplified form needs n_final > 0")
    return abs(chi0) * math.sqrt(n_crit) / (2.0 * e_c) * (
        math.log(x) + 2.0 * (math.log(2.0) - 1.0)
    )


def transfer_squeeze(
    t: float, n_cav: float, n_crit: float, chi0: float, delta_c: float
) -> float:
    """|xi(t)| during the forced oscillation (red-detuned drive).

    |xi(t)| = |2J/(Dc-chi)| |sin(sqrt((Dc-chi)^2 - 4|J|^2) t)|; angular units.
    """
    chi = chi_of_n(n_cav, chi0, n_crit)
    j = j_of_n(n_cav, chi0, n_crit)
    det = delta_c - chi
    om2 = det * det - 4.0 * j * j
    om = math.sqrt(om2) if om2 > 0 else 0.0
    return abs(2.0 * j / det) * abs(math.sin(om * t))


def transfer_squeeze_limit(
    t: float, n_cav: float, n_crit: float, chi0: float, delta_c: float
) -> float:
    """Bare-regime limit: (|chi0|/2 Dc) sqrt(nc/n) |sin(Dc t)|."""
    return (
        abs(chi0)
        / (2.0 * abs(delta_c))
        * math.sqrt(n_crit / n_cav)
        * abs(math.sin(delta_c * t))
    )


def transfer_squeeze_period(n_cav: float, n_crit: float, chi0: float, delta_c: float) -> float:
    """Period of |xi(t)|: pi / sqrt((Dc - chi)^2 - 4 |J|^2)."""
    chi = chi_of_n(n_cav, chi0, n_crit)
    j = j_of_n(n_cav, chi0, n_crit)
    return math.pi / math.sqrt((delta_c - chi) ** 2 - 4.0 * j * j)


def compose_squeezes(xi1: complex, xi2: complex) -> tuple[complex, float]:
    """SU(1,1) composition: S(xi1) S(xi2) = S(xi3) R(-theta).

    Returns (xi3, theta).  With w_k = exp(i phi_k) tanh r_k,
    w3 = (w1 + w2) / (1 + conj(w1) w2) and theta = -arg(1 + conj(w1) w2).
    As an operator identity this holds up to the metaplectic global phase
    exp(i theta / 2) (the rotation generator's zero-point term), which drops
    out of any state conjugation.
    """
    r1, p1 = abs(xi1), cmath.phase(xi1) if xi1 != 0 else 0.0
    r2, p2 = abs(xi2), cmath.phase(xi2) if xi2 != 0 else 0.0
    w1 = cmath.exp(1j * p1) * math.tanh(r1)
    w2 = cmath.exp(1j * p2) * math.tanh(r2)
    den = 1.0 + w1.conjugate() * w2
    w3 = (w1 + w2) / den
    theta = -cmath.phase(den)
    r3 = math.atanh(min(abs(w3), 1.0 - 1e-300))
    xi3 = r3 * cmath.exp(1j * cmath.phase(w3)) if r3 != 0.0 else 0.0j
    return xi3, theta


def forced_jc_squeeze_exact(r_static: float, delta_tilde: float, t: float) -> float:
    """|xi(t)| from the exact SU(1,1) composition for the forced oscillation.

    r_static is the static Bogoliubov parameter (-1/2 arctan 2|J|/Dc); the
    angular eigenfrequency is ``delta_tilde``.  Valid for 2|r_static| << 1.
    """
    r = abs(r_static)
    phi2 = 2.0 * delta_tilde * t + math.pi
    th = math.tanh(r)
    num = th * (1.0 + cmath.exp(1j * phi2))
    den = 1.0 + cmath.exp(1j * phi2) * th * th
    return math.atanh(abs(num / den))


def forced_jc_squeeze_leading(r_static: float, delta_tilde: float, t: float) -> float:
    """Leading order of the above: 2|r| |sin(delta_tilde t)|."""
    return 2.0 * abs(r_static) * abs(math.sin(delta_tilde * t))


def truncation_error_u(n_cav_dim: float, e_tau: float) -> float:
    """Poisson tail mass above the truncated space for one interval.

    u = P(X >= floor(n_cav_dim)) with X ~ Poisson(|e_tau / 2|^2); ``e_tau``
    is the dimensionless product of the angular drive amplitude and the
    interval length.
    """
    if n_cav_dim < 1:
        raise ValueError("need n_cav_dim >= 1")
    lam = abs(e_tau / 2.0) ** 2
    if lam == 0.0:
        return 0.0
    return float(gammainc(math.floor(n_cav_dim), lam))


def ringup_photon_number(e_c: float, t: float) -> float:
    """Lossless resonant ring-up estimate n(t) = (E t / 2)^2, angular E."""
    return (e_c * t / 2.0) ** 2


def ringup_squeeze_integrand(n_cav: float, chi0: float, n_crit: float) -> float:
    """d|xi|/dt = |2 J(n)| along the ring-up trajectory."""
    return abs(2.0 * j_of_n(n_cav, chi0, n_crit))
