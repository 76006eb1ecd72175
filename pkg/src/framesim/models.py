"""Hamiltonian and initial-state builders for the hybrid-system variants.

Configuration values are ordinary frequencies (Hz); every builder converts
to angular units (rad/s) internally.  The qubit convention is
``H_qubit = Delta sigma_z / 2`` with ``sigma_z|e> = +|e>`` and
``Delta = omega_q - omega_cav < 0`` for the parameter sets studied here, so
the dressed rotation angle ``theta = arctan(2 g alpha / Delta_q)`` (principal
branch) is continuous in ``alpha`` and the rotated qubit term is
``-Delta_tilde sigma_z / 2``.

Builders accept frame offsets (``alpha``, ``beta``, ``q_offset``) and
construct the displaced-frame Hamiltonian by exact operator substitution
``a -> a + alpha`` etc.; constant terms are dropped (they only add a global
phase to the conjugated density matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import theory
from .fockops import (
    DensityMatrix,
    HilbertLayout,
    Operator,
    UnknownLabelError,
    basis_state,
    embed,
    embedded_pauli,
    identity,
    kron_state,
    ladder,
    pauli,
    qubit_rotation_y,
)

TWO_PI = 2.0 * math.pi

PAULI_SIX = ("0", "1", "+", "-", "+i", "-i")


class ConfigError(ValueError):
    """Invalid model configuration; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class DriveSegment:
    t_start: float
    t_end: float
    omega_d: float  # Hz
    amplitude: complex  # complex drive amplitude E_c, Hz

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("drive segment must have t_end > t_start")


@dataclass(frozen=True)
class DriveSchedule:
    segments: tuple[DriveSegment, ...]

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            if not math.isclose(a.t_end, b.t_start, rel_tol=0.0, abs_tol=1e-15):
                raise ValueError("drive segments must be contiguous and non-overlapping")

    @classmethod
    def constant(cls, amplitude: complex, omega_d: float, t_end: float, t_start: float = 0.0):
        return cls((DriveSegment(t_start, t_end, omega_d, amplitude),))

    def segment_at(self, t: float) -> DriveSegment:
        for seg in self.segments:
            if seg.t_start <= t < seg.t_end:
                return seg
        if self.segments and math.isclose(t, self.segments[-1].t_end):
            return self.segments[-1]
        raise ValueError(f"no drive segment covers t = {t}")


@dataclass(frozen=True)
class ModelParams:
    """Physical rates and frequencies, all in ordinary Hz."""

    omega_cav: float
    omega_q: float
    omega_m: float
    g: float
    g0: float
    kappa: float
    gamma: float
    drive: DriveSchedule = field(default_factory=lambda: DriveSchedule(()))

    def __post_init__(self):
        for name in ("g", "g0", "kappa", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.g0 > 0 and self.omega_m <= 0:
            raise ValueError("omega_m must be > 0 for hybrid (g0 > 0) models")


def paper_params(kappa: float = 0.0, gamma: float = 0.0, g0: float = 100.0,
                 drive: DriveSchedule | None = None) -> ModelParams:
    """Reference parameter point: g/2pi = 5 MHz, Delta/2pi = -100 MHz,
    Omega_m/2pi = 1 MHz, with omega_cav/2pi = 5 GHz as the carrier."""
    return ModelParams(
        omega_cav=5e9,
        omega_q=5e9 - 100e6,
        omega_m=1e6,
        g=5e6,
        g0=g0,
        kappa=kappa,
        gamma=gamma,
        drive=drive if drive is not None else DriveSchedule(()),
    )


@dataclass(frozen=True)
class DressedParams:
    """Rotated-basis couplings; theta in radians, rates in Hz."""

    theta: float
    delta_tilde: float
    g_z: float
    g_1: float
    g_2: float


@dataclass(frozen=True)
class DerivedScales:
    delta: float  # omega_q - omega_cav, Hz
    chi0: float  # g^2 / delta, Hz
    n_crit: float  # delta^2 / 4 g^2
    g_om: float  # g0 |alpha_cav|, Hz

    def __post_init__(self):
        if self.n_crit <= 0:
            raise ValueError("n_crit must be positive")


def derived_scales(p: ModelParams, alpha_cav: complex = 0.0) -> DerivedScales:
    delta = p.omega_q - p.omega_cav
    if delta == 0 or p.g == 0:
        raise ValueError("derived scales need g > 0 and a nonzero detuning")
    return DerivedScales(
        delta=delta,
        chi0=p.g**2 / delta,
        n_crit=delta**2 / (4.0 * p.g**2),
        g_om=p.g0 * abs(alpha_cav),
    )


def _real_amplitude(alpha_cav: complex) -> float:
    a = complex(alpha_cav)
    if abs(a.imag) > 1e-9 * (1.0 + abs(a)):
        raise ValueError(
            "dressed-basis formulas assume a real displacement amplitude; "
            f"got {alpha_cav}"
        )
    return a.real


def dressed_params(p: ModelParams, alpha_cav: complex, omega_d: float) -> DressedParams:
    """Rotation angle and couplings of the displaced qubit basis.

    theta = arctan(2 g alpha / Delta_q) on the principal branch, so
    theta(0) = 0 and the adiabatic dressed ground state R_y(theta/2)|g> is
    continuous as alpha grows from zero (Delta_q < 0 branch).
    """
    al = _real_amplitude(alpha_cav)
    delta_q = p.omega_q - omega_d
    if delta_q == 0 and al == 0:
        raise ValueError("dressed basis undefined for Delta_q = 0 and alpha = 0")
    theta = math.atan2(2.0 * p.g * al, delta_q)
    if theta > math.pi / 2:
        theta -= math.pi
    elif theta < -math.pi / 2:
        theta += math.pi
    delta_tilde = math.hypot(delta_q, 2.0 * p.g * al)
    g_z = p.g * math.sin(theta)
    g_1 = 0.5 * p.g * (1.0 + math.cos(theta))
    g_2 = 0.5 * p.g * (1.0 - math.cos(theta))
    return DressedParams(theta=theta, delta_tilde=delta_tilde, g_z=g_z, g_1=g_1, g_2=g_2)


# ---------------------------------------------------------------------------
# Hamiltonian builders (angular units inside; frame offsets by substitution)
# ---------------------------------------------------------------------------


def _mode_ops(layout: HilbertLayout, label: str, offset: complex):
    """Embedded (displaced) annihilation/creation matrices for one factor."""
    from .fockops import embedded_ladder, embedded_ladder_dag, identity_csr

    a = embedded_ladder(layout, label).m
    ad = embedded_ladder_dag(layout, label).m
    if offset != 0:
        eye = identity_csr(layout.dim)
        a = (a + offset * eye).tocsr()
        ad = (ad + np.conj(offset) * eye).tocsr()
    return a, ad


def hybrid_hamiltonian(
    p: ModelParams,
    omega_d: float,
    e_c: complex,
    layout: HilbertLayout,
    alpha: complex = 0.0,
    beta: complex = 0.0,
) -> Operator:
    """Full hybrid Hamiltonian in the drive rotating frame.

    Dc a+a + Dq sz/2 + Om b+b + g(a+ s- + a s+) + g0 a+a (b+ + b)
    + (Ec/2) a+ + h.c., with Dc = omega_cav - omega_d, Dq = omega_q - omega_d.
    """
    dc = TWO_PI * (p.omega_cav - omega_d)
    dq = TWO_PI * (p.omega_q - omega_d)
    om = TWO_PI * p.omega_m
    g = TWO_PI * p.g
    g0 = TWO_PI * p.g0
    e = TWO_PI * complex(e_c)

    a, ad = _mode_ops(layout, "cavity", alpha)
    b, bd = _mode_ops(layout, "mech", beta)
    sm = embedded_pauli(layout, "minus").m
    sz = embedded_pauli(layout, "z").m

    h = dc * (ad @ a) + 0.5 * dq * sz + om * (bd @ b)
    h = h + g * (ad @ sm + (ad @ sm).conjugate().transpose())
    h = h + g0 * ((ad @ a) @ (bd + b))
    h = h + (0.5 * e) * ad + (0.5 * np.conj(e)) * a
    h = _drop_identity(h, layout.dim)
    return Operator(layout, h, hamiltonian=True)


def jc_hamiltonian(
    p: ModelParams,
    omega_d: float,
    e_c: complex,
    layout: HilbertLayout,
    alpha: complex = 0.0,
) -> Operator:
    """Driven JC Hamiltonian (cavity + qubit) in the drive rotating frame."""
    dc = TWO_PI * (p.omega_cav - omega_d)
    dq = TWO_PI * (p.omega_q - omega_d)
    g = TWO_PI * p.g
    e = TWO_PI * complex(e_c)

    a, ad = _mode_ops(layout, "cavity", alpha)
    sm = embedded_pauli(layout, "minus").m
    sz = embedded_pauli(layout, "z").m

    h = dc * (ad @ a) + 0.5 * dq * sz
    h = h + g * (ad @ sm + (ad @ sm).conjugate().transpose())
    h = h + (0.5 * e) * ad + (0.5 * np.conj(e)) * a
    h = _drop_identity(h, layout.dim)
    return Operator(layout, h, hamiltonian=True)


def displaced_jc_hamiltonian(
    p: ModelParams,
    alpha_cav: complex,
    layout: HilbertLayout,
    alpha: complex = 0.0,
    omega_d: float | None = None,
) -> Operator:
    """Rotated-displaced JC Hamiltonian (cavity + qubit).

    -Dt sz/2 + g_z (a+ + a) sz/2 + g1 (a+ s- + a s+) - g2 (a+ s+ + a s-),
    with the dressed couplings evaluated at ``alpha_cav``; ``alpha`` is an
    additional adaptive-frame offset substituted as a -> a + alpha.

    The counter-rotating coupling carries a minus sign: conjugating the
    displaced JC form by R_y(theta/2) gives
    R^dag sigma_- R = [(cos t - 1)/2] s+ + [(cos t + 1)/2] s- + (sin t/2) sz,
    so the a+ s+ coefficient is -g(1 - cos theta)/2.  This is required for
    exact unitary equivalence with the directly displaced form (the
    spectrum-matching oracle fails with the opposite sign); chi and the
    squeezing magnitude |J| are unaffected since they depend on g2^2 and
    |g1 g2|.
    """
    wd = p.omega_cav if omega_d is None else omega_d
    dp = dressed_params(p, alpha_cav, wd)
    dt = TWO_PI * dp.delta_tilde
    gz = TWO_PI * dp.g_z
    g1 = TWO_PI * dp.g_1
    g2 = TWO_PI * dp.g_2

    a, ad = _mode_ops(layout, "cavity", alpha)
    sm = embedded_pauli(layout, "minus").m
    sp_ = sm.conjugate().transpose().tocsr()
    sz = embedded_pauli(layout, "z").m

    h = -0.5 * dt * sz
    h = h + 0.5 * gz * ((ad + a) @ sz)
    h = h + g1 * (ad @ sm + a @ sp_)
    h = h - g2 * (ad @ sp_ + a @ sm)
    h = _drop_identity(h, layout.dim)
    return Operator(layout, h, hamiltonian=True)


def rabi_hamiltonian(
    p: ModelParams,
    t: float,
    layout: HilbertLayout,
    alpha: complex = 0.0,
) -> Operator:
    """Rabi Hamiltonian in the cavity rotating frame at time ``t``.

    JC terms plus the counter-rotating g(a+ s+ e^{2i w_cav t} + h.c.).
    """
    parts = rabi_hamiltonian_parts(p, layout, alpha)
    return parts(t)


class TimeDependentHamiltonian:
    """H(t) = static + sum_k f_k(t) part_k with a shared sparsity pattern."""

    def __init__(self, layout: HilbertLayout, static: sp.csr_matrix,
                 parts: list[tuple[Callable[[float], complex], sp.csr_matrix]]):
        # union pattern built from magnitudes so cancellations cannot drop slots
        pattern = abs(static.tocsr())
        for _, m in parts:
            pattern = pattern + abs(m.tocsr())
        pattern = pattern.tocsr()
        pattern.sort_indices()
        self.layout = layout
        self._indices = pattern.indices
        self._indptr = pattern.indptr
        self._static = self._aligned(static.tocsr(), pattern)
        self._parts = [(f, self._aligned(m.tocsr(), pattern)) for f, m in parts]

    @staticmethod
    def _aligned(m: sp.csr_matrix, pattern: sp.csr_matrix) -> np.ndarray:
        out = np.zeros(pattern.data.shape, dtype=np.complex128)
        n = pattern.shape[0]
        for i in range(n):
            lo, hi = pattern.indptr[i], pattern.indptr[i + 1]
            pos = {c: k for k, c in zip(range(lo, hi), pattern.indices[lo:hi])}
            for k in range(m.indptr[i], m.indptr[i + 1]):
                out[pos[m.indices[k]]] = m.data[k]
        return out

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    def data_at(self, t: float) -> np.ndarray:
        data = self._static.copy()
        for f, d in self._parts:
            data += f(t) * d
        return data

    def __call__(self, t: float) -> Operator:
        m = sp.csr_matrix((self.data_at(t), self._indices, self._indptr),
                          shape=(self.layout.dim, self.layout.dim))
        return Operator(self.layout, m, hamiltonian=True)


def rabi_hamiltonian_parts(
    p: ModelParams,
    layout: HilbertLayout,
    alpha: complex = 0.0,
) -> TimeDependentHamiltonian:
    """Counter-rotating structure of the Rabi model, cached for reuse."""
    delta = TWO_PI * (p.omega_q - p.omega_cav)
    g = TWO_PI * p.g
    w = TWO_PI * p.omega_cav

    a, ad = _mode_ops(layout, "cavity", alpha)
    sm = embedded_pauli(layout, "minus").m
    sp_ = sm.conjugate().transpose().tocsr()
    sz = embedded_pauli(layout, "z").m

    static = 0.5 * delta * sz + g * (ad @ sm + a @ sp_)
    static = _drop_identity(static.tocsr(), layout.dim)
    cr = (g * (ad @ sp_)).tocsr()  # coefficient e^{+2 i w t}
    crd = cr.conjugate().transpose().tocsr()
    return TimeDependentHamiltonian(
        layout,
        static,
        [
            (lambda t: np.exp(2j * w * t), cr),
            (lambda t: np.exp(-2j * w * t), crd),
        ],
    )


def transmon_jc_hamiltonian(
    p: ModelParams,
    k_anh: float,
    omega_d: float,
    e_c: complex,
    layout: HilbertLayout,
    alpha: complex = 0.0,
    q_offset: complex = 0.0,
) -> Operator:
    """Driven cavity + Kerr transmon without the mechanical factor."""
    dc = TWO_PI * (p.omega_cav - omega_d)
    dq = TWO_PI * (p.omega_q - omega_d)
    g = TWO_PI * p.g
    k = TWO_PI * k_anh
    e = TWO_PI * complex(e_c)

    a, ad = _mode_ops(layout, "cavity", alpha)
    q, qd = _mode_ops(layout, "transmon", q_offset)

    h = dc * (ad @ a) + dq * (qd @ q) - 0.5 * k * (qd @ qd @ q @ q)
    h = h + g * (ad @ q + a @ qd)
    h = h + (0.5 * e) * ad + (0.5 * np.conj(e)) * a
    h = _drop_identity(h, layout.dim)
    return Operator(layout, h, hamiltonian=True)


def transmon_hamiltonian(
    p: ModelParams,
    k_anh: float,
    omega_d: float,
    e_c: complex,
    layout: HilbertLayout,
    alpha: complex = 0.0,
    beta: complex = 0.0,
    q_offset: complex = 0.0,
) -> Operator:
    """Hybrid Hamiltonian with a Kerr transmon instead of a two-level qubit.

    Dc a+a + Dq q+q - (K/2) q+^2 q^2 + Om b+b + g(a+ q + a q+)
    + g0 a+a (b+ + b) + drive; ``k_anh`` is the anharmonicity (Hz).
    """
    dc = TWO_PI * (p.omega_cav - omega_d)
    dq = TWO_PI * (p.omega_q - omega_d)
    om = TWO_PI * p.omega_m
    g = TWO_PI * p.g
    g0 = TWO_PI * p.g0
    k = TWO_PI * k_anh
    e = TWO_PI * complex(e_c)

    a, ad = _mode_ops(layout, "cavity", alpha)
    b, bd = _mode_ops(layout, "mech", beta)
    q, qd = _mode_ops(layout, "transmon", q_offset)

    h = dc * (ad @ a) + dq * (qd @ q) - 0.5 * k * (qd @ qd @ q @ q)
    h = h + om * (bd @ b)
    h = h + g * (ad @ q + a @ qd)
    h = h + g0 * ((ad @ a) @ (bd + b))
    h = h + (0.5 * e) * ad + (0.5 * np.conj(e)) * a
    h = _drop_identity(h, layout.dim)
    return Operator(layout, h, hamiltonian=True)


def _drop_identity(h: sp.spmatrix, dim: int) -> sp.csr_matrix:
    """Remove the trace part (a pure constant) introduced by substitution."""
    h = h.tocsr()
    c = h.diagonal().sum() / dim
    if c != 0:
        h = h - c * sp.identity(dim, dtype=np.complex128, format="csr")
    return h.tocsr()


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)
_CAVITY_INIT = {
    "0": (1.0, 0.0),
    "1": (0.0, 1.0),
    "+": (_SQ2, _SQ2),
    "-": (_SQ2, -_SQ2),
    "+i": (_SQ2, 1j * _SQ2),
    "-i": (_SQ2, -1j * _SQ2),
}


def cavity_init_vector(P: str, dim: int) -> np.ndarray:
    """One of the six Pauli eigenstates on the {|0>, |1>} Fock span."""
    try:
        c0, c1 = _CAVITY_INIT[P]
    except KeyError:
        raise UnknownLabelError(f"unknown cavity init {P!r}; choose from {PAULI_SIX}") from None
    v = np.zeros(dim, dtype=np.complex128)
    v[0] = c0
    v[1] = c1
    return v


def ground_qubit_vector(theta: float = 0.0) -> np.ndarray:
    """R_y(theta/2)|g> in the (|e>, |g>) basis."""
    u = qubit_rotation_y(0.5 * theta).toarray()
    return u @ np.array([0.0, 1.0], dtype=np.complex128)


def initial_state(
    P: str,
    layout: HilbertLayout,
    dressed: DressedParams | None = None,
    basis: str = "rotated",
) -> DensityMatrix:
    """Product state |P> (cavity) x qubit ground x mech vacuum.

    ``basis="rotated"`` uses the bare |g> (the rotated-displaced basis of the
    dressed models); ``basis="original"`` applies R_y(theta/2) from
    ``dressed`` so the qubit starts in the adiabatic dressed ground state.
    """
    vecs = []
    for lab, d in layout.factors:
        if lab == "cavity":
            vecs.append(cavity_init_vector(P, d))
        elif lab == "qubit":
            theta = 0.0
            if basis == "original" and dressed is not None:
                theta = dressed.theta
            vecs.append(ground_qubit_vector(theta))
        elif lab in ("mech", "transmon", "mode"):
            vecs.append(basis_state(d, 0))
    return DensityMatrix.from_pure(layout, kron_state(*vecs))


# ---------------------------------------------------------------------------
# effective coefficients and switch conditions
# ---------------------------------------------------------------------------


def off_resonant_effective_hamiltonian(
    p: ModelParams,
    alpha_cav: complex,
    omega_d: float,
    e_c: complex,
) -> tuple[float, float, complex]:
    """Effective cavity coefficients in the forced oscillation (Hz).

    Returns (Dc - chi(n), -J(n), net linear drive Ec/2 + Dc alpha - g_z/2),
    with sigma_z replaced by -1 in the dressed ground state.
    """
    al = _real_amplitude(alpha_cav)
    scales = derived_scales(p, al)
    n_cav = al * al
    chi = theory.chi_of_n(n_cav, scales.chi0, scales.n_crit)
    j = theory.j_of_n(n_cav, scales.chi0, scales.n_crit)
    dc = p.omega_cav - omega_d
    dp = dressed_params(p, al, omega_d)
    net_drive = 0.5 * complex(e_c) + dc * al - 0.5 * dp.g_z
    return dc - chi, -j, net_drive


def forced_oscillation_amplitude(p: ModelParams, alpha_cav: complex, omega_d: float) -> complex:
    """Drive amplitude (Hz) canceling the net linear term: Ec/2 = -Dc a + g_z/2."""
    al = _real_amplitude(alpha_cav)
    dc = p.omega_cav - omega_d
    dp = dressed_params(p, al, omega_d)
    return 2.0 * (-dc * al + 0.5 * dp.g_z)


@dataclass(frozen=True)
class TransferSnapshot:
    """First moments at the switch instant, in the new drive frame."""

    mean_a: complex
    mean_b: complex
    mean_sigma_minus: complex


def transfer_drive_amplitude(
    snapshot: TransferSnapshot, p: ModelParams, omega_d: float
) -> complex:
    """Numerically optimal transfer drive (Hz).

    E2/2 = -Dc <a> - g <sigma_-> - g0 <a>(<b+> + <b>).
    """
    dc = p.omega_cav - omega_d
    mb = snapshot.mean_b
    half = (
        -dc * snapshot.mean_a
        - p.g * snapshot.mean_sigma_minus
        - p.g0 * snapshot.mean_a * (np.conj(mb) + mb)
    )
    return 2.0 * complex(half)


# ---------------------------------------------------------------------------
# configuration ingestion (schema shared with the CLI)
# ---------------------------------------------------------------------------

_MODEL_KEYS = (
    "omega_cav_hz",
    "omega_q_hz",
    "omega_m_hz",
    "g_hz",
    "g0_hz",
    "kappa_hz",
    "gamma_hz",
    "drive_segments",
)
_SEGMENT_KEYS = ("t_start_s", "t_end_s", "omega_d_hz", "e_re_hz", "e_im_hz")


def validate_model_config(doc: dict) -> tuple[ModelParams | None, list[str]]:
    """Parse the documented config schema, returning (params, errors)."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        return None, ["model config must be a table/object"]
    for key in doc:
        if key not in _MODEL_KEYS:
            errors.append(f"model.{key}: unknown key")
    vals = {}
    for key in _MODEL_KEYS[:-1]:
        if key not in doc:
            errors.append(f"model.{key}: missing (expected a frequency in Hz)")
            continue
        v = doc[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            errors.append(f"model.{key}: expected a number in Hz")
            continue
        if key in ("g_hz", "g0_hz", "kappa_hz", "gamma_hz") and v < 0:
            errors.append(f"model.{key}: must be >= 0 Hz")
            continue
        vals[key] = float(v)
    segments = []
    raw_segments = doc.get("drive_segments", [])
    if not isinstance(raw_segments, list):
        errors.append("model.drive_segments: expected a list of segment tables")
        raw_segments = []
    for i, seg in enumerate(raw_segments):
        if not isinstance(seg, dict):
            errors.append(f"model.drive_segments[{i}]: expected a table")
            continue
        for key in seg:
            if key not in _SEGMENT_KEYS:
                errors.append(f"model.drive_segments[{i}].{key}: unknown key")
        bad = False
        for key in _SEGMENT_KEYS:
            if key not in seg or isinstance(seg.get(key), bool) or not isinstance(
                seg.get(key), (int, float)
            ):
                unit = "s" if key.endswith("_s") else "Hz"
                errors.append(f"model.drive_segments[{i}].{key}: expected a number in {unit}")
                bad = True
        if not bad:
            segments.append(
                DriveSegment(
                    t_start=float(seg["t_start_s"]),
                    t_end=float(seg["t_end_s"]),
                    omega_d=float(seg["omega_d_hz"]),
                    amplitude=float(seg["e_re_hz"]) + 1j * float(seg["e_im_hz"]),
                )
            )
    if errors:
        return None, errors
    try:
        params = ModelParams(
            omega_cav=vals["omega_cav_hz"],
            omega_q=vals["omega_q_hz"],
            omega_m=vals["omega_m_hz"],
            g=vals["g_hz"],
            g0=vals["g0_hz"],
            kappa=vals["kappa_hz"],
            gamma=vals["gamma_hz"],
            drive=DriveSchedule(tuple(segments)),
        )
    except ValueError as exc:
        return None, [str(exc)]
    return params, []


def model_config_dict(p: ModelParams) -> dict:
    """Round-trip inverse of :func:`validate_model_config`."""
    return {
        "omega_cav_hz": p.omega_cav,
        "omega_q_hz": p.omega_q,
        "omega_m_hz": p.omega_m,
        "g_hz": p.g,
        "g0_hz": p.g0,
        "kappa_hz": p.kappa,
        "gamma_hz": p.gamma,
        "drive_segments": [
            {
                "t_start_s": s.t_start,
                "t_end_s": s.t_end,
                "omega_d_hz": s.omega_d,
                "e_re_hz": s.amplitude.real,
                "e_im_hz": s.amplitude.imag,
            }
            for s in p.drive.segments
        ],
    }
