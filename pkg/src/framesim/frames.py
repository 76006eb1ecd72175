"""Adaptive displaced-frame stepping for cavity/mechanics (and transmon).

Each interval of length tau integrates the master equation with the
Hamiltonian and cavity dissipator expressed in the current displaced frame,
then recenters the state so Tr[a rho] = Tr[b rho] = 0 and accumulates the
increments into a :class:`FrameTrajectory`.  The final state is represented
as (rho_centered, alpha_N, beta_N); the large-amplitude reconstruction is
never materialized, expectation values are computed by operator
substitution instead.
"""

from __future__ import annotations

import inspect
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .fockops import (
    DensityMatrix,
    HilbertLayout,
    Operator,
    conjugate_factor,
    displacement,
    embed,
    identity,
    ladder,
)
from .lindblad import (
    CollapseChannel,
    IntegratorConfig,
    integrate,
    stable_dt,
)

TWO_PI = 2.0 * math.pi

CSV_COLUMNS = (
    "t_ns",
    "re_dalpha",
    "im_dalpha",
    "re_dbeta",
    "im_dbeta",
    "re_alpha",
    "im_alpha",
    "re_beta",
    "im_beta",
)

# maps a bosonic factor label to the builder keyword carrying its offset
MODE_KWARG = {"cavity": "alpha", "mech": "beta", "transmon": "q_offset"}


class FrameDriftError(RuntimeError):
    """Residual coherent amplitude survived the corrective displacement."""


class FockLeakageError(RuntimeError):
    """Top-Fock occupation exceeded the truncation budget."""


@dataclass(frozen=True)
class FrameRecord:
    t: float
    dalpha: complex
    dbeta: complex
    alpha: complex
    beta: complex


@dataclass
class FrameTrajectory:
    """Per-interval displacement increments and accumulated amplitudes."""

    tau: float
    records: list[FrameRecord] = field(default_factory=list)

    def append(self, t: float, dalpha: complex, dbeta: complex,
               alpha: complex, beta: complex):
        self.records.append(FrameRecord(t, dalpha, dbeta, alpha, beta))

    @property
    def alpha_final(self) -> complex:
        return self.records[-1].alpha if self.records else 0j

    @property
    def beta_final(self) -> complex:
        return self.records[-1].beta if self.records else 0j

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.records])

    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.records])

    def increments(self) -> list[dict[str, complex]]:
        """Per-interval increments (skipping the t0 record), for replay."""
        return [{"cavity": r.dalpha, "mech": r.dbeta} for r in self.records[1:]]

    def validate(self):
        acc_a = 0j
        acc_b = 0j
        prev_t = None
        for r in self.records:
            acc_a += r.dalpha
            acc_b += r.dbeta
            scale = 1.0 + abs(acc_a) + abs(acc_b)
            if abs(acc_a - r.alpha) > 1e-9 * scale or abs(acc_b - r.beta) > 1e-9 * scale:
                raise ValueError("accumulated amplitudes do not match increment sums")
            if prev_t is not None and not math.isclose(
                r.t - prev_t, self.tau, rel_tol=1e-9, abs_tol=1e-15
            ):
                raise ValueError("timestamps must increase by tau")
            prev_t = r.t

    def to_csv(self, path_or_buf, header_lines: Sequence[str] = ()):
        own = isinstance(path_or_buf, (str,)) or hasattr(path_or_buf, "__fspath__")
        f = open(path_or_buf, "w") if own else path_or_buf
        try:
            for line in header_lines:
                f.write(f"# {line}\n")
            f.write(",".join(CSV_COLUMNS) + "\n")
            for r in self.records:
                vals = (
                    r.t * 1e9,
                    r.dalpha.real, r.dalpha.imag,
                    r.dbeta.real, r.dbeta.imag,
                    r.alpha.real, r.alpha.imag,
                    r.beta.real, r.beta.imag,
                )
                f.write(",".join(f"{v:.16e}" for v in vals) + "\n")
        finally:
            if own:
                f.close()

    @classmethod
    def from_csv(cls, path_or_buf) -> "FrameTrajectory":
        own = isinstance(path_or_buf, (str,)) or hasattr(path_or_buf, "__fspath__")
        f = open(path_or_buf) if own else path_or_buf
        try:
            rows = []
            header = None
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if header is None:
                    header = tuple(line.split(","))
                    if header != CSV_COLUMNS:
                        raise ValueError(f"unexpected trajectory columns {header}")
                    continue
                rows.append([float(x) for x in line.split(",")])
        finally:
            if own:
                f.close()
        tau = (rows[1][0] - rows[0][0]) * 1e-9 if len(rows) > 1 else 0.0
        traj = cls(tau=tau)
        for v in rows:
            traj.append(
                v[0] * 1e-9,
                complex(v[1], v[2]),
                complex(v[3], v[4]),
                complex(v[5], v[6]),
                complex(v[7], v[8]),
            )
        return traj


@dataclass(frozen=True)
class StepperConfig:
    tau: float = 1e-9
    n_intervals: int = 1
    recenter_mech: bool = True
    recenter_transmon: bool = True
    dt_substep: float | None = None
    dt_safety: float = 0.35
    dt_max_fraction: float = 0.1
    center_tol: float = 1e-7
    leak_tol: float = 1e-4
    positivity_every: int = 0  # 0 disables the eigenvalue monitor

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if self.dt_substep is not None and self.dt_substep > self.tau:
            raise ValueError("dt_substep must not exceed tau")


from functools import lru_cache


@lru_cache(maxsize=512)
def _ladder_coo_cached(layout: HilbertLayout, label: str):
    from .fockops import embedded_ladder

    return embedded_ladder(layout, label).m.tocoo()


def _ladder_coo(layout: HilbertLayout, label: str, cache: dict | None = None):
    return _ladder_coo_cached(layout, label)


def mode_expectation(rho: DensityMatrix | np.ndarray, label: str,
                     layout: HilbertLayout | None = None,
                     cache: dict | None = None) -> complex:
    """Tr[a_label rho] for the embedded annihilation operator."""
    if isinstance(rho, DensityMatrix):
        layout = rho.layout
        ents = rho.entries
    else:
        ents = rho
    coo = _ladder_coo(layout, label, cache)
    return complex(np.sum(coo.data * ents[coo.col, coo.row]))


def recenter_modes(
    rho: DensityMatrix,
    labels: Sequence[str],
    tol: float = 1e-7,
    max_iter: int = 8,
) -> tuple[DensityMatrix, dict[str, complex]]:
    """Displace rho to the phase-space origin of each listed mode.

    Iterates the corrective displacement (truncation makes a single pass
    inexact) until every residual is below ``tol``; raises
    :class:`FrameDriftError` if that fails.
    """
    layout = rho.layout
    ents = rho.entries
    totals = {lab: 0j for lab in labels}
    cache: dict = {}
    converged = not labels
    for _ in range(max_iter):
        resid = {lab: mode_expectation(ents, lab, layout, cache) for lab in labels}
        if all(abs(r) <= 0.05 * tol for r in resid.values()):
            converged = True
            break
        for lab, r in resid.items():
            if abs(r) > 0.05 * tol:
                d = layout.dim_of(lab)
                u = displacement(-r, d, lab).toarray()  # D(r)^dag = D(-r)
                ents = conjugate_factor(ents, u, layout, lab)
                totals[lab] += r
    if not converged:
        resid = {lab: mode_expectation(ents, lab, layout, cache) for lab in labels}
        if any(abs(r) > tol for r in resid.values()):
            worst = max(resid.items(), key=lambda kv: abs(kv[1]))
            raise FrameDriftError(
                f"residual amplitude {abs(worst[1]):.3e} on {worst[0]!r} exceeds {tol}"
            )
    return DensityMatrix(layout, ents, check=False), totals


def recenter(rho: DensityMatrix, tol: float = 1e-7):
    """Spec-level recentering over the cavity and (if present) mech factors.

    Returns (rho_centered, delta_alpha, delta_beta).
    """
    labels = [lab for lab in ("cavity", "mech") if rho.layout.has(lab)]
    state, totals = recenter_modes(rho, labels, tol=tol)
    return state, totals.get("cavity", 0j), totals.get("mech", 0j)


def frame_hamiltonian(builder: Callable[..., Operator], alpha: complex,
                      beta: complex = 0j) -> Operator:
    """Displaced-frame Hamiltonian by exact operator substitution.

    ``builder`` is a models-style constructor accepting ``alpha`` (and
    ``beta`` for hybrid layouts); dense conjugation is never used.
    """
    params = inspect.signature(builder).parameters
    kwargs = {"alpha": alpha}
    if "beta" in params:
        kwargs["beta"] = beta
    return builder(**kwargs)


def frame_channels(
    channels: Sequence[CollapseChannel], alpha: complex
) -> list[CollapseChannel]:
    """Displace the cavity loss channel: a -> a + alpha; others unchanged."""
    out = []
    for ch in channels:
        if ch.mode == "cavity" and alpha != 0:
            op = ch.operator
            shifted = Operator(
                op.layout,
                op.m + alpha * sp.identity(op.layout.dim, dtype=np.complex128, format="csr"),
            )
            out.append(CollapseChannel(shifted, ch.rate, mode=ch.mode))
        else:
            out.append(ch)
    return out


def standard_channels(
    layout: HilbertLayout,
    kappa_hz: float,
    gamma_hz: float,
    lossy_label: str = "qubit",
) -> list[CollapseChannel]:
    """Cavity photon loss plus qubit (or transmon) lowering, angular rates."""
    from .fockops import embedded_ladder, embedded_pauli

    chans = []
    if kappa_hz > 0 and layout.has("cavity"):
        a = embedded_ladder(layout, "cavity")
        chans.append(CollapseChannel(a, TWO_PI * kappa_hz, mode="cavity"))
    if gamma_hz > 0 and layout.has(lossy_label):
        if lossy_label == "qubit":
            op = embedded_pauli(layout, "minus")
        else:
            op = embedded_ladder(layout, lossy_label)
        chans.append(CollapseChannel(op, TWO_PI * gamma_hz, mode=lossy_label))
    return chans


@dataclass
class DisplacedState:
    """(rho_centered, alpha, beta): rho_sim = D(a,b) rho D(a,b)^dag."""

    rho: DensityMatrix
    alpha: complex = 0j
    beta: complex = 0j

    def offsets(self) -> dict[str, complex]:
        out = {}
        if self.rho.layout.has("cavity"):
            out["cavity"] = self.alpha
        if self.rho.layout.has("mech"):
            out["mech"] = self.beta
        return out

    def expect_substituted(self, op_builder: Callable[..., Operator]) -> complex:
        """<O>_full computed by substituting displaced mode operators."""
        params = inspect.signature(op_builder).parameters
        kwargs = {}
        if "alpha" in params:
            kwargs["alpha"] = self.alpha
        if "beta" in params:
            kwargs["beta"] = self.beta
        return op_builder(**kwargs).expect(self.rho)

    def coherent_photon_number(self) -> float:
        return abs(self.alpha) ** 2

    def coherent_phonon_number(self) -> float:
        return abs(self.beta) ** 2

    def materialize(self, check: bool = True) -> DensityMatrix:
        """Dense reconstruction D(alpha, beta) rho D^dag; small amplitudes only."""
        layout = self.rho.layout
        ents = self.rho.entries
        for lab, amp in (("cavity", self.alpha), ("mech", self.beta)):
            if layout.has(lab) and amp != 0:
                u = displacement(amp, layout.dim_of(lab), lab).toarray()
                ents = conjugate_factor(ents, u, layout, lab)
        return DensityMatrix(layout, ents, check=check)


def reconstruct(rho_centered: DensityMatrix, trajectory: FrameTrajectory) -> DisplacedState:
    """Final-state representation of Eq.-style displacement correction."""
    return DisplacedState(rho_centered, trajectory.alpha_final, trajectory.beta_final)


class FrameStepper:
    """Owns one trajectory: state, accumulated frame offsets, monitors.

    ``hamiltonian`` maps frame offsets to the interval Hamiltonian:
    called as ``hamiltonian(alpha=..., beta=..., q_offset=...)`` with only
    the keywords matching recentered factors of the layout; it may return a
    static Operator or a callable ``t -> Operator``.
    """

    def __init__(
        self,
        rho0: DensityMatrix,
        hamiltonian: Callable[..., Operator | Callable[[float], Operator]],
        cfg: StepperConfig,
        kappa_hz: float = 0.0,
        gamma_hz: float = 0.0,
        lossy_label: str = "qubit",
        initial_offsets: dict[str, complex] | None = None,
        t0: float = 0.0,
        prescribed: Sequence[dict[str, complex]] | None = None,
        center_initial: bool = True,
    ):
        layout = rho0.layout
        self.layout = layout
        self.cfg = cfg
        self.hamiltonian = hamiltonian
        self._h_params = set(inspect.signature(hamiltonian).parameters)
        self.t = t0
        self._cache: dict = {}
        present = [lab for lab in ("cavity", "mech", "transmon") if layout.has(lab)]
        labels = [
            lab
            for lab in present
            if (lab == "cavity")
            or (lab == "mech" and cfg.recenter_mech)
            or (lab == "transmon" and cfg.recenter_transmon)
        ]
        self.recenter_labels = tuple(labels)
        self.offsets = {lab: 0j for lab in present}
        if initial_offsets:
            for lab, v in initial_offsets.items():
                self.offsets[lab] = self.offsets.get(lab, 0j) + v
        self._base_channels = standard_channels(layout, kappa_hz, gamma_hz, lossy_label)
        self.trajectory = FrameTrajectory(tau=cfg.tau)
        self.prescribed = list(prescribed) if prescribed is not None else None
        self._interval = 0

        if center_initial and self.prescribed is None:
            rho0, deltas = recenter_modes(
                rho0, self.recenter_labels, tol=cfg.center_tol
            )
        else:
            deltas = {}
        self.rho = rho0
        for lab, v in deltas.items():
            self.offsets[lab] += v
        init = dict(initial_offsets) if initial_offsets else {}
        for lab, v in deltas.items():
            init[lab] = init.get(lab, 0j) + v
        self._record(init)

    def set_hamiltonian(self, builder: Callable):
        """Swap the Hamiltonian builder (drive switches change no state)."""
        self.hamiltonian = builder
        self._h_params = set(inspect.signature(builder).parameters)

    # -- bookkeeping -------------------------------------------------------
    def _record(self, deltas: dict[str, complex]):
        self.trajectory.append(
            self.t,
            deltas.get("cavity", 0j),
            deltas.get("mech", 0j),
            self.offsets.get("cavity", 0j),
            self.offsets.get("mech", 0j),
        )

    def _build_hamiltonian(self):
        kwargs = {}
        for lab, kw in MODE_KWARG.items():
            if lab in self.offsets and kw in self._h_params:
                kwargs[kw] = self.offsets[lab]
        return self.hamiltonian(**kwargs)

    def _build_channels(self) -> list[CollapseChannel]:
        chans = []
        for ch in self._base_channels:
            off = self.offsets.get(ch.mode, 0j) if ch.mode else 0j
            if off != 0:
                shifted = Operator(
                    ch.operator.layout,
                    ch.operator.m
                    + off * sp.identity(self.layout.dim, dtype=np.complex128, format="csr"),
                )
                chans.append(CollapseChannel(shifted, ch.rate, mode=ch.mode))
            else:
                chans.append(ch)
        return chans

    def _check_leakage(self):
        diag = np.real(np.diag(self.rho.entries)).reshape(self.layout.dims)
        for i, (lab, d) in enumerate(self.layout.factors):
            if lab == "qubit" or d < 3:
                continue
            top = float(np.take(diag, -1, axis=i).sum())
            if top > self.cfg.leak_tol:
                raise FockLeakageError(
                    f"top-Fock occupation {top:.3e} on {lab!r} exceeds "
                    f"{self.cfg.leak_tol} at t = {self.t:.3e} s"
                )

    # -- main loop ----------------------------------------------------------
    def step(self) -> DensityMatrix:
        cfg = self.cfg
        H = self._build_hamiltonian()
        channels = self._build_channels()
        dt = cfg.dt_substep
        if dt is None:
            dt = stable_dt(
                H, channels, cfg.tau, cfg.dt_safety, cfg.dt_max_fraction, t_probe=self.t
            )
        self.rho = integrate(
            self.rho, H, channels, cfg.tau, IntegratorConfig(dt), t0=self.t
        )
        self.t += cfg.tau
        self._check_leakage()
        if self.prescribed is not None:
            deltas = (
                self.prescribed[self._interval]
                if self._interval < len(self.prescribed)
                else {}
            )
            ents = self.rho.entries
            for lab, r in deltas.items():
                if lab in self.offsets and r != 0:
                    u = displacement(-r, self.layout.dim_of(lab), lab).toarray()
                    ents = conjugate_factor(ents, u, self.layout, lab)
            self.rho = DensityMatrix(self.layout, ents, check=False)
        else:
            self.rho, deltas = recenter_modes(
                self.rho, self.recenter_labels, tol=cfg.center_tol
            )
        for lab, r in deltas.items():
            if lab in self.offsets:
                self.offsets[lab] += r
        self._interval += 1
        self._record(deltas)
        if cfg.positivity_every and self._interval % cfg.positivity_every == 0:
            self.rho.validate(check_positivity=True)
        else:
            self.rho.validate(check_positivity=False)
        return self.rho

    def run(self, n_intervals: int | None = None, observer: Callable | None = None):
        n = self.cfg.n_intervals if n_intervals is None else n_intervals
        for _ in range(n):
            self.step()
            if observer is not None:
                observer(self.t, self.rho, dict(self.offsets))
        return self.state()

    def state(self) -> DisplacedState:
        return DisplacedState(
            self.rho,
            self.offsets.get("cavity", 0j),
            self.offsets.get("mech", 0j),
        )
