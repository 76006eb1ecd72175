"""Lindblad right-hand side and fixed-step RK4 propagation.

Hamiltonians enter in angular units (rad/s, hbar absorbed) and must be
Hermitian-tagged; collapse rates are angular decay rates (1/s).  Static
Hamiltonians are passed as :class:`~framesim.fockops.Operator`, schedules as
callables ``t -> Operator`` sampled at the RK4 stage times (t, t+dt/2, t+dt).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .fockops import (
    DensityMatrix,
    LayoutMismatchError,
    NonHermitianError,
    Operator,
    hermiticity_defect,
)

TRACE_DRIFT_TOL = 1e-9
HERM_DRIFT_TOL = 1e-9


class IntegratorDivergenceError(RuntimeError):
    """Trace or Hermiticity drifted beyond tolerance at time ``t``."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6e} s")
        self.t = t


@dataclass(frozen=True)
class CollapseChannel:
    """One Lindblad channel; ``rate`` is the angular decay rate (1/s).

    ``mode`` optionally names the layout factor whose displaced frame this
    channel follows (used by the frame stepper to displace cavity loss).
    """

    operator: Operator
    rate: float
    mode: str | None = None

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"collapse rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Substep size (s) for the fixed-step RK4 propagator."""

    dt: float
    method: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")


def dissipator(L: Operator, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """Standard dissipator D[L] rho = L rho L^dag - 1/2 {L^dag L, rho}."""
    if isinstance(rho, DensityMatrix):
        if rho.layout != L.layout:
            raise LayoutMismatchError("dissipator layout mismatch")
        arr = rho.entries
    else:
        arr = np.asarray(rho)
    lm = L.m
    ld = lm.conjugate().transpose().tocsr()
    ldl = (ld @ lm).tocsr()
    x = lm @ arr
    out = x @ ld
    y = ldl @ arr
    out -= 0.5 * (y + y.conj().T)
    return out


def rhs(
    H: Operator,
    channels: Sequence[CollapseChannel],
    rho: DensityMatrix | np.ndarray,
) -> np.ndarray:
    """-i[H, rho] + sum_k rate_k D[L_k] rho, for a Hermitian-tagged H."""
    if not H.hamiltonian:
        raise NonHermitianError("rhs requires a Hamiltonian-tagged operator")
    arr = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    m = H.m @ arr
    out = -1j * (m - m.conj().T)
    for ch in channels:
        if ch.rate != 0.0:
            out += ch.rate * dissipator(ch.operator, arr)
    return out


class _Propagator:
    """Preassembled effective operators for the hot RK4 loop.

    Uses Heff = H - (i/2) sum rate L^dag L so one sparse product gives both
    the commutator and the anticommutator halves:
    rhs = -i (Heff rho - (Heff rho)^dag) + sum rate L (L rho)^dag,
    exact for Hermitian rho (preserved by RK4 up to roundoff).
    """

    def __init__(self, hamiltonian, channels: Sequence[CollapseChannel]):
        self.static = isinstance(hamiltonian, Operator)
        self.h_src = hamiltonian
        self.Ls = [ch.operator.m.tocsr() for ch in channels if ch.rate != 0.0]
        self.rates = [ch.rate for ch in channels if ch.rate != 0.0]
        k = None
        for m, rate in zip(self.Ls, self.rates):
            term = rate * (m.conjugate().transpose().tocsr() @ m)
            k = term if k is None else k + term
        self._k = k  # sum rate L^dag L, or None
        self._checked = False
        if self.static:
            self._heff = self._effective(hamiltonian)

    def _effective(self, H: Operator):
        if not H.hamiltonian:
            raise NonHermitianError("integrate requires Hamiltonian-tagged operators")
        m = H.m
        if self._k is not None:
            m = m - 0.5j * self._k
        return m.tocsr()

    def heff(self, t: float):
        if self.static:
            return self._heff
        H = self.h_src(t)
        if not self._checked:
            heff = self._effective(H)
            self._checked = True
            return heff
        m = H.m
        if self._k is not None:
            m = m - 0.5j * self._k
        return m

    def rhs(self, heff, arr: np.ndarray) -> np.ndarray:
        m = heff @ arr
        out = -1j * m
        out += 1j * m.conj().T
        for rate, lm in zip(self.rates, self.Ls):
            w = lm @ arr
            wd = np.ascontiguousarray(w.conj().T)
            out += rate * (lm @ wd)  # L (L rho)^dag = L rho L^dag
        return out


def _empty_csr(n: int):
    return (
        np.zeros(0, np.complex128),
        np.zeros(0, np.int32),
        np.zeros(n + 1, np.int32),
    )


def _csr_parts(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = m.tocsr()
    m.sort_indices()
    return (
        np.ascontiguousarray(m.data, np.complex128),
        np.ascontiguousarray(m.indices, np.int32),
        np.ascontiguousarray(m.indptr, np.int32),
    )


def integrate(
    rho0: DensityMatrix,
    hamiltonian: Operator | Callable[[float], Operator],
    channels: Sequence[CollapseChannel],
    span: float,
    cfg: IntegratorConfig,
    t0: float = 0.0,
) -> DensityMatrix:
    """Propagate rho through [t0, t0 + span] with fixed-step RK4."""
    if span <= 0:
        raise ValueError("span must be positive")
    if isinstance(hamiltonian, Operator) and hamiltonian.layout != rho0.layout:
        raise LayoutMismatchError("Hamiltonian layout differs from state layout")
    for ch in channels:
        if ch.operator.layout != rho0.layout:
            raise LayoutMismatchError("channel layout differs from state layout")

    from . import _fastpath

    prop = _Propagator(hamiltonian, channels)
    n_steps = max(1, int(np.ceil(span / cfg.dt - 1e-12)))
    dt = span / n_steps
    arr = rho0.entries.copy()

    if _fastpath.HAVE_NUMBA and prop.static and len(prop.Ls) <= 2:
        hd_, hi_, hp_ = _csr_parts(prop._heff)
        n = arr.shape[0]
        parts = [_csr_parts(m) for m in prop.Ls]
        rates = list(prop.rates)
        while len(parts) < 2:
            parts.append(_empty_csr(n))
            rates.append(0.0)
        (l1d, l1i, l1p), (l2d, l2i, l2p) = parts
        fail = _fastpath.rk4_span(
            hd_, hi_, hp_, l1d, l1i, l1p, rates[0], l2d, l2i, l2p, rates[1],
            arr, dt, n_steps, TRACE_DRIFT_TOL,
        )
        if fail >= 0:
            raise IntegratorDivergenceError("trace drift", t0 + (fail + 1) * dt)
        t = t0 + span
    elif (
        _fastpath.HAVE_NUMBA
        and not prop.static
        and not prop.Ls
        and hasattr(hamiltonian, "data_at")
    ):
        prop.heff(t0)  # tag check on first fetch
        hi_ = np.ascontiguousarray(hamiltonian.indices, np.int32)
        hp_ = np.ascontiguousarray(hamiltonian.indptr, np.int32)
        k = np.empty_like(arr)
        x = np.empty_like(arr)
        acc = np.empty_like(arr)
        w1 = np.empty_like(arr)
        tr0 = np.real(np.trace(arr))
        t = t0
        for _ in range(n_steps):
            d1 = hamiltonian.data_at(t)
            d2 = hamiltonian.data_at(t + 0.5 * dt)
            d3 = hamiltonian.data_at(t + dt)
            _fastpath.rk4_step_td(d1, d2, d3, hi_, hp_, arr, dt, k, x, acc, w1)
            t += dt
            drift = abs(np.real(np.trace(arr)) - tr0)
            if drift > TRACE_DRIFT_TOL or not np.isfinite(drift):
                raise IntegratorDivergenceError(f"trace drift {drift:.3e}", t)
    else:
        tr0 = np.real(np.trace(arr))
        t = t0
        static = prop.static
        if static:
            h1 = h2 = h3 = prop.heff(t)
        for _ in range(n_steps):
            if not static:
                h1 = prop.heff(t)
                h2 = prop.heff(t + 0.5 * dt)
                h3 = prop.heff(t + dt)
            k1 = prop.rhs(h1, arr)
            k2 = prop.rhs(h2, arr + (0.5 * dt) * k1)
            k3 = prop.rhs(h2, arr + (0.5 * dt) * k2)
            k4 = prop.rhs(h3, arr + dt * k3)
            k2 += k3
            k1 += k4
            k1 += 2.0 * k2
            arr += (dt / 6.0) * k1
            t += dt
            drift = abs(np.real(np.trace(arr)) - tr0)
            if drift > TRACE_DRIFT_TOL or not np.isfinite(drift):
                raise IntegratorDivergenceError(f"trace drift {drift:.3e}", t)
    hd = hermiticity_defect(arr)
    if hd > HERM_DRIFT_TOL:
        raise IntegratorDivergenceError(f"Hermiticity drift {hd:.3e}", t)
    return DensityMatrix(rho0.layout, arr, check=False)


def gershgorin_scale(hamiltonian: Operator | Callable[[float], Operator],
                     channels: Sequence[CollapseChannel] = (),
                     t_probe: float = 0.0) -> float:
    """Deterministic bound on the spectral scale of the generator (rad/s)."""
    H = hamiltonian if isinstance(hamiltonian, Operator) else hamiltonian(t_probe)
    scale = float(np.abs(H.m).sum(axis=1).max())
    for ch in channels:
        if ch.rate != 0.0:
            lm = ch.operator.m
            ldl = lm.conjugate().transpose() @ lm
            scale += 0.5 * ch.rate * float(np.abs(ldl).sum(axis=1).max())
    return scale


def stable_dt(
    hamiltonian,
    channels: Sequence[CollapseChannel],
    tau: float,
    safety: float = 0.35,
    dt_max_fraction: float = 0.1,
    t_probe: float = 0.0,
) -> float:
    """Substep keeping RK4 well inside its stability region.

    Defaults to tau/10 when the dynamics is slow; otherwise safety/scale so
    the fastest Bohr frequency advances <= 2*safety rad per step.  For
    time-dependent schedules the scale is probed at two incommensurate
    times inside the interval.
    """
    scale = gershgorin_scale(hamiltonian, channels, t_probe)
    if not isinstance(hamiltonian, Operator):
        scale = max(scale, gershgorin_scale(hamiltonian, channels, t_probe + 0.37 * tau))
    dt = tau * dt_max_fraction
    if scale > 0.0:
        dt = min(dt, safety / scale)
    return dt
