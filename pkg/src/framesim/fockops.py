"""Truncated-Fock operator algebra on labeled tensor-product spaces.

All operators live on a :class:`HilbertLayout`, an ordered list of labeled
factors whose order fixes the Kronecker-product convention (first factor is
the leftmost/slowest index).  Operators are stored sparse (Hamiltonians are
banded); density matrices are dense.

Sign conventions, fixed here once and used everywhere:

* ``sigma_z |e> = +|e>``, ``sigma_z |g> = -|g>``; basis order ``(|e>, |g>)``
  so ``pauli("z") = diag(1, -1)`` and ``sigma_-`` lowers ``|e> -> |g>``.
* ``displacement(alpha) = expm(alpha a^dag - conj(alpha) a)``; for a drive
  of the form ``(E/2) a^dag + h.c.`` with real positive ``E`` the coherent
  amplitude of a resonantly driven cavity evolves as ``-i E t / 2``.
* ``rotation(phi) = diag(exp(-i n phi))`` and
  ``squeeze(xi) = expm((xi a^dag^2 - conj(xi) a^2) / 2)``; with vacuum
  quadrature variance 1/2, ``squeeze(r)|0>`` for real ``r > 0`` has variance
  ``exp(2r)/2`` along x (anti-squeezed) and ``exp(-2r)/2`` along p.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

VALID_LABELS = ("cavity", "qubit", "transmon", "mech", "mode")

TRACE_TOL = 1e-8
HERM_TOL = 1e-10
EIGMIN_TOL = -1e-7
HAMILTONIAN_HERM_TOL = 1e-12
# Poisson tail mass outside the truncated space above which a displacement
# (or squeeze support estimate) is considered unsafe.
TRUNCATION_WARN_TAIL = 10 ** -2.5


class InvalidDimensionError(ValueError):
    pass


class UnknownLabelError(KeyError):
    pass


class LayoutMismatchError(ValueError):
    pass


class NonHermitianError(ValueError):
    pass


class StateInvariantError(ValueError):
    """A density matrix violated trace/Hermiticity/positivity tolerances."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered list of (label, dimension) factors defining tensor ordering."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [lab for lab, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        for lab, d in self.factors:
            if lab not in VALID_LABELS:
                raise UnknownLabelError(f"unknown factor label {lab!r}")
            if not isinstance(d, int) or d < 1:
                raise InvalidDimensionError(f"factor {lab!r} has dimension {d}")

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "HilbertLayout":
        return cls(tuple((str(lab), int(d)) for lab, d in factors))

    @property
    def dim(self) -> int:
        n = 1
        for _, d in self.factors:
            n *= d
        return n

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    def index(self, label: str) -> int:
        for i, (lab, _) in enumerate(self.factors):
            if lab == label:
                return i
        raise UnknownLabelError(f"no factor labeled {label!r} in {self.labels}")

    def dim_of(self, label: str) -> int:
        return self.factors[self.index(label)][1]

    def has(self, label: str) -> bool:
        return label in self.labels

    def sub(self, labels: tuple[str, ...]) -> "HilbertLayout":
        return HilbertLayout(tuple(f for f in self.factors if f[0] in labels))


def single_mode_layout(dim: int, label: str = "mode") -> HilbertLayout:
    return HilbertLayout.of((label, dim))


class Operator:
    """Complex sparse matrix tagged with its layout.

    Binary operations require layout equality.  ``hamiltonian=True`` asserts
    Hermiticity to within ``1e-12 * max|H|`` at construction.
    """

    __slots__ = ("layout", "m", "hamiltonian")

    def __init__(self, layout: HilbertLayout, m, hamiltonian: bool = False):
        m = sp.csr_matrix(m, dtype=np.complex128)
        if m.shape != (layout.dim, layout.dim):
            raise LayoutMismatchError(
                f"matrix shape {m.shape} does not match layout dim {layout.dim}"
            )
        self.layout = layout
        self.m = m
        self.hamiltonian = bool(hamiltonian)
        if self.hamiltonian:
            scale = self.max_abs()
            if scale > 0.0 and hermiticity_defect(m) > HAMILTONIAN_HERM_TOL * scale:
                raise NonHermitianError(
                    "Hamiltonian-tagged operator is not Hermitian within tolerance"
                )

    # -- algebra ----------------------------------------------------------
    def _check(self, other: "Operator"):
        if self.layout != other.layout:
            raise LayoutMismatchError("operator layouts differ")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.layout, self.m @ other.m)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.layout, self.m + other.m)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.layout, self.m - other.m)

    def __mul__(self, c) -> "Operator":
        return Operator(self.layout, self.m * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.m)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.m.conjugate().transpose().tocsr())

    def toarray(self) -> np.ndarray:
        return self.m.toarray()

    def max_abs(self) -> float:
        return 0.0 if self.m.nnz == 0 else float(np.abs(self.m.data).max())

    def tag_hamiltonian(self) -> "Operator":
        return Operator(self.layout, self.m, hamiltonian=True)

    def expect(self, rho: "DensityMatrix | np.ndarray") -> complex:
        arr = rho.entries if isinstance(rho, DensityMatrix) else rho
        # Tr[O rho] via sum over sparse entries: sum_ij O_ij rho_ji
        coo = self.m.tocoo()
        return complex(np.sum(coo.data * arr[coo.col, coo.row]))

    def __repr__(self):
        return f"Operator(dim={self.layout.dim}, nnz={self.m.nnz}, labels={self.layout.labels})"


def hermiticity_defect(m) -> float:
    d = m - m.conjugate().transpose()
    if sp.issparse(d):
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())
    return float(np.abs(d).max())


class DensityMatrix:
    """Hermitian unit-trace state on a layout; entries stored dense.

    Trace and Hermiticity are enforced at construction; the minimum
    eigenvalue is monitored (never clamped) via :meth:`validate`.
    """

    __slots__ = ("layout", "entries")

    def __init__(self, layout: HilbertLayout, entries: np.ndarray, check: bool = True):
        entries = np.asarray(entries, dtype=np.complex128)
        if entries.shape != (layout.dim, layout.dim):
            raise LayoutMismatchError(
                f"entries shape {entries.shape} does not match layout dim {layout.dim}"
            )
        self.layout = layout
        self.entries = entries
        if check:
            tr = abs(self.trace() - 1.0)
            if tr > TRACE_TOL:
                raise StateInvariantError(f"|Tr rho - 1| = {tr:.3e} exceeds {TRACE_TOL}")
            hd = hermiticity_defect(entries)
            if hd > HERM_TOL:
                raise StateInvariantError(f"Hermiticity defect {hd:.3e} exceeds {HERM_TOL}")

    @classmethod
    def from_pure(cls, layout: HilbertLayout, vec: np.ndarray) -> "DensityMatrix":
        v = np.asarray(vec, dtype=np.complex128).ravel()
        v = v / np.linalg.norm(v)
        return cls(layout, np.outer(v, v.conj()))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))[0])

    def validate(self, check_positivity: bool = True):
        tr = abs(self.trace() - 1.0)
        if tr > TRACE_TOL:
            raise StateInvariantError(f"|Tr rho - 1| = {tr:.3e}")
        hd = hermiticity_defect(self.entries)
        if hd > HERM_TOL:
            raise StateInvariantError(f"Hermiticity defect {hd:.3e}")
        if check_positivity:
            lo = self.min_eigenvalue()
            if lo < EIGMIN_TOL:
                raise StateInvariantError(f"min eigenvalue {lo:.3e} below {EIGMIN_TOL}")

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, self.entries.copy(), check=False)

    def __repr__(self):
        return f"DensityMatrix(dim={self.layout.dim}, labels={self.layout.labels})"


# ---------------------------------------------------------------------------
# single-factor constructors
# ---------------------------------------------------------------------------


def ladder(dim: int, label: str = "mode") -> Operator:
    """Annihilation operator: a[n-1, n] = sqrt(n)."""
    if dim < 2:
        raise InvalidDimensionError(f"ladder needs dim >= 2, got {dim}")
    a = sp.diags(np.sqrt(np.arange(1, dim)), offsets=1, format="csr", dtype=np.complex128)
    return Operator(single_mode_layout(dim, label), a)


def number(dim: int, label: str = "mode") -> Operator:
    if dim < 2:
        raise InvalidDimensionError(f"number needs dim >= 2, got {dim}")
    n = sp.diags(np.arange(dim, dtype=float), format="csr", dtype=np.complex128)
    return Operator(single_mode_layout(dim, label), n)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "plus": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "minus": np.array([[0, 0], [1, 0]], dtype=np.complex128),
}


def pauli(kind: str) -> Operator:
    """Pauli operators in the (|e>, |g>) basis; sigma_- lowers |e> -> |g>."""
    try:
        m = _PAULI[kind]
    except KeyError:
        raise UnknownLabelError(f"unknown Pauli kind {kind!r}") from None
    return Operator(single_mode_layout(2, "qubit"), sp.csr_matrix(m))


def identity(layout: HilbertLayout) -> Operator:
    return Operator(layout, sp.identity(layout.dim, dtype=np.complex128, format="csr"))


def _poisson_tail(n_floor: int, lam: float) -> float:
    # P(X >= n_floor) for X ~ Poisson(lam), via the regularized incomplete gamma
    from scipy.special import gammainc

    if lam <= 0.0:
        return 0.0
    return float(gammainc(n_floor, lam))


def displacement(alpha: complex, dim: int, label: str = "mode") -> Operator:
    """D(alpha) = expm(alpha a^dag - conj(alpha) a) in the truncated space."""
    if dim < 2:
        raise InvalidDimensionError(f"displacement needs dim >= 2, got {dim}")
    tail = _poisson_tail(dim, abs(alpha) ** 2)
    if tail > TRUNCATION_WARN_TAIL:
        warnings.warn(
            f"displacement amplitude |alpha|^2 = {abs(alpha)**2:.3g} is truncation-unsafe "
            f"for dim {dim} (tail mass {tail:.2e})",
            TruncationWarning,
            stacklevel=2,
        )
    a = ladder(dim, label)
    gen = (alpha * a.dag().m - np.conj(alpha) * a.m).toarray()
    return Operator(single_mode_layout(dim, label), expm(gen))


def squeeze(xi: complex, dim: int, label: str = "mode") -> Operator:
    """S(xi) = expm((xi a^dag^2 - conj(xi) a^2) / 2)."""
    if dim < 4:
        raise InvalidDimensionError(f"squeeze needs dim >= 4, got {dim}")
    a = ladder(dim, label)
    ad = a.dag()
    gen = 0.5 * (xi * (ad.m @ ad.m) - np.conj(xi) * (a.m @ a.m))
    return Operator(single_mode_layout(dim, label), expm(gen.toarray()))


def rotation(phi: float, dim: int, label: str = "mode") -> Operator:
    """R(phi) = diag(exp(-i n phi))."""
    d = np.exp(-1j * phi * np.arange(dim))
    return Operator(single_mode_layout(dim, label), sp.diags(d, format="csr"))


def qubit_rotation_y(theta_half: float) -> Operator:
    """R_y(theta/2) = expm(-i (theta/2) sigma_y), real 2x2 rotation."""
    c, s = np.cos(theta_half), np.sin(theta_half)
    m = np.array([[c, -s], [s, c]], dtype=np.complex128)
    return Operator(single_mode_layout(2, "qubit"), sp.csr_matrix(m))


# ---------------------------------------------------------------------------
# composite-space plumbing
# ---------------------------------------------------------------------------


def embed(op: Operator, target: str, layout: HilbertLayout) -> Operator:
    """Tensor op into `layout` acting on factor `target`, identity elsewhere."""
    i = layout.index(target)
    d_target = layout.dims[i]
    if op.layout.dim != d_target:
        raise LayoutMismatchError(
            f"operator dim {op.layout.dim} != target factor dim {d_target}"
        )
    m = None
    for j, (_, d) in enumerate(layout.factors):
        blk = op.m if j == i else sp.identity(d, dtype=np.complex128, format="csr")
        m = blk if m is None else sp.kron(m, blk, format="csr")
    return Operator(layout, m)


@lru_cache(maxsize=512)
def embedded_ladder(layout: HilbertLayout, label: str) -> Operator:
    """Cached embed(ladder) on the composite space; treat as immutable."""
    return embed(ladder(layout.dim_of(label), label), label, layout)


@lru_cache(maxsize=512)
def embedded_ladder_dag(layout: HilbertLayout, label: str) -> Operator:
    return embedded_ladder(layout, label).dag()


@lru_cache(maxsize=128)
def embedded_pauli(layout: HilbertLayout, kind: str) -> Operator:
    return embed(pauli(kind), "qubit", layout)


@lru_cache(maxsize=128)
def identity_csr(dim: int) -> sp.csr_matrix:
    return sp.identity(dim, dtype=np.complex128, format="csr")


def partial_trace(rho: DensityMatrix, keep: str | tuple[str, ...]) -> DensityMatrix:
    """Reduced state over the kept labels (in layout order)."""
    keep_labels = (keep,) if isinstance(keep, str) else tuple(keep)
    layout = rho.layout
    dims = layout.dims
    k = len(dims)
    keep_idx = sorted(layout.index(lab) for lab in keep_labels)
    t = rho.entries.reshape(*dims, *dims)
    # trace out non-kept axes pairwise, from the highest index down
    for ax in reversed([i for i in range(k) if i not in keep_idx]):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    sub = layout.sub(tuple(layout.labels[i] for i in keep_idx))
    d = sub.dim
    return DensityMatrix(sub, t.reshape(d, d), check=False)


def _left_apply_factor(u: np.ndarray, x: np.ndarray, layout: HilbertLayout, i: int) -> np.ndarray:
    """(I (x) U (x) I) @ x via one 2D GEMM (x of shape (dim, m))."""
    dims = layout.dims
    d_pre = 1
    for d in dims[:i]:
        d_pre *= d
    d_i = dims[i]
    dim = layout.dim
    m = x.shape[1]
    rest = (dim // (d_pre * d_i)) * m
    if d_pre == 1:
        y = u @ x.reshape(d_i, rest)
        return y.reshape(dim, m)
    xt = np.ascontiguousarray(
        x.reshape(d_pre, d_i, rest).transpose(1, 0, 2)
    ).reshape(d_i, d_pre * rest)
    y = (u @ xt).reshape(d_i, d_pre, rest).transpose(1, 0, 2)
    return np.ascontiguousarray(y).reshape(dim, m)


def conjugate_factor(entries: np.ndarray, u: np.ndarray, layout: HilbertLayout, label: str) -> np.ndarray:
    """Return U rho U^dag with U acting on a single factor.

    U rho U^dag = L((L(rho))^dag)^dag with L the embedded left product, so
    everything stays in plain 2D BLAS calls.
    """
    i = layout.index(label)
    y = _left_apply_factor(u, np.ascontiguousarray(entries), layout, i)
    y = np.ascontiguousarray(y.conj().T)
    y = _left_apply_factor(u, y, layout, i)
    return np.ascontiguousarray(y.conj().T)


def basis_state(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return v


def kron_state(*vecs: np.ndarray) -> np.ndarray:
    out = vecs[0]
    for v in vecs[1:]:
        out = np.kron(out, v)
    return out
