"""Gaussian states and symplectic operations over optical quadratures.

Quadratures are ordered ``(X1, Y1, X2, Y2, ..., XN, YN)`` and measured in
shot-noise units: a vacuum quadrature has variance 1 and ``[X, Y] = 2i``.
A mode operator is ``b = X + iY``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMPLECTIC_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form for ``n_modes`` modes in interleaved ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_n_modes(n_modes: int) -> None:
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError(f"n_modes must be a positive integer, got {n_modes!r}")


def _check_modes(n_modes: int, *modes: int) -> None:
    _check_n_modes(n_modes)
    for m in modes:
        if not 0 <= m < n_modes:
            raise ValueError(f"mode index {m} out of range for {n_modes} modes")
    if len(set(modes)) != len(modes):
        raise ValueError(f"mode indices must be distinct, got {modes}")


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an ``n_modes``-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2:
            raise ValueError("mean must be a vector of even length")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("state moments must be finite")
        # stored exactly symmetric
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))
        object.__setattr__(self, "n_modes", mean.size // 2)

    def is_physical(self, tol: float = UNCERTAINTY_TOL) -> bool:
        """Check ``cov + i*Omega >= 0`` up to ``tol``."""
        eig = np.linalg.eigvalsh(self.cov + 1j * omega(self.n_modes))
        return bool(eig.min() >= -tol)

    def quadrature_variance(self, index: int) -> float:
        return float(self.cov[index, index])

    def reduced(self, modes) -> GaussianState:
        """Marginal state on the given modes, in the given order."""
        idx = np.array([[2 * m, 2 * m + 1] for m in modes]).ravel()
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])


@dataclass(frozen=True)
class SymplecticOp:
    matrix: np.ndarray
    description: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be square 2N x 2N, got {m.shape}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def symplectic_error(self) -> float:
        """Largest elementwise deviation of ``S Omega S^T`` from ``Omega``."""
        om = omega(self.n_modes)
        return float(np.abs(self.matrix @ om @ self.matrix.T - om).max())

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        return self.symplectic_error() < tol

    def inverse(self) -> SymplecticOp:
        om = omega(self.n_modes)
        # S^{-1} = -Omega S^T Omega for symplectic S
        return SymplecticOp(-om @ self.matrix.T @ om, f"inv({self.description})")

    def __matmul__(self, other: SymplecticOp) -> SymplecticOp:
        """Composition: ``(a @ b)`` applies ``b`` first, then ``a``."""
        if not isinstance(other, SymplecticOp):
            return NotImplemented
        if other.n_modes != self.n_modes:
            raise ValueError("cannot compose ops on different mode counts")
        desc = " . ".join(d for d in (self.description, other.description) if d)
        return SymplecticOp(self.matrix @ other.matrix, desc)


@dataclass(frozen=True)
class LinearForm:
    """Weights on the quadratures plus weights on the classical signal ``(X_s, Y_s)``."""

    coeffs: np.ndarray
    signal_coeffs: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        sig = tuple(float(v) for v in self.signal_coeffs)
        if c.ndim != 1 or len(sig) != 2:
            raise ValueError("coeffs must be a vector and signal_coeffs a pair")
        if not (np.all(np.isfinite(c)) and all(np.isfinite(sig))):
            raise ValueError("linear form entries must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "signal_coeffs", sig)

    def __add__(self, other: LinearForm) -> LinearForm:
        return LinearForm(
            self.coeffs + other.coeffs,
            (
                self.signal_coeffs[0] + other.signal_coeffs[0],
                self.signal_coeffs[1] + other.signal_coeffs[1],
            ),
        )

    def __mul__(self, k: float) -> LinearForm:
        return LinearForm(k * self.coeffs, (k * self.signal_coeffs[0], k * self.signal_coeffs[1]))

    __rmul__ = __mul__


@dataclass(frozen=True)
class FormVariance:
    total: float
    quantum: float
    signal: float


def vacuum_state(n_modes: int) -> GaussianState:
    _check_n_modes(n_modes)
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def identity(n_modes: int) -> SymplecticOp:
    _check_n_modes(n_modes)
    return SymplecticOp(np.eye(2 * n_modes), "I")


def _embed(n_modes: int, block: np.ndarray, modes) -> np.ndarray:
    s = np.eye(2 * n_modes)
    idx = np.array([[2 * m, 2 * m + 1] for m in modes]).ravel()
    s[np.ix_(idx, idx)] = block
    return s


def two_mode_squeezer(r: float, i: int, j: int, n_modes: int) -> SymplecticOp:
    """NOPA at deamplification acting on modes ``i`` and ``j``.

    ``X_i -> X_i cosh r - X_j sinh r``, ``Y_i -> Y_i cosh r + Y_j sinh r``
    and symmetrically for mode ``j``, so ``X_i + X_j`` and ``Y_i - Y_j`` are
    squeezed by ``e^{-r}``.
    """
    if r < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")
    _check_modes(n_modes, i, j)
    ch, sh = np.cosh(r), np.sinh(r)
    block = np.array(
        [
            [ch, 0.0, -sh, 0.0],
            [0.0, ch, 0.0, sh],
            [-sh, 0.0, ch, 0.0],
            [0.0, sh, 0.0, ch],
        ]
    )
    return SymplecticOp(_embed(n_modes, block, (i, j)), f"TMS({r:g},{i},{j})")


def beamsplitter(t: float, phase: float, i: int, j: int, n_modes: int) -> SymplecticOp:
    """Lossless beamsplitter with power transmittance ``t`` for port ``i``.

    ``b_i -> sqrt(t) b_i + sqrt(1-t) e^{i phase} b_j`` and
    ``b_j -> -sqrt(1-t) e^{-i phase} b_i + sqrt(t) b_j``.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"transmittance must lie in (0, 1), got {t}")
    _check_modes(n_modes, i, j)
    a, b = np.sqrt(t), np.sqrt(1.0 - t)
    c, s = np.cos(phase), np.sin(phase)
    block = np.array(
        [
            [a, 0.0, b * c, -b * s],
            [0.0, a, b * s, b * c],
            [-b * c, -b * s, a, 0.0],
            [b * s, -b * c, 0.0, a],
        ]
    )
    return SymplecticOp(_embed(n_modes, block, (i, j)), f"BS({t:g},{phase:g},{i},{j})")


def phase_shift(theta: float, i: int, n_modes: int) -> SymplecticOp:
    """``b_i -> e^{i theta} b_i``."""
    _check_modes(n_modes, i)
    c, s = np.cos(theta), np.sin(theta)
    block = np.array([[c, -s], [s, c]])
    return SymplecticOp(_embed(n_modes, block, (i,)), f"PS({theta:g},{i})")


def mode_permutation(order, n_modes: int) -> SymplecticOp:
    """Relabel modes so that output mode ``k`` is input mode ``order[k]``."""
    _check_n_modes(n_modes)
    if sorted(order) != list(range(n_modes)):
        raise ValueError(f"{order!r} is not a permutation of {n_modes} modes")
    s = np.zeros((2 * n_modes, 2 * n_modes))
    for k, m in enumerate(order):
        s[2 * k, 2 * m] = 1.0
        s[2 * k + 1, 2 * m + 1] = 1.0
    return SymplecticOp(s, f"P{tuple(order)}")


def apply(op: SymplecticOp, state: GaussianState) -> GaussianState:
    if op.n_modes != state.n_modes:
        raise ValueError(
            f"op acts on {op.n_modes} modes but state has {state.n_modes}"
        )
    s = op.matrix
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def quadrature_form(n_modes: int, terms, signal=(0.0, 0.0)) -> LinearForm:
    """Build a form from ``(mode, 'x'|'y', weight)`` triples."""
    c = np.zeros(2 * n_modes)
    for mode, quad, weight in terms:
        _check_modes(n_modes, mode)
        c[2 * mode + _quad_offset(quad)] += weight
    return LinearForm(c, signal)


def _quad_offset(quad: str) -> int:
    try:
        return {"x": 0, "y": 1}[quad.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"quadrature must be 'x' or 'y', got {quad!r}") from None


def linear_form_variance(
    state: GaussianState, form: LinearForm, signal_vars=(0.0, 0.0)
) -> FormVariance:
    """Variance of ``c . q + a X_s + b Y_s`` with independent Gaussian signals."""
    c = form.coeffs
    if c.size != 2 * state.n_modes:
        raise ValueError(
            f"form has {c.size} coefficients but state has {2 * state.n_modes} quadratures"
        )
    vx, vy = signal_vars
    if vx < 0 or vy < 0:
        raise ValueError("signal variances must be non-negative")
    quantum = float(c @ state.cov @ c)
    ax, ay = form.signal_coeffs
    signal = ax * ax * vx + ay * ay * vy
    return FormVariance(quantum + signal, quantum, signal)
