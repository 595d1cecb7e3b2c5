"""Lorentz/Drude susceptibilities in frequency and time, plus passivity and causality checks.

Conventions
-----------
The temporal Fourier transform is ``X^(w) = int X(t) exp(i w t) dt`` without the
``1/sqrt(2 pi)`` prefactor, so that a Drude pole ``(w_p, 0, 0)`` has the time kernel
``lambda(t) = w_p**2 * theta(t)`` and ``lambda^(w) = w_p**2 / (-i w)``.

A single Lorentz pole contributes

    chi^(w)    = w_p**2 / (w_0**2 - w**2 - 2 i gamma w)
    lambda^(w) = -i w chi^(w)
    lambda(t)  = w_p**2 exp(-gamma t) (cos(nu t) - gamma sin(nu t) / nu),   t >= 0

with ``nu**2 = w_0**2 - gamma**2``.  For a Drude pole (``w_0 = 0``) the kernel
reduces to ``w_p**2 exp(-2 gamma t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import NonFiniteEntry, PoleOnRealAxis, UndampedPole

# |nu t|**2 below which sin(nu t)/nu and cos(nu t) use their Taylor series
_SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class LorentzPole:
    """One damped resonance of a Lorentz susceptibility.

    Parameters
    ----------
    omega_p : float
        Plasma (strength) frequency, > 0.
    omega_0 : float
        Resonance frequency, >= 0.  Zero gives a Drude pole.
    gamma : float
        Damping rate, >= 0.
    """

    omega_p: float
    omega_0: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError(f"omega_p must be > 0, got {self.omega_p}")
        if not self.omega_0 >= 0:
            raise ValueError(f"omega_0 must be >= 0, got {self.omega_0}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def nu_squared(self) -> float:
        return self.omega_0**2 - self.gamma**2

    @property
    def nu(self) -> complex:
        """Oscillation frequency of the kernel; imaginary when overdamped."""
        return complex(np.sqrt(complex(self.nu_squared)))

    @property
    def is_drude(self) -> bool:
        return self.omega_0 == 0.0


@dataclass(frozen=True)
class LorentzMaterial:
    """Isotropic material: a relative constant plus a (possibly empty) sum of poles."""

    poles: tuple[LorentzPole, ...] = ()
    rel: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(self.poles))
        if not self.rel > 0:
            raise ValueError(f"rel must be > 0, got {self.rel}")

    @classmethod
    def drude(cls, omega_p: float, gamma: float = 0.0, rel: float = 1.0) -> "LorentzMaterial":
        return cls((LorentzPole(omega_p, 0.0, gamma),), rel)

    @property
    def strength(self) -> float:
        """Sum of w_p**2 over poles, i.e. lambda(0+)."""
        return float(sum(p.omega_p**2 for p in self.poles))


def _check_real_axis(pole: LorentzPole, omega: np.ndarray) -> None:
    if pole.gamma == 0.0 and np.any(np.abs(omega) == pole.omega_0):
        raise PoleOnRealAxis(
            f"undamped pole at omega_0={pole.omega_0} evaluated on its resonance"
        )


def chi_hat(mat: LorentzMaterial, omega):
    """Frequency-domain susceptibility of ``mat`` at ``omega`` (scalar or array)."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    for p in mat.poles:
        _check_real_axis(p, w)
        out += p.omega_p**2 / (p.omega_0**2 - w * w - 2j * p.gamma * w)
    return out[()] if out.ndim == 0 else out


def lambda_hat(mat: LorentzMaterial, omega):
    """``-i omega chi_hat``, evaluated without the removable 0/0 of damped Drude poles."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    for p in mat.poles:
        if p.is_drude:
            # -i w * wp^2 / (-w (w + 2 i g)) simplifies to wp^2 / (2 g - i w)
            if p.gamma == 0.0 and np.any(w == 0.0):
                raise PoleOnRealAxis("undamped Drude pole evaluated at omega = 0")
            out += p.omega_p**2 / (2.0 * p.gamma - 1j * w)
        else:
            _check_real_axis(p, w)
            out += -1j * w * p.omega_p**2 / (p.omega_0**2 - w * w - 2j * p.gamma * w)
    return out[()] if out.ndim == 0 else out


def _pole_kernel(p: LorentzPole, t: np.ndarray) -> np.ndarray:
    """d/dt [sin(nu t)/nu exp(-gamma t)] * w_p^2 for t >= 0."""
    g = p.gamma
    nu2 = p.nu_squared
    x = nu2 * t * t
    res = np.empty_like(t)
    small = np.abs(x) < _SERIES_CUTOFF
    if np.any(small):
        ts, xs = t[small], x[small]
        s_over_nu = ts * (1.0 - xs / 6.0 + xs * xs / 120.0)
        c = 1.0 - xs / 2.0 + xs * xs / 24.0
        res[small] = np.exp(-g * ts) * (c - g * s_over_nu)
    big = ~small
    if np.any(big):
        tb = t[big]
        if nu2 > 0:
            nu = np.sqrt(nu2)
            res[big] = np.exp(-g * tb) * (np.cos(nu * tb) - g * np.sin(nu * tb) / nu)
        else:
            # overdamped: cos -> cosh, sin/nu -> sinh/kappa; written with decaying exponentials
            kappa = np.sqrt(-nu2)
            decay = np.exp(-2.0 * kappa * tb)
            sinh_over_kappa = -np.expm1(-2.0 * kappa * tb) / (2.0 * kappa)
            res[big] = np.exp((kappa - g) * tb) * (0.5 * (1.0 + decay) - g * sinh_over_kappa)
    return p.omega_p**2 * res


def kernel_lambda(mat: LorentzMaterial, t):
    """Causal time kernel ``lambda(t)``; exactly zero for ``t < 0``."""
    tt = np.asarray(t, dtype=float)
    flat = np.atleast_1d(tt).ravel()
    out = np.zeros(flat.shape)
    pos = flat >= 0
    if np.any(pos):
        for p in mat.poles:
            out[pos] += _pole_kernel(p, flat[pos])
    out = out.reshape(tt.shape)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------- passivity


@dataclass
class PassivityReport:
    min_eig: float
    worst_omega: float
    passive: bool
    tol: float = 0.0


def block_matrix(ee, mm, em=None, me=None) -> np.ndarray:
    """Assemble the 6x6 matrix [[ee, em], [me, mm]] from 3x3 blocks or scalars."""

    def blk(v):
        if v is None:
            return np.zeros((3, 3), dtype=complex)
        a = np.asarray(v, dtype=complex)
        return a * np.eye(3) if a.ndim == 0 else a

    return np.block([[blk(ee), blk(em)], [blk(me), blk(mm)]])


def material_matrix(electric: LorentzMaterial, magnetic: LorentzMaterial) -> Callable[[float], np.ndarray]:
    """lambda_hat block matrix of an isotropic, non-bianisotropic medium."""

    def at(omega: float) -> np.ndarray:
        return block_matrix(lambda_hat(electric, omega), lambda_hat(magnetic, omega))

    return at


def check_passivity(matrix_at: Callable[[float], np.ndarray], omegas: Sequence[float]) -> PassivityReport:
    """Smallest eigenvalue of the Hermitian part of ``matrix_at(w)`` over the samples.

    The medium is reported passive when that eigenvalue is no lower than
    ``-1e-12 * max ||matrix||``, the floating-point slack for lossless models
    that sit exactly on the boundary.
    """
    omegas = list(omegas)
    if not omegas:
        raise ValueError("need at least one frequency sample")
    min_eig = np.inf
    worst = float(omegas[0])
    scale = 0.0
    for w in omegas:
        m = np.asarray(matrix_at(w), dtype=complex)
        if m.shape != (6, 6):
            raise ValueError(f"expected a 6x6 matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonFiniteEntry(f"non-finite susceptibility block at omega={w}")
        herm = 0.5 * (m + m.conj().T)
        e = float(np.linalg.eigvalsh(herm)[0])
        scale = max(scale, float(np.linalg.norm(m, 2)))
        if e < min_eig:
            min_eig, worst = e, float(w)
    tol = 1e-12 * scale
    return PassivityReport(min_eig=min_eig, worst_omega=worst, passive=min_eig >= -tol, tol=tol)


# --------------------------------------------------------------------------- causality


def _hilbert(values: np.ndarray) -> np.ndarray:
    """Discrete Hilbert transform on a uniform grid (Maclaurin odd-point rule).

    Returns ``(1/pi) PV int values(w') / (w' - w) dw'`` sampled on the same grid.
    The grid spacing cancels out of the quadrature.
    """
    n = values.size
    m = np.arange(-(n - 1), n)
    kern = np.zeros(m.size)
    odd = (m % 2) != 0
    kern[odd] = 2.0 / m[odd]
    full = fftconvolve(values, kern[::-1])
    return full[n - 1 : 2 * n - 1] / np.pi


def hilbert_residual(response: np.ndarray, omegas: np.ndarray) -> float:
    """Relative L2 mismatch between Im(response) and its Kramers-Kronig reconstruction.

    A response analytic in the upper half plane satisfies
    ``Im f = -H[Re f]``; anything else leaves an O(1) residual.
    """
    omegas = np.asarray(omegas, dtype=float)
    response = np.asarray(response, dtype=complex)
    steps = np.diff(omegas)
    if omegas.size < 8 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("kramers-kronig check needs a uniform grid of at least 8 points")
    direct = response.imag
    norm = np.linalg.norm(direct)
    if norm == 0.0:
        return 0.0 if np.linalg.norm(response.real) == 0.0 else float("inf")
    rebuilt = -_hilbert(response.real)
    return float(np.linalg.norm(rebuilt - direct) / norm)


def kramers_kronig_residual(mat: LorentzMaterial, omegas) -> float:
    """Kramers-Kronig consistency residual of ``lambda_hat(mat)`` on a uniform grid.

    The check runs on ``lambda_hat`` rather than ``chi_hat`` because a Drude
    pole makes ``chi_hat`` singular at zero frequency, while ``lambda_hat`` is
    smooth for every damped pole.  Im is rebuilt from Re since Re decays as
    ``omega**-2`` and keeps the truncation tail small.
    """
    for p in mat.poles:
        if p.gamma <= 0:
            raise UndampedPole(f"pole {p} has no damping; its response is not smooth")
    omegas = np.asarray(omegas, dtype=float)
    if not mat.poles:
        return 0.0
    return hilbert_residual(lambda_hat(mat, omegas), omegas)


@dataclass
class MaterialReport:
    name: str
    causal: bool
    passivity: PassivityReport
    kk_residual: float | None
    notes: list[str] = field(default_factory=list)


def material_report(name: str, electric: LorentzMaterial, magnetic: LorentzMaterial,
                    omegas: Sequence[float] | None = None) -> MaterialReport:
    """Causality / passivity / Kramers-Kronig summary used by the ``materials`` command."""
    poles = electric.poles + magnetic.poles
    scale = max([1.0] + [max(p.omega_0, p.omega_p, p.gamma) for p in poles])
    if omegas is None:
        omegas = np.linspace(-10 * scale, 10 * scale, 257)
    # keep samples off undamped resonances
    bad = {p.omega_0 for p in poles if p.gamma == 0.0}
    omegas = [w for w in np.asarray(omegas, dtype=float) if abs(w) not in bad]
    notes = []
    t = -np.logspace(-6, 3, 50)
    causal = bool(np.all(kernel_lambda(electric, t) == 0) and np.all(kernel_lambda(magnetic, t) == 0))
    pas = check_passivity(material_matrix(electric, magnetic), omegas)
    kk = None
    if poles and all(p.gamma > 0 for p in poles):
        w = np.linspace(-200 * scale, 200 * scale, 2**16)
        kk = max(kramers_kronig_residual(electric, w), kramers_kronig_residual(magnetic, w))
    elif poles:
        notes.append("kramers-kronig skipped: undamped pole")
    return MaterialReport(name, causal, pas, kk, notes)
