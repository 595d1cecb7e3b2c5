"""Run-time checks: energy against the a priori bound, finite propagation speed,
and the time-derivative regularity bound.

Every check returns a :class:`CheckResult` that renders as one report line::

    check=<name> verdict=<pass|fail|na> value=<...> bound=<...>
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import ProbeMisconfigured
from .grid import FieldState, GridSpec, node_distances

if TYPE_CHECKING:
    from .solver import Simulation, SourceSpec

CONSERVATIVE_TOL = 1e-8
BOUNDED_TOL = 1e-6
DISSIPATIVE_TOL = 1e-12

# 1.5 x the largest ratio seen on the vacuum reference run (default geometry,
# source at (-10, 0), omega 5, 60 time units): max ratio 0.9489.
REGULARITY_C = 1.5


@dataclass(frozen=True)
class EnergyRecord:
    """Discrete energy at step ``step`` (time ``t = step * dt``).

    ``em`` is the field part, ``aux`` the memory part, ``total = em + aux``.
    ``bound`` is the squared right-hand side of the a priori estimate.
    """

    step: int
    t: float
    em: float
    aux: float
    total: float
    bound: float


@dataclass(frozen=True)
class CheckResult:
    name: str
    verdict: str
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        return f"check={self.name} verdict={self.verdict} value={self.value:.6e} bound={self.bound:.6e}"


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


_ENERGY_CHECKS = {
    "conservative": ("energy_conservation", CONSERVATIVE_TOL),
    "bounded": ("energy_bound", BOUNDED_TOL),
    "dissipative": ("energy_dissipation", DISSIPATIVE_TOL),
}


def energy_check(records: Sequence[EnergyRecord], mode: str = "bounded") -> CheckResult:
    """Check an energy series.

    ``conservative``: relative drift of ``total`` from the first record stays
    within 1e-8.  ``bounded``: ``2 em <= bound (1 + 1e-6)`` at every record;
    the value reported is the largest relative excess ``2 em / bound - 1``
    (negative values are margins).  ``dissipative``: ``total`` never grows by more than a
    relative 1e-12 from one record to the next.  Any non-finite value fails.
    """
    if mode not in _ENERGY_CHECKS:
        raise ValueError(f"unknown energy check mode {mode!r}")
    if not records:
        raise ValueError("energy_check needs at least one record")
    name, tol = _ENERGY_CHECKS[mode]
    total = np.array([r.total for r in records])
    em2 = 2.0 * np.array([r.em for r in records])
    bound = np.array([r.bound for r in records])
    if not (np.isfinite(total).all() and np.isfinite(em2).all() and np.isfinite(bound).all()):
        return CheckResult(name, "fail", math.inf, tol)
    if mode == "conservative":
        ref = total[0]
        if ref == 0:
            worst = 0.0 if not np.any(total) else math.inf
        else:
            worst = float(np.max(np.abs(total - ref)) / abs(ref))
    elif mode == "bounded":
        with np.errstate(divide="ignore", invalid="ignore"):
            excess = np.where(bound > 0, em2 / bound - 1.0, np.where(em2 > 0, math.inf, 0.0))
        worst = float(np.max(excess))
    elif len(total) < 2:
        worst = 0.0
    else:
        prev = total[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            growth = np.where(prev > 0, (total[1:] - prev) / prev, np.where(total[1:] > prev, math.inf, 0.0))
        worst = max(float(np.max(growth)), 0.0)
    return CheckResult(name, _verdict(worst <= tol), worst, tol)


# ----------------------------------------------------------------------------- propagation


@dataclass
class PropagationProbe:
    """Watches the ball ``B(center, radius - speed * t)`` for any field.

    Each observation stores the largest |E3|, |H1|, |H2| on nodes strictly
    inside the ball shrunk by one extra cell (the discrete slack), each field
    evaluated at its own time level.
    """

    center: tuple[float, float]
    radius: float
    speed: float = 1.0
    threshold: float = 1e-10
    samples: list[tuple[float, float]] = field(default_factory=list)
    _dist: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.radius > 0 or not self.speed > 0:
            raise ValueError("probe radius and speed must be > 0")

    @property
    def t_max(self) -> float:
        return self.radius / self.speed

    def validate_source(self, source: "SourceSpec | None", grid: GridSpec) -> None:
        """Refuse a probe whose ball already contains a non-negligible source tail."""
        if source is None or source.amplitude == 0:
            return
        d = math.hypot(source.center[0] - self.center[0], source.center[1] - self.center[1])
        gap = d - self.radius
        peak = 1.0 if gap <= 0 else math.exp(-source.a * gap * gap)
        if peak > self.threshold:
            raise ProbeMisconfigured(
                f"source tail {peak:.3g} inside B({self.center}, {self.radius}) exceeds threshold {self.threshold:g}")

    def observe(self, state: FieldState, grid: GridSpec, dt: float) -> None:
        if self._dist is None:
            self._dist = node_distances(grid, self.center)
        slack = max(grid.dx, grid.dy)
        worst = 0.0
        seen = False
        for name, tf in (("E3", state.t), ("H1", state.t - 0.5 * dt), ("H2", state.t - 0.5 * dt)):
            tf = max(tf, 0.0)
            if tf >= self.t_max:
                continue
            r = self.radius - self.speed * tf - slack
            inside = self._dist[name] < r
            if inside.any():
                worst = max(worst, float(np.max(np.abs(getattr(state, name)[inside]))))
                seen = True
        if seen:
            self.samples.append((state.t, worst))


def propagation_check(probes: Sequence[PropagationProbe], field_max: float) -> CheckResult:
    """Pass iff every probe sample stays at or below ``threshold * field_max``."""
    worst_ratio = 0.0
    ok = True
    thr = 0.0
    for p in probes:
        thr = p.threshold * field_max
        for _, v in p.samples:
            if v > thr:
                ok = False
            if field_max > 0:
                worst_ratio = max(worst_ratio, v / field_max)
            elif v > 0:
                worst_ratio = math.inf
    bound = probes[0].threshold if probes else 0.0
    return CheckResult("propagation", _verdict(ok), worst_ratio, bound)


# ----------------------------------------------------------------------------- regularity


def curl_norms(state: FieldState, grid: GridSpec) -> float:
    """Discrete H(curl) norm of (E3, H1, H2) with PEC ghosts."""
    w = grid.cell_area
    E = state.E3
    Ep = np.pad(E, 1)
    dyE = np.diff(Ep[1:-1, :], axis=1) / grid.dy
    dxE = np.diff(Ep[:, 1:-1], axis=0) / grid.dx
    curlH = np.diff(state.H2, axis=0) / grid.dx - np.diff(state.H1, axis=1) / grid.dy
    sq = (np.sum(E * E) + np.sum(state.H1 ** 2) + np.sum(state.H2 ** 2)
          + np.sum(dyE ** 2) + np.sum(dxE ** 2) + np.sum(curlH ** 2))
    return math.sqrt(w * sq)


def time_derivative_norm_sq(E_prev, E_next, H_prev, H_next, dt, grid: GridSpec, w_h1=None, w_h2=None) -> float:
    """``||(E^{n+1} - E^{n-1}) / 2dt||^2 + ||(H^{n+1/2} - H^{n-1/2}) / dt||^2``."""
    a = grid.cell_area
    dE = (E_next - E_prev) / (2 * dt)
    dH1 = (H_next[0] - H_prev[0]) / dt
    dH2 = (H_next[1] - H_prev[1]) / dt
    if w_h1 is not None:
        dH1 = dH1 * np.sqrt(w_h1)
        dH2 = dH2 * np.sqrt(w_h2)
    return float(a * (np.sum(dE * dE) + np.sum(dH1 * dH1) + np.sum(dH2 * dH2)))


def regularity_check(ratios: Sequence[float], constant: float = REGULARITY_C,
                     applicable: bool = True) -> CheckResult:
    if not applicable:
        return CheckResult("regularity", "na", math.nan, constant)
    worst = max(ratios, default=0.0)
    return CheckResult("regularity", _verdict(worst <= constant), worst, constant)


class RegularityMonitor:
    """Tracks ``||d_t u||^2`` against the regularity right-hand side during a run.

    The right-hand side at ``t_n`` is::

        (||u0||_V + ||f(0)|| + int_0^t (||d_s f|| + ||Lambda(s)||_inf ||u(s)||) ds)^2

    with the integral accumulated by the trapezoid rule.
    """

    def __init__(self, sim: "Simulation"):
        self.sim = sim
        s = sim.state
        self.dt = sim.dt
        m = sim.medium
        pairs = set(zip(m.we2.ravel(), m.ge.ravel())) | set(zip(m.wm2_h1.ravel(), m.gm_h1.ravel())) \
            | set(zip(m.wm2_h2.ravel(), m.gm_h2.ravel()))
        self._kernel = [(w2, g) for w2, g in pairs if w2 > 0]
        self.base = curl_norms(s, sim.grid) + sim.source_norm(0.0)
        self._E = [s.E3.copy()]
        self._H = (s.H1.copy(), s.H2.copy())
        self._integral = 0.0
        self._last_integrand = self._integrand(0.0, s.E3, s.H1, s.H2)
        self.ratios: list[float] = []

    def _lambda_norm(self, t: float) -> float:
        return max((w2 * math.exp(-2 * g * t) for w2, g in self._kernel), default=0.0)

    def _integrand(self, t, E, H1, H2) -> float:
        sim = self.sim
        dfn = 0.0
        if sim.source is not None:
            dfn = abs(sim.source.derivative_at(t)) * sim._g_norm
        lam = self._lambda_norm(t)
        un = 0.0
        if lam:
            un = math.sqrt(sim.grid.cell_area * (np.sum(E * E) + np.sum(sim.w_h1 * H1 * H1)
                                                  + np.sum(sim.w_h2 * H2 * H2)))
        return dfn + lam * un

    def after_step(self) -> None:
        sim, s = self.sim, self.sim.state
        self._E.append(s.E3.copy())
        H_new = (s.H1.copy(), s.H2.copy())
        if len(self._E) == 3:
            # E^{n-1}, E^n, E^{n+1} with H^{n-1/2}, H^{n+1/2}; reference time t_n
            n_t = s.t - self.dt
            lhs = time_derivative_norm_sq(self._E[0], self._E[2], self._H, H_new, self.dt, sim.grid,
                                          sim.w_h1, sim.w_h2)
            cur = self._integrand(n_t, self._E[1], *self._H)
            self._integral += 0.5 * self.dt * (self._last_integrand + cur)
            self._last_integrand = cur
            rhs = (self.base + self._integral) ** 2
            if rhs > 0:
                self.ratios.append(lhs / rhs)
            elif lhs > 0:
                self.ratios.append(math.inf)
            self._E.pop(0)
        self._H = H_new

    def result(self, source: "SourceSpec | None", constant: float = REGULARITY_C) -> CheckResult:
        applicable = source is None or source.is_smooth
        return regularity_check(self.ratios, constant, applicable)


# ----------------------------------------------------------------------------- summaries


def find_focus(xs: np.ndarray, profile: np.ndarray, window: tuple[float, float]) -> float | None:
    """x of the strongest strict interior local maximum of ``profile`` within ``window``."""
    lo, hi = window
    best, best_x = -math.inf, None
    for i in range(1, len(xs) - 1):
        if not (lo < xs[i] < hi):
            continue
        p = profile[i]
        if p >= profile[i - 1] and p >= profile[i + 1] and (p > profile[i - 1] or p > profile[i + 1]):
            if p > best:
                best, best_x = p, float(xs[i])
    return best_x
