"""Leapfrog stepping of the TE Drude system with auxiliary memory fields.

Per step, starting from E3^n, H^{n-1/2}, J^n and K^{n-1}:

    (1) H^{n+1/2} = eH * H^{n-1/2} -/+ dt (dE/dy | dE/dx + wm^2 K^{n-1})
    (2) K^n       = r K^{n-1} + dt s H^{n+1/2}
    (3) E^{n+1}   = E^n + dt (dH2/dx - dH1/dy - we^2 J^n + f(t_n + dt/2))
    (4) J^{n+1}   = r J^n + dt s E^{n+1}

with ``r = exp(-2 gamma dt)`` and ``s = exp(-gamma dt)``, so that J and K are
the midpoint-rule memory integrals against the kernel ``w^2 exp(-2 gamma t)``.
``eH`` is the absorbing-layer decay factor (exactly 1 outside the layer).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .diagnostics import EnergyRecord, PropagationProbe
from .errors import CflViolation, NonFiniteField
from .grid import FieldState, GridSpec, MediumArrays, write_snapshot
from .pml import PmlLayer, split_e_update

if TYPE_CHECKING:
    from .config import SimConfig
    from .diagnostics import CheckResult

BOUNDARIES = ("pec", "periodic")
WAVEFORMS = ("sine", "step")


@dataclass(frozen=True)
class SourceSpec:
    """Soft electric source ``amplitude * w(t) * exp(-a |x - center|^2)``.

    ``w(t)`` is ``sin(omega t)`` for the sine waveform and 1 for the step
    waveform; both vanish for ``t >= t_off``.
    """

    omega: float = 5.0
    amplitude: float = 1.0
    center: tuple[float, float] = (-10.0, 0.0)
    a: float = 25.0
    t_off: float = math.inf
    waveform: str = "sine"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.a > 0:
            raise ValueError("source width parameter a must be > 0")
        if not math.isfinite(self.omega):
            raise ValueError("source omega must be finite")
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if not self.t_off > 0:
            raise ValueError("source t_off must be > 0")

    def profile(self, grid: GridSpec) -> np.ndarray:
        x, y = grid.mesh("E3")
        cx, cy = self.center
        return np.exp(-self.a * ((x - cx) ** 2 + (y - cy) ** 2))

    def waveform_at(self, t: float) -> float:
        if t >= self.t_off or t < 0:
            return 0.0
        w = math.sin(self.omega * t) if self.waveform == "sine" else 1.0
        return self.amplitude * w

    def derivative_at(self, t: float) -> float:
        if t >= self.t_off or t < 0 or self.waveform == "step":
            return 0.0
        return self.amplitude * self.omega * math.cos(self.omega * t)

    @property
    def is_smooth(self) -> bool:
        """False when the amplitude jumps in time (step waveform or a cut off the zero set)."""
        if self.waveform == "step" or self.amplitude == 0:
            return self.amplitude == 0
        if math.isinf(self.t_off):
            return True
        return abs(math.sin(self.omega * self.t_off)) <= 1e-9


def max_stable_dt(grid: GridSpec, we_max: float = 0.0, wm_max: float = 0.0) -> float:
    """Largest dt for which the scheme's modified energy stays positive.

    ``dt^2 (4/dx^2 + 4/dy^2 + we^2 + wm^2) <= 4``; with no medium this is the
    vacuum Yee limit.
    """
    return 2.0 / math.sqrt(4 / grid.dx ** 2 + 4 / grid.dy ** 2 + we_max ** 2 + wm_max ** 2)


@dataclass(frozen=True)
class StepScheme:
    dt: float
    cfl: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.cfl < 1:
            raise CflViolation(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")

    @classmethod
    def from_cfl(cls, grid: GridSpec, cfl: float = 0.9, t_end: float | None = None,
                 n_steps: int | None = None) -> "StepScheme":
        if not cfl > 0:
            raise ValueError(f"cfl must be > 0, got {cfl}")
        if not cfl < 1:
            raise CflViolation(f"cfl must lie in (0, 1), got {cfl}")
        dt = cfl / math.sqrt(1 / grid.dx ** 2 + 1 / grid.dy ** 2)
        if n_steps is None:
            n_steps = 0 if t_end is None else int(math.ceil(t_end / dt - 1e-9))
        return cls(dt, cfl, n_steps)

    @classmethod
    def from_dt(cls, grid: GridSpec, dt: float, n_steps: int = 0) -> "StepScheme":
        return cls(dt, dt * math.sqrt(1 / grid.dx ** 2 + 1 / grid.dy ** 2), n_steps)


def _bands(n: int, parts: int) -> list[slice]:
    if parts <= 1:
        return [slice(0, n)]
    edges = np.linspace(0, n, min(parts, n) + 1).round().astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class Simulation:
    """Owns a FieldState and advances it one leapfrog step at a time.

    Parameters
    ----------
    grid, medium, scheme
        Geometry, sampled medium and time step.
    source
        Optional soft source; evaluated at ``t_n + dt/2``.
    pml
        Optional absorbing layer; the frame must be vacuum.
    boundary
        ``"pec"`` or ``"periodic"``, either one value or one per axis (x, y).
    threads
        Number of row bands updated concurrently.  Results are bitwise
        identical for every thread count.
    record_energy
        Keep one :class:`EnergyRecord` per step in ``self.energy``.
    """

    def __init__(self, grid: GridSpec, medium: MediumArrays | None, scheme: StepScheme,
                 source: SourceSpec | None = None, pml: PmlLayer | None = None,
                 boundary: str | Sequence[str] = "pec", threads: int = 1,
                 state: FieldState | None = None, record_energy: bool = True):
        self.grid = grid
        self.medium = medium if medium is not None else MediumArrays.vacuum(grid)
        self.scheme = scheme
        self.dt = scheme.dt
        self.boundary = (boundary, boundary) if isinstance(boundary, str) else tuple(boundary)
        for b in self.boundary:
            if b not in BOUNDARIES:
                raise ValueError(f"unknown boundary {b!r}")
        self.pml = pml if pml is not None and pml.active else None
        if self.pml is not None:
            if "periodic" in self.boundary and (
                (self.boundary[0] == "periodic" and self.pml.sx_c.any())
                or (self.boundary[1] == "periodic" and self.pml.sy_c.any())
            ):
                raise ValueError("absorbing layer on a periodic axis")
            if not self.pml.frame_is_vacuum(self.medium.we2, self.medium.wm2_h1, self.medium.wm2_h2):
                raise ValueError("absorbing frame must be vacuum (w_e = w_m = 0)")
        we, wm = self.medium.max_rates
        limit = max_stable_dt(grid, we, wm)
        if self.dt > limit:
            raise CflViolation(f"dt={self.dt:.6g} exceeds the stability limit {limit:.6g} "
                               f"(we_max={we:g}, wm_max={wm:g})")
        self.threads = max(1, int(threads))
        self.source = source
        self.state = state if state is not None else FieldState.zeros(grid)
        self.record_energy = record_energy
        self.energy: list[EnergyRecord] = []
        self._prepare()

    # ------------------------------------------------------------------ setup

    def _prepare(self) -> None:
        g, m, dt = self.grid, self.medium, self.dt
        px, py = (b == "periodic" for b in self.boundary)
        if px:
            m.wm2_h2[-1] = m.wm2_h2[0]
            m.gm_h2[-1] = m.gm_h2[0]
        if py:
            m.wm2_h1[:, -1] = m.wm2_h1[:, 0]
            m.gm_h1[:, -1] = m.gm_h1[:, 0]
        self._pad_x = "wrap" if px else "constant"
        self._pad_y = "wrap" if py else "constant"
        # weights drop the duplicated periodic edge
        self.w_h1 = np.ones(g.shape("H1"))
        self.w_h2 = np.ones(g.shape("H2"))
        if py:
            self.w_h1[:, -1] = 0.0
        if px:
            self.w_h2[-1, :] = 0.0
        self.has_e_memory = bool(m.we2.any())
        self.has_h_memory = bool(m.wm2_h1.any() or m.wm2_h2.any())
        # recursion factors for the memory integrals
        self.r_e, self.ds_e = np.exp(-2 * m.ge * dt), dt * np.exp(-m.ge * dt)
        self.r_h1, self.ds_h1 = np.exp(-2 * m.gm_h1 * dt), dt * np.exp(-m.gm_h1 * dt)
        self.r_h2, self.ds_h2 = np.exp(-2 * m.gm_h2 * dt), dt * np.exp(-m.gm_h2 * dt)
        self.J_prev = self.state.J3.copy()
        if self.pml is not None:
            self.eh1, self.ch1, self.eh2, self.ch2 = self.pml.h_factors(dt)
            self.e_fac = self.pml.e_factors(dt)
            mask = self.pml.mask
            self.E3x = np.where(mask, 0.5 * self.state.E3, 0.0)
            self.E3y = np.where(mask, 0.5 * self.state.E3, 0.0)
        self._g = self.source.profile(g) if self.source is not None else None
        self._g_norm = float(np.sqrt(g.cell_area * np.sum(self._g ** 2))) if self._g is not None else 0.0
        self._bands_e = _bands(g.nx, self.threads)
        self._bands_h2 = _bands(g.nx + 1, self.threads)
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        self._src_accum = 0.0  # sum of dt * ||f|| over completed steps
        self._sqrt_e0: float | None = None

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _map(self, fn: Callable[[slice], None], bands: list[slice]) -> None:
        if self._pool is None:
            for b in bands:
                fn(b)
        else:
            list(self._pool.map(fn, bands))

    # ------------------------------------------------------------------ source

    def source_field(self, t: float) -> np.ndarray | None:
        if self.source is None:
            return None
        w = self.source.waveform_at(t)
        return None if w == 0.0 else w * self._g

    def source_norm(self, t: float) -> float:
        if self.source is None:
            return 0.0
        return abs(self.source.waveform_at(t)) * self._g_norm

    # ------------------------------------------------------------------ memory hooks

    def _memory_h(self) -> tuple[np.ndarray | None, np.ndarray | None]:
        if not self.has_h_memory:
            return None, None
        s = self.state
        return self.medium.wm2_h1 * s.K1, self.medium.wm2_h2 * s.K2

    def _memory_e(self) -> np.ndarray | None:
        if not self.has_e_memory:
            return None
        return self.medium.we2 * self.state.J3

    def _update_k(self) -> None:
        s = self.state
        s.K1 *= self.r_h1
        s.K1 += self.ds_h1 * s.H1
        s.K2 *= self.r_h2
        s.K2 += self.ds_h2 * s.H2

    def _update_j(self) -> None:
        s = self.state
        self.J_prev = s.J3.copy()
        s.J3 *= self.r_e
        s.J3 += self.ds_e * s.E3

    # ------------------------------------------------------------------ step

    def step(self) -> FieldState:
        s, g, dt = self.state, self.grid, self.dt
        mh1, mh2 = self._memory_h()
        Ep = np.pad(s.E3, ((1, 1), (1, 1)), mode="constant")
        if self._pad_x == "wrap":
            Ep[0, 1:-1], Ep[-1, 1:-1] = s.E3[-1], s.E3[0]
        if self._pad_y == "wrap":
            Ep[1:-1, 0], Ep[1:-1, -1] = s.E3[:, -1], s.E3[:, 0]
        H1_old, H2_old = s.H1.copy(), s.H2.copy()
        pml = self.pml

        def upd_h1(b: slice) -> None:
            rows = slice(b.start + 1, b.stop + 1)
            dyE = np.diff(Ep[rows, :], axis=1)[:, :] / g.dy
            dyE = dyE if mh1 is None else dyE + mh1[b]
            if pml is None:
                s.H1[b] = s.H1[b] - dt * dyE
            else:
                s.H1[b] = self.eh1 * s.H1[b] - self.ch1 * dyE

        def upd_h2(b: slice) -> None:
            dxE = np.diff(Ep[b.start:b.stop + 1, 1:-1], axis=0) / g.dx
            dxE = dxE if mh2 is None else dxE - mh2[b]
            if pml is None:
                s.H2[b] = s.H2[b] + dt * dxE
            else:
                s.H2[b] = self.eh2[b] * s.H2[b] + self.ch2[b] * dxE

        self._map(upd_h1, self._bands_e)
        self._map(upd_h2, self._bands_h2)
        if self.record_energy:
            self._record_energy(H1_old, H2_old)
        self._update_k()

        me = self._memory_e()
        f = self.source_field(s.t + 0.5 * dt)

        def upd_e(b: slice) -> None:
            curl_x = np.diff(s.H2[b.start:b.stop + 1], axis=0) / g.dx
            curl_y = np.diff(s.H1[b], axis=1) / g.dy
            inc = curl_x - curl_y
            if me is not None:
                inc -= me[b]
            if f is not None:
                inc += f[b]
            E = s.E3[b] + dt * inc
            if pml is not None:
                split_e_update(E, self.E3x[b], self.E3y[b], tuple(a[b] for a in self.e_fac), pml.mask[b],
                               curl_x, curl_y, None if f is None else f[b])
            s.E3[b] = E

        self._map(upd_e, self._bands_e)
        self._update_j()
        self._src_accum += dt * self.source_norm(s.t + 0.5 * dt)
        s.t = (s.step + 1) * dt
        s.step += 1
        if not (np.isfinite(s.E3).all() and np.isfinite(s.H1).all() and np.isfinite(s.H2).all()):
            raise NonFiniteField(f"non-finite field at step {s.step} (t={s.t:g})")
        return s

    def run(self, n_steps: int, callback: Callable[["Simulation"], None] | None = None) -> FieldState:
        for _ in range(n_steps):
            self.step()
            if callback is not None:
                callback(self)
        return self.state

    # ------------------------------------------------------------------ energy

    def _record_energy(self, H1_old: np.ndarray, H2_old: np.ndarray) -> None:
        """Record the step-n energy; called between the H and K updates."""
        s, m, w = self.state, self.medium, self.grid.cell_area
        # overflow is reported below as NonFiniteField
        with np.errstate(over="ignore", invalid="ignore"):
            em = 0.5 * w * (np.sum(s.E3 * s.E3)
                            + np.sum(self.w_h1 * H1_old * s.H1)
                            + np.sum(self.w_h2 * H2_old * s.H2))
            aux = 0.5 * w * (np.sum(m.we2 * self.J_prev * s.J3)
                             + np.sum(self.w_h1 * m.wm2_h1 * s.K1 * s.K1)
                             + np.sum(self.w_h2 * m.wm2_h2 * s.K2 * s.K2))
            total = em + aux
        if not math.isfinite(total):
            raise NonFiniteField(f"discrete energy overflowed at step {s.step} (t={s.t:g})")
        if self._sqrt_e0 is None:
            self._sqrt_e0 = math.sqrt(max(2.0 * total, 0.0))
        with np.errstate(over="ignore"):
            bound = float(np.square(np.float64(self._sqrt_e0 + self._src_accum)))
        self.energy.append(EnergyRecord(s.step, s.step * self.dt, float(em), float(aux), float(total), bound))


# ====================================================================== orchestration


@dataclass
class RunSummary:
    dt: float
    cfl: float
    n_steps: int
    max_abs_e3: float = 0.0
    interior_max: float = 0.0
    exterior_max: float = 0.0
    center_amplitude: float = 0.0
    mirror_amplitude: float = 0.0
    center_peak: float = 0.0
    mirror_peak: float = 0.0
    window: tuple[float, float] = (0.0, 0.0)
    focus_x: float | None = None
    focus_profile: np.ndarray | None = field(default=None, repr=False)
    focus_xs: np.ndarray | None = field(default=None, repr=False)
    support_radii: list[tuple[float, float]] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"dt={self.dt:.17g}", f"cfl={self.cfl:.17g}", f"steps={self.n_steps}",
               f"max_abs_e3={self.max_abs_e3:.6e}", f"interior_max={self.interior_max:.6e}",
               f"exterior_max={self.exterior_max:.6e}", f"center_amplitude={self.center_amplitude:.6e}",
               f"mirror_amplitude={self.mirror_amplitude:.6e}",
               f"center_peak={self.center_peak:.6e}", f"mirror_peak={self.mirror_peak:.6e}",
               f"window={self.window[0]:.6g},{self.window[1]:.6g}",
               f"focus_x={'none' if self.focus_x is None else f'{self.focus_x:.6g}'}"]
        out += [f"support t={t:.6g} r={r:.6g}" for t, r in self.support_radii]
        return out


@dataclass
class RunArtifacts:
    output_dir: Path | None
    snapshots: list[Path]
    energy: list[EnergyRecord]
    summary: RunSummary
    checks: list["CheckResult"]
    probe: PropagationProbe | None = None
    final_state: FieldState | None = field(default=None, repr=False)

    @property
    def checks_passed(self) -> bool:
        return all(c.verdict != "fail" for c in self.checks)


def build_simulation(config: "SimConfig", threads: int = 1, n_steps: int | None = None) -> Simulation:
    from .grid import sample_medium

    grid = config.grid
    frame = config.pml.width if config.pml_enabled else 0.0
    medium = sample_medium(config.medium, grid, frame)
    scheme = config.scheme if n_steps is None else StepScheme(config.scheme.dt, config.scheme.cfl, n_steps)
    layer = None
    if config.pml_enabled:
        axes = tuple(b == "pec" for b in config.boundary)
        layer = PmlLayer.build(grid, config.pml, axes)
    return Simulation(grid, medium, scheme, config.source, layer, config.boundary, threads)


def write_energy_csv(path: str | os.PathLike, records: Sequence[EnergyRecord]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("step,t,em_energy,aux_energy,total_energy,bound\n")
        for r in records:
            fh.write(f"{r.step},{r.t:.17g},{r.em:.17g},{r.aux:.17g},{r.total:.17g},{r.bound:.17g}\n")


def run(config: "SimConfig", threads: int = 1, n_steps: int | None = None,
        output_dir: str | os.PathLike | None = None,
        inject: Callable[[Simulation], None] | None = None) -> RunArtifacts:
    """Execute a configured run: step, write snapshots and energy log, evaluate checks.

    ``inject`` is called once on the freshly built simulation before the first
    step (used to plant initial data).
    """
    from . import diagnostics as dg
    from .grid import rectangle_mask

    sim = build_simulation(config, threads, n_steps)
    if inject is not None:
        inject(sim)
    g, sc, dt = sim.grid, sim.scheme, sim.dt
    out = config.output
    odir = Path(output_dir if output_dir is not None else out.dir) if out.dir or output_dir else None
    if odir is not None:
        odir.mkdir(parents=True, exist_ok=True)
    snapshots: list[Path] = []
    summary = RunSummary(dt, sc.cfl, sc.n_steps)
    checks = config.checks

    # masks and probe points for the summary
    rects = config.medium.rectangles
    inner = np.zeros(g.shape("E3"), bool)
    for r in rects:
        inner |= rectangle_mask(g, r)
    xe, ye = g.mesh("E3")
    frame = config.pml.width if config.pml_enabled else 0.0
    in_box = ((xe > g.x_min + frame) & (xe < g.x_max - frame) & (ye > g.y_min + frame) & (ye < g.y_max - frame))
    outer = in_box & ~inner
    center = (0.5 * (rects[0].x0 + rects[0].x1), 0.5 * (rects[0].y0 + rects[0].y1)) if rects else (0.0, 0.0)
    ic = tuple(int(np.clip(v, 0, n - 1)) for v, n in zip(g.index(*center, "E3"), g.shape("E3")))
    im = tuple(int(np.clip(v, 0, n - 1)) for v, n in zip(g.index(*checks.probe_center, "E3"), g.shape("E3")))
    j0 = int(np.clip(g.index(0.0, center[1], "E3")[1], 0, g.ny - 1))
    avg = np.zeros(g.nx)
    n_avg = 0
    # lock-in window: whole source periods ending at the last step
    t_end = sc.n_steps * dt
    omega = config.source.omega
    if omega > 0 and t_end > checks.steady_from:
        period = 2 * math.pi / omega
        n_per = math.floor((t_end - checks.steady_from) / period)
        w0 = t_end - n_per * period if n_per > 0 else checks.steady_from
    else:
        w0 = min(checks.steady_from, t_end)
    summary.window = (w0, t_end)
    phasor = np.zeros(2, complex)

    probe = None
    if checks.propagation:
        probe = PropagationProbe(tuple(checks.probe_center), checks.probe_radius, 1.0, checks.probe_threshold)
        probe.validate_source(config.source, g)
    # regularity accumulators
    reg = dg.RegularityMonitor(sim) if checks.regularity else None

    snap_every = out.snapshot_every
    next_snap = 0.0 if snap_every > 0 else math.inf
    run_max = 0.0

    def snapshot(s: FieldState) -> None:
        for name in out.fields:
            arr = getattr(s, name)
            t_field = s.t - 0.5 * dt if name in ("H1", "H2", "K1", "K2") else s.t
            if odir is not None:
                ext = "csv" if out.csv else "dmx"
                p = odir / f"{name}_{s.step:05d}.{ext}"
                write_snapshot(p, arr, g, t_field, name, csv=out.csv)
                snapshots.append(p)

    def observe(s: FieldState) -> None:
        nonlocal next_snap, run_max, n_avg
        a = np.abs(s.E3)
        run_max = max(run_max, float(a.max()))
        if s.t >= checks.steady_from - 1e-12:
            summary.interior_max = max(summary.interior_max, float(a[inner].max()) if inner.any() else 0.0)
            summary.exterior_max = max(summary.exterior_max, float(a[outer].max()) if outer.any() else 0.0)
            summary.center_peak = max(summary.center_peak, float(a[ic]))
            summary.mirror_peak = max(summary.mirror_peak, float(a[im]))
            avg[:] += s.E3[:, j0] ** 2
            n_avg += 1
        if s.t > w0 + 1e-9 * dt:
            phasor[:] += np.array([s.E3[ic], s.E3[im]]) * np.exp(-1j * omega * s.t) * dt
        if probe is not None and s.t - 0.5 * dt < probe.t_max:
            probe.observe(s, g, dt)
        if s.t >= next_snap - 1e-9 * dt:
            snapshot(s)
            if run_max > 0:
                from .grid import support_radius
                summary.support_radii.append(
                    (s.t, support_radius(s, g, checks.probe_center, checks.probe_threshold * run_max)))
            next_snap += snap_every

    observe(sim.state)
    try:
        for _ in range(sc.n_steps):
            sim.step()
            if reg is not None:
                reg.after_step()
            observe(sim.state)
    finally:
        sim.close()
    summary.max_abs_e3 = run_max
    if t_end > w0:
        summary.center_amplitude, summary.mirror_amplitude = (float(v) for v in 2 * np.abs(phasor) / (t_end - w0))
    if n_avg:
        summary.focus_profile = avg / n_avg
        summary.focus_xs = xe[:, 0]
        right = rects[0].x1 if rects else center[0]
        summary.focus_x = dg.find_focus(summary.focus_xs, summary.focus_profile, (right, g.x_max - frame))

    results: list[dg.CheckResult] = []
    if checks.energy != "off" and sim.energy:
        results.append(dg.energy_check(sim.energy, "bounded"))
        t_off = config.source.t_off
        after = [r for r in sim.energy if r.t >= t_off]
        if len(after) > 1:
            lossless = sim.medium.lossless and sim.pml is None
            mode = "conservative" if lossless else "dissipative"
            if checks.energy in (mode, "auto"):
                results.append(dg.energy_check(after, mode))
    if probe is not None:
        results.append(dg.propagation_check([probe], run_max))
    if reg is not None:
        results.append(reg.result(config.source))
    if odir is not None:
        write_energy_csv(odir / "energy.csv", sim.energy)
        with open(odir / "checks.txt", "w", encoding="ascii") as fh:
            for c in results:
                fh.write(c.line() + "\n")
        with open(odir / "summary.txt", "w", encoding="ascii") as fh:
            fh.write("\n".join(summary.lines()) + "\n")
    return RunArtifacts(odir, snapshots, sim.energy, summary, results, probe, sim.state)
