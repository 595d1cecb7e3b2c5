"""Reference stepper that evaluates the memory terms as explicit history sums.

The memory term for a field with stored samples ``u_1 .. u_n`` is

    conv_n = sum_{k=1}^{n} lambda((n - k + 1/2) dt) u_k dt

For E the samples are E^1 .. E^n and the sum enters the update of E^{n+1};
for H they are H^{1/2} .. H^{n-1/2} and the sum enters the update of
H^{n+1/2}.  For a Drude kernel ``w^2 exp(-2 gamma t)`` the sum telescopes into
the auxiliary-field recursion of :class:`dmx.solver.Simulation`, so both
steppers agree to round-off; for general Lorentz kernels the oracle is the
only stepper.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import HistoryCapExceeded
from .grid import GridSpec, MediumArrays
from .materials import LorentzMaterial, kernel_lambda
from .solver import Simulation, SourceSpec, StepScheme

DEFAULT_CAP_BYTES = 64 * 2 ** 20

Kernel = Union[LorentzMaterial, Callable[[np.ndarray], np.ndarray]]


class HistoryBuffer:
    """Append-only store of field samples plus the matching kernel samples.

    Parameters
    ----------
    kernel
        A :class:`LorentzMaterial` or any callable ``t -> lambda(t)``.
    dt
        Time step.
    shape
        Shape of one stored sample.
    capacity
        Maximum number of samples; storage is allocated up front.
    cap_bytes
        Refuse buffers whose storage would exceed this many bytes.
    """

    def __init__(self, kernel: Kernel, dt: float, shape: Sequence[int] | int, capacity: int,
                 cap_bytes: int = DEFAULT_CAP_BYTES):
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        need = 8 * int(capacity) * int(np.prod(shape, dtype=np.int64))
        if need > cap_bytes:
            raise HistoryCapExceeded(f"history needs {need} bytes, cap is {cap_bytes}")
        self.dt = dt
        self.capacity = int(capacity)
        self._data = np.zeros((self.capacity,) + shape)
        lags = (np.arange(self.capacity) + 0.5) * dt
        if isinstance(kernel, LorentzMaterial):
            self.kernel = np.asarray(kernel_lambda(kernel, lags), dtype=float)
        else:
            self.kernel = np.asarray(kernel(lags), dtype=float)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def append(self, sample: np.ndarray) -> None:
        if self._n >= self.capacity:
            raise HistoryCapExceeded(f"history is full ({self.capacity} samples)")
        self._data[self._n] = sample
        self._n += 1

    @property
    def samples(self) -> np.ndarray:
        return self._data[: self._n]


def convolve(history: HistoryBuffer, n: int | None = None) -> np.ndarray:
    """Memory sum over the first ``n`` stored samples (default: all)."""
    n = len(history) if n is None else n
    if n > len(history):
        if n > history.capacity:
            raise HistoryCapExceeded(f"step {n} is beyond the history capacity {history.capacity}")
        raise ValueError(f"only {len(history)} samples stored, asked for {n}")
    if n == 0:
        return np.zeros(history._data.shape[1:])
    w = history.kernel[n - 1::-1] if n > 0 else history.kernel[:0]
    return np.tensordot(w, history._data[:n], axes=1) * history.dt


def memory_work(history: HistoryBuffer) -> float:
    """Discrete memory work ``sum_n <conv_n, u_n> dt``, ``conv_n`` over samples 1..n.

    This is ``dt^2 u^T T u`` with ``T`` the lower-triangular Toeplitz matrix of
    kernel samples.  It is non-negative whenever the symmetric part of ``T``
    is, which holds for every Drude kernel (its symbol is
    ``lambda(dt/2) Re 1 / (1 - exp(-2 gamma dt) e^{i theta}) > 0``).
    """
    u = history.samples
    total = 0.0
    for n in range(1, len(u) + 1):
        total += float(np.sum(convolve(history, n) * u[n - 1])) * history.dt
    return total


@dataclass
class Region:
    """Nodes of one field that share a material."""

    mask: np.ndarray
    material: LorentzMaterial


def drude_regions(values: np.ndarray, damping: np.ndarray) -> list[Region]:
    """Group nodes by (w^2, gamma) into Drude regions, skipping vacuum."""
    out = []
    pairs = sorted({(float(w2), float(g)) for w2, g in zip(values.ravel(), damping.ravel()) if w2 > 0})
    for w2, g in pairs:
        mask = (values == w2) & (damping == g)
        out.append(Region(mask, LorentzMaterial.drude(float(np.sqrt(w2)), g)))
    return out


class NonlocalSimulation(Simulation):
    """Same grid, stencil and leapfrog placement as :class:`Simulation`, with
    the memory terms replaced by explicit history sums.

    Parameters
    ----------
    electric
        Regions of E3 nodes and their materials.
    magnetic_h1, magnetic_h2
        Regions of H1 and H2 nodes and their materials.
    capacity
        Number of steps the history must hold.
    """

    def __init__(self, grid: GridSpec, scheme: StepScheme, electric: Sequence[Region] = (),
                 magnetic_h1: Sequence[Region] = (), magnetic_h2: Sequence[Region] = (),
                 source: SourceSpec | None = None, boundary="pec", capacity: int | None = None,
                 cap_bytes: int = DEFAULT_CAP_BYTES):
        capacity = scheme.n_steps if capacity is None else capacity
        self._regions = {"E3": list(electric), "H1": list(magnetic_h1), "H2": list(magnetic_h2)}
        # the CFL guard in the base class uses the largest kernel value at t = 0
        medium = MediumArrays.vacuum(grid)
        for name, arr in (("E3", medium.we2), ("H1", medium.wm2_h1), ("H2", medium.wm2_h2)):
            for reg in self._regions[name]:
                arr[reg.mask] = reg.material.strength
        super().__init__(grid, medium, scheme, source, None, boundary, record_energy=False)
        self.has_e_memory = bool(self._regions["E3"])
        self.has_h_memory = bool(self._regions["H1"] or self._regions["H2"])
        total = sum(int(r.mask.sum()) for rs in self._regions.values() for r in rs)
        if 8 * capacity * total > cap_bytes:
            raise HistoryCapExceeded(f"history needs {8 * capacity * total} bytes, cap is {cap_bytes}")
        self._buffers = {
            name: [HistoryBuffer(r.material, scheme.dt, int(r.mask.sum()), capacity, cap_bytes) for r in regs]
            for name, regs in self._regions.items()
        }

    @classmethod
    def from_medium(cls, grid: GridSpec, medium: MediumArrays, scheme: StepScheme, **kw) -> "NonlocalSimulation":
        return cls(grid, scheme, drude_regions(medium.we2, medium.ge),
                   drude_regions(medium.wm2_h1, medium.gm_h1), drude_regions(medium.wm2_h2, medium.gm_h2), **kw)

    def _memory(self, name: str, shape) -> np.ndarray:
        out = np.zeros(shape)
        for reg, buf in zip(self._regions[name], self._buffers[name]):
            out[reg.mask] = convolve(buf)
        return out

    def _memory_h(self):
        if not self.has_h_memory:
            return None, None
        s = self.state
        return self._memory("H1", s.H1.shape), self._memory("H2", s.H2.shape)

    def _memory_e(self):
        if not self.has_e_memory:
            return None
        return self._memory("E3", self.state.E3.shape)

    def _update_k(self) -> None:
        s = self.state
        for name, arr in (("H1", s.H1), ("H2", s.H2)):
            for reg, buf in zip(self._regions[name], self._buffers[name]):
                buf.append(arr[reg.mask])

    def _update_j(self) -> None:
        for reg, buf in zip(self._regions["E3"], self._buffers["E3"]):
            buf.append(self.state.E3[reg.mask])


def step_nonlocal(sim: NonlocalSimulation):
    """Advance the oracle by one step and return its state."""
    return sim.step()
