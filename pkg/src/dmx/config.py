"""Flat ``section.key = value`` configuration files and the experiment presets.

Lines are ``key = value``; ``#`` starts a comment; tuples are comma separated.
``medium.rect`` and ``material.<name>.pole`` may repeat, every other key may
appear once.  Unknown keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .errors import ParseError, UnknownPreset, ValidationError
from .grid import FIELD_NAMES, GridSpec, MediumMap, Rectangle, interior_bounds
from .materials import LorentzMaterial, LorentzPole
from .pml import PmlParams
from .solver import BOUNDARIES, WAVEFORMS, SourceSpec, StepScheme, max_stable_dt

ENERGY_MODES = ("auto", "bounded", "conservative", "dissipative", "off")


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    snapshot_every: float = 0.5
    csv: bool = False
    fields: tuple[str, ...] = ("E3",)


@dataclass(frozen=True)
class ChecksConfig:
    energy: str = "auto"
    propagation: bool = False
    probe_center: tuple[float, float] = (10.0, 0.0)
    probe_radius: float = 15.0
    probe_threshold: float = 1e-10
    regularity: bool = True
    steady_from: float = 40.0


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec = GridSpec()
    boundary: tuple[str, str] = ("pec", "pec")
    medium: MediumMap = MediumMap()
    pml: PmlParams = PmlParams()
    pml_enabled: bool = True
    source: SourceSpec = SourceSpec()
    scheme: StepScheme = None  # type: ignore[assignment]
    output: OutputConfig = OutputConfig()
    checks: ChecksConfig = ChecksConfig()
    materials: tuple[tuple[str, LorentzMaterial], ...] = ()

    def __post_init__(self):
        if self.scheme is None:
            object.__setattr__(self, "scheme", StepScheme.from_cfl(self.grid, 0.9, t_end=60.0))


# ----------------------------------------------------------------------------- values


def _float(v: str) -> float:
    x = float(v)
    if math.isnan(x):
        raise ValueError("NaN is not allowed")
    return x


def _int(v: str) -> int:
    return int(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _tuple(n: int | tuple[int, ...]) -> Callable[[str], tuple[float, ...]]:
    sizes = (n,) if isinstance(n, int) else n

    def conv(v: str) -> tuple[float, ...]:
        parts = [p.strip() for p in v.split(",")]
        if len(parts) not in sizes:
            raise ValueError(f"expected {' or '.join(map(str, sizes))} comma-separated numbers, got {len(parts)}")
        return tuple(_float(p) for p in parts)

    return conv


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def conv(v: str) -> str:
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v

    return conv


def _names(v: str) -> tuple[str, ...]:
    out = tuple(p.strip() for p in v.split(",") if p.strip())
    for n in out:
        if n not in FIELD_NAMES:
            raise ValueError(f"unknown field {n!r}")
    return out


def _boundary(v: str) -> tuple[str, str]:
    parts = [p.strip() for p in v.split(",")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or any(p not in BOUNDARIES for p in parts):
        raise ValueError(f"expected pec|periodic (optionally per axis x,y), got {v!r}")
    return parts[0], parts[1]


KEYS: dict[str, Callable[[str], object]] = {
    "grid.x_min": _float, "grid.x_max": _float, "grid.y_min": _float, "grid.y_max": _float,
    "grid.nx": _int, "grid.ny": _int, "grid.boundary": _boundary,
    "medium.background": _tuple(2), "medium.obstacle": _tuple(4),
    "medium.we": _float, "medium.wm": _float, "medium.gamma_e": _float, "medium.gamma_m": _float,
    "medium.rect": _tuple((6, 8)),
    "pml.enabled": _bool, "pml.width": _float, "pml.order": _float, "pml.r0": _float, "pml.sigma_max": _float,
    "source.omega": _float, "source.amplitude": _float, "source.center": _tuple(2), "source.a": _float,
    "source.t_off": _float, "source.waveform": _choice(WAVEFORMS),
    "scheme.cfl": _float, "scheme.t_end": _float, "scheme.steps": _int,
    "output.dir": str, "output.snapshot_every": _float, "output.csv": _bool, "output.fields": _names,
    "checks.energy": _choice(ENERGY_MODES), "checks.propagation": _bool, "checks.probe_center": _tuple(2),
    "checks.probe_radius": _float, "checks.probe_threshold": _float, "checks.regularity": _bool,
    "checks.steady_from": _float,
}
REPEATABLE = {"medium.rect"}
MATERIAL_KEYS = {"pole": _tuple(3), "rel": _float}


def _lex(text: str) -> list[tuple[int, str, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(no, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ParseError(no, "missing key")
        if not value:
            raise ParseError(no, f"missing value for {key}")
        out.append((no, key, value))
    return out


def parse_config(text: str) -> SimConfig:
    """Parse and validate a configuration; omitted keys take their defaults."""
    raw: dict[str, object] = {}
    rects: list[tuple[float, ...]] = []
    mats: dict[str, dict[str, object]] = {}
    for no, key, value in _lex(text):
        if key.startswith("material."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1] or parts[2] not in MATERIAL_KEYS:
                raise ParseError(no, f"unknown key {key!r}")
            try:
                v = MATERIAL_KEYS[parts[2]](value)
            except ValueError as exc:
                raise ParseError(no, f"{key}: {exc}") from None
            entry = mats.setdefault(parts[1], {"poles": []})
            if parts[2] == "pole":
                entry["poles"].append(v)
            elif "rel" in entry:
                raise ParseError(no, f"duplicate key {key!r}")
            else:
                entry["rel"] = v
            continue
        if key not in KEYS:
            raise ParseError(no, f"unknown key {key!r}")
        try:
            v = KEYS[key](value)
        except ValueError as exc:
            raise ParseError(no, f"{key}: {exc}") from None
        if key in REPEATABLE:
            rects.append(v)
            continue
        if key in raw:
            raise ParseError(no, f"duplicate key {key!r}")
        raw[key] = v
    return build_config(raw, rects, mats)


def build_config(raw: dict[str, object], rects: list[tuple[float, ...]] = (),
                 mats: dict[str, dict[str, object]] | None = None) -> SimConfig:
    d = SimConfig()
    get = lambda k, default: raw.get(k, default)

    def wrap(name: str, fn: Callable[[], object]):
        try:
            return fn()
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(name, str(exc)) from None

    grid = wrap("grid", lambda: GridSpec(*(get(f"grid.{k}", getattr(d.grid, k))
                                           for k in ("x_min", "x_max", "y_min", "y_max", "nx", "ny"))))
    boundary = get("grid.boundary", d.boundary)

    rectangles = []
    if "medium.obstacle" in raw:
        x0, x1, y0, y1 = raw["medium.obstacle"]
        rectangles.append(wrap("medium.obstacle", lambda: Rectangle(
            x0, x1, y0, y1, get("medium.we", 0.0), get("medium.wm", 0.0),
            get("medium.gamma_e", 0.0), get("medium.gamma_m", 0.0))))
    else:
        for k in ("medium.we", "medium.wm", "medium.gamma_e", "medium.gamma_m"):
            if k in raw:
                raise ValidationError(k, "requires medium.obstacle")
    for r in rects:
        rectangles.append(wrap("medium.rect", lambda r=r: Rectangle(*r)))
    medium = wrap("medium.background", lambda: MediumMap(tuple(get("medium.background", (0.0, 0.0))), tuple(rectangles)))

    pml_kw = {k: raw[f"pml.{k}"] for k in ("width", "order", "r0", "sigma_max") if f"pml.{k}" in raw}
    pml = wrap("pml", lambda: PmlParams(**pml_kw))
    pml_enabled = get("pml.enabled", d.pml_enabled)

    src_kw = {k: raw[f"source.{k}"] for k in ("omega", "amplitude", "center", "a", "t_off", "waveform")
              if f"source.{k}" in raw}
    source = wrap("source", lambda: SourceSpec(**src_kw))

    cfl = get("scheme.cfl", d.scheme.cfl)
    if not 0 < cfl < 1:
        raise ValidationError("scheme.cfl", f"must lie in (0, 1), got {cfl}")
    if "scheme.steps" in raw and raw["scheme.steps"] < 0:
        raise ValidationError("scheme.steps", "must be >= 0")
    t_end = get("scheme.t_end", 60.0)
    if not t_end >= 0:
        raise ValidationError("scheme.t_end", "must be >= 0")
    scheme = StepScheme.from_cfl(grid, cfl, t_end=t_end, n_steps=raw.get("scheme.steps"))

    out_kw = {k: raw[f"output.{k}"] for k in ("dir", "snapshot_every", "csv", "fields") if f"output.{k}" in raw}
    output = OutputConfig(**out_kw)
    chk_kw = {k: raw[f"checks.{k}"] for k in ("energy", "propagation", "probe_center", "probe_radius",
                                              "probe_threshold", "regularity", "steady_from")
              if f"checks.{k}" in raw}
    checks = ChecksConfig(**chk_kw)

    materials = []
    for name, entry in sorted((mats or {}).items()):
        poles = [wrap(f"material.{name}.pole", lambda p=p: LorentzPole(*p)) for p in entry["poles"]]
        materials.append((name, wrap(f"material.{name}.rel",
                                     lambda: LorentzMaterial(tuple(poles), entry.get("rel", 1.0)))))

    cfg = SimConfig(grid, tuple(boundary), medium, pml, pml_enabled, source, scheme, output, checks, tuple(materials))
    validate(cfg)
    return cfg


def validate(cfg: SimConfig) -> None:
    """Cross-field checks; raises :class:`ValidationError`."""
    g = cfg.grid
    frame = cfg.pml.width if cfg.pml_enabled else 0.0
    if cfg.pml_enabled:
        span = min(g.x_max - g.x_min if cfg.boundary[0] == "pec" else math.inf,
                   g.y_max - g.y_min if cfg.boundary[1] == "pec" else math.inf)
        if 2 * frame >= span:
            raise ValidationError("pml.width", "absorbing frame leaves no interior")
        if any(cfg.medium.background):
            raise ValidationError("medium.background", "absorbing frame must be vacuum; disable pml or use rectangles")
    xa, xb, ya, yb = interior_bounds(g, frame)
    if cfg.pml_enabled:
        xa, xb = (xa, xb) if cfg.boundary[0] == "pec" else (g.x_min, g.x_max)
        ya, yb = (ya, yb) if cfg.boundary[1] == "pec" else (g.y_min, g.y_max)
    tol = 1e-9 * min(g.dx, g.dy)
    for r in cfg.medium.rectangles:
        if r.x0 < xa - tol or r.x1 > xb + tol or r.y0 < ya - tol or r.y1 > yb + tol:
            raise ValidationError("medium.rect", f"rectangle ({r.x0}, {r.x1}, {r.y0}, {r.y1}) leaves the interior "
                                                 f"[{xa}, {xb}] x [{ya}, {yb}]")
    we = max([r.w_e for r in cfg.medium.rectangles] + [cfg.medium.background[0]])
    wm = max([r.w_m for r in cfg.medium.rectangles] + [cfg.medium.background[1]])
    limit = max_stable_dt(g, we, wm)
    if cfg.scheme.dt > limit:
        raise ValidationError("scheme.cfl", f"dt={cfg.scheme.dt:.6g} exceeds the stability limit {limit:.6g}")
    se = cfg.output.snapshot_every
    if se < 0 or (0 < se < cfg.scheme.dt):
        raise ValidationError("output.snapshot_every", f"must be 0 (off) or >= dt={cfg.scheme.dt:.6g}")
    if not cfg.output.fields:
        raise ValidationError("output.fields", "need at least one field")
    if not cfg.checks.probe_radius > 0:
        raise ValidationError("checks.probe_radius", "must be > 0")
    if not cfg.checks.probe_threshold > 0:
        raise ValidationError("checks.probe_threshold", "must be > 0")


# ----------------------------------------------------------------------------- printing


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def format_config(cfg: SimConfig) -> str:
    """Render every setting; ``parse_config(format_config(c)) == c``."""
    g, s, p, sc, o, c = cfg.grid, cfg.source, cfg.pml, cfg.scheme, cfg.output, cfg.checks
    lines = ["# grid: physical box including the absorbing frame"]
    lines += [f"grid.{k} = {_fmt(getattr(g, k))}" for k in ("x_min", "x_max", "y_min", "y_max", "nx", "ny")]
    lines.append(f"grid.boundary = {_fmt(cfg.boundary)}")
    lines.append("# medium: Drude rates, background plus rectangles x0,x1,y0,y1,we,wm,gamma_e,gamma_m")
    lines.append(f"medium.background = {_fmt(tuple(float(v) for v in cfg.medium.background))}")
    for r in cfg.medium.rectangles:
        lines.append(f"medium.rect = {_fmt((r.x0, r.x1, r.y0, r.y1, r.w_e, r.w_m, r.gamma_e, r.gamma_m))}")
    lines.append("# pml: split-field absorbing frame")
    lines.append(f"pml.enabled = {_fmt(cfg.pml_enabled)}")
    lines += [f"pml.{k} = {_fmt(float(getattr(p, k)))}" for k in ("width", "order", "r0", "sigma_max")]
    lines.append("# source: amplitude * sin(omega t) * exp(-a |x - center|^2), off at t_off")
    lines += [f"source.{k} = {_fmt(getattr(s, k))}" for k in ("omega", "amplitude", "center", "a", "t_off", "waveform")]
    lines.append(f"# scheme: dt = cfl / sqrt(1/dx^2 + 1/dy^2) = {sc.dt!r}")
    lines.append(f"scheme.cfl = {_fmt(sc.cfl)}")
    lines.append(f"scheme.steps = {sc.n_steps}")
    lines.append("# output: snapshot_every = 0 disables snapshots")
    lines += [f"output.{k} = {_fmt(getattr(o, k))}" for k in ("dir", "snapshot_every", "csv", "fields")]
    lines.append("# checks: energy = auto|bounded|conservative|dissipative|off")
    lines += [f"checks.{k} = {_fmt(getattr(c, k))}" for k in
              ("energy", "propagation", "probe_center", "probe_radius", "probe_threshold", "regularity", "steady_from")]
    for name, mat in cfg.materials:
        for pole in mat.poles:
            lines.append(f"material.{name}.pole = {_fmt((pole.omega_p, pole.omega_0, pole.gamma))}")
        lines.append(f"material.{name}.rel = {_fmt(float(mat.rel))}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------- presets

_PRESET_RATES = {
    "experiment1": (4.0, 2.0),
    "experiment2": (6.0, 2.0),
    "experiment3": (5.0 * math.sqrt(2.0), 5.0 * math.sqrt(2.0)),
}
_ALIASES = {"exp1": "experiment1", "exp2": "experiment2", "exp3": "experiment3", "vacuum": "vacuum"}
PRESET_NAMES = tuple(_PRESET_RATES) + ("vacuum",)


def preset(name: str) -> SimConfig:
    """One of the three obstacle experiments, or ``vacuum`` (same setup, no obstacle)."""
    key = _ALIASES.get(name, name)
    if key != "vacuum" and key not in _PRESET_RATES:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    raw: dict[str, object] = {"source.omega": 5.0, "checks.propagation": True, "output.dir": f"out_{key}"}
    if key != "vacuum":
        we, wm = _PRESET_RATES[key]
        raw.update({"medium.obstacle": (-5.0, 5.0, -10.0, 10.0), "medium.we": we, "medium.wm": wm})
    return build_config(raw)


def with_overrides(cfg: SimConfig, **changes) -> SimConfig:
    """Copy of ``cfg`` with nested dataclass fields replaced, e.g. ``output={'csv': True}``."""
    kw = {}
    for k, v in changes.items():
        cur = getattr(cfg, k)
        kw[k] = replace(cur, **v) if isinstance(v, dict) else v
    out = replace(cfg, **kw)
    validate(out)
    return out


__all__ = [
    "SimConfig", "OutputConfig", "ChecksConfig", "parse_config", "format_config", "build_config",
    "validate", "preset", "with_overrides", "PRESET_NAMES",
]
