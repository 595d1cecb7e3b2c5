"""Command line entry point.

    dmx run CONFIG | --preset NAME [--output-dir D] [--snapshot-every T] [--csv]
                                   [--threads N] [--steps N] [--strict-checks]
    dmx verify
    dmx materials CONFIG | --preset NAME
    dmx --print-defaults

Exit codes: 0 success, 1 usage or configuration error, 2 failed check (with
``--strict-checks``, and always for ``verify``), 3 non-finite field values.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Sequence

import numpy as np

from .config import PRESET_NAMES, SimConfig, format_config, parse_config, preset, with_overrides
from .errors import CflViolation, DmxError, NonFiniteField, ParseError, RectangleOutsideInterior, ValidationError

log = logging.getLogger("dmx")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmx", description="2D dispersive Maxwell (TE) simulator with verification checks.")
    p.add_argument("--print-defaults", action="store_true", help="print the default configuration and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("run", help="run a configuration or preset")
    r.add_argument("config", nargs="?", help="configuration file")
    r.add_argument("--preset", choices=PRESET_NAMES + ("exp1", "exp2", "exp3"))
    r.add_argument("--output-dir")
    r.add_argument("--snapshot-every", type=float)
    r.add_argument("--csv", action="store_true", help="write snapshots as text")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--steps", type=int)
    r.add_argument("--strict-checks", action="store_true", help="exit 2 when a check fails")

    sub.add_parser("verify", help="run the small-grid verification suite")

    m = sub.add_parser("materials", help="passivity / causality / Kramers-Kronig report")
    m.add_argument("config", nargs="?")
    m.add_argument("--preset", choices=PRESET_NAMES + ("exp1", "exp2", "exp3"))
    return p


def _load(args) -> SimConfig:
    if args.preset and args.config:
        raise ValidationError("preset", "give either a config file or --preset, not both")
    if args.preset:
        return preset(args.preset)
    if not args.config:
        raise ValidationError("config", "a config file or --preset is required")
    with open(args.config, encoding="utf-8") as fh:
        return parse_config(fh.read())


def cmd_run(args) -> int:
    from .solver import run

    cfg = _load(args)
    out = {}
    if args.snapshot_every is not None:
        out["snapshot_every"] = args.snapshot_every
    if args.csv:
        out["csv"] = True
    if args.output_dir:
        out["dir"] = args.output_dir
    if out:
        cfg = with_overrides(cfg, output=out)
    if args.steps is not None and args.steps < 0:
        raise ValidationError("steps", "must be >= 0")
    if args.threads < 1:
        raise ValidationError("threads", "must be >= 1")
    art = run(cfg, threads=args.threads, n_steps=args.steps)
    for line in art.summary.lines():
        print(line)
    for c in art.checks:
        print(c.line())
    if args.strict_checks and not art.checks_passed:
        return EXIT_CHECK
    return EXIT_OK


def cmd_materials(args) -> int:
    from .materials import LorentzMaterial, material_report

    cfg = _load(args)
    entries = []
    for k, r in enumerate(cfg.medium.rectangles):
        e = LorentzMaterial.drude(r.w_e, r.gamma_e) if r.w_e > 0 else LorentzMaterial()
        h = LorentzMaterial.drude(r.w_m, r.gamma_m) if r.w_m > 0 else LorentzMaterial()
        entries.append((f"rect{k}", e, h))
    for name, mat in cfg.materials:
        entries.append((name, mat, LorentzMaterial()))
    ok = True
    for name, e, h in entries:
        rep = material_report(name, e, h)
        kk = "na" if rep.kk_residual is None else f"{rep.kk_residual:.3e}"
        print(f"material={name} causal={rep.causal} passive={rep.passivity.passive} "
              f"min_eig={rep.passivity.min_eig:.6e} worst_omega={rep.passivity.worst_omega:.6g} kk_residual={kk}")
        for n in rep.notes:
            print(f"  note: {n}")
        ok &= rep.causal and rep.passivity.passive
    if not entries:
        print("no materials defined")
    return EXIT_OK if ok else EXIT_CHECK


def verify_suite() -> list[tuple[str, bool, str]]:
    """Small-grid checks: oracle equivalence, energy, propagation and kernel sanity."""
    from .diagnostics import PropagationProbe, energy_check, propagation_check
    from .grid import GridSpec, MediumMap, Rectangle, sample_medium
    from .materials import LorentzMaterial, LorentzPole, check_passivity, kernel_lambda, material_matrix
    from .oracle import NonlocalSimulation
    from .solver import Simulation, SourceSpec, StepScheme

    results = []
    g = GridSpec(-1.6, 1.6, -1.6, 1.6, 32, 32)
    src = SourceSpec(omega=5.0, center=(-0.6, 0.1), a=25.0)
    for gamma in (0.0, 0.3):
        mm = MediumMap(rectangles=(Rectangle(-0.8, 0.8, -0.8, 0.8, 4.0, 2.0, gamma, gamma),))
        sc = StepScheme.from_cfl(g, 0.9, n_steps=200)
        a = Simulation(g, sample_medium(mm, g), sc, src)
        b = NonlocalSimulation.from_medium(g, sample_medium(mm, g), sc, source=src)
        diff = 0.0
        for _ in range(sc.n_steps):
            a.step()
            b.step()
            diff = max(diff, *(float(np.abs(getattr(a.state, n) - getattr(b.state, n)).max())
                               for n in ("E3", "H1", "H2")))
        results.append((f"oracle_equivalence_gamma={gamma:g}", diff <= 1e-10, f"max_diff={diff:.3e}"))

    t_off = 2 * math.pi / 5.0 * 2
    mm = MediumMap(rectangles=(Rectangle(-0.8, 0.8, -0.8, 0.8, 4.0, 2.0),))
    sc = StepScheme.from_cfl(g, 0.5, n_steps=2000)
    sim = Simulation(g, sample_medium(mm, g), sc, SourceSpec(omega=5.0, center=(-0.6, 0.1), t_off=t_off))
    sim.run(sc.n_steps)
    cons = energy_check([r for r in sim.energy if r.t >= t_off], "conservative")
    bnd = energy_check(sim.energy, "bounded")
    results.append(("energy_conservation", cons.passed, f"drift={cons.value:.3e}"))
    results.append(("energy_bound", bnd.passed, f"excess={bnd.value:.3e}"))

    g2 = GridSpec(-6.0, 6.0, -6.0, 6.0, 120, 120)
    sc2 = StepScheme.from_cfl(g2, 0.9, t_end=4.0)
    src2 = SourceSpec(omega=5.0, center=(-4.0, 0.0), a=25.0)
    probe = PropagationProbe((3.0, 0.0), 5.0, 1.0, 1e-10)
    probe.validate_source(src2, g2)
    sim2 = Simulation(g2, None, sc2, src2, record_energy=False)
    run_max = 0.0
    probe.observe(sim2.state, g2, sc2.dt)
    for _ in range(sc2.n_steps):
        sim2.step()
        run_max = max(run_max, float(np.abs(sim2.state.E3).max()))
        probe.observe(sim2.state, g2, sc2.dt)
    prop = propagation_check([probe], run_max)
    results.append(("propagation", prop.passed, f"worst_ratio={prop.value:.3e}"))

    t = np.linspace(-5, -1e-9, 50)
    mats = [LorentzMaterial.drude(4.0), LorentzMaterial((LorentzPole(1.0, 2.0, 0.1), LorentzPole(2.0, 0.5, 3.0)))]
    causal = all(np.all(kernel_lambda(m, t) == 0) for m in mats)
    results.append(("kernel_causality", causal, "lambda(t<0) == 0"))
    w = np.linspace(-20, 20, 64) + 0.01
    rep = check_passivity(material_matrix(mats[1], mats[0]), w)
    results.append(("kernel_passivity", rep.passive, f"min_eig={rep.min_eig:.3e}"))
    return results


def cmd_verify(args) -> int:
    ok = True
    for name, passed, detail in verify_suite():
        print(f"check={name} verdict={'pass' if passed else 'fail'} {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_CHECK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.print_defaults:
        sys.stdout.write(format_config(SimConfig()))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    handlers = {"run": cmd_run, "verify": cmd_verify, "materials": cmd_materials}
    try:
        return handlers[args.command](args)
    except (ParseError, ValidationError, RectangleOutsideInterior, CflViolation, KeyError, OSError) as exc:
        print(f"dmx: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteField, FloatingPointError, OverflowError) as exc:
        print(f"dmx: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DmxError as exc:
        print(f"dmx: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
