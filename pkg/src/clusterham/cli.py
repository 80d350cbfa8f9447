"""Command-line front end: ``clusterham <command> [options]``.

Every command prints a plain-text report and exits with 0 when the claim it
checks is verified, 1 when verification fails (the report then carries the
first witness) and 2 on usage errors.  Numbers are read as exact rationals.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ClusterHamError, ParseError, UnknownModel
from .exact import as_rational, parse_label

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_SOLVE_WINDOWS = {"kdv-a": (10, 14), "kdv-b": (10, 14), "boussinesq": (12, 16), "b210": (12, 17)}
DEFAULT_OFFSETS = {"kdv-a": 3, "kdv-b": 3, "boussinesq": 2, "b210": 2}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated command-line settings.

    Defaults: window ``-12:12`` for the Hamiltonian test and index windows,
    ``-4:4`` boxes for iteration, offset radius from the model table, and
    lambda samples ``0,1,-2,7``.
    """

    command: str
    model: str | None = None
    windows: list = field(default_factory=list)
    offsets: int | None = None
    brackets: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    steps: int = 4
    symbolic: bool = False
    explain: bool = False
    out: str | None = None
    inputs: list = field(default_factory=list)
    at: list = field(default_factory=list)
    init: str | None = None
    relations: str = "derived"


def _window_arg(text: str) -> tuple:
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"bad window {text!r}; expected lo:hi") from None
    if lo >= hi:
        raise UsageError(f"empty window {text!r}")
    return lo, hi


def _read_text(arg: str) -> str:
    p = Path(arg)
    if p.exists():
        return p.read_text()
    return arg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clusterham", description="Cluster mutation dynamics and log-canonical Hamiltonian structures.")
    ap.add_argument("command", choices=["mutate", "period-check", "iterate", "solve-ham", "verify-ham", "pencil", "models"])
    ap.add_argument("inputs", nargs="*", help="input files (quiver file for mutate)")
    ap.add_argument("--model")
    ap.add_argument("--window", action="append", default=[], help="lo:hi (repeat for several windows)")
    ap.add_argument("--offsets", type=int)
    ap.add_argument("--bracket", action="append", default=[], help="inline description or path (repeat for pencil)")
    ap.add_argument("--lambdas")
    ap.add_argument("--steps", type=int, default=4)
    ap.add_argument("--symbolic", action="store_true")
    ap.add_argument("--explain", action="store_true")
    ap.add_argument("--out")
    ap.add_argument("--at", action="append", default=[], help="vertex label to mutate at (repeatable, applied in order)")
    ap.add_argument("--init", help="initial data file ('init <coords> <value>' lines)")
    ap.add_argument("--relations", choices=["derived", "printed", "none"], default="derived")
    return ap


def _normalize_argv(argv: list) -> list:
    """Glue values that start with '-' (like ``-12:12``) to their option."""
    out = []
    it = iter(range(len(argv)))
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--window", "--lambdas") and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_config(argv: list) -> RunConfig:
    ns = build_parser().parse_args(_normalize_argv(argv))
    cfg = RunConfig(ns.command, ns.model, [_window_arg(w) for w in ns.window], ns.offsets,
                    list(ns.bracket), [], ns.steps, ns.symbolic, ns.explain, ns.out,
                    list(ns.inputs), list(ns.at), ns.init, ns.relations)
    if ns.lambdas:
        try:
            cfg.lambdas = [as_rational(x) for x in ns.lambdas.split(",")]
        except (ValueError, TypeError, ZeroDivisionError):
            raise UsageError(f"bad lambda list {ns.lambdas!r}") from None
    needs_model = {"period-check", "iterate", "solve-ham", "verify-ham", "pencil"}
    if cfg.command in needs_model and not cfg.model:
        raise UsageError(f"{cfg.command} needs --model")
    if cfg.command == "mutate" and (len(cfg.inputs) != 1 or not cfg.at):
        raise UsageError("mutate needs one quiver file and at least one --at label")
    if cfg.command == "verify-ham" and len(cfg.brackets) != 1:
        raise UsageError("verify-ham needs exactly one --bracket")
    if cfg.command == "pencil" and len(cfg.brackets) != 2:
        raise UsageError("pencil needs two --bracket options (P1 then P2)")
    if cfg.steps < 0:
        raise UsageError("--steps must be non-negative")
    return cfg


# ---------------------------------------------------------------------------
# commands


def _model(cfg):
    from .models import builtin_model
    return builtin_model(cfg.model)


def _box(m, cfg, default):
    lo, hi = cfg.windows[-1] if cfg.windows else default
    return [(lo, hi)] * m.dim


def cmd_models(cfg) -> tuple:
    from .models import MODEL_IDS, builtin_model
    out = []
    for mid in MODEL_IDS:
        m = builtin_model(mid)
        period = m.stencil.period if m.stencil else m.lattice.period
        out.append(f"{mid}: {m.title}")
        out.append(f"  equation {m.equation_text()}")
        out.append(f"  dim={m.dim} period={period} step={m.step} shift={m.lattice.shift}")
        for note in m.notes:
            out.append(f"  note: {note}")
        if cfg.explain:
            out.extend("  | " + line for line in m.export().splitlines())
    return EXIT_OK, out


def cmd_mutate(cfg) -> tuple:
    from .quiver import composite_mutate, dump_quiver, matrix_mutate, parse_quiver, quiver_to_matrix
    B = quiver_to_matrix(parse_quiver(_read_text(cfg.inputs[0])))
    out = []
    for tok in cfg.at:
        k = parse_label(tok)
        B = matrix_mutate(B, k)
        if cfg.explain:
            out.append(f"# mutated at {k.render()}: {sum(1 for v in B.entries().values() if v > 0)} arrow entries")
    out.extend(dump_quiver(B).splitlines())
    return EXIT_OK, out


def cmd_period_check(cfg) -> tuple:
    from .models import model_periodicity
    m = _model(cfg)
    if m.stencil is not None:
        window = cfg.windows[-1] if cfg.windows else (-12, 12)
    elif m.finite is not None:
        window = None
    else:
        window = _box(m, cfg, (-6, 6))
    rep = model_periodicity(m, window)
    out = [f"model {m.id}"] + rep.lines()
    if cfg.explain:
        out.append(f"checked {rep.checked} matrix entries between interior vertices after one composite step")
        if m.stencil is not None:
            lo, hi = rep.window
            out.append("relabelling " + " ".join(f"{i}->{m.index_shift(i)}" for i in range(lo, hi + 1)))
    return (EXIT_OK if rep.ok else EXIT_FAIL), out


def cmd_iterate(cfg) -> tuple:
    from .cluster import iterate_model, laurent_phenomenon_check, parse_init, trace_residuals
    m = _model(cfg)
    if cfg.init:
        initial = parse_init(_read_text(cfg.init))
    else:
        if m.finite is not None:
            labels = list(m.finite.labels)
        else:
            labels = m.lattice.vertices(_box(m, cfg, (-4, 4) if m.dim == 2 else (-3, 3)))
        initial = {lab: ("sym" if cfg.symbolic else 1) for lab in labels}
    tr = iterate_model(m, initial, cfg.steps)
    lp, bad = laurent_phenomenon_check(tr)
    res = trace_residuals(tr, m)
    out = [f"model {m.id} steps={cfg.steps} produced={len(tr.produced)} symbolic={'yes' if tr.symbolic else 'no'}"]
    if cfg.explain or not tr.symbolic:
        out.extend(tr.lines())
    out.append("laurent yes" if lp else f"laurent NO first={bad.render()}")
    out.append("residuals 0" if not res else f"residuals {len(res)} first={res[0].render()}")
    return (EXIT_OK if lp and not res else EXIT_FAIL), out


def cmd_solve_ham(cfg) -> tuple:
    from .solver import (build_constraint_system, classify_hamiltonian_rank, coordinates_text,
                         family_coordinates, stabilize_across_windows)
    m = _model(cfg)
    if m.stencil is None:
        raise UsageError(f"solve-ham works on index stencils; {m.id} has none")
    wins = cfg.windows or [(-w, w) for w in DEFAULT_SOLVE_WINDOWS.get(m.id, (10, 14))]
    if len(wins) < 2:
        raise UsageError("solve-ham needs two nested windows (repeat --window)")
    M = cfg.offsets or DEFAULT_OFFSETS.get(m.id, 2)
    fam = stabilize_across_windows(m, wins, M, cfg.relations)
    out = [f"model {m.id} relations={cfg.relations} offsets={M}"] + fam.lines()[:1 + len(fam.windows)]
    try:
        coords = family_coordinates(fam, m)
    except ValueError:
        coords = [None] * fam.dimension
    for k, (P, c) in enumerate(zip(fam.basis, coords)):
        out.append(f"# basis {k + 1}")
        out.append(coordinates_text(m, c) if c is not None else P.to_text())
    status = EXIT_OK if fam.stable else EXIT_FAIL
    if fam.stable and fam.dimension:
        rep = classify_hamiltonian_rank(fam, m)
        out.extend(rep.lines())
    if cfg.explain:
        cs = build_constraint_system(m, wins[-1], M, cfg.relations)
        out.extend(cs.explain())
        out.append("# offset tables")
        for P in fam.basis:
            out.extend(P.to_text().splitlines())
    return status, out


def cmd_verify_ham(cfg) -> tuple:
    from .poisson import ideal_stability_check, parse_bracket
    m = _model(cfg)
    P = parse_bracket(_read_text(cfg.brackets[0]))
    box = _box(m, cfg, (-12, 12) if m.dim <= 2 else (-5, 5))
    v = ideal_stability_check(P, m, box, max_witnesses=0 if cfg.explain else 50)
    out = [f"model {m.id} bracket {P.kind}"] + v.lines(limit=len(v.witnesses) if cfg.explain else 5)
    if cfg.explain:
        out.append(f"generators {v.generators} variables {v.variables}; a pair passes when all "
                   f"{len(m.equation)} monomials get the same bracket coefficient")
    return (EXIT_OK if v.holds else EXIT_FAIL), out


def cmd_pencil(cfg) -> tuple:
    from .poisson import parse_bracket, pencil_check
    m = _model(cfg)
    P1 = parse_bracket(_read_text(cfg.brackets[0]))
    P2 = parse_bracket(_read_text(cfg.brackets[1]))
    lambdas = cfg.lambdas or [as_rational(x) for x in (0, 1, -2, 7)]
    box = _box(m, cfg, (-12, 12) if m.dim <= 2 else (-5, 5))
    rep = pencil_check(P1, P2, m, lambdas, box)
    out = [f"model {m.id}"] + rep.lines()
    if not rep.holds:
        for name, v in rep.verdicts.items():
            if not v.holds:
                out.append(f"first failure at {name}: " + v.lines()[0])
                break
    if cfg.explain:
        for name, v in rep.verdicts.items():
            out.append(f"{name}: " + v.lines()[0])
    return (EXIT_OK if rep.holds else EXIT_FAIL), out


COMMANDS = {
    "models": cmd_models,
    "mutate": cmd_mutate,
    "period-check": cmd_period_check,
    "iterate": cmd_iterate,
    "solve-ham": cmd_solve_ham,
    "verify-ham": cmd_verify_ham,
    "pencil": cmd_pencil,
}


def run_command(cfg: RunConfig) -> tuple:
    """Dispatch; returns ``(exit_status, report_lines)``."""
    return COMMANDS[cfg.command](cfg)


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        status, lines = run_command(cfg)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, ParseError, UnknownModel) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClusterHamError as exc:
        print(f"FAIL {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = "\n".join(lines) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
