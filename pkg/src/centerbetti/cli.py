"""Command line driver: ``centerbetti {density,converge,detbound,sofic,oracle} --config FILE``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .approximation import SchemeError
from .config import ConfigError, load_config
from .groups import GroupError
from .report import COMMANDS, run
from .ring import RingError
from .spectral import SpectralError


def parse_stage_list(text: str) -> list[int]:
    """``"2,4,8"``, ``"2..10"`` (inclusive) or ``"2..4096:x2"`` (geometric)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            rng, _, step = part.partition(":")
            lo, hi = (int(v) for v in rng.split(".."))
            if step.startswith("x"):
                factor = int(step[1:])
                if factor < 2:
                    raise argparse.ArgumentTypeError(f"geometric factor must be >= 2 in {part!r}")
                v = lo
                while v <= hi:
                    out.append(v)
                    v *= factor
            else:
                out.extend(range(lo, hi + 1, int(step) if step else 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty stage list")
    return out


def _stage_arg(text: str) -> list[int]:
    try:
        return parse_stage_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="centerbetti",
                                description="Finite approximation of center-valued L2 invariants of group ring matrices.")
    sub = p.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    helps = {
        "density": "spectral density step functions per stage",
        "converge": "kernel Fourier coefficients per stage against the limit",
        "detbound": "Fuglede-Kadison determinants and their lower bounds",
        "sofic": "transported kernels on labeled graphs and det*",
        "oracle": "Fourier-symbol values only",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, metavar="PATH", help="TOML or JSON experiment file")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides config and environment)")
        sp.add_argument("--stages", type=_stage_arg, metavar="LIST",
                        help="stage parameters, e.g. 2,4,8 or 2..4096:x2")
        sp.add_argument("--track", metavar="WORDS", help="comma-separated group words to track")
        sp.add_argument("--reproducible", action="store_true", help="single-threaded, deterministic sweep")
        grid = sp.add_mutually_exclusive_group()
        grid.add_argument("--grid", type=int, metavar="N", help="oracle grid size per torus direction")
        grid.add_argument("--no-oracle", action="store_true", help="skip oracle rows")
        sp.add_argument("--no-plots", action="store_true", help="do not render PNG figures")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.stages is not None:
            cfg = cfg.with_stages(args.stages)
        if args.track:
            cfg = replace(cfg, track=tuple(w.strip() for w in args.track.split(",") if w.strip()))
            cfg.tracked_classes()
        if args.grid is not None:
            if args.grid < 2:
                parser.error("--grid must be at least 2")
            cfg = replace(cfg, grid=args.grid, oracle=True)
        if args.no_oracle:
            if args.command == "oracle":
                parser.error("--no-oracle conflicts with the oracle subcommand")
            cfg = replace(cfg, oracle=False)
        report = run(cfg, args.command, args.out, args.reproducible, not args.no_plots)
    except (ConfigError, GroupError, RingError, SchemeError, SpectralError, OSError) as exc:
        print(f"centerbetti: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report.text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
