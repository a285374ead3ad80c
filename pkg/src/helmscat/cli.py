"""Command-line entry point: ``helmscat solve | table | grid | selftest``."""
import argparse
import logging
import re
import sys
from importlib import resources
from pathlib import Path

from .config import GridSpec, load_config
from .errors import ConfigError, GeometryError
from .runner import emit_grid, format_table, run_experiment
from .scatmat import OperatorCache

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_NOT_CONVERGED = 4


def bundled_config(name):
    """Path of a config shipped with the package (``name`` without ``.json``)."""
    return resources.files("helmscat") / "configs" / f"{name}.json"


_GRID_ARG = re.compile(r"^-[0-9.]+(,[-+0-9.eE]+){5}$")


def _protect_grid_specs(argv):
    # argparse takes "-1,1,-1,1,50,50" for an option; a leading space hides the dash
    return [" " + a if _GRID_ARG.match(a) else a for a in argv]


def _resolve(path):
    p = Path(path)
    if not p.exists() and not p.suffix:
        bundled = bundled_config(p.name)
        if bundled.is_file():
            return bundled
    return p


def _load(path):
    p = _resolve(path)
    try:
        return load_config(p)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def _print_row(result, out):
    out.write(format_table([result.row()], result.columns()))


def cmd_solve(args, out):
    cfg = _load(args.config)
    grid = GridSpec.parse(args.grid) if args.grid else None
    result = run_experiment(cfg, args.out, condition=args.cond or None, grid=grid)
    _print_row(result, out)
    if not result.report.converged:
        print(f"error: GMRES did not converge in {result.report.matvec_count} matvecs", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_table(args, out):
    configs = sorted(Path(args.directory).glob("*.json"))
    if not configs:
        raise ConfigError(f"no *.json configs in {args.directory}")
    cache = OperatorCache()
    rows, columns, status = [], ("config",), EXIT_OK
    for path in configs:
        cfg = _load(path)
        result = run_experiment(cfg, cache=cache, condition=args.cond or None)
        row = {"config": cfg.name, **result.row()}
        rows.append(row)
        columns = columns + tuple(c for c in result.columns() if c not in columns)
        if not result.report.converged:
            status = EXIT_NOT_CONVERGED
    text = format_table(rows, columns)
    if args.out:
        Path(args.out).write_text(text)
    out.write(text)
    return status


def cmd_grid(args, out):
    cfg = _load(args.config)
    spec = GridSpec.parse(args.spec)
    result = run_experiment(cfg)
    text = emit_grid(result.problem, result.report.q_hat, result.incoming, spec, args.out)
    if not args.out:
        out.write(text)
    return EXIT_OK if result.report.converged else EXIT_NOT_CONVERGED


def cmd_selftest(args, out):
    from .selftest import run_all

    results = run_all(seed=args.seed, out=lambda s: print(s, file=out))
    return EXIT_OK if all(ok for _, ok, _ in results) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="helmscat", description="Multi-body Helmholtz scattering experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one experiment config")
    s.add_argument("config", help="JSON config file, or the name of a bundled config")
    s.add_argument("--out", help="directory for the CSV outputs")
    s.add_argument("--cond", action="store_true", help="also compute the condition number K")
    s.add_argument("--grid", help="field grid xmin,xmax,ymin,ymax,nx,ny (written with --out)")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("table", help="run every config in a directory into one CSV")
    t.add_argument("directory")
    t.add_argument("--out", help="CSV file to write (also printed)")
    t.add_argument("--cond", action="store_true", help="also compute the condition number K")
    t.set_defaults(func=cmd_table)

    g = sub.add_parser("grid", help="total field on a rectangular grid (2D)")
    g.add_argument("config")
    g.add_argument("spec", help="xmin,xmax,ymin,ymax,nx,ny")
    g.add_argument("--out", help="CSV file to write (default: stdout)")
    g.set_defaults(func=cmd_grid)

    st = sub.add_parser("selftest", help="run the invariant suites")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_protect_grid_specs(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
