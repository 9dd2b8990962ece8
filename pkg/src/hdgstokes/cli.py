"""Command line driver for convergence studies.

Example::

    hdg-stokes --levels 1-5 --variant both --out results/conv.csv

Settings may also come from a ``key=value`` file passed with ``--config``;
explicit flags override the file.
"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .convergence import (REFERENCE_PRESSURE_ERRORS, ConvergenceError, RunConfig, config_fields, format_table,
                          output_path, pressure_comparison, run_convergence)

log = logging.getLogger("hdgstokes")


class ConfigError(ValueError):
    pass


def parse_levels(text):
    """``"1-6"``, ``"1..6"`` or ``"1,2,4"`` -> tuple of ints."""
    text = str(text).strip()
    for sep in ("..", "-", ":"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "k": int,
    "epsilon": int,
    "tau": float,
    "nu": float,
    "levels": parse_levels,
    "pattern": str,
    "variant": str,
    "out": str,
    "quad_degree": int,
    "plot": _parse_bool,
}


def config_from_pairs(pairs, base=None):
    """Apply ``key=value`` strings on top of ``base`` (defaults if None)."""
    known = config_fields()
    values = {}
    for raw in pairs:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {val!r} ({exc})") from exc
    return _build(base or RunConfig(), values)


def _build(base, values):
    try:
        return replace(base, **values)
    except ValueError as exc:
        key = next((k for k in values if k in str(exc)), None)
        prefix = f"invalid {key!r}: " if key else "invalid configuration: "
        raise ConfigError(prefix + str(exc)) from exc


def load_config_file(path, base=None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return config_from_pairs(text.splitlines(), base)


def build_parser():
    p = argparse.ArgumentParser(prog="hdg-stokes", description="Convergence study for the hybrid DG Stokes solver.")
    p.add_argument("--config", help="key=value file; explicit flags take precedence")
    p.add_argument("--k", type=int, help="polynomial order (1 or 2), default 1")
    p.add_argument("--epsilon", type=int, help="-1 symmetric, +1 non-symmetric; default -1")
    p.add_argument("--tau", type=float, help="penalty parameter, default 6")
    p.add_argument("--nu", type=float, help="viscosity, default 1")
    p.add_argument("--levels", type=parse_levels, help="refinement levels, e.g. 1-6 or 2,3,4; default 1-6")
    p.add_argument("--pattern", help="diagonal pattern: right, left, alternating")
    p.add_argument("--variant", help="stabilised, baseline or both")
    p.add_argument("--out", help="CSV path; figures are written next to it")
    p.add_argument("--quad-degree", dest="quad_degree", type=int, help="triangle quadrature exactness, default 12")
    p.add_argument("--no-plot", dest="plot", action="store_const", const=False, help="skip the PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None):
    """Parse command line arguments into a :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    base = load_config_file(args.config) if args.config else RunConfig()
    overrides = {k: v for k, v in vars(args).items() if k in config_fields() and v is not None}
    return _build(base, overrides), args


def write_figures(config, tables):
    from .plotting import plot_convergence, plot_pressure_comparison

    written = []
    for variant, table in tables.items():
        written.append(plot_convergence(table, output_path(config.out, variant, config).with_suffix(".png")))
    if len(tables) == 2:
        ref = {}
        for order in (0, 1):
            vals = REFERENCE_PRESSURE_ERRORS.get((config.epsilon, order))
            if vals:
                ref[f"published $Q^{order}$"] = (range(1, len(vals) + 1), vals)
        path = Path(config.out)
        written.append(plot_pressure_comparison(tables, path.with_name(f"{path.stem}_pressure.png"), ref))
    return written


def main(argv=None):
    try:
        config, args = parse_config(argv)
    except ConfigError as exc:
        print(f"hdg-stokes: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if config.out:
        Path(config.out).parent.mkdir(parents=True, exist_ok=True)
    try:
        tables = run_convergence(config)
    except ConvergenceError as exc:
        print(f"hdg-stokes: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hdg-stokes: {exc}", file=sys.stderr)
        return 1
    for table in tables.values():
        print(format_table(table))
        print()
    if len(tables) == 2:
        print(pressure_comparison(tables, config.epsilon))
    if config.out and config.plot:
        for path in write_figures(config, tables):
            log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
