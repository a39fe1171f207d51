"""Command-line surface: subcommands, flat key=value configuration, and CSV
emission with reproducible run metadata.

Every output file starts with ``#``-prefixed metadata lines carrying the full
effective configuration; re-parsing them reconstructs a RunConfig whose rerun
produces byte-identical output apart from the ``# created`` line. Exit codes:
0 success, 2 configuration error, 3 numerical precondition failure (covariance
not positive definite), 4 validation failure.
"""

import argparse
import math
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone

import numpy as np

from . import __version__, asymptotics, empirical, mc, validate
from .ensembles import (
    IsomGaf,
    KostlanAffine,
    NormalizedG,
    ParabolaDeg3,
    SyntheticIdentity,
    psi_square,
    psi_zero,
)
from .kacrice import NotPositiveDefinite, density_closed

__all__ = ["RunConfig", "ConfigError", "main", "load_run_config"]

ENSEMBLES = ("isom", "g", "kostlan", "parabola", "synthetic-identity")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat configuration record; every field has a default and every field is
    embedded in output metadata so runs can be reconstructed from files."""

    command: str = ""
    ensemble: str = "isom"
    n: int = 1
    d: int = 3
    b: float = 0.0
    psi: str = "zero"
    t_min: float = 0.05
    t_max: float = 0.3
    steps: int = 9
    t: float = 1.0
    d_list: str = "16,64,256"
    b_list: str = "0,1,2"
    samples: int = 100_000
    seed: int = 0
    estimator: str = "spherical"
    smooth: bool = False
    window: int = 15
    chunk_count: int = mc.DEFAULT_CHUNK_COUNT
    output: str = ""
    source: str = "kostlan"
    count: int = 600
    bins: int = 30
    bin_max: float = 0.0
    half_width: float = 3.0
    n_trunc: int = 80
    domain: str = "projective"
    intensity: float = 1.0 / math.pi
    n_max: int = 4
    k_max: int = 3
    level: str = "fast"
    only: str = ""


COMMAND_DEFAULTS = {
    # Calibrated fit window for the finite-degree constants.
    "parabola": {"t_min": 0.03, "t_max": 0.12, "steps": 8},
    # d = 0 means "no degree given": report the limit-ensemble constants.
    "constants": {"d": 0},
}


def _coerce(name, text, kind):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"cannot parse {name} = {text!r} as {kind.__name__}")


def read_config_file(path):
    """Flat ``key = value`` lines; blank lines and ``#`` comments ignored."""
    types = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key == "command":
            raise ConfigError("command cannot be set from a config file")
        if key not in types:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        ftype = {"int": int, "float": float, "str": str, "bool": bool}[
            types[key] if isinstance(types[key], str) else types[key].__name__]
        out[key] = _coerce(key, value, ftype)
    return out


def _build_parser():
    parser = argparse.ArgumentParser(prog="zerocorr",
                                     description="Zero-correlation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(p, *names, **kw):
        kw.setdefault("default", None)
        p.add_argument(*names, **kw)

    def common(p):
        add(p, "--config", help="flat key = value config file")
        add(p, "--output", help="CSV output path (default: stdout)")
        add(p, "--seed", type=int)
        add(p, "--samples", type=int)
        add(p, "--chunk-count", type=int)

    p = sub.add_parser("curve", help="correlation curve K(t) to CSV")
    common(p)
    add(p, "--ensemble", choices=ENSEMBLES)
    add(p, "--n", type=int)
    add(p, "--d", type=int)
    add(p, "--b", type=float)
    add(p, "--t-min", type=float)
    add(p, "--t-max", type=float)
    add(p, "--steps", type=int)
    add(p, "--estimator", choices=("spherical", "gaussian"))
    add(p, "--smooth", action="store_true")
    add(p, "--window", type=int)

    p = sub.add_parser("constants", help="closed-form constants to stdout/CSV")
    add(p, "--config")
    add(p, "--output")
    add(p, "--n", type=int)
    add(p, "--d", type=int)

    p = sub.add_parser("density", help="sampled zero density vs closed form")
    common(p)
    add(p, "--ensemble", choices=ENSEMBLES)
    add(p, "--n", type=int)
    add(p, "--d", type=int)
    add(p, "--b", type=float)

    p = sub.add_parser("parabola", help="fitted constants along curvatures")
    common(p)
    add(p, "--b-list")
    add(p, "--t-min", type=float)
    add(p, "--t-max", type=float)
    add(p, "--steps", type=int)

    p = sub.add_parser("universality", help="finite-degree gap to the limit")
    common(p)
    add(p, "--d-list")
    add(p, "--psi", choices=("zero", "square"))
    add(p, "--t", type=float)

    p = sub.add_parser("parallelotope", help="volume moments vs closed form")
    common(p)
    add(p, "--n-max", type=int)
    add(p, "--k-max", type=int)

    p = sub.add_parser("empirical", help="pair correlation from sampled zeros")
    add(p, "--config")
    add(p, "--output")
    add(p, "--seed", type=int)
    add(p, "--source", choices=("kostlan", "gaf", "poisson"))
    add(p, "--d", type=int)
    add(p, "--count", type=int)
    add(p, "--bins", type=int)
    add(p, "--bin-max", type=float)
    add(p, "--half-width", type=float)
    add(p, "--n-trunc", type=int)
    add(p, "--domain", choices=("projective", "window"))
    add(p, "--intensity", type=float)

    p = sub.add_parser("validate", help="named check suites")
    add(p, "--config")
    add(p, "--output")
    add(p, "--level", choices=("fast", "full"))
    add(p, "--only", help="comma-separated check names")
    return parser


def build_config(argv):
    parser = _build_parser()
    args = parser.parse_args(argv)
    file_values = {}
    if getattr(args, "config", None):
        file_values = read_config_file(args.config)
    base = RunConfig(command=args.command)
    merged = {}
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        flag = getattr(args, f.name, None)
        if flag is not None:
            merged[f.name] = flag
        elif f.name in file_values:
            merged[f.name] = file_values[f.name]
        elif f.name in COMMAND_DEFAULTS.get(args.command, {}):
            merged[f.name] = COMMAND_DEFAULTS[args.command][f.name]
        else:
            merged[f.name] = getattr(base, f.name)
    cfg = RunConfig(command=args.command, **merged)
    _check_config(cfg)
    return cfg


def _check_config(cfg):
    if cfg.command in ("curve", "parabola"):
        if not (cfg.t_min > 0 and cfg.t_max > cfg.t_min):
            raise ConfigError("need 0 < t-min < t-max")
        if cfg.steps < 1:
            raise ConfigError("steps must be positive")
    if cfg.samples < 1:
        raise ConfigError("samples must be positive")
    if cfg.chunk_count < 1:
        raise ConfigError("chunk-count must be positive")
    if cfg.command == "curve" and cfg.smooth and cfg.window % 2 == 0:
        raise ConfigError("smoothing window must be odd")


def _make_kind(cfg):
    if cfg.ensemble == "isom":
        return IsomGaf(cfg.n)
    if cfg.ensemble == "g":
        return NormalizedG(cfg.n)
    if cfg.ensemble == "kostlan":
        if cfg.d < 3:
            raise ConfigError("degree must be at least 3")
        return KostlanAffine(cfg.n, cfg.d)
    if cfg.ensemble == "parabola":
        return ParabolaDeg3(cfg.b)
    if cfg.ensemble == "synthetic-identity":
        return SyntheticIdentity(cfg.n)
    raise ConfigError(f"unknown ensemble {cfg.ensemble!r}")


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _metadata_lines(cfg, extra=()):
    lines = [f"# created = {datetime.now(timezone.utc).isoformat()}",
             f"# version = {__version__}"]
    for f in fields(RunConfig):
        if f.name == "output":
            continue  # destination path, not part of the computation
        lines.append(f"# {f.name} = {_format_value(getattr(cfg, f.name))}")
    for key, value in extra:
        lines.append(f"# {key} = {_format_value(value)}")
    return lines


def write_csv(cfg, columns, rows, extra=()):
    lines = _metadata_lines(cfg, extra)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def load_run_config(path):
    """Rebuild the RunConfig embedded in a CSV's metadata lines."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            if not raw.startswith("#"):
                break
            line = raw[1:].strip()
            if "=" not in line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key in ("created", "version") or key not in types:
                continue
            name = types[key] if isinstance(types[key], str) else types[key].__name__
            ftype = {"int": int, "float": float, "str": str, "bool": bool}[name]
            values[key] = _coerce(key, value, ftype)
    return RunConfig(**values)


def _parse_list(text, kind, name):
    try:
        return [kind(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse {name} list {text!r}")


def cmd_curve(cfg):
    kind = _make_kind(cfg)
    grid = np.linspace(cfg.t_min, cfg.t_max, cfg.steps)
    curve = asymptotics.correlation_curve(kind, grid, cfg.samples, cfg.seed,
                                          cfg.estimator, cfg.chunk_count)
    columns = ["t", "K", "stderr", "n_samples"]
    rows = [[p.t, p.k, p.stderr, p.n_samples] for p in curve.points]
    if cfg.smooth:
        smoothed = asymptotics.smooth_curve(curve, cfg.window)
        columns.append("K_smooth")
        for row, p in zip(rows, smoothed.points):
            row.append(p.k)
    write_csv(cfg, columns, rows)
    return 0


def cmd_constants(cfg):
    has_degree = cfg.d > 0
    if has_degree and cfg.d < 3:
        raise ConfigError("degree must be at least 3")
    a_value = asymptotics.short_range_constant(cfg.n, cfg.d if has_degree else None)
    rho = density_closed(KostlanAffine(cfg.n, cfg.d) if has_degree
                         else IsomGaf(cfg.n))
    rows = [("A", a_value), ("rho", rho)]
    if has_degree:
        rows.append(("D", asymptotics.dn_constant(cfg.n, cfg.d)))
    if cfg.output:
        write_csv(cfg, ["name", "value"], rows)
    else:
        print(", ".join(f"{name}={round(value, 7)}" for name, value in rows))
    return 0


def cmd_density(cfg):
    kind = _make_kind(cfg)
    est = mc.density_mc(kind, n_samples=cfg.samples, seed=cfg.seed,
                        chunk_count=cfg.chunk_count)
    try:
        closed = density_closed(kind)
    except ValueError:
        closed = float("nan")
    write_csv(cfg, ["density", "stderr", "closed", "n_samples"],
              [[est.mean, est.stderr, closed, est.n_samples]])
    return 0


def cmd_parabola(cfg):
    grid = np.linspace(cfg.t_min, cfg.t_max, cfg.steps)
    rows = []
    for index, b in enumerate(_parse_list(cfg.b_list, float, "curvature")):
        curve = asymptotics.correlation_curve(ParabolaDeg3(b), grid,
                                              cfg.samples, cfg.seed + index,
                                              cfg.estimator, cfg.chunk_count)
        fit = asymptotics.fit_power_law(curve, cfg.t_min, cfg.t_max,
                                        fixed_exponent=1.0)
        rows.append([b, fit.constant, fit.constant_stderr,
                     asymptotics.parabola_constant(b)])
    write_csv(cfg, ["b", "constant", "stderr", "target"], rows)
    return 0


def cmd_universality(cfg):
    psi = psi_zero() if cfg.psi == "zero" else psi_square()
    rows = []
    for d in _parse_list(cfg.d_list, int, "degree"):
        if d < 3:
            raise ConfigError("degree must be at least 3")
        gap = asymptotics.universality_gap(d, psi, cfg.t, cfg.samples,
                                           cfg.seed, cfg.chunk_count)
        rows.append([d, gap.gap, gap.stderr, gap.k_pullback, gap.k_limit])
    write_csv(cfg, ["d", "gap", "stderr", "k_pullback", "k_limit"], rows)
    return 0


def cmd_parallelotope(cfg):
    if cfg.n_max < 1 or cfg.k_max < 0:
        raise ConfigError("need n-max >= 1 and k-max >= 0")
    rows = []
    for n in range(1, cfg.n_max + 1):
        for k in range(0, cfg.k_max + 1):
            est = mc.parallelotope_moment_mc(n, k, cfg.samples,
                                             cfg.seed + 4 * n + k,
                                             cfg.chunk_count)
            rows.append([n, k, est.mean, est.stderr,
                         asymptotics.parallelotope_moment(n, k)])
    write_csv(cfg, ["n", "k", "mc", "stderr", "closed"], rows)
    return 0


def cmd_empirical(cfg):
    if cfg.source == "kostlan":
        if cfg.d < 3:
            raise ConfigError("degree must be at least 3")
        samples = empirical.kostlan_root_samples(cfg.d, cfg.count, cfg.seed)
        domain = "projective"
    elif cfg.source == "gaf":
        samples = empirical.gaf_root_samples(cfg.n_trunc, cfg.half_width,
                                             cfg.count, cfg.seed)
        domain = "window"
    else:
        domain = cfg.domain
        samples = empirical.poisson_control_samples(
            cfg.intensity, cfg.count, cfg.seed, domain=domain,
            half_width=cfg.half_width if domain == "window" else None)
    if cfg.bin_max > 0:
        bin_max = cfg.bin_max
    elif domain == "projective":
        bin_max = math.pi / 2
    else:
        bin_max = min(2.0, cfg.half_width - 1.0)
    if bin_max <= 0:
        raise ConfigError("window too small for any bin")
    edges = np.linspace(0.0, bin_max, cfg.bins + 1)
    hist = empirical.pair_correlation_estimate(
        samples, domain, edges,
        window_half_width=cfg.half_width if domain == "window" else None)
    rows = [[edges[i], edges[i + 1], hist.bin_centers[i], hist.k_hat[i],
             hist.stderr[i]] for i in range(len(hist.k_hat))]
    write_csv(cfg, ["bin_lo", "bin_hi", "center", "k_hat", "stderr"], rows,
              extra=(("intensity", hist.intensity),
                     ("norm_volume", hist.volume)))
    return 0


def cmd_validate(cfg):
    names = [s.strip() for s in cfg.only.split(",") if s.strip()] or None
    if names:
        known = set(validate.check_names(cfg.level))
        missing = [n for n in names if n not in known]
        if missing:
            raise ConfigError(f"unknown checks: {', '.join(missing)}")
    results = validate.run_checks(cfg.level, names)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} - {r.detail} ({r.seconds:.1f}s)")
    if cfg.output:
        write_csv(cfg, ["name", "passed", "seconds"],
                  [[r.name, r.passed, r.seconds] for r in results])
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return 4
    print(f"all {len(results)} checks passed")
    return 0


DISPATCH = {
    "curve": cmd_curve,
    "constants": cmd_constants,
    "density": cmd_density,
    "parabola": cmd_parabola,
    "universality": cmd_universality,
    "parallelotope": cmd_parallelotope,
    "empirical": cmd_empirical,
    "validate": cmd_validate,
}


def main(argv=None):
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return DISPATCH[cfg.command](cfg)
    except NotPositiveDefinite as exc:
        where = f" at t={exc.t:g}" if exc.t is not None else ""
        print(f"error: covariance not positive definite{where}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
