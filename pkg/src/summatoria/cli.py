"""Command-line front end.

Exit codes: 0 success / consistent, 1 inconsistent, 2 configuration error,
3 computation error, 4 inconclusive.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import io as sio
from .arith_functions import BUILTINS, EvaluationError, constant, get_function
from .asymptotic_models import MODEL_NAMES, PreconditionError, build_model
from .io import ConfigError
from .plotting import line_plot_svg
from .quadrature import QuadratureError
from .sieve_core import N_CAP, SieveError
from .summatory import (
    DEFAULT_N_MIN,
    DEFAULT_RATIO,
    PRIME_INDICATOR,
    GridError,
    SummatorySeries,
    compute_summatory,
    geometric_grid,
    prime_summand,
    summand,
)
from .validation import CONSISTENT, INCONSISTENT, format_report, report_csv, validate

EXIT_OK, EXIT_INCONSISTENT, EXIT_CONFIG, EXIT_COMPUTE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4

EXTRA_FUNCTIONS = {
    "theta": "sum of ln p over primes p <= n",
    "prime_count": "number of primes <= n",
    "prime:<function>": "sum of a pointwise function over primes",
}


@dataclass
class RunConfig:
    n_max: int | None = None
    grid_spec: str = "geometric"
    function: str = "omega"
    model: str | None = None
    workers: int = 1
    checkpoint_path: str | None = None
    output_format: str = "csv"
    out: str | None = None
    series: str | None = None
    prime_bound: int = 10**6
    power_bound: int = 40
    plot: str | None = None

    def validate(self):
        if self.n_max is not None and not 1 <= self.n_max <= N_CAP:
            raise ConfigError("n_max", f"must lie in [1, {N_CAP}], got {self.n_max}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if self.output_format not in ("csv", "svg", "text"):
            raise ConfigError("format", f"must be csv, svg or text, got {self.output_format!r}")

    def grid(self) -> list[int]:
        return parse_grid(self.grid_spec, self.n_max)


def parse_grid(text: str, n_max: int | None) -> list[int]:
    """'geometric[:r=..,start=..]' (needs n_max) or an explicit comma list."""
    text = text.strip()
    if text.startswith("geometric"):
        if n_max is None:
            raise ConfigError("n_max", "a geometric grid needs --n-max")
        opts = {"r": str(DEFAULT_RATIO), "start": str(DEFAULT_N_MIN)}
        _, _, rest = text.partition(":")
        for item in filter(None, (x.strip() for x in rest.split(","))):
            key, _, value = item.partition("=")
            if key not in opts:
                raise ConfigError("grid", f"unknown geometric option {key!r}")
            opts[key] = value
        try:
            ratio = float(opts["r"])
        except ValueError:
            raise ConfigError("grid", f"bad ratio {opts['r']!r}") from None
        start = sio.parse_int(opts["start"], "grid")
        try:
            return geometric_grid(n_max, min(start, n_max), ratio)
        except GridError as exc:
            raise ConfigError("grid", str(exc)) from None
    if not text:
        raise ConfigError("grid", "empty grid")
    grid = [sio.parse_int(x, "grid") for x in text.split(",") if x.strip()]
    if not grid:
        raise ConfigError("grid", "empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ConfigError("grid", "grid must be positive and strictly increasing")
    if n_max is not None and grid[-1] > n_max:
        raise ConfigError("grid", f"grid exceeds n_max={n_max}")
    if grid[-1] > N_CAP:
        raise ConfigError("grid", f"grid exceeds the cap {N_CAP}")
    return grid


def resolve_summand(name: str):
    if name == "theta":
        return prime_summand(get_function("log"), "theta")
    if name == "prime_count":
        return PRIME_INDICATOR
    if name.startswith("prime:"):
        inner = name.split(":", 1)[1]
        spec = constant(1.0) if inner == "one" else get_function(inner)
        return prime_summand(spec, name)
    s = summand(get_function(name))
    return s if s.name == name else type(s)(name, s.values, s.integer)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="plain-text 'key = value' file; flags override it")
    common.add_argument("--function", help="registry name (see list-functions); comma list for table")
    common.add_argument("--grid", dest="grid_spec", help="'geometric[:r=R,start=N]' or '1,2,10'")
    common.add_argument("--n-max", dest="n_max")
    common.add_argument("--model", help="model name (see list-models)")
    common.add_argument("--workers")
    common.add_argument("--checkpoint", dest="checkpoint_path")
    common.add_argument("--format", dest="output_format", choices=("csv", "svg", "text"))
    common.add_argument("--out")
    common.add_argument("--series", help="read the series from a CSV written by compute")
    common.add_argument("--prime-bound", dest="prime_bound")
    common.add_argument("--power-bound", dest="power_bound")
    common.add_argument("--plot", choices=("density", "ratio"))

    parser = argparse.ArgumentParser(prog="summatoria", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="exact series S(n) on a grid")
    sub.add_parser("validate", parents=[common], help="residual analysis against a model")
    sub.add_parser("plot", parents=[common], help="SVG of S(n)/n or |R|/envelope")
    sub.add_parser("table", parents=[common], help="several series side by side")
    sub.add_parser("list-functions", help="registry names")
    sub.add_parser("list-models", help="model names")
    return parser


_INT_FIELDS = {"n_max", "workers", "prime_bound", "power_bound"}


def make_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(sio.read_config(args.config))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    aliases = {"grid": "grid_spec", "checkpoint": "checkpoint_path", "format": "output_format"}
    values = {aliases.get(k, k): v for k, v in values.items()}
    known = {f.name for f in fields(RunConfig)}
    for key in values:
        if key not in known:
            raise ConfigError(key, "unknown config key")
    for f in known:
        v = getattr(args, f, None)
        if v is not None:
            values[f] = v
    for key in _INT_FIELDS & values.keys():
        values[key] = sio.parse_int(values[key], key)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None, suffix: str | None = None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if suffix is not None:
        path = path.with_suffix(suffix)
    path.write_text(text, encoding="utf-8", newline="")


def _load_series(cfg: RunConfig) -> SummatorySeries:
    if cfg.series:
        try:
            return sio.read_series_csv(cfg.series, cfg.function)
        except OSError as exc:
            raise ConfigError("series", str(exc)) from None
    grid = cfg.grid()
    s = resolve_summand(cfg.function)
    resume = None
    if cfg.checkpoint_path:
        resume = sio.read_checkpoint(cfg.checkpoint_path)
        if resume is not None:
            k = len(resume.grid)
            if resume.function_name != s.name or tuple(grid[:k]) != resume.grid:
                resume = None
    series = compute_summatory(s, grid, workers=cfg.workers, resume_from=resume)
    if cfg.checkpoint_path:
        sio.write_checkpoint(series, cfg.checkpoint_path)
    return series


def _model(cfg: RunConfig):
    if not cfg.model:
        raise ConfigError("model", "validate needs --model")
    try:
        return build_model(cfg.model, cfg.function, cfg.prime_bound, cfg.power_bound)
    except (KeyError, ValueError) as exc:
        raise ConfigError("model", str(exc)) from None


def cmd_compute(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    _emit(sio.series_csv(series), cfg.out)
    return EXIT_OK


def cmd_table(cfg: RunConfig) -> int:
    grid = cfg.grid()
    cols = [compute_summatory(resolve_summand(name.strip()), grid, workers=cfg.workers)
            for name in cfg.function.split(",")]
    _emit(sio.multi_series_csv(cols), cfg.out)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    model = _model(cfg)
    series = _load_series(cfg)
    report = validate(series, model)
    text = format_report(report)
    if cfg.output_format == "text":
        _emit(text, cfg.out)
    else:
        _emit(report_csv(report), cfg.out)
        if cfg.out is None:
            sys.stderr.write(text)
        else:
            _emit(text, cfg.out, ".txt")
    if report.verdict == CONSISTENT:
        return EXIT_OK
    return EXIT_INCONSISTENT if report.verdict == INCONSISTENT else EXIT_INCONCLUSIVE


def cmd_plot(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    kind = cfg.plot or ("ratio" if cfg.model else "density")
    xs = list(series.grid)
    if kind == "density":
        ys = [v / n for n, v in zip(series.grid, series.values)]
        reference = None
        if cfg.model and cfg.model.startswith("density:"):
            reference = float(cfg.model.split(":", 1)[1])
        svg = line_plot_svg(xs, ys, f"{series.function_name}: S(n)/n", "S(n)/n", reference)
    else:
        model = _model(cfg)
        report = validate(series, model)
        svg = line_plot_svg(xs, list(report.ratios), f"{series.function_name} vs {model.name}",
                            "|S(n) - main(n)| / envelope(n)")
    _emit(svg, cfg.out)
    return EXIT_OK


def cmd_list_functions() -> int:
    for name in sorted(BUILTINS):
        spec = BUILTINS[name]
        label = "power_<k>" if name == "power_k" else name
        print(f"{label}\t{spec.kind.value}")
    for name, desc in EXTRA_FUNCTIONS.items():
        print(f"{name}\t{desc}")
    return EXIT_OK


def cmd_list_models() -> int:
    for name in MODEL_NAMES:
        print(name)
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "validate": cmd_validate, "plot": cmd_plot, "table": cmd_table}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-functions":
        return cmd_list_functions()
    if args.command == "list-models":
        return cmd_list_models()
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GridError, PreconditionError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvaluationError, QuadratureError, SieveError, ArithmeticError, ValueError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
