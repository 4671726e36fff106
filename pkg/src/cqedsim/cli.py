"""Command-line entry point: config handling, scenario dispatch, output writers.

Usage:
    sim <scenario> [--config FILE] [--set key=value]... [--seed N]
                   [--out DIR] [--formats csv,json,svg] [--workers N]
    sim calc [--config FILE] [--set key=value]...

Config files are flat ``key = value`` lines with ``#`` comments and dotted
namespaces; precedence is defaults < file < --set. Every run writes exactly
one JSON summary; CSV and SVG are opt-in. Exit codes: 0 success, 2 config
error, 3 numerical-contract violation, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
import time
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels, __version__
from .dynamics import ParamSeries, SweepGrid, TimeSeries
from .errors import ConfigError, ContractError, NoDataError, SimError
from .scenarios import (
    CALC_DEFAULTS,
    SCENARIO_DEFAULTS,
    SCENARIO_NAMES,
    ScenarioResult,
    ScenarioSpec,
    calc_quantities,
    run_scenario,
)

_NUM_FMT = "%.9e"  # 10 significant digits: round-trips to better than 1e-9 relative
_FORMATS = ("csv", "json", "svg")
_OUTDIR_ENV = "CQEDSIM_OUTDIR"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _coerce(key: str, raw: str, template: object) -> object:
    try:
        if isinstance(template, bool):
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        if isinstance(template, tuple):
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {exc}") from None


def _reject_unknown(key: str, registry: Mapping[str, object]) -> None:
    if key in registry:
        return
    nearest = difflib.get_close_matches(key, registry.keys(), n=1)
    hint = f"; closest valid key: {nearest[0]!r}" if nearest else ""
    raise ConfigError(f"unknown config key {key!r}{hint}")


def _parse_pairs(pairs: Sequence[tuple[str, str]], registry: Mapping[str, object], source: str) -> dict:
    seen: dict[str, object] = {}
    for key, raw in pairs:
        _reject_unknown(key, registry)
        if key in seen:
            raise ConfigError(f"conflicting duplicate key {key!r} in {source}")
        seen[key] = _coerce(key, raw, registry[key])
    return seen


def _read_config_file(path: Path) -> list[tuple[str, str]]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    pairs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        pairs.append((key.strip(), raw.strip()))
    return pairs


def _split_set_item(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, _, raw = item.partition("=")
    return key.strip(), raw.strip()


def resolve_config(
    defaults: Mapping[str, object],
    config_path: str | None,
    set_items: Sequence[str],
) -> dict:
    """Defaults <- file <- command line, rejecting unknown or duplicate keys."""
    resolved = dict(defaults)
    if config_path:
        resolved.update(_parse_pairs(_read_config_file(Path(config_path)), defaults, str(config_path)))
    resolved.update(_parse_pairs([_split_set_item(s) for s in set_items], defaults, "--set"))
    return resolved


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _format_row(values) -> str:
    return ",".join(_NUM_FMT % v for v in values)


def emit_csv(obj, path: Path) -> None:
    """UTF-8 CSV, unit-suffixed header, 2-d grids in long form."""
    lines: list[str] = []
    if isinstance(obj, TimeSeries):
        names = list(obj.channels)
        lines.append(",".join(["time_ns", *names]))
        for i in range(obj.times.size):
            lines.append(_format_row([obj.times[i], *(obj.channels[n][i] for n in names)]))
    elif isinstance(obj, ParamSeries):
        names = list(obj.channels)
        lines.append(",".join([obj.param, *names]))
        for i in range(obj.values.size):
            lines.append(_format_row([obj.values[i], *(obj.channels[n][i] for n in names)]))
    elif isinstance(obj, SweepGrid):
        lines.append(",".join([obj.axis1_name, obj.axis2_name, obj.value_name]))
        for i, a1 in enumerate(obj.axis1):
            for j, a2 in enumerate(obj.axis2):
                lines.append(_format_row([a1, a2, obj.values[i, j]]))
    else:
        raise NoDataError(f"no CSV writer for {type(obj).__name__}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sanitize(value):
    if isinstance(value, Mapping):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def emit_json_summary(summary: Mapping, path: Path) -> None:
    """Stable-key-order JSON; non-finite numbers serialize as null."""
    path.write_text(json.dumps(_sanitize(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_VIRIDIS = ((0.267, 0.005, 0.329), (0.283, 0.141, 0.458), (0.254, 0.265, 0.530),
            (0.207, 0.372, 0.553), (0.164, 0.471, 0.558), (0.128, 0.567, 0.551),
            (0.135, 0.659, 0.518), (0.267, 0.749, 0.441), (0.478, 0.821, 0.318),
            (0.741, 0.873, 0.150), (0.993, 0.906, 0.144))


def _color(value: float, lo: float, hi: float) -> str:
    t = 0.0 if hi <= lo else (value - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0) * (len(_VIRIDIS) - 1)
    i = min(int(t), len(_VIRIDIS) - 2)
    f = t - i
    rgb = [(1 - f) * a + f * b for a, b in zip(_VIRIDIS[i], _VIRIDIS[i + 1])]
    return "#%02x%02x%02x" % tuple(int(round(255 * c)) for c in rgb)


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


class _Svg:
    W, H = 760, 470
    LEFT, RIGHT, TOP, BOTTOM = 75, 180, 20, 55

    def __init__(self) -> None:
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.W}" height="{self.H}" '
            f'viewBox="0 0 {self.W} {self.H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{self.W}" height="{self.H}" fill="white"/>',
        ]
        self.x0, self.x1 = self.LEFT, self.W - self.RIGHT
        self.y0, self.y1 = self.H - self.BOTTOM, self.TOP

    def px(self, x, lo, hi):
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, y, lo, hi):
        return self.y0 + (y - lo) / (hi - lo) * (self.y1 - self.y0)

    def axes(self, xlo, xhi, ylo, yhi, xlabel, ylabel):
        p = self.parts
        p.append(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="black"/>')
        p.append(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="black"/>')
        for tx in _ticks(xlo, xhi):
            x = self.px(tx, xlo, xhi)
            p.append(f'<line x1="{x:.1f}" y1="{self.y0}" x2="{x:.1f}" y2="{self.y0 + 5}" stroke="black"/>')
            p.append(f'<text x="{x:.1f}" y="{self.y0 + 18}" text-anchor="middle">{tx:.4g}</text>')
        for ty in _ticks(ylo, yhi):
            y = self.py(ty, ylo, yhi)
            p.append(f'<line x1="{self.x0 - 5}" y1="{y:.1f}" x2="{self.x0}" y2="{y:.1f}" stroke="black"/>')
            p.append(f'<text x="{self.x0 - 8}" y="{y + 4:.1f}" text-anchor="end">{ty:.4g}</text>')
        p.append(
            f'<text x="{(self.x0 + self.x1) / 2:.1f}" y="{self.H - 12}" text-anchor="middle">{xlabel}</text>'
        )
        p.append(
            f'<text x="18" y="{(self.y0 + self.y1) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {(self.y0 + self.y1) / 2:.1f})">{ylabel}</text>'
        )

    def finish(self) -> str:
        return "\n".join([*self.parts, "</svg>"]) + "\n"


def _series_axes(obj) -> tuple[np.ndarray, dict, str]:
    if isinstance(obj, TimeSeries):
        return obj.times, obj.channels, "time_ns"
    return obj.values, obj.channels, obj.param


def render_svg(obj, path: Path, marks: Sequence[tuple[str, float]] = ()) -> None:
    """Self-contained line plot (series) or rectangle heatmap (grids)."""
    if isinstance(obj, (TimeSeries, ParamSeries)):
        x, channels, xlabel = _series_axes(obj)
        if x.size < 2 or not channels:
            raise NoDataError("need at least two samples and one channel to plot")
        finite = [v[np.isfinite(v)] for v in channels.values() if np.isfinite(v).any()]
        if not finite:
            raise NoDataError("no finite data to plot")
        ylo = min(float(v.min()) for v in finite)
        yhi = max(float(v.max()) for v in finite)
        if yhi == ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        pad = 0.05 * (yhi - ylo)
        ylo, yhi = ylo - pad, yhi + pad
        xlo, xhi = float(x[0]), float(x[-1])

        svg = _Svg()
        svg.axes(xlo, xhi, ylo, yhi, xlabel, "value")
        for ci, (name, values) in enumerate(channels.items()):
            color = _PALETTE[ci % len(_PALETTE)]
            runs = np.ma.clump_unmasked(np.ma.masked_invalid(values))
            for run in runs:
                seg = run.indices(values.size)
                idx = np.arange(seg[0], seg[1])
                if idx.size < 2:
                    continue
                pts = " ".join(
                    f"{svg.px(x[i], xlo, xhi):.2f},{svg.py(values[i], ylo, yhi):.2f}" for i in idx
                )
                svg.parts.append(
                    f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
                )
            ly = svg.TOP + 16 * (ci + 1)
            svg.parts.append(
                f'<line x1="{svg.x1 + 10}" y1="{ly}" x2="{svg.x1 + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            )
            svg.parts.append(f'<text x="{svg.x1 + 35}" y="{ly + 4}">{name}</text>')
        for orientation, value in marks:
            if orientation == "vertical" and xlo <= value <= xhi:
                mx = svg.px(value, xlo, xhi)
                svg.parts.append(
                    f'<line x1="{mx:.1f}" y1="{svg.y0}" x2="{mx:.1f}" y2="{svg.y1}" '
                    'stroke="gray" stroke-dasharray="5,4"/>'
                )
            elif orientation == "horizontal" and ylo <= value <= yhi:
                my = svg.py(value, ylo, yhi)
                svg.parts.append(
                    f'<line x1="{svg.x0}" y1="{my:.1f}" x2="{svg.x1}" y2="{my:.1f}" '
                    'stroke="gray" stroke-dasharray="5,4"/>'
                )
        path.write_text(svg.finish(), encoding="utf-8")
        return

    if isinstance(obj, SweepGrid):
        if obj.axis1.size < 2 or obj.axis2.size < 2:
            raise NoDataError("heatmap needs at least a 2x2 grid")
        svg = _Svg()
        xlo, xhi = float(obj.axis2[0]), float(obj.axis2[-1])
        ylo, yhi = float(obj.axis1[0]), float(obj.axis1[-1])
        svg.axes(xlo, xhi, ylo, yhi, obj.axis2_name, obj.axis1_name)
        lo, hi = float(obj.values.min()), float(obj.values.max())
        edges_x = np.concatenate(([xlo], 0.5 * (obj.axis2[1:] + obj.axis2[:-1]), [xhi]))
        edges_y = np.concatenate(([ylo], 0.5 * (obj.axis1[1:] + obj.axis1[:-1]), [yhi]))
        for i in range(obj.axis1.size):
            yt = svg.py(edges_y[i + 1], ylo, yhi)
            hh = abs(svg.py(edges_y[i], ylo, yhi) - yt)
            for j in range(obj.axis2.size):
                xl = svg.px(edges_x[j], xlo, xhi)
                ww = svg.px(edges_x[j + 1], xlo, xhi) - xl
                svg.parts.append(
                    f'<rect x="{xl:.2f}" y="{yt:.2f}" width="{ww:.2f}" height="{hh:.2f}" '
                    f'fill="{_color(obj.values[i, j], lo, hi)}"/>'
                )
        for orientation, value in marks:
            if orientation == "horizontal" and ylo <= value <= yhi:
                my = svg.py(value, ylo, yhi)
                svg.parts.append(
                    f'<line x1="{svg.x0}" y1="{my:.1f}" x2="{svg.x1}" y2="{my:.1f}" '
                    'stroke="white" stroke-dasharray="6,4" stroke-width="1.5"/>'
                )
        svg.parts.append(
            f'<text x="{svg.x1 + 10}" y="{svg.TOP + 16}">{obj.value_name}: '
            f"{lo:.3g} to {hi:.3g}</text>"
        )
        path.write_text(svg.finish(), encoding="utf-8")
        return

    raise NoDataError(f"no SVG writer for {type(obj).__name__}")


def write_outputs(result: ScenarioResult, spec: ScenarioSpec, outdir: Path, formats: Sequence[str], runtime_s: float) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {
        "scenario": result.name,
        "config": dict(spec.config),
        "seed": spec.seed,
        "workers": spec.workers,
        "kernel_backend": _kernels.BACKEND,
        "version": __version__,
        "runtime_s": runtime_s,
        "results": result.summary,
    }
    summary_path = outdir / f"{result.name}_summary.json"
    emit_json_summary(summary, summary_path)
    for name, artifact in result.artifacts.items():
        if "csv" in formats:
            emit_csv(artifact, outdir / f"{result.name}_{name}.csv")
        if "svg" in formats:
            render_svg(artifact, outdir / f"{result.name}_{name}.svg", result.marks.get(name, ()))
    return summary_path


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Two-atom resonator-bus simulator: scenarios and calculators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    for name in SCENARIO_NAMES:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        add_common(sp)
        sp.add_argument("--seed", type=int, default=1234)
        sp.add_argument("--out", default=os.environ.get(_OUTDIR_ENV, "sim_out"))
        sp.add_argument("--formats", default="json", help="subset of csv,json,svg")
        sp.add_argument("--workers", type=int, default=1)

    calc = sub.add_parser("calc", help="print derived quantities, no simulation")
    add_common(calc)
    return parser


def _parse_formats(raw: str) -> tuple[str, ...]:
    tokens = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
    for tok in tokens:
        if tok not in _FORMATS:
            raise ConfigError(f"unknown output format {tok!r}; choose from {', '.join(_FORMATS)}")
    return tokens


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "calc":
            cfg = resolve_config(CALC_DEFAULTS, args.config, args.set)
            payload = {"config": cfg, "results": calc_quantities(cfg)}
            print(json.dumps(_sanitize(payload), indent=2, sort_keys=True))
            return 0
        cfg = resolve_config(SCENARIO_DEFAULTS[args.command], args.config, args.set)
        spec = ScenarioSpec(
            name=args.command, config=cfg, seed=args.seed, workers=max(1, args.workers)
        )
        formats = _parse_formats(args.formats)
        start = time.perf_counter()
        result = run_scenario(spec)
        runtime = time.perf_counter() - start
        summary_path = write_outputs(result, spec, Path(args.out), formats, runtime)
        print(f"wrote {summary_path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ContractError,) as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return 3
    except NoDataError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 4
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
