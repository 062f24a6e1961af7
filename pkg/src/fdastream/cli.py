"""Command-line entry points: fit, stream, bench, generate, export, serve.

Exit codes: 0 success, 2 usage error, 3 data/configuration error, 4 runtime
failure (e.g. unreachable server).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

from .bench import run_bench
from .engine import StreamingEngine
from .errors import ConfigurationError, DataQualityError, FdaStreamError
from .ingest import (
    ScenarioSpec,
    apply_event,
    event_to_dict,
    generate_synthetic,
    parse_wide_csv,
    read_event_jsonl,
    replay,
    write_wide_csv,
)
from .service import DEFAULT_PORT, PORT_ENV_VAR, create_app

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

MSPLOT_HEADER = "id,mo,vo,label,approximate"


def _fit_rows(path: str):
    panel = parse_wide_csv(path)
    engine = StreamingEngine()
    view = engine.batch_fit(panel)
    return view


def cmd_fit(args: argparse.Namespace) -> int:
    view = _fit_rows(args.input)
    lines = [MSPLOT_HEADER]
    for p in view.points:
        lines.append(f"{p.series_id},{p.mo!r},{p.vo!r},{p.label},{str(p.approximate).lower()}")
    text = "\n".join(lines) + "\n"
    if args.json:
        print(json.dumps(view.to_dict()))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    elif not args.json:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    spec = ScenarioSpec(
        n_central=args.central,
        n_magnitude_outliers=args.magnitude,
        n_shape_outliers=args.shape,
        t_points=args.t_points,
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    panel, labels = generate_synthetic(spec)
    write_wide_csv(panel, args.out)
    if args.labels:
        with open(args.labels, "w", encoding="utf-8") as fh:
            fh.write("id,label\n")
            for sid in panel.series_ids:
                fh.write(f"{sid},{labels[sid]}\n")
    if args.json:
        print(json.dumps({"out": args.out, "labels": args.labels, "n": panel.n_series, "t": panel.t_count}))
    else:
        print(f"wrote {panel.n_series} series x {panel.t_count} points to {args.out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_bench(args.n, args.t, runs=args.runs, seed=args.seed)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(report.to_table())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    return EXIT_OK


class _HttpSink:
    """Forwards events to a running service as POST /ingest requests."""

    def __init__(self, base_url: str, retries: int, timeout: float = 10.0) -> None:
        self.url = base_url.rstrip("/") + "/ingest"
        self.retries = retries
        self.timeout = timeout

    def __call__(self, event) -> None:
        body = json.dumps(event_to_dict(event)).encode()
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            request = urllib.request.Request(
                self.url, data=body, headers={"Content-Type": "application/json"}
            )
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    resp.read()
                return
            except urllib.error.HTTPError as exc:
                raise RuntimeError(f"server rejected event: HTTP {exc.code} {exc.read().decode()!r}") from None
            except (urllib.error.URLError, OSError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.2 * (attempt + 1))
        raise RuntimeError(f"server unreachable after {self.retries + 1} attempts: {last_error}")


def cmd_stream(args: argparse.Namespace) -> int:
    if args.input.endswith(".jsonl"):
        source = read_event_jsonl(args.input)
    else:
        source = parse_wide_csv(args.input)
    rate = "max" if args.rate == "max" else float(args.rate)

    if args.server:
        sink = _HttpSink(args.server, retries=args.retries)
    else:
        engine = StreamingEngine()
        sink = lambda event: apply_event(engine, event)  # noqa: E731

    report = replay(source, rate, sink)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(f"delivered {report.delivered}/{report.total} events in {report.duration_s:.3f}s")
        if report.latency_quantiles:
            q = report.latency_quantiles
            print(
                "sink latency  p50 {p50:.6f}s  p90 {p90:.6f}s  p99 {p99:.6f}s  max {max:.6f}s".format(**q)
            )
        if report.error:
            print(f"aborted: {report.error}", file=sys.stderr)
    return EXIT_OK if report.completed else EXIT_RUNTIME


def _render_svg(view, width: int = 800, height: int = 600) -> str:
    margin = 50
    points = view.points
    mo = [p.mo for p in points]
    vo = [p.vo for p in points]
    mo_min, mo_max = min(mo), max(mo)
    vo_min, vo_max = min(vo), max(vo)
    mo_span = (mo_max - mo_min) or 1.0
    vo_span = (vo_max - vo_min) or 1.0

    def sx(v: float) -> float:
        return margin + (v - mo_min) / mo_span * (width - 2 * margin)

    def sy(v: float) -> float:
        return height - margin - (v - vo_min) / vo_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle" font-size="14">MO</text>',
        f'<text x="15" y="{height // 2}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {height // 2})">VO</text>',
    ]
    for p in points:
        color = "teal" if p.label == "central" else "palevioletred"
        parts.append(
            f'<circle cx="{sx(p.mo):.3f}" cy="{sy(p.vo):.3f}" r="4" fill="{color}" '
            f'fill-opacity="0.8"><title>{p.series_id}</title></circle>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_export(args: argparse.Namespace) -> int:
    view = _fit_rows(args.input)
    svg = _render_svg(view)
    Path(args.svg).write_text(svg, encoding="utf-8")
    if args.json:
        print(json.dumps({"svg": args.svg, "points": len(view.points)}))
    else:
        print(f"wrote {len(view.points)} points to {args.svg}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    engine = StreamingEngine()
    if args.data:
        engine.batch_fit(parse_wide_csv(args.data))
    layout = None
    if args.layout:
        layout = json.loads(Path(args.layout).read_text(encoding="utf-8"))
    app = create_app(engine, layout=layout, static_dir=args.static)
    port = args.port if args.port is not None else int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdastream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="batch-fit a wide CSV and write the MS-plot table")
    p.add_argument("input", help="wide CSV (header: ts, series ids)")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--json", action="store_true", help="print the snapshot as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="write a synthetic scenario CSV plus labels")
    p.add_argument("--central", type=int, required=True)
    p.add_argument("--magnitude", type=int, default=0)
    p.add_argument("--shape", type=int, default=0)
    p.add_argument("--t-points", type=int, default=100)
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", help="labels CSV path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="measure update-path latencies")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stream", help="replay a CSV panel or JSONL events into an engine")
    p.add_argument("input", help="wide CSV or .jsonl event file")
    p.add_argument("--rate", default="max", help="events per second, or 'max'")
    p.add_argument("--server", help="base URL of a running service (default: in-process engine)")
    p.add_argument("--inproc", action="store_true", help="force the in-process engine")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("export", help="render a static MS-plot SVG from a wide CSV")
    p.add_argument("input")
    p.add_argument("--svg", required=True, help="output SVG path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data", help="wide CSV to preload")
    p.add_argument("--layout", help="sensor grid layout JSON")
    p.add_argument("--static", help="directory of built web UI assets to serve at /ui")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help=f"default {DEFAULT_PORT}, env {PORT_ENV_VAR}")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataQualityError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FdaStreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
