"""Command-line front end: ``reskit <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import statistics
import sys
import zlib
from pathlib import Path

import numpy as np

from . import gof
from .errors import ReskitError
from .events import ResilienceEvent, extract_events, filter_events, read_events_json, write_events_json
from .fitting import FittedModels, RestoreModel, fit_event, mean_outage_curve, mean_restore_curve
from .ingest import Dataset, parse_csv, write_csv
from .metrics import DurationMetrics, compute_metrics, format_percent
from .processes import outage_process, performance_curve, restore_process, write_process_csv
from .simulate import SimSpec, events_to_records, generate_events
from .variability import SIZE_GRID_METRICS, SIZE_GRID_ROWS, variability_table

log = logging.getLogger("reskit")

PLOT_GRID_POINTS = 200

DEFAULT_WEATHER_MAP = {
    "lightning": r"^lightning$",
    "weather": r"^weather\b.*excluding lightning",
    "fire": r"^fire$",
    "environmental": r"^environmental$",
    "hurricane": r"hurricane|tropical storm",
    "tornado": r"tornado",
    "winter": r"winter|ice|snow|blizzard",
}

# metrics whose values are rates, log-scale parameters or counts rather than hours
_RATES = {"lambda_O"}
_COUNTS = {"n", "z", "events"}


# --- formatting ---------------------------------------------------------------

def _num(name: str, value, digits: int | None = None):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return None
    if name in _COUNTS:
        return int(value)
    if digits is None:
        digits = 3 if name in _RATES else 4
    return round(float(value), digits)


def _cell(name: str, value, digits: int | None = None) -> str:
    v = _num(name, value, digits)
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    if digits is None:
        digits = 3 if name in _RATES else 4
    return f"{v:.{digits}f}"


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info("wrote %s", path)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    log.info("wrote %s", path)


# --- shared pipeline ----------------------------------------------------------

def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("RESKIT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ReskitError(f"RESKIT_SEED must be an integer, got {env!r}") from None
    return 0


def event_seed(seed: int, event_id: str) -> int:
    """Independent per-event stream seed, stable across runs and event order."""
    return int(np.random.SeedSequence([seed, zlib.crc32(event_id.encode())]).generate_state(1, np.uint64)[0])


def _load_schema(path: str | None) -> dict | None:
    if not path:
        return None
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_events(args) -> list[ResilienceEvent]:
    """Read every input (CSV records or events JSON), extract, filter and sort by id."""
    if not args.input:
        raise ReskitError("no --input given")
    schema = _load_schema(args.schema)
    records, events = [], []
    for path in args.input:
        if Path(path).suffix.lower() == ".json":
            events.extend(read_events_json(path))
        else:
            records.extend(parse_csv(path, schema=schema, strict=args.strict).records)
    if records:
        events.extend(extract_events(Dataset(tuple(records))))
    ids = [e.event_id for e in events]
    if len(set(ids)) != len(ids):
        raise ReskitError("duplicate event ids across inputs")
    kept = filter_events(events, min_n=args.min_n, weather_only=args.weather_only)
    log.info("%d events, %d kept (min n %d%s)", len(events), len(kept), args.min_n,
             ", weather only" if args.weather_only else "")
    return sorted(kept, key=lambda e: e.event_id)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _x_grid(text: str) -> list:
    values = []
    for part in text.split(","):
        part = part.strip()
        if part:
            values.append(int(part) if re.fullmatch(r"\d+", part) else float(part))
    if not values:
        raise argparse.ArgumentTypeError("empty x grid")
    return values


# --- per-event records --------------------------------------------------------

def fit_record(event: ResilienceEvent, fit: FittedModels) -> dict:
    d = {"event_id": event.event_id}
    d.update({k: _num(k, v) for k, v in fit.to_dict().items()})
    return d


def metrics_record(event: ResilienceEvent, fit: FittedModels, m: DurationMetrics) -> dict:
    xs = list(m.D_x)
    return {
        "event_id": event.event_id,
        "interconnection": event.interconnection,
        "weather_related": event.weather_related,
        "fit": fit_record(event, fit),
        "metrics": {k: _num(k, v) for k, v in m.scalars().items()},
        "x_grid": [format_percent(x) for x in xs],
        "D_ge": [_num("D", m.D_ge.get(x)) for x in xs],
        "D_x": [_num("D", m.D_x[x]) for x in xs],
        "D_ln": [_num("D", m.D_x_ln[x]) for x in xs],
        "D_exp": [_num("D", m.D_x_exp[x]) for x in xs],
        "D_k": [_num("D", v) for v in m.D_k],
    }


def _fits_and_metrics(events, args):
    out = []
    for e in events:
        fit = fit_event(e)
        out.append((e, fit, compute_metrics(e, fit, args.x_grid, args.positive_only)))
    return out


def _write_metrics(out: Path, rows) -> list[str]:
    _write_json(out / "metrics.json", [metrics_record(e, f, m) for e, f, m in rows])
    names = list(rows[0][2].scalars()) if rows else []
    _write_rows(
        out / "metrics.csv",
        ["event_id", "interconnection", "weather_related"] + names,
        [[e.event_id, e.interconnection, int(e.weather_related)] + [_cell(k, v) for k, v in m.scalars().items()]
         for e, _, m in rows],
    )
    return names


def _run_gof(events, fits, args) -> list[gof.GofResult]:
    seed = resolve_seed(args.seed)
    results = []
    for e, fit in zip(events, fits):
        results.extend(gof.run_gof(
            e, fit, method=args.gof_method.upper(), bootstrap_reps=args.gof_reps, seed=event_seed(seed, e.event_id)
        ))
    return results


def _write_gof(out: Path, events, fits, results) -> None:
    _write_rows(
        out / "gof.csv",
        ["event_id", "model", "test", "statistic", "p_value", "method", "satisfied"],
        [[r.event_id, r.model.value, r.test.value, f"{r.statistic:.4f}", f"{r.p_value:.4f}", r.method.value,
          int(r.satisfied)] for r in results],
    )
    ic = {e.event_id: e.interconnection for e in events}
    _write_rows(
        out / "gof_summary.csv",
        ["model", "test", "group", "events", "percent_satisfied"],
        [[s["model"], s["test"], s["group"], s["events"], f"{s['percent_satisfied']:.1f}"]
         for s in gof.satisfied_percentages(results, ic)],
    )
    for kind in gof.PooledKind:
        pooled = gof.pooled_normalized_samples(events, fits, kind)
        _write_rows(out / f"pooled_{kind.value.lower()}.csv", ["value"], [[f"{v:.6f}"] for v in pooled])


# --- summaries ----------------------------------------------------------------

def _summary(values: list) -> tuple:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None, None
    sd = statistics.stdev(vals) if len(vals) > 1 else None
    return statistics.fmean(vals), sd, statistics.median(vals)


def load_weather_map(path: str | None) -> dict[str, re.Pattern]:
    mapping = DEFAULT_WEATHER_MAP if not path else json.loads(Path(path).read_text(encoding="utf-8"))
    return {name: re.compile(pattern, re.IGNORECASE) for name, pattern in mapping.items()}


def weather_bucket(event: ResilienceEvent, mapping: dict[str, re.Pattern]) -> str | None:
    """Bucket with the most matching cause-code occurrences; ties go to the earlier bucket."""
    best, best_count = None, 0
    for name, pattern in mapping.items():
        count = sum(c for code, c in event.cause_counts if pattern.search(" ".join(code.split())))
        if count > best_count:
            best, best_count = name, count
    return best


def _median_row(label: str, rows, names) -> list:
    cells = [label, len(rows)]
    for k in names:
        cells.append(_cell(k, _summary([m.scalars()[k] for _, _, m in rows])[2]))
    return cells


def write_summaries(out: Path, rows, names, weather_map) -> None:
    names = [k for k in names if k not in ("n", "z")] if names else []
    stat_names = ["n"] + names
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row[0].interconnection, []).append(row)
    header = ["interconnection", "events"]
    for k in stat_names:
        header += [f"{k}_mean", f"{k}_sd", f"{k}_median"]
    table = []
    for ic in sorted(groups):
        cells = [ic, len(groups[ic])]
        for k in stat_names:
            mean, sd, med = _summary([m.scalars()[k] for _, _, m in groups[ic]])
            digits = None if k != "n" else 2
            cells += [_cell(k if k != "n" else "n_stat", v, digits) for v in (mean, sd, med)]
        table.append(cells)
    _write_rows(out / "summary_by_interconnection.csv", header, table)
    _write_rows(out / "summary_median.csv", ["group", "events"] + names, [_median_row("all", rows, names)])

    buckets: dict[str, list] = {}
    for row in rows:
        b = weather_bucket(row[0], weather_map)
        if b is not None:
            buckets.setdefault(b, []).append(row)
    table = [_median_row(b, buckets[b], names) for b in weather_map if b in buckets]
    weather = [r for r in rows if r[0].weather_related]
    other = [r for r in rows if not r[0].weather_related]
    if weather:
        table.append(_median_row("all weather", weather, names))
    if other:
        table.append(_median_row("non-weather", other, names))
    _write_rows(out / "summary_weather.csv", ["category", "events"] + names, table)


# --- plot data ----------------------------------------------------------------

def plot_grid_end(event: ResilienceEvent, fit: FittedModels) -> float:
    """Last grid time in hours: ``r_1 + 4 exp(mu + sigma^2)`` capped at ``r_n``."""
    r1, rn = event.restore_times[0] / 60.0, event.restore_times[-1] / 60.0
    if fit.mu is None or fit.sigma is None:
        return rn
    try:
        end = r1 + 4.0 * math.exp(fit.mu + fit.sigma ** 2)
    except OverflowError:
        return rn
    return min(end, rn)


def write_plotdata(out: Path, event: ResilienceEvent, fit: FittedModels) -> None:
    d = out / event.event_id
    d.mkdir(parents=True, exist_ok=True)
    write_process_csv(outage_process(event), d / "outage.csv")
    write_process_csv(restore_process(event), d / "restore.csv")
    write_process_csv(performance_curve(event), d / "performance.csv")
    o1, on = event.outage_times[0] / 60.0, event.outage_times[-1] / 60.0
    r1 = event.restore_times[0] / 60.0
    grid = np.linspace(o1, max(plot_grid_end(event, fit), o1), PLOT_GRID_POINTS)

    def outage_value(t):
        return mean_outage_curve(fit, event, min(max(t, o1), on))

    def restore_value(model):
        return lambda t: 0.0 if t < r1 else mean_restore_curve(fit, event, t, model)

    curves = (
        ("mean_outage.csv", outage_value, fit.lambda_O is not None),
        ("mean_restore_lognormal.csv", restore_value(RestoreModel.LOGNORMAL), fit.sigma is not None),
        ("mean_restore_exponential.csv", restore_value(RestoreModel.EXPONENTIAL), fit.tau is not None),
    )
    for name, fn, defined in curves:
        if not defined:
            log.warning("event %s: %s skipped, model undefined", event.event_id, name)
            continue
        _write_rows(d / name, ["time_hours", "value"], [[f"{t:.4f}", f"{fn(float(t)):.4f}"] for t in grid])


# --- commands -----------------------------------------------------------------

def cmd_extract(args) -> int:
    events = load_events(args)
    out = _out_dir(args)
    write_events_json(events, out / "events.json")
    log.info("wrote %s", out / "events.json")
    return 0


def cmd_fit(args) -> int:
    events = load_events(args)
    _write_json(_out_dir(args) / "fits.json", [fit_record(e, fit_event(e)) for e in events])
    return 0


def cmd_metrics(args) -> int:
    _write_metrics(_out_dir(args), _fits_and_metrics(load_events(args), args))
    return 0


def cmd_gof(args) -> int:
    events = load_events(args)
    fits = [fit_event(e) for e in events]
    _write_gof(_out_dir(args), events, fits, _run_gof(events, fits, args))
    return 0


def cmd_variability(args) -> int:
    if args.rows:
        rows = [tuple(float(v) for v in r.split(",")) for r in args.rows]
        rows = [(int(n), mu, sigma) for n, mu, sigma in rows]
    elif args.input:
        rows = []
        for e in load_events(args):
            fit = fit_event(e)
            if fit.sigma is None:
                log.warning("event %s skipped: sigma undefined", e.event_id)
                continue
            if fit.z != 1:
                log.warning("event %s: z = %d, intervals assume z = 1", e.event_id, fit.z)
            rows.append((e.n, fit.mu, fit.sigma))
    else:
        rows = list(SIZE_GRID_ROWS)
    metrics = args.metrics.split(",") if args.metrics else list(SIZE_GRID_METRICS)
    table = variability_table(rows, metrics, args.confidence)
    _write_rows(
        _out_dir(args) / "variability_table.csv",
        ["n", "mu", "sigma"] + metrics,
        [[r["n"], f"{r['mu']:.4f}", f"{r['sigma']:.4f}"] + [f"{r[m]:.4f}" for m in metrics] for r in table],
    )
    return 0


def cmd_simulate(args) -> int:
    spec = SimSpec(
        n=args.n, z=args.z, outage_window_hours=args.window, mu=args.mu, sigma=args.sigma, tau=args.tau,
        restore_model=args.model.upper(), seed=resolve_seed(args.seed), r1_offset_hours=args.r1_offset,
        quantize_minutes=True, interconnection=args.interconnection, cause=args.cause,
    )
    events = generate_events(spec, args.count)
    out = _out_dir(args)
    if args.format == "csv":
        write_csv(events_to_records(events), out / "simulated_records.csv")
        log.info("wrote %s", out / "simulated_records.csv")
    else:
        write_events_json(events, out / "simulated_events.json")
        log.info("wrote %s", out / "simulated_events.json")
    return 0


def cmd_report(args) -> int:
    events = load_events(args)
    out = _out_dir(args)
    write_events_json(events, out / "events.json")
    rows = _fits_and_metrics(events, args)
    names = _write_metrics(out, rows)
    write_summaries(out, rows, names, load_weather_map(args.weather_map))
    if not args.skip_gof:
        fits = [f for _, f, _ in rows]
        _write_gof(out, events, fits, _run_gof(events, fits, args))
    return 0


def cmd_plotdata(args) -> int:
    out = _out_dir(args)
    for e in load_events(args):
        write_plotdata(out, e, fit_event(e))
    return 0


# --- argument parsing ---------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", action="append", default=[], help="outage CSV or events JSON (repeatable)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--min-n", type=int, default=10, help="minimum outages per event")
    p.add_argument("--weather-only", action="store_true", help="keep weather-related events only")
    p.add_argument("--confidence", type=float, default=0.10, help="c, for a (1-c) confidence interval")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to RESKIT_SEED, then 0)")
    p.add_argument("--gof-method", choices=["bootstrap", "asymptotic"], default="bootstrap")
    p.add_argument("--gof-reps", type=int, default=gof.DEFAULT_REPS)
    p.add_argument("--x-grid", type=_x_grid, default=[50, 90, 95], help="comma-separated percents")
    p.add_argument("--positive-only", action="store_true", help="model quantiles over the n-z positive offsets")
    p.add_argument("--schema", help="JSON mapping canonical column -> source column")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed row")
    p.add_argument("--weather-map", help="JSON mapping weather category -> cause-code regex")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="reskit", description="Transmission resilience-event analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("extract", cmd_extract, "group outage records into events"),
        ("fit", cmd_fit, "fit outage and restore models"),
        ("metrics", cmd_metrics, "per-event duration metrics"),
        ("gof", cmd_gof, "goodness-of-fit tests"),
        ("report", cmd_report, "metrics, summaries and goodness of fit"),
        ("plotdata", cmd_plotdata, "step-process and mean-curve CSVs"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
        if name == "report":
            p.add_argument("--skip-gof", action="store_true")

    var = sub.add_parser("variability", parents=[common], help="confidence-interval half-widths")
    var.add_argument("action", choices=["table"])
    var.add_argument("--rows", action="append", metavar="N,MU,SIGMA", help="grid row (repeatable)")
    var.add_argument("--metrics", help="comma-separated metric names")
    var.set_defaults(func=cmd_variability)

    sim = sub.add_parser("simulate", parents=[common], help="synthetic events")
    sim.add_argument("--n", type=int, default=20)
    sim.add_argument("--count", type=int, default=10)
    sim.add_argument("--z", type=int, default=1)
    sim.add_argument("--window", type=float, default=2.69, help="outage window o_n - o_1 in hours")
    sim.add_argument("--mu", type=float, default=1.64)
    sim.add_argument("--sigma", type=float, default=1.56)
    sim.add_argument("--tau", type=float, default=16.4)
    sim.add_argument("--model", choices=["lognormal", "exponential"], default="lognormal")
    sim.add_argument("--r1-offset", type=float, default=0.52, help="r_1 - o_1 in hours")
    sim.add_argument("--interconnection", default="SIM")
    sim.add_argument("--cause", default="Lightning")
    sim.add_argument("--format", choices=["json", "csv"], default="json")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.INFO if args.verbose else logging.WARNING, force=True)
    try:
        return args.func(args)
    except (ReskitError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
