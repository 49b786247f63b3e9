"""Command-line entry point: ``emoindex <subcommand> --key value ...``.

Every option can also come from ``--config path.json``. Lookup order is the
command-line flag, then ``config[<subcommand>][key]``, then
``config["defaults"][key]``, then the built-in default. Keys use the option
name with dashes replaced by underscores. Relative paths in a config file are
resolved against the config file's directory.

Exit status: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path
from typing import Any, Callable, Sequence

from . import decompose as dec
from . import impact as imp
from . import index as idx
from . import ingest, lexicon as lex, plot, synth
from .errors import DataError, UsageError
from .fileio import atomic_write_text

log = logging.getLogger("emoindex")


def _path(v: Any) -> Path:
    return v if isinstance(v, Path) else Path(str(v))


def _date(v: Any) -> date:
    if isinstance(v, date):
        return v
    try:
        return date.fromisoformat(str(v))
    except ValueError:
        raise UsageError(f"bad date {v!r} (expected YYYY-MM-DD)") from None


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("true", "1", "yes", "on"):
        return True
    if s in ("false", "0", "no", "off"):
        return False
    raise UsageError(f"bad boolean {v!r}")


def _number(kind: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def convert(v: Any) -> Any:
        if isinstance(v, bool):
            raise UsageError(f"expected a number, got {v!r}")
        try:
            return kind(v)
        except (TypeError, ValueError):
            raise UsageError(f"expected {kind.__name__}, got {v!r}") from None
    convert.__name__ = kind.__name__
    return convert


def _emotion(v: Any) -> lex.EmotionCategory:
    for e in lex.EmotionCategory:
        if e.value.lower() == str(v).strip().lower():
            return e
    names = ", ".join(e.value for e in lex.EmotionCategory)
    raise UsageError(f"unknown emotion {v!r} (expected one of {names})")


def _period(v: Any) -> tuple[date, date]:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return _date(v[0]), _date(v[1])
    parts = str(v).split(":")
    if len(parts) != 2:
        raise UsageError(f"bad period {v!r} (expected START:END)")
    return _date(parts[0]), _date(parts[1])


_int = _number(int)
_float = _number(float)


@dataclass(frozen=True)
class Opt:
    name: str
    convert: Callable[[Any], Any] = str
    default: Any = None
    required: bool = False
    help: str = ""
    path: bool = False  # resolve against the config directory

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


MODEL_OPTS = [
    Opt("n-changepoints", _int, 25, help="potential trend changepoints"),
    Opt("changepoint-range", _float, 0.8, help="fraction of history eligible for changepoints"),
    Opt("yearly-order", _int, 10, help="Fourier order of the yearly component"),
    Opt("weekly", _bool, True, help="fit day-of-week effects (true/false)"),
    Opt("ridge-trend", _float, 0.05, help="L2 penalty on changepoint slope deltas"),
    Opt("ridge-seasonal", _float, 1e-4, help="L2 penalty on yearly and weekly coefficients"),
    Opt("outlier-mad-k", _float, 5.0, help="MAD multiple for the outlier refit (0 disables)"),
]

COMMANDS: dict[str, tuple[str, list[Opt]]] = {
    "lexicon-validate": ("Validate a lexicon, report category sizes, optionally prune rare words", [
        Opt("lexicon", _path, required=True, path=True),
        Opt("band-low", _int, lex.DEFAULT_BAND[0]),
        Opt("band-high", _int, lex.DEFAULT_BAND[1]),
        Opt("counts", _path, path=True, help="counts CSV, enables pruning"),
        Opt("totals", _path, path=True, help="totals CSV paired with --counts"),
        Opt("min-posts", _int, 5, help="monthly post threshold for pruning"),
        Opt("out", _path, path=True, help="write the pruned lexicon here"),
        Opt("report", _path, path=True, help="write the JSON report here instead of stdout"),
    ]),
    "count": ("Filter posts and aggregate daily word counts and totals", [
        Opt("posts", _path, required=True, path=True, help="JSON Lines post stream"),
        Opt("lexicon", _path, required=True, path=True),
        Opt("total-mode", str, "direct", help="direct or proxy"),
        Opt("tz", str, ingest.DEFAULT_TZ, help="day-boundary timezone"),
        Opt("out-counts", _path, required=True, path=True),
        Opt("out-totals", _path, required=True, path=True),
    ]),
    "index": ("Compute the seven daily emotion indices", [
        Opt("counts", _path, required=True, path=True),
        Opt("totals", _path, required=True, path=True),
        Opt("lexicon", _path, required=True, path=True),
        Opt("alpha", _float, 0.5, help="power-mean exponent (> 0)"),
        Opt("baseline-start", _date, idx.DEFAULT_BASELINE[0]),
        Opt("baseline-end", _date, idx.DEFAULT_BASELINE[1]),
        Opt("variant", str, "generalized_mean", help="generalized_mean or zscore"),
        Opt("out", _path, required=True, path=True),
    ]),
    "decompose": ("Split each index into trend, yearly and weekly components", [
        Opt("index", _path, required=True, path=True),
        Opt("out", _path, required=True, path=True),
        Opt("fit-out", _path, path=True, help="write fitted models as JSON"),
        *MODEL_OPTS,
    ]),
    "impact": ("Out-of-sample impact of one event date on one emotion", [
        Opt("index", _path, required=True, path=True),
        Opt("emotion", _emotion, required=True),
        Opt("event-date", _date, required=True),
        Opt("horizon", _int, 14),
        Opt("out", _path, required=True, path=True),
        *MODEL_OPTS,
    ]),
    "rank": ("Rank the largest (emotion, day) impacts over a period", [
        Opt("index", _path, required=True, path=True),
        Opt("period", _period, required=True, help="START:END, inclusive"),
        Opt("top", _int, 10),
        Opt("refit-cadence", _int, 28, help="days between model refits"),
        Opt("annotations", _path, path=True, help="CSV date,label joined for display"),
        Opt("out", _path, required=True, path=True),
        *MODEL_OPTS,
    ]),
    "synth": ("Generate a synthetic index table and/or post corpus", [
        Opt("spec-file", _path, path=True, help="SynthSpec JSON file (or a 'spec' object in the config)"),
        Opt("seed", _int, help="override the spec's seed"),
        Opt("out-index", _path, path=True),
        Opt("out-posts", _path, path=True),
        Opt("lexicon", _path, path=True, help="required with --out-posts"),
        Opt("posts-per-day", _int, 200),
    ]),
    "plot": ("Render an index or decomposition CSV as an SVG line chart", [
        Opt("input", _path, required=True, path=True),
        Opt("out", _path, required=True, path=True),
        Opt("kind", str, "auto", help="auto, index or decomposition"),
        Opt("emotions", str, help="comma-separated subset"),
        Opt("title", str, "Emotion index"),
    ]),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emoindex", description="Collective emotion index toolkit.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name, (desc, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc)
        p.add_argument("--config", help="JSON config supplying any subset of options")
        for o in opts:
            p.add_argument(f"--{o.name}", dest=o.dest, default=None, help=o.help or None)
    return parser


def resolve_options(command: str, ns: argparse.Namespace) -> tuple[dict[str, Any], dict[str, Any]]:
    """Merge flags, config file and defaults; return (options, raw command config section)."""
    config: dict[str, Any] = {}
    base = Path.cwd()
    if ns.config:
        cfg_path = Path(ns.config)
        try:
            config = json.loads(cfg_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
        base = cfg_path.resolve().parent
    section = config.get(command, {})
    shared = config.get("defaults", {})
    opts: dict[str, Any] = {}
    for o in COMMANDS[command][1]:
        flag = getattr(ns, o.dest)
        if flag is not None:
            opts[o.dest] = o.convert(flag)
            continue
        for src in (section, shared):
            if o.dest in src and src[o.dest] is not None:
                value = src[o.dest]
                if o.path and not Path(str(value)).is_absolute():
                    value = base / str(value)
                opts[o.dest] = o.convert(value)
                break
        else:
            if o.required:
                raise UsageError(f"{command}: missing required option --{o.name}")
            opts[o.dest] = o.default
    section = dict(section)
    section["_base"] = base
    return opts, section


def _need_inputs(*paths: Path | None) -> None:
    for p in paths:
        if p is not None and not p.is_file():
            raise UsageError(f"input file not found: {p}")


def _need_outputs(*paths: Path | None) -> None:
    for p in paths:
        if p is not None and not p.parent.resolve().is_dir():
            raise UsageError(f"output directory does not exist: {p.parent}")


def _model_spec(o: dict[str, Any]) -> dec.ModelSpec:
    return dec.ModelSpec(**{f.name: o[f.name] for f in fields(dec.ModelSpec)})


def cmd_lexicon_validate(o: dict[str, Any], _: dict[str, Any]) -> None:
    _need_inputs(o["lexicon"], o["counts"], o["totals"])
    _need_outputs(o["out"], o["report"])
    if (o["counts"] is None) != (o["totals"] is None):
        raise UsageError("--counts and --totals go together")
    if o["out"] is not None and o["counts"] is None:
        raise UsageError("--out needs --counts/--totals for pruning")
    lexicon = lex.load_lexicon(o["lexicon"])
    report = lex.validate_sizes(lexicon, (o["band_low"], o["band_high"])).to_dict()
    report["lexicon"] = {"name": lexicon.name, "version": lexicon.version,
                         "entries": len(lexicon.entries)}
    if o["counts"] is not None:
        counts = ingest.load_counts(o["counts"], o["totals"])
        pruned, removed = lex.prune_low_frequency(lexicon, counts, o["min_posts"])
        report["pruning"] = {
            "min_posts_per_month": o["min_posts"],
            "months": [f"{y}-{m:02d}" for y, m in lex.covered_months(list(counts.dates))],
            "counts_source": str(o["counts"]),
            "note": "counts used as given; counts produced by `count` are post-filter",
            "removed": removed,
        }
        if o["out"] is not None:
            atomic_write_text(o["out"], lex.dump_lexicon(pruned))
    text = json.dumps(report, ensure_ascii=False, indent=2) + "\n"
    if o["report"] is not None:
        atomic_write_text(o["report"], text)
    else:
        sys.stdout.write(text)


def cmd_count(o: dict[str, Any], _: dict[str, Any]) -> None:
    _need_inputs(o["posts"], o["lexicon"])
    _need_outputs(o["out_counts"], o["out_totals"])
    if o["total_mode"] not in ("direct", "proxy"):
        raise UsageError("--total-mode must be direct or proxy")
    lexicon = lex.load_lexicon(o["lexicon"])
    tz = ingest.resolve_tz(o["tz"])
    counts = ingest.aggregate(ingest.read_posts(o["posts"]), lexicon, o["total_mode"], tz)
    ingest.write_counts(counts, o["out_counts"], o["out_totals"])
    log.info("counted %d days (%d gaps)", len(counts.dates), len(counts.gaps()))


def cmd_index(o: dict[str, Any], _: dict[str, Any]) -> None:
    config = idx.IndexConfig(o["alpha"], o["baseline_start"], o["baseline_end"])
    if o["variant"] not in ("generalized_mean", "zscore"):
        raise UsageError("--variant must be generalized_mean or zscore")
    _need_inputs(o["counts"], o["totals"], o["lexicon"])
    _need_outputs(o["out"])
    lexicon = lex.load_lexicon(o["lexicon"])
    counts = ingest.load_counts(o["counts"], o["totals"])
    if o["variant"] == "zscore":
        series = idx.build_zscore_indices(counts, lexicon)
    else:
        series = idx.build_all_indices(counts, lexicon, config)
    idx.write_index(series, o["out"], lexicon, o["variant"])


def cmd_decompose(o: dict[str, Any], _: dict[str, Any]) -> None:
    spec = _model_spec(o)
    _need_inputs(o["index"])
    _need_outputs(o["out"], o["fit_out"])
    series = idx.load_index(o["index"])
    decomps = {e: dec.decompose(s, spec) for e, s in series.items()}
    atomic_write_text(o["out"], dec.decompositions_to_csv(decomps))
    if o["fit_out"] is not None:
        atomic_write_text(o["fit_out"], dec.fits_to_json({e: d.fit for e, d in decomps.items()}))


def cmd_impact(o: dict[str, Any], _: dict[str, Any]) -> None:
    spec = _model_spec(o)
    _need_inputs(o["index"])
    _need_outputs(o["out"])
    series = idx.load_index(o["index"])
    if o["emotion"] not in series:
        raise DataError(f"index has no {o['emotion'].value} series")
    records = imp.event_impact(series[o["emotion"]], spec, o["event_date"], o["horizon"])
    atomic_write_text(o["out"], imp.impacts_to_csv(records))


def cmd_rank(o: dict[str, Any], _: dict[str, Any]) -> None:
    spec = _model_spec(o)
    start, end = o["period"]
    if o["top"] < 1:
        raise UsageError("--top must be >= 1")
    _need_inputs(o["index"], o["annotations"])
    _need_outputs(o["out"])
    labels = imp.load_annotations(o["annotations"]) if o["annotations"] else None
    series = idx.load_index(o["index"])
    records = imp.rank_impacts(series, spec, start, end, o["top"], o["refit_cadence"])
    atomic_write_text(o["out"], imp.impacts_to_csv(records, labels))


def cmd_synth(o: dict[str, Any], section: dict[str, Any]) -> None:
    if o["out_index"] is None and o["out_posts"] is None:
        raise UsageError("synth needs --out-index and/or --out-posts")
    if o["out_posts"] is not None and o["lexicon"] is None:
        raise UsageError("--out-posts needs --lexicon")
    _need_inputs(o["spec_file"], o["lexicon"])
    _need_outputs(o["out_index"], o["out_posts"])
    if o["spec_file"] is not None:
        try:
            raw = json.loads(o["spec_file"].read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad synth spec {o['spec_file']}: {exc}") from None
    elif isinstance(section.get("spec"), dict):
        raw = section["spec"]
    else:
        raise UsageError("synth needs --spec-file or a 'spec' object in the config")
    if o["seed"] is not None:
        raw = {**raw, "seed": o["seed"]}
    spec = synth.SynthSpec.from_dict(raw)
    corpus = synth.CorpusOptions.from_dict(section.get("corpus", {}))

    if o["out_index"] is not None:
        series = synth.gen_all_index_series(spec)
        idx.write_index(series, o["out_index"], variant="synthetic")
    if o["out_posts"] is not None:
        lexicon = lex.load_lexicon(o["lexicon"])
        posts = synth.gen_corpus(spec, lexicon, o["posts_per_day"], corpus)
        atomic_write_text(o["out_posts"], ingest.posts_to_jsonl(posts))


def cmd_plot(o: dict[str, Any], _: dict[str, Any]) -> None:
    _need_inputs(o["input"])
    _need_outputs(o["out"])
    kind = o["kind"]
    if kind not in ("auto", "index", "decomposition"):
        raise UsageError("--kind must be auto, index or decomposition")
    if kind == "auto":
        with open(o["input"], encoding="utf-8") as fh:
            header = fh.readline().strip()
        kind = "decomposition" if header == ",".join(dec.DECOMP_HEADER) else "index"
    wanted = None
    if o["emotions"]:
        wanted = {_emotion(s) for s in o["emotions"].split(",")}
    if kind == "index":
        data = idx.load_index(o["input"])
        if wanted:
            data = {e: s for e, s in data.items() if e in wanted}
        svg = plot.index_svg(data, o["title"])
    else:
        data = dec.load_decompositions(o["input"])
        if wanted:
            data = {e: d for e, d in data.items() if e in wanted}
        svg = plot.decomposition_svg(data)
    if not data:
        raise DataError("nothing to plot")
    atomic_write_text(o["out"], svg)


HANDLERS = {
    "lexicon-validate": cmd_lexicon_validate,
    "count": cmd_count,
    "index": cmd_index,
    "decompose": cmd_decompose,
    "impact": cmd_impact,
    "rank": cmd_rank,
    "synth": cmd_synth,
    "plot": cmd_plot,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError(f"missing subcommand\n{parser.format_usage().rstrip()}")
        logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        opts, section = resolve_options(ns.command, ns)
        HANDLERS[ns.command](opts, section)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"emoindex: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"emoindex: data error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
