"""``tplextract`` command line: extract one project, score labels, or run a whole corpus."""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .finalize import ExtractionReport, Options, extract_project
from .keywords import KeywordTable
from .metrics import InsufficientData, MetricsSummary, pair_up
from .model import ExtractionError


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_IO = 2


@dataclass(frozen=True)
class RunOptions:
    mode: str
    target: str
    variants: Optional[tuple] = None
    main_module: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"
    jobs: int = 1
    keyword_table: Optional[str] = None
    golden: Optional[str] = None

    def extraction_options(self) -> Options:
        table = KeywordTable.default()
        if self.keyword_table:
            table = table.with_overrides(self.keyword_table)
        return Options(variants=self.variants, main_module=self.main_module, keyword_table=table)


def render(report: ExtractionReport, fmt: str) -> str:
    return report.to_lines() if fmt == "lines" else report.to_json()


def _write(text: str, output: Optional[str]):
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _fail(err: ExtractionError) -> int:
    sys.stderr.write(json.dumps(err.to_dict(), sort_keys=True) + "\n")
    return err.exit_code


def cmd_extract(opts: RunOptions) -> int:
    try:
        report = extract_project(opts.target, opts.extraction_options())
    except ExtractionError as err:
        return _fail(err)
    except OSError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_IO
    try:
        _write(render(report, opts.format), opts.output)
    except OSError as err:
        sys.stderr.write(f"error: cannot write output: {err}\n")
        return EXIT_IO
    return EXIT_OK


def cmd_metrics(opts: RunOptions) -> int:
    if not opts.golden:
        sys.stderr.write("error: metrics needs --golden\n")
        return EXIT_ERROR
    for loc in (opts.target, opts.golden):
        if not Path(loc).exists():
            sys.stderr.write(f"error: no such file or directory: {loc}\n")
            return EXIT_IO
    try:
        pairs, only_pred, only_gold = pair_up(opts.target, opts.golden)
    except (OSError, ValueError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_IO
    for stem in only_pred:
        sys.stderr.write(f"WARNING: no golden labels for {stem}; skipped\n")
    for stem in only_gold:
        sys.stderr.write(f"WARNING: no predicted labels for {stem}; skipped\n")
    try:
        summary = MetricsSummary.of(pairs)
    except InsufficientData:
        sys.stderr.write("error: no prediction/golden pairs matched by file stem\n")
        return EXIT_ERROR
    payload = summary.to_dict()
    payload["unmatched_predictions"] = only_pred
    payload["unmatched_goldens"] = only_gold
    text = summary.render() + "\n" if opts.format == "lines" else json.dumps(payload, indent=2) + "\n"
    if opts.format != "lines":
        sys.stderr.write(summary.render() + "\n")
    try:
        _write(text, opts.output)
    except OSError as err:
        sys.stderr.write(f"error: cannot write output: {err}\n")
        return EXIT_IO
    return EXIT_OK


def _corpus_worker(args) -> tuple[str, Optional[str], Optional[dict]]:
    name, path, opts = args
    try:
        report = extract_project(path, opts.extraction_options())
    except ExtractionError as err:
        return name, None, err.to_dict()
    except Exception as err:  # isolate any per-project failure from the rest of the corpus
        return name, None, {"error": "INTERNAL_ERROR", "message": f"{type(err).__name__}: {err}"}
    return name, report.to_json(), None


def corpus_summary(results: Sequence[tuple], metrics: Optional[MetricsSummary] = None) -> dict:
    ok = [(n, ExtractionReport.from_json(r)) for n, r, _e in results if r is not None]
    failures = [{"project": n, **e} for n, _r, e in results if e is not None]
    counts = [len(rep.dependencies) for _n, rep in ok]
    kinds = Counter(a.kind for _n, rep in ok for a in rep.local_artifacts)
    n_ok = len(ok)
    summary = {
        "tool_version": __version__,
        "projects": len(results),
        "succeeded": n_ok,
        "failures": len(failures),
        "failed_projects": failures,
        "label_counts": {
            "total": sum(counts),
            "min": min(counts) if counts else 0,
            "max": max(counts) if counts else 0,
            "mean": statistics.fmean(counts) if counts else 0.0,
            "median": statistics.median(counts) if counts else 0.0,
            "per_project": {n: len(rep.dependencies) for n, rep in ok},
        },
        "local_artifacts": {
            kind: {"count": kinds.get(kind, 0), "per_project": (kinds.get(kind, 0) / n_ok) if n_ok else 0.0}
            for kind in ("JAR", "AAR", "SO")
        },
    }
    if metrics is not None:
        summary["metrics"] = metrics.to_dict()
    return summary


def cmd_corpus(opts: RunOptions) -> int:
    corpus = Path(opts.target)
    if not corpus.is_dir():
        sys.stderr.write(f"error: not a directory: {corpus}\n")
        return EXIT_IO
    projects = sorted(p for p in corpus.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not projects:
        sys.stderr.write(f"error: corpus {corpus} has no project directories\n")
        return EXIT_ERROR
    out_dir = Path(opts.output or "reports")
    jobs = max(1, opts.jobs)
    tasks = [(p.name, str(p), opts) for p in projects]
    if jobs == 1:
        results = [_corpus_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_corpus_worker, tasks))
    results.sort(key=lambda r: r[0])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text, err in results:
            if text is None:
                (out_dir / f"{name}.error.json").write_text(json.dumps(err, indent=2, sort_keys=True) + "\n",
                                                            encoding="utf-8")
                continue
            if opts.format == "lines":
                (out_dir / f"{name}.txt").write_text(ExtractionReport.from_json(text).to_lines(), encoding="utf-8")
            else:
                (out_dir / f"{name}.report.json").write_text(text, encoding="utf-8")
        metrics = None
        if opts.golden:
            pairs, _p, _g = pair_up(out_dir, opts.golden)
            metrics = MetricsSummary.of(pairs) if pairs else None
        summary = corpus_summary(results, metrics)
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as err:
        sys.stderr.write(f"error: cannot write reports: {err}\n")
        return EXIT_IO
    sys.stderr.write(f"{summary['succeeded']}/{summary['projects']} projects extracted, "
                     f"{summary['failures']} failed; reports in {out_dir}\n")
    return EXIT_OK


def _variants(text: Optional[str]) -> Optional[tuple]:
    if not text:
        return None
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tplextract",
                                     description="Extract third-party library coordinates from Android Gradle "
                                                 "build configurations without running the build.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p):
        p.add_argument("--variant", help="comma-separated flavor/build type names to include")
        p.add_argument("--main-module", help="module that produces the APK, e.g. :mobile")
        p.add_argument("--keyword-table", help="keyword<TAB>class overrides file")

    p = sub.add_parser("extract", help="extract one project")
    p.add_argument("project_dir")
    common(p)
    p.add_argument("--format", choices=("json", "lines"), default="json")
    p.add_argument("--output", "-o", help="output file (default: stdout)")

    p = sub.add_parser("metrics", help="score predicted labels against golden labels")
    p.add_argument("predictions", help="prediction file or directory (lines or JSON reports)")
    p.add_argument("--golden", required=True, help="golden file or directory, paired by file stem")
    p.add_argument("--format", choices=("json", "lines"), default="json")
    p.add_argument("--output", "-o")

    p = sub.add_parser("corpus", help="extract every project directory under a corpus directory")
    p.add_argument("corpus_dir")
    common(p)
    p.add_argument("--format", choices=("json", "lines"), default="json")
    p.add_argument("--output", "-o", help="report directory (default: ./reports)")
    p.add_argument("--jobs", "-j", type=int, default=1, help="parallel worker processes")
    p.add_argument("--golden", help="golden directory; adds metrics to summary.json")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    target = {"extract": "project_dir", "metrics": "predictions", "corpus": "corpus_dir"}[args.mode]
    opts = RunOptions(
        mode=args.mode,
        target=getattr(args, target),
        variants=_variants(getattr(args, "variant", None)),
        main_module=getattr(args, "main_module", None),
        output=args.output,
        format=args.format,
        jobs=getattr(args, "jobs", 1),
        keyword_table=getattr(args, "keyword_table", None),
        golden=getattr(args, "golden", None),
    )
    if opts.keyword_table and not Path(opts.keyword_table).is_file():
        sys.stderr.write(f"error: keyword table not found: {opts.keyword_table}\n")
        return EXIT_IO
    return {"extract": cmd_extract, "metrics": cmd_metrics, "corpus": cmd_corpus}[opts.mode](opts)


if __name__ == "__main__":
    sys.exit(main())
