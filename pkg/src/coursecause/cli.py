"""Command-line front end.

Three subcommands: ``analyze`` estimates the effect of every valid prior
course on every valid target course and emits a per-pair report table;
``sweep`` repeats the analysis over a range of matching cutoffs and emits
the top-k agreement matrix; ``synth`` writes a synthetic transcript dataset
with known planted effects.

Exit codes: 0 success, 1 unreadable input or unwritable output, 2 nothing
estimable, 64 bad flags or configuration. Flags override config-file values;
every report starts with a comment line recording the resolved settings.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Sequence

from .domain import NotEstimable, Term
from .estimator import (
    REPORT_TSV_HEADER,
    AteReport,
    analyze_pair,
    report_json_dict,
    report_tsv_row,
)
from .ingest import (
    Cohort,
    IngestConfig,
    IngestError,
    apply_student_filters,
    load_roster,
    parse_transcripts,
    split_cohorts,
)
from .pairs import PairCriteria, enumerate_valid_x, enumerate_valid_y, explain_invalid_y
from .sensitivity import SweepConfig, sweep_cohort
from .synthgen import (
    PlantedEffect,
    SynthConfig,
    SynthesisError,
    generate,
    ground_truth_json,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_NOT_ESTIMABLE = 2
EXIT_USAGE = 64

DEFAULT_COHORT = "all:SPRING 1900:FALL 2999"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="coursecause", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io_flags(p: _Parser) -> None:
        p.add_argument("--transcripts", help="transcript CSV path")
        p.add_argument("--roster", help="degree roster path (one id per line)")
        p.add_argument("--config", help="key = value config file")
        p.add_argument(
            "--cohort",
            action="append",
            metavar="LABEL:START:END",
            help="cohort boundary, e.g. 'c1:SPRING 2002:SPRING 2010'; repeatable",
        )
        p.add_argument("--min-y-support", type=int, dest="min_y_support")
        p.add_argument("--min-x-support", type=int, dest="min_x_support")
        p.add_argument(
            "--min-below-c-frac", type=float, dest="min_below_c_frac"
        )
        p.add_argument("--min-course-count", type=int, dest="min_course_count")
        p.add_argument("--k", type=int, help="cross-validation folds")
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("tsv", "json"))
        p.add_argument("--out", help="output path (default: stdout)")

    analyze = sub.add_parser("analyze", help="per-pair effect report")
    add_io_flags(analyze)
    analyze.add_argument("--y", help="restrict to one target course")
    analyze.add_argument("--x", help="restrict to one prior course")
    analyze.add_argument("--cutoff", type=float)

    sweep = sub.add_parser("sweep", help="cutoff sensitivity matrices")
    add_io_flags(sweep)
    sweep.add_argument("--cutoffs", help="comma-separated cutoffs")
    sweep.add_argument("--top-k", type=int, dest="top_k")

    synth = sub.add_parser("synth", help="generate synthetic transcripts")
    synth.add_argument("--config", help="key = value config file")
    synth.add_argument("--students", type=int)
    synth.add_argument("--courses", type=int)
    synth.add_argument("--terms", help="terms per student, LO:HI")
    synth.add_argument(
        "--plant",
        action="append",
        metavar="X:Y:DELTA",
        help="planted effect; repeatable",
    )
    synth.add_argument("--ability-spread", type=float, dest="ability_spread")
    synth.add_argument("--difficulty-spread", type=float, dest="difficulty_spread")
    synth.add_argument("--noise-sd", type=float, dest="noise_sd")
    synth.add_argument("--courses-per-term", type=int, dest="courses_per_term")
    synth.add_argument("--take-y-fraction", type=float, dest="take_y_fraction")
    synth.add_argument("--xy-order-fraction", type=float, dest="xy_order_fraction")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--out-dir", dest="out_dir")
    return parser


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"bad config line (expected key = value): {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Settings:
    """Flag > config file > default resolution, remembering what resolved."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._file: dict[str, str] = (
            _parse_config_file(args.config) if args.config else {}
        )
        self.resolved: dict[str, str] = {}

    def get(self, key: str, default, parse: Callable[[str], object] = str):
        value = getattr(self._args, key, None)
        if value is None:
            raw = self._file.get(key)
            if raw is not None:
                try:
                    value = parse(raw)
                except (ValueError, TypeError) as exc:
                    raise UsageError(f"bad config value for {key}: {raw!r} ({exc})")
            else:
                value = default
        self.resolved[key] = value
        return value

    def get_list(self, key: str, plural: str, default: list[str]) -> list[str]:
        value = getattr(self._args, key, None)
        if value is None:
            raw = self._file.get(plural)
            value = (
                [part.strip() for part in raw.split(",") if part.strip()]
                if raw is not None
                else default
            )
        self.resolved[plural] = ",".join(value)
        return value

    def public_config(self) -> dict:
        """Resolved settings worth recording; the output path is not one."""
        return {
            key: value
            for key, value in sorted(self.resolved.items())
            if value is not None and key != "out"
        }

    def header_line(self, command: str) -> str:
        body = " ".join(f"{k}={v}" for k, v in self.public_config().items())
        return f"# coursecause {command} | {body}"


def _parse_cohort_flag(text: str) -> tuple[str, Term, Term]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad cohort spec (LABEL:START:END): {text!r}")
    label, start, end = (p.strip() for p in parts)
    try:
        return label, Term.parse(start), Term.parse(end)
    except ValueError as exc:
        raise UsageError(f"bad cohort spec {text!r}: {exc}")


def _parse_plant_flag(text: str) -> PlantedEffect:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad planted effect (X:Y:DELTA): {text!r}")
    try:
        return PlantedEffect(parts[0].strip(), parts[1].strip(), float(parts[2]))
    except ValueError as exc:
        raise UsageError(f"bad planted effect {text!r}: {exc}")


def _read_bytes(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _IoFailure(f"cannot read {what} {path!r}: {exc}") from exc


class _IoFailure(Exception):
    pass


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        Path(out_path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot write output {out_path!r}: {exc}") from exc


def _load_cohorts(settings: _Settings) -> tuple[list[Cohort], PairCriteria]:
    transcripts_path = settings.get("transcripts", None)
    roster_path = settings.get("roster", None)
    if not transcripts_path or not roster_path:
        raise UsageError("--transcripts and --roster are required")
    cohort_specs = settings.get_list("cohort", "cohorts", [DEFAULT_COHORT])
    boundaries = tuple(_parse_cohort_flag(spec) for spec in cohort_specs)
    try:
        ingest_config = IngestConfig(cohort_boundaries=boundaries)
        criteria = PairCriteria(
            min_y_support=settings.get("min_y_support", 100, int),
            min_x_support=settings.get("min_x_support", 100, int),
            min_below_c_fraction=settings.get("min_below_c_frac", 0.10, float),
        )
    except (IngestError, ValueError) as exc:
        raise UsageError(str(exc))
    transcripts = _read_bytes(transcripts_path, "transcripts")
    roster = _read_bytes(roster_path, "roster")
    try:
        records, _rejects = parse_transcripts(transcripts, ingest_config)
    except IngestError as exc:
        # Malformed input file, not a flag problem.
        raise _IoFailure(f"bad transcript file {transcripts_path!r}: {exc}")
    histories = apply_student_filters(
        records, load_roster(roster), ingest_config
    )
    return split_cohorts(histories, ingest_config), criteria


def cmd_analyze(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    cohorts, criteria = _load_cohorts(settings)
    cutoff = settings.get("cutoff", 0.5, float)
    k = settings.get("k", 5, int)
    seed = settings.get("seed", 0, int)
    min_course_count = settings.get("min_course_count", 2, int)
    only_y = settings.get("y", None)
    only_x = settings.get("x", None)
    fmt = settings.get("format", "tsv")
    out_path = settings.get("out", None)
    if not 0.0 < cutoff <= 1.0:
        raise UsageError(f"cutoff must lie in (0, 1], got {cutoff}")

    reports: list[AteReport] = []
    failures: list[str] = []
    for cohort in cohorts:
        if only_y is not None:
            reasons = explain_invalid_y(cohort, only_y, criteria)
            if reasons:
                failures.append(
                    f"cohort {cohort.label}: course {only_y!r} is not a valid "
                    f"target: " + "; ".join(reasons)
                )
                continue
            ys = [only_y]
        else:
            ys = enumerate_valid_y(cohort, criteria)
        for y_course in ys:
            pairs = enumerate_valid_x(cohort, y_course, criteria)
            if only_x is not None:
                pairs = [p for p in pairs if p.x_course == only_x]
            for pair in pairs:
                try:
                    reports.append(
                        analyze_pair(
                            cohort, pair, cutoff, k=k, seed=seed,
                            min_course_count=min_course_count,
                        )
                    )
                except NotEstimable as exc:
                    failures.append(
                        f"cohort {cohort.label}: ({pair.y_course}, "
                        f"{pair.x_course}) not estimable: {exc}"
                    )

    if not reports:
        for line in failures or ["no valid course pair found"]:
            print(line, file=sys.stderr)
        return EXIT_NOT_ESTIMABLE

    order = {c.label: i for i, c in enumerate(cohorts)}
    reports.sort(key=lambda r: (order[r.cohort_label], r.y_course, r.x_course))
    if fmt == "json":
        payload = {
            "command": "analyze",
            "config": settings.public_config(),
            "rows": [report_json_dict(r) for r in reports],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = [settings.header_line("analyze"), REPORT_TSV_HEADER]
        lines.extend(report_tsv_row(r) for r in reports)
        text = "\n".join(lines) + "\n"
    _emit(text, out_path)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    cohorts, criteria = _load_cohorts(settings)
    cutoffs_text = settings.get("cutoffs", "0.1,0.3,0.4,0.5,0.6,0.9")
    try:
        cutoffs = tuple(float(part) for part in str(cutoffs_text).split(","))
        config = SweepConfig(
            cutoffs=cutoffs,
            top_k=settings.get("top_k", 3, int),
            k_folds=settings.get("k", 5, int),
            seed=settings.get("seed", 0, int),
            criteria=criteria,
            min_course_count=settings.get("min_course_count", 2, int),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    fmt = settings.get("format", "tsv")
    out_path = settings.get("out", None)

    results = []
    notes = []
    for cohort in cohorts:
        try:
            results.append((cohort.label, sweep_cohort(cohort, config)))
        except NotEstimable as exc:
            notes.append(f"cohort {cohort.label}: {exc}")
    if not results:
        for note in notes or ["nothing to sweep"]:
            print(note, file=sys.stderr)
        return EXIT_NOT_ESTIMABLE

    if fmt == "json":
        payload = {
            "command": "sweep",
            "config": settings.public_config(),
            "cohorts": [
                {
                    "label": label,
                    "similarity": result.matrix.to_json_dict(),
                    "rankings": {
                        f"{cutoff:g}": {
                            y: [[x, ate] for x, ate in ranking]
                            for y, ranking in sorted(per_y.items())
                        }
                        for cutoff, per_y in result.rankings.items()
                    },
                }
                for label, result in results
            ],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        blocks = [settings.header_line("sweep")]
        for label, result in results:
            blocks.append(f"# cohort: {label} | top-{config.top_k} agreement")
            blocks.append(result.matrix.to_tsv().rstrip("\n"))
            blocks.append(f"# cohort: {label} | rankings")
            blocks.append("cutoff\ty_course\trank\tx_course\tate_reg_mean")
            for cutoff in config.cutoffs:
                for y_course, ranking in sorted(result.rankings[cutoff].items()):
                    for rank, (x_course, ate) in enumerate(
                        ranking[: config.top_k], start=1
                    ):
                        blocks.append(
                            f"{cutoff:g}\t{y_course}\t{rank}\t{x_course}\t{ate:.4f}"
                        )
        text = "\n".join(blocks) + "\n"
    _emit(text, out_path)
    return EXIT_OK


def _parse_terms_range(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"bad terms range (LO:HI): {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"bad terms range (LO:HI): {text!r}") from None


def cmd_synth(args: argparse.Namespace) -> int:
    settings = _Settings(args)
    plant_specs = settings.get_list("plant", "plants", [])
    terms_text = settings.get("terms", "3:5")
    try:
        config = SynthConfig(
            n_students=settings.get("students", 1000, int),
            n_courses=settings.get("courses", 20, int),
            terms_per_student=_parse_terms_range(str(terms_text)),
            planted_effects=tuple(_parse_plant_flag(s) for s in plant_specs),
            ability_spread=settings.get("ability_spread", 0.5, float),
            difficulty_spread=settings.get("difficulty_spread", 0.2, float),
            noise_sd=settings.get("noise_sd", 0.3, float),
            seed=settings.get("seed", 0, int),
            courses_per_term=settings.get("courses_per_term", 4, int),
            take_y_fraction=settings.get("take_y_fraction", 0.8, float),
            xy_order_fraction=settings.get("xy_order_fraction", 0.6, float),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out_dir = Path(settings.get("out_dir", "."))
    try:
        result = generate(config)
    except SynthesisError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_ESTIMABLE
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "transcripts.csv").write_bytes(result.transcript_csv)
        (out_dir / "roster.txt").write_bytes(result.roster)
        (out_dir / "ground_truth.json").write_bytes(ground_truth_json(result))
    except OSError as exc:
        raise _IoFailure(f"cannot write into {out_dir}: {exc}") from exc
    print(
        f"wrote transcripts.csv, roster.txt, ground_truth.json to {out_dir}",
        file=sys.stderr,
    )
    return EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except _IoFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
