"""Command-line entry point: ``evofda {metrics,ingest,run,sensitivity,synth}``.

Options for ``ingest``, ``run`` and ``sensitivity`` mirror
:class:`~evofda.pipeline.PipelineConfig`. Values come from the defaults,
then ``--config FILE.toml``, then explicit flags. The output directory may
also be overridden with the ``EVOFDA_OUTPUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import sys
from datetime import date
from pathlib import Path

from . import pipeline, synth
from .ingest import HEADER_FULL, dump_releases
from .metrics import parse_code_model, project_complexity

log = logging.getLogger("evofda")


class CliError(Exception):
    pass


def _parse_fact_name(path: Path) -> tuple[str, date]:
    project, sep, day = path.stem.rpartition("_")
    if not sep or not project:
        raise CliError(f"{path}: file name must look like <project>_<YYYY-MM-DD>.facts")
    try:
        return project, date.fromisoformat(day)
    except ValueError:
        raise CliError(f"{path}: bad date {day!r} in file name") from None


def cmd_metrics(directory, coupling_mode: str = "distinct") -> str:
    """Release CSV (full header) for every ``<project>_<date>.facts`` file in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise CliError(f"{directory}: not a directory")
    rows = []
    for path in sorted(directory.glob("*.facts")):
        project, day = _parse_fact_name(path)
        try:
            model = parse_code_model(path.read_text(encoding="utf-8"))
            snap = project_complexity(model, coupling_mode)
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(f"{path}: {exc}") from exc
        if snap.loc < 1:
            raise CliError(f"{path}: no positive 'loc' line")
        rows.append((project, day, snap))
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER_FULL)
    for project, day, s in rows:
        w.writerow([project, day.isoformat(), s.loc, repr(s.cplxlcoh), repr(s.cpl), repr(s.lcoh)])
    return buf.getvalue()


def _add_config_flags(p: argparse.ArgumentParser, sensitivity: bool = False):
    p.add_argument("--config", help="TOML file with PipelineConfig keys")
    # SUPPRESS keeps unset flags out of the namespace so the TOML file wins
    S = argparse.SUPPRESS
    p.add_argument("--releases", default=S, help="release CSV")
    p.add_argument("--truth", default=S, help="optional project_id,family CSV for scoring")
    p.add_argument("--output-dir", dest="output_dir", default=S)
    p.add_argument("--min-loc-growth", dest="min_loc_growth", type=float, default=S)
    p.add_argument("--min-releases", dest="min_releases", type=int, default=S)
    p.add_argument("--any-positive-growth", dest="any_positive_growth",
                   action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--knots", type=int, default=S, help="interior knot count (default 13)")
    p.add_argument("--lam", type=float, default=S, help="smoothing parameter; overrides --target-edf")
    p.add_argument("--target-edf", dest="target_edf", type=float, default=S)
    p.add_argument("--features", choices=("coefficients", "fitted_values"), default=S)
    p.add_argument("--k-min", dest="k_min", type=int, default=S)
    p.add_argument("--k-max", dest="k_max", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--restarts", type=int, default=S)
    p.add_argument("--standardize-mode", dest="standardize_mode", choices=("center", "zscore"), default=S)
    p.add_argument("--fit-grid", dest="fit_grid", choices=("daily", "knots"), default=S)
    p.add_argument("--jobs", type=int, default=S, help="worker threads (results do not depend on it)")
    if sensitivity:
        p.add_argument("--sensitivity-k", dest="sensitivity_k", type=int, default=S)
        p.add_argument("--knot-variants", type=_int_list, default=(6, 13, 26))
        p.add_argument("--smoothing-variants", type=_str_list, default=pipeline.SMOOTHING_VARIANTS)
        p.add_argument("--feature-variants", type=_str_list, default=("coefficients", "fitted_values"))
        p.add_argument("--screening-variants", type=_str_list, default=tuple(pipeline.SCREENING_VARIANTS))


def _int_list(s: str):
    return tuple(int(x) for x in s.split(","))


def _str_list(s: str):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _config(args) -> pipeline.PipelineConfig:
    values = {}
    if args.config:
        values.update(dataclasses.asdict(pipeline.PipelineConfig.from_toml(args.config)))
    names = {f.name for f in dataclasses.fields(pipeline.PipelineConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    cfg = pipeline.PipelineConfig(**values)
    return cfg.validate()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evofda", description="Complexity-evolution curves: fit, cluster, test.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="complexity per fact file -> release CSV")
    p.add_argument("directory")
    p.add_argument("--coupling-mode", choices=("distinct", "instance"), default="distinct")
    p.add_argument("-o", "--output", help="write CSV here instead of stdout")

    p = sub.add_parser("ingest", help="screen releases and describe the sample")
    _add_config_flags(p)

    p = sub.add_parser("run", help="full analysis bundle")
    _add_config_flags(p)

    p = sub.add_parser("sensitivity", help="re-cluster under alternative settings")
    _add_config_flags(p, sensitivity=True)

    p = sub.add_parser("synth", help="write a labelled synthetic corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="directory for releases.csv and truth.csv")
    p.add_argument("--per-family", type=int, default=15)
    p.add_argument("--amplitude", type=float, default=40.0)
    p.add_argument("--noise-sd", type=float, default=2.0)
    p.add_argument("--gap-mean", type=float, default=56.0, help="mean days between releases")
    p.add_argument("--gap-cv", type=float, default=0.5, help="coefficient of variation of release gaps")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except pipeline.PipelineError as exc:
        print(f"evofda: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
    except (CliError, OSError, ValueError) as exc:
        print(f"evofda: error: {exc}", file=sys.stderr)
    return 1


def _dispatch(args) -> int:
    if args.command == "metrics":
        text = cmd_metrics(args.directory, args.coupling_mode)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "synth":
        spec = synth.CorpusSpec(
            counts={f: args.per_family for f in synth.FAMILIES},
            amplitude=args.amplitude,
            noise_sd=args.noise_sd,
            gap_mean_days=args.gap_mean,
            gap_cv=args.gap_cv,
            seed=args.seed,
        )
        projects, labels = synth.generate_corpus(spec)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "releases.csv").write_text(dump_releases(projects), encoding="utf-8")
        (out / "truth.csv").write_text(synth.truth_csv(projects, labels), encoding="utf-8")
        print(f"wrote {len(projects)} projects to {out}")
        return 0

    cfg = _config(args)
    if not cfg.releases:
        raise CliError("--releases (or 'releases' in the config file) is required")
    outdir = pipeline.resolve_output_dir(cfg)

    if args.command == "ingest":
        kept, rejected = pipeline.cmd_ingest(cfg)
        print(f"kept {len(kept)} of {len(kept) + len(rejected)} projects; wrote {outdir}")
        return 0

    if args.command == "run":
        res, files = pipeline.cmd_run(cfg)
        sys.stdout.write(pipeline.format_report(res))
        print(f"wrote {len(files)} files to {outdir}")
        return 0

    variants = pipeline.sensitivity_variants(
        args.knot_variants, args.smoothing_variants, args.feature_variants, args.screening_variants
    )
    rep = pipeline.cmd_sensitivity(cfg, variants)
    sys.stdout.write(pipeline.format_sensitivity(rep))
    print(f"wrote {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
