"""Command-line interface.

Exit status: 0 on success, 1 for usage errors (bad flags, unreadable
inputs, refusing to overwrite), 2 when input data fails validation.
Outputs are written atomically (temporary file, then rename) and existing
files are only replaced with ``--force``.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from padeval import __version__, curves, metrics, report, synth, weights
from padeval.cascade import build_config, cascade_confusion
from padeval.errors import PadEvalError
from padeval.model import parse_manifest, parse_scores, serialize_scores
from padeval.svg import PlotOptions, render_svg

OUT_ENV = "PADEVAL_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str, flag: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{flag}: cannot read {path!r}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{flag}: {path!r} is not UTF-8 text") from None


def _load(scores_path, manifest_path, fmt, prefix=""):
    taxonomy = parse_manifest(_read(manifest_path, f"--{prefix}manifest"))
    return parse_scores(_read(scores_path, f"--{prefix}scores"), taxonomy, fmt)


class _Outputs:
    """Collects (path, text) pairs, checks them all, then writes each atomically."""

    def __init__(self, force: bool):
        self.force = force
        self.items: list[tuple[Path, str, str]] = []

    def add(self, path, text: str, flag: str):
        self.items.append((Path(path), text, flag))

    def commit(self):
        for path, _, flag in self.items:
            if path.exists() and not self.force:
                raise UsageError(f"{flag}: {str(path)!r} already exists (use --force to overwrite)")
            if path.exists() and path.is_dir():
                raise UsageError(f"{flag}: {str(path)!r} is a directory")
        for path, text, _ in self.items:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                os.chmod(tmp, 0o666 & ~_umask())
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _default_out(args, name: str):
    if args.out:
        return args.out
    base = os.environ.get(OUT_ENV)
    return os.path.join(base, name) if base else None


def _emit(args, outputs: _Outputs, text: str, default_name: str):
    target = _default_out(args, default_name)
    if target is None:
        outputs.commit()
        sys.stdout.write(text)
    else:
        outputs.add(target, text, "--out")
        outputs.commit()


def _plot_options(args, **kw) -> PlotOptions:
    return PlotOptions(title=args.title or "", width=args.width, height=args.height, **kw)


def _species(args, scores):
    sp = getattr(args, "species", None)
    if sp in (None, "worst"):
        return None
    if sp not in scores.taxonomy.all_species:
        raise UsageError(f"--species: {sp!r} is not an attack species of the manifest")
    return sp


def _selector(value: str, flag: str):
    try:
        metrics.parse_selector(value)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None
    return value


def cmd_eval(args) -> int:
    scores = _load(args.scores, args.manifest, args.scores_format)
    species = _species(args, scores)
    _selector(args.tau, "--tau")
    name = args.name if args.name is not None else Path(args.scores).stem
    rep = report.build_report(scores, species, args.tau, dataset=name)
    fmt = args.report_format or ("markdown" if (args.out or "").endswith(".md") else "json")
    outputs = _Outputs(args.force)
    if args.confusion_svg:
        cm = metrics.confusion_matrix(scores, rep.chosen_tau, args.confusion_mode)
        title = f"{name} {args.confusion_mode} confusion matrix (tau={rep.chosen_tau:.4f})"
        opts = PlotOptions(title=title, width=args.width, height=args.height)
        outputs.add(args.confusion_svg, render_svg("confusion", cm, opts), "--confusion-svg")
    _emit(args, outputs, report.render_report(rep, fmt), "report.md" if fmt == "markdown" else "report.json")
    return 0


def cmd_det(args) -> int:
    scores = _load(args.scores, args.manifest, args.scores_format)
    names = args.species or metrics.nonempty_species(scores)
    for s in names:
        if s != "worst" and s not in scores.taxonomy.all_species:
            raise UsageError(f"--species: {s!r} is not an attack species of the manifest")
    series = [curves.det_curve(scores, None if s == "worst" else s) for s in names]
    opts = _plot_options(args, det_range=(args.det_floor, args.det_ceiling))
    try:
        svg = render_svg("det", series, opts)
    except ValueError as exc:
        raise PadEvalError(str(exc)) from None
    outputs = _Outputs(args.force)
    if args.eer_svg:
        ec = curves.eer_curve(scores, None if names[0] == "worst" else names[0])
        outputs.add(args.eer_svg, render_svg("eer", ec, _plot_options(args)), "--eer-svg")
    _emit(args, outputs, svg, "det.svg")
    return 0


def cmd_kde(args) -> int:
    scores = _load(args.scores, args.manifest, args.scores_format)
    if args.bandwidth is not None and not args.bandwidth > 0:
        raise UsageError("--bandwidth: must be positive")
    if args.points < 2:
        raise UsageError("--points: need at least 2")
    tau = None
    if args.tau is not None:
        _selector(args.tau, "--tau")
        tau, _ = metrics.resolve_threshold(scores, args.tau)
    xs = [i / (args.points - 1) for i in range(args.points)]
    series = curves.class_densities(scores, xs, args.bandwidth)
    if not series:
        raise PadEvalError("no class has the 2 samples a density estimate needs")
    plot = "kde-log" if args.log else "kde-linear"
    try:
        svg = render_svg(plot, series, _plot_options(args, tau=tau, log_floor=args.log_floor))
    except ValueError as exc:
        raise PadEvalError(str(exc)) from None
    _emit(args, _Outputs(args.force), svg, f"{plot}.svg")
    return 0


def cmd_cascade(args) -> int:
    border = _load(args.border_scores, args.border_manifest, args.scores_format, "border-")
    source = _load(args.source_scores, args.source_manifest, args.scores_format, "source-")
    _selector(args.tau_border, "--tau-border")
    _selector(args.tau_source, "--tau-source")
    name = args.name if args.name is not None else Path(args.border_scores).stem
    rep = report.build_cascade_report(border, source, args.tau_border, args.tau_source, dataset=name)
    fmt = args.report_format or ("markdown" if (args.out or "").endswith(".md") else "json")
    outputs = _Outputs(args.force)
    if args.confusion_svg:
        cfg = build_config(border, source, rep.chosen.tau_border, rep.chosen.tau_source)
        cm = cascade_confusion(cfg, args.confusion_mode)
        outputs.add(args.confusion_svg,
                    render_svg("confusion", cm, PlotOptions(title=f"{name} cascade {args.confusion_mode}",
                                                            width=args.width, height=args.height)),
                    "--confusion-svg")
    _emit(args, outputs, report.render_cascade_report(rep, fmt), "cascade.md" if fmt == "markdown" else "cascade.json")
    return 0


def cmd_weights(args) -> int:
    if args.counts is not None:
        counts = weights.parse_counts_inline(args.counts)
    else:
        counts = weights.parse_counts_csv(_read(args.counts_file, "--counts-file"))
    text = weights.format_weights(weights.class_weights(counts))
    _emit(args, _Outputs(args.force), text, "weights.csv")
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        try:
            spec = synth.SynthSpec.from_json(_read(args.spec, "--spec"))
        except ValueError as exc:
            raise PadEvalError(f"--spec: {exc}") from None
    else:
        missing = [f for f, v in (("--mu-bf", args.mu_bf), ("--mu-attack", args.mu_attack),
                                  ("--sigma", args.sigma), ("--n", args.n), ("--seed", args.seed)) if v is None]
        if missing:
            raise UsageError(f"{missing[0]}: required with --two-class")
        if not args.sigma > 0:
            raise UsageError("--sigma: must be positive")
        if args.n < 1:
            raise UsageError("--n: must be at least 1")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed: must be in [0, 2**64)")
        spec = synth.two_class_spec(args.mu_bf, args.mu_attack, args.sigma, args.n, args.seed,
                                    bona_fide=args.bona_fide_label, species=args.species_label)
    out_dir = args.out or os.environ.get(OUT_ENV)
    if not out_dir:
        raise UsageError("--out: output directory required (or set PADEVAL_OUT)")
    scores = synth.gen_multiclass(spec)
    ext = "jsonl" if args.scores_format == "jsonl" else "csv"
    outputs = _Outputs(args.force)
    outputs.add(Path(out_dir) / f"scores.{ext}", serialize_scores(scores, ext), "--out")
    outputs.add(Path(out_dir) / "manifest.json", scores.taxonomy.to_json(), "--out")
    outputs.commit()
    return 0


def _add_inputs(p):
    p.add_argument("--scores", required=True, help="score file (CSV or JSONL)")
    p.add_argument("--manifest", required=True, help="class manifest (JSON)")


def _add_common(p):
    p.add_argument("--scores-format", choices=("csv", "jsonl"), help="override format detection")
    p.add_argument("--out", help=f"output path (default: stdout, or ${OUT_ENV}/<name>)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def _add_plot(p):
    p.add_argument("--title", default="")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="padeval", description="ISO/IEC 30107-3 evaluation of PAD scores")
    parser.add_argument("--version", action="version", version=f"padeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="EER, BPCER_AP ladder and rates at an operating point")
    _add_inputs(p)
    _add_common(p)
    p.add_argument("--species", default="worst", help="species driving EER/ladder (default: worst case)")
    p.add_argument("--tau", default="auto:bpcer100", help="threshold in [0,1] or auto:bpcerN")
    p.add_argument("--report-format", choices=("json", "markdown"))
    p.add_argument("--name", help="dataset name stored in the report")
    p.add_argument("--confusion-svg", help="also render the confusion matrix at the chosen threshold")
    p.add_argument("--confusion-mode", choices=("full", "binary"), default="full")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.set_defaults(func=cmd_eval, title="")

    p = sub.add_parser("det", help="DET curves (SVG)")
    _add_inputs(p)
    _add_common(p)
    _add_plot(p)
    p.add_argument("--species", action="append", help="species to plot (repeatable; 'worst' for worst case)")
    p.add_argument("--det-floor", type=float, default=0.001)
    p.add_argument("--det-ceiling", type=float, default=0.5)
    p.add_argument("--eer-svg", help="also render the APCER/BPCER-vs-threshold plot for the first species")
    p.set_defaults(func=cmd_det)

    p = sub.add_parser("kde", help="score density plots (SVG)")
    _add_inputs(p)
    _add_common(p)
    _add_plot(p)
    p.add_argument("--log", action="store_true", help="log-scale density axis")
    p.add_argument("--bandwidth", type=float, help="kernel bandwidth (default: Silverman)")
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--log-floor", type=float, default=1e-3)
    p.add_argument("--tau", help="mark a threshold (literal or auto:bpcerN)")
    p.set_defaults(func=cmd_kde)

    p = sub.add_parser("cascade", help="two-stage conjunction of a border and a source model")
    for stage in ("border", "source"):
        p.add_argument(f"--{stage}-scores", required=True)
        p.add_argument(f"--{stage}-manifest", required=True)
        p.add_argument(f"--tau-{stage}", default="auto:bpcer100")
    _add_common(p)
    p.add_argument("--report-format", choices=("json", "markdown"))
    p.add_argument("--name")
    p.add_argument("--confusion-svg")
    p.add_argument("--confusion-mode", choices=("full", "binary"), default="full")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("weights", help="balanced class weights from sample counts")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--counts", help='inline counts, e.g. "bonafide=100,attack=100"')
    g.add_argument("--counts-file", help="CSV with header class,count")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("synth", help="generate a seeded synthetic score set")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--two-class", action="store_true", help="equal-variance Gaussian bona fide vs one species")
    g.add_argument("--spec", help="JSON generator spec for a multi-class set")
    p.add_argument("--mu-bf", type=float)
    p.add_argument("--mu-attack", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int, help="samples per class")
    p.add_argument("--seed", type=int)
    p.add_argument("--bona-fide-label", default="bonafide")
    p.add_argument("--species-label", default="attack")
    p.add_argument("--scores-format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out", help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"padeval: error: {exc}", file=sys.stderr)
        return 1
    except PadEvalError as exc:
        print(f"padeval: invalid data: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
