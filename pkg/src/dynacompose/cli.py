"""Command-line entry point.

Subcommands write their outputs under ``--out`` together with a
``manifest.json`` recording the command, inputs, seed and flags.  Exit
status: 0 success, 1 usage error, 2 data error, 3 inpainter failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import media_io
from .calibration import fit_profile, load_profile, save_profile, video_sample
from .dynamics import normalize
from .configurator import (
    DEFAULT_STRIDE,
    DEFAULT_TOTAL,
    PROPAINTER_MB_PER_FRAME,
    MemoryModel,
    configure,
    max_frames,
)
from .errors import (
    DegenerateSamples,
    DimensionMismatch,
    DynacomposeError,
    EmptyMask,
    InvalidValue,
    IoFailure,
    VideoTooShort,
)
from .evaluation import TRADEOFF_HEADER, PairedDelta, evaluate_run, memory_tradeoff, rows_to_csv
from .inpaint import InpainterAdapter
from .pipeline import analyze_sequence, run_stream
from .quality_metrics import signed_max_change_rate
from .synthetic import PRESETS, make_scene

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _uint(limit: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if not 0 <= v <= limit:
            raise argparse.ArgumentTypeError(f"{v} outside [0, {limit}]")
        return v

    parse.__name__ = f"u{limit.bit_length()}"
    return parse


def _ratio(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"ratio {v} must lie strictly between 0 and 1")
    return v


u32 = _uint(U32_MAX)
u64 = _uint(U64_MAX)


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--profile", help="calibration profile JSON")
    g.add_argument("--budget-mb", type=u32, help="memory budget; sets the input-set size")
    g.add_argument("--per-frame-mb", type=u32, default=PROPAINTER_MB_PER_FRAME, help="memory cost per input frame")
    g.add_argument("--base-mb", type=u32, default=0, help="fixed memory cost")
    g.add_argument("--total", type=u32, help=f"input-set size when no budget is given (default {DEFAULT_TOTAL})")
    g.add_argument("--stride", type=u32, default=DEFAULT_STRIDE, help="reference frame spacing")
    g.add_argument("--force-ratio", type=_ratio, help="use this reference ratio for every target")
    g.add_argument("--seed", type=u64, default=0, help="seed for synthetic scenes")
    g.add_argument("--jobs", type=u32, default=1, help="parallel workers")
    g.add_argument("--out", default="out", help="output directory")
    g.add_argument("--synthetic", help=f"use a synthetic scene instead of a source ({', '.join(PRESETS)})")
    g.add_argument("--inpainter", choices=("baseline", "external"), default="baseline")
    g.add_argument("--external-command", help="command run as '<command> <job_dir>'")
    g.add_argument("--timeout", type=float, default=600.0, help="external inpainter timeout, seconds")
    g.add_argument("--max-targets", type=u32, help="cap on evaluated targets per video")
    g.add_argument("--target-step", type=u32, default=1, help="spacing between evaluated targets")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared()
    parser = _Parser(prog="dynacompose", description="Dynamics-aware input configuration for video inpainting.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[shared], help="per-target dynamics scores")
    p.add_argument("source", nargs="?", help="sequence directory (frames/, masks/)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", parents=[shared], help="fit a profile from ratio sweeps over a corpus")
    p.add_argument("corpus", nargs="?", help="corpus manifest JSON")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("configure", parents=[shared], help="input composition for one target")
    p.add_argument("source", nargs="?")
    p.add_argument("--target", type=u32, help="target index (default: last frame)")
    p.set_defaults(func=cmd_configure)

    p = sub.add_parser("inpaint", parents=[shared], help="score, compose and inpaint a sequence")
    p.add_argument("source", nargs="?")
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("evaluate", parents=[shared], help="masked PSNR/SSIM against ground truth")
    p.add_argument("truth", help="ground-truth sequence directory")
    p.add_argument("inpainted", help="directory with inpainted frames/")
    p.add_argument("--against", help="second inpainted directory for a paired delta")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[shared], help="PSNR per reference ratio and its change rate")
    p.add_argument("source", nargs="?")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tradeoff", parents=[shared], help="quality versus input-set size")
    p.add_argument("source", nargs="?")
    p.add_argument("--totals", default="5-11", help="range lo-hi or comma list (default 5-11)")
    p.set_defaults(func=cmd_tradeoff)
    return parser


# helpers


def _load(args, source_attr: str = "source"):
    source = getattr(args, source_attr, None)
    if args.synthetic:
        if source:
            raise UsageError("give either a source directory or --synthetic, not both")
        if args.synthetic not in PRESETS:
            raise UsageError(f"unknown synthetic scene {args.synthetic!r}")
        return make_scene(args.synthetic, args.seed)
    if not source:
        raise UsageError("a source directory or --synthetic is required")
    return media_io.load_sequence(media_io.open_sequence(source))


def _total(args) -> int:
    if args.budget_mb is not None:
        if args.total is not None:
            raise UsageError("--total and --budget-mb are mutually exclusive")
        return max_frames(MemoryModel(args.per_frame_mb, args.budget_mb, args.base_mb))
    return DEFAULT_TOTAL if args.total is None else args.total


def _adapter(args) -> InpainterAdapter:
    if args.inpainter == "external" and not args.external_command:
        raise UsageError("--inpainter external needs --external-command")
    return InpainterAdapter(args.inpainter, args.external_command, args.timeout)


def _profile(args):
    return load_profile(args.profile) if args.profile else None


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_manifest(args, out: Path, inputs: list[str]) -> None:
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": args.command,
        "inputs": inputs,
        "profile": args.profile,
        "seed": args.seed,
        "out": str(args.out),
        "flags": flags,
    }
    _write(out / "manifest.json", _json(manifest))


def _inputs(args, *names: str) -> list[str]:
    if args.synthetic:
        return [f"synthetic:{args.synthetic}"]
    return [str(getattr(args, n)) for n in names if getattr(args, n, None)]


# subcommands


def cmd_analyze(args) -> int:
    frames, masks = _load(args)
    profile = _profile(args)
    analyzer = analyze_sequence(frames, masks)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target_index", "x_flow", "x_mask", "x_comb"])
    for f in frames[1:]:
        t = f.index
        if masks[t].mask_size == 0:
            continue
        if profile is None:
            raw = analyzer.raw(t)
            w.writerow([t, repr(raw.flow), repr(raw.mask), ""])
        else:
            s = analyzer.score(t, profile)
            w.writerow([t, repr(s.x_flow), repr(s.x_mask), repr(s.x_comb)])
    out = _out(args)
    _write(out / "scores.csv", buf.getvalue())
    write_manifest(args, out, _inputs(args, "source"))
    return 0


def _corpus(args) -> tuple[str, list[tuple[str, object]]]:
    """(corpus id, [(name, loader)]) from a manifest or synthetic kinds."""
    if args.synthetic:
        if args.corpus:
            raise UsageError("give either a corpus manifest or --synthetic, not both")
        kinds = [k.strip() for k in args.synthetic.split(",") if k.strip()]
        for k in kinds:
            if k not in PRESETS:
                raise UsageError(f"unknown synthetic scene {k!r}")
        videos = [(f"{k}-{i}", (lambda k=k, i=i: make_scene(k, args.seed + i))) for i, k in enumerate(kinds)]
        return f"synthetic:{','.join(kinds)}:{args.seed}", videos
    if not args.corpus:
        raise UsageError("a corpus manifest or --synthetic is required")
    path = Path(args.corpus)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidValue(f"{path} is not valid JSON: {exc}") from exc
    entries = data.get("videos") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise InvalidValue(f"{path}: expected a list of videos")
    videos = []
    for e in entries:
        if isinstance(e, str):
            e = {"path": e}
        vpath = path.parent / e["path"]
        name = e.get("name", Path(e["path"]).name)
        videos.append((name, (lambda p=vpath: media_io.load_sequence(media_io.open_sequence(p)))))
    corpus_id = data.get("corpus_id", path.stem) if isinstance(data, dict) else path.stem
    return corpus_id, videos


def cmd_calibrate(args) -> int:
    corpus_id, videos = _corpus(args)
    if len(videos) < 3:
        raise DegenerateSamples(f"calibration needs at least 3 videos, corpus has {len(videos)}")
    adapter = _adapter(args)
    total = _total(args)

    def one(item):
        name, loader = item
        frames, masks = loader()
        try:
            return name, video_sample(
                frames, masks, adapter, total, args.stride,
                target_step=args.target_step, max_targets=args.max_targets,
            )
        except (VideoTooShort, EmptyMask) as exc:
            raise type(exc)(f"video {name!r}: {exc}") from exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, videos))
    else:
        results = [one(v) for v in videos]

    profile = fit_profile([s.as_tuple() for _, s in results], corpus_id=corpus_id)
    out = _out(args)
    save_profile(profile, out / "profile.json")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["video", "raw_flow", "raw_mask", "x_flow", "x_mask", "change_rate"])
    b = profile.bounds
    for name, s in results:
        xf = normalize(s.raw_flow, b.flow_min, b.flow_max)
        xm = normalize(s.raw_mask, b.mask_min, b.mask_max)
        w.writerow([name, repr(s.raw_flow), repr(s.raw_mask), repr(xf), repr(xm), repr(s.change_rate)])
        _write(out / "sweeps" / f"{name}.csv", s.sweep.to_csv())
    _write(out / "samples.csv", buf.getvalue())
    write_manifest(args, out, _inputs(args, "corpus"))
    print(f"m_flow={profile.m_flow:.6g} m_mask={profile.m_mask:.6g} x0={profile.segments.breakpoints[4]:.6g}")
    return 0


def cmd_configure(args) -> int:
    frames, masks = _load(args)
    profile = _profile(args)
    total = _total(args)
    # the memory model is the source of truth; --total maps to an exact budget
    model = MemoryModel(args.per_frame_mb, args.base_mb + args.per_frame_mb * total, args.base_mb)
    comp, score = configure(frames, masks, profile, model, stride=args.stride, target=args.target)
    record = comp.to_dict()
    if score is not None:
        record.update(x_flow=score.x_flow, x_mask=score.x_mask, x_comb=score.x_comb)
    out = _out(args)
    _write(out / "composition.json", _json(record))
    write_manifest(args, out, _inputs(args, "source"))
    print(json.dumps(record, sort_keys=True))
    return 0


def cmd_inpaint(args) -> int:
    frames, masks = _load(args)
    profile = _profile(args)
    total = _total(args)
    result = run_stream(
        frames, masks, profile=profile, total=total, stride=args.stride,
        force_ratio=args.force_ratio, adapter=_adapter(args), jobs=max(args.jobs, 1),
    )
    out = _out(args)
    mask_map = {m.index: m for m in masks}
    media_io.write_sequence(out, result.outputs.values(), [mask_map[t] for t in result.outputs])
    if args.synthetic:
        media_io.write_sequence(out / "input", frames, masks)
    _write(out / "compositions.json", _json(result.composition_records()))
    write_manifest(args, out, _inputs(args, "source"))
    return 0


def cmd_evaluate(args) -> int:
    truth_frames, truth_masks = media_io.load_sequence(media_io.open_sequence(args.truth))
    truth = {f.index: f for f in truth_frames}
    masks = {m.index: m for m in truth_masks}
    first = media_io.read_frames_dir(args.inpainted)
    if not set(first) <= set(truth):
        raise_mismatch(first, truth)
    indices = sorted(first)
    report = evaluate_run(truth, first, masks, indices)
    out = _out(args)
    _write(out / "metrics.csv", report.to_csv())
    print(f"mean_psnr={report.mean_psnr:.4f} mean_ssim={report.mean_ssim:.6f}")
    if args.against:
        second = media_io.read_frames_dir(args.against)
        if set(second) != set(first):
            raise_mismatch(second, first)
        delta = PairedDelta(report, evaluate_run(truth, second, masks, indices))
        _write(out / "delta.csv", delta.to_csv())
        print(f"delta_psnr={delta.delta_psnr:.4f} delta_ssim={delta.delta_ssim:.6f}")
    write_manifest(args, out, [args.truth, args.inpainted] + ([args.against] if args.against else []))
    return 0


def raise_mismatch(a: dict, b: dict) -> None:
    raise DimensionMismatch(f"frame sets differ: {len(a)} frames vs {len(b)} frames")


def cmd_sweep(args) -> int:
    frames, masks = _load(args)
    total = _total(args)
    sample = video_sample(
        frames, masks, _adapter(args), total, args.stride,
        target_step=args.target_step, max_targets=args.max_targets, jobs=max(args.jobs, 1),
    )
    rate = signed_max_change_rate(sample.sweep)
    out = _out(args)
    sample.sweep.save(out / "sweep.csv")
    summary = {
        "change_rate": rate,
        "raw_flow": sample.raw_flow,
        "raw_mask": sample.raw_mask,
        "targets": sample.targets,
    }
    _write(out / "summary.json", _json(summary))
    write_manifest(args, out, _inputs(args, "source"))
    print(f"change_rate={rate:.6f}")
    return 0


def _parse_totals(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            totals = list(range(lo, hi + 1))
        else:
            totals = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --totals {text!r}") from None
    if not totals or min(totals) < 2:
        raise UsageError(f"--totals must be >= 2: {text!r}")
    return totals


def cmd_tradeoff(args) -> int:
    frames, masks = _load(args)
    totals = _parse_totals(args.totals)
    targets = None
    if args.max_targets or args.target_step > 1:
        ts = [t for t in range(max(totals), len(frames), max(args.target_step, 1)) if masks[t].mask_size > 0]
        targets = ts[: args.max_targets] if args.max_targets else ts
    rows = memory_tradeoff(
        frames, masks, _profile(args), totals, args.per_frame_mb, args.base_mb, args.stride,
        _adapter(args), targets=targets,
    )
    out = _out(args)
    _write(out / "tradeoff.csv", rows_to_csv(rows, TRADEOFF_HEADER))
    write_manifest(args, out, _inputs(args, "source"))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dynacompose: error: {exc}", file=sys.stderr)
        return 1
    except DynacomposeError as exc:
        print(f"dynacompose: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
