"""Command-line interface: generate, estimate, eval, render.

Exit codes: 0 success, 2 usage error (argparse), 1 runtime failure. Every
subcommand is reproducible from its flags plus seed; flag values override
config-file values, which override built-in defaults, and the effective
configuration is echoed into the outputs for provenance.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import ConfigError
from .estimators import ALPHA_CLAMP_DEFAULT
from .imaging import DEFAULT_MIN_SAMPLES, DEFAULT_PATCH, ParametricImage, patch_map
from .mapfile import load_manifest, read_map, render_pgm, write_map
from .metrics import MetricReport, improvement_percent, map_correlation, rrmse_detail
from .phantom import GenerationConfig, generate_dataset

PRED_MANIFEST = "predictions.json"


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"expected HxW, got {text!r}") from None
    return h, w


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"expected lo,hi got {text!r}") from None
    return lo, hi


def _parse_splits(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated counts, got {text!r}") from None


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return payload.get("config", payload)


def _generation_config(args) -> GenerationConfig:
    base = _load_config_file(args.config)
    known = {f.name for f in fields(GenerationConfig)}
    kwargs = {}
    for key, value in base.items():
        if key in known:
            kwargs[key] = tuple(value) if isinstance(value, list) else value
    if args.size:
        kwargs["height"], kwargs["width"] = _parse_size(args.size)
    if args.log10_alpha_range:
        kwargs["log10_alpha_range"] = _parse_range(args.log10_alpha_range)
    if args.sigma_range:
        kwargs["sigma_range"] = _parse_range(args.sigma_range)
    if args.truth_m:
        kwargs["truth_m_mapping"] = args.truth_m
    return GenerationConfig(**kwargs)


def cmd_generate(args) -> int:
    config = _generation_config(args)
    splits = _parse_splits(args.split) if args.split else None
    manifest = generate_dataset(
        config, args.count, args.seed, args.out, splits=splits, jobs=args.jobs
    )
    counts = {}
    for rec in manifest.images:
        counts[rec.split] = counts.get(rec.split, 0) + 1
    print(f"wrote {len(manifest.images)} images to {args.out} "
          f"({', '.join(f'{k}={v}' for k, v in counts.items())})")
    return 0


def _estimate_one(job) -> str:
    in_path, out_path, patch, estimator, border, min_samples, clamp, stride = job
    data = read_map(in_path)
    maps = patch_map(
        data.channel("envelope"),
        patch=patch,
        estimator=estimator,
        border=border,
        min_samples=min_samples,
        clamp=clamp,
        stride=stride,
    )
    write_map(out_path, {kind: img.values for kind, img in maps.items()})
    return str(out_path)


def cmd_estimate(args) -> int:
    patch = _parse_size(args.patch)
    clamp = _parse_range(args.clamp) if args.clamp else ALPHA_CLAMP_DEFAULT
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    if args.input:
        in_path = Path(args.input)
        jobs.append((in_path, out_dir / in_path.name, patch, args.estimator, args.border,
                     args.min_samples, clamp, args.stride))
        source = str(in_path)
    elif args.dataset:
        manifest = load_manifest(args.dataset, validate=False)
        records = manifest.split_records(args.split)
        if not records:
            raise ConfigError(f"no images in split {args.split!r}")
        for rec in records:
            in_path = Path(args.dataset) / rec.envelope
            jobs.append((in_path, out_dir / Path(rec.envelope).name, patch, args.estimator,
                         args.border, args.min_samples, clamp, args.stride))
        source = str(args.dataset)
    else:
        raise ConfigError("need --input or --dataset")
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            written = list(pool.map(_estimate_one, jobs, chunksize=1))
    else:
        written = [_estimate_one(job) for job in jobs]
    provenance = {
        "toolkit_version": __version__,
        "config": {
            "source": source,
            "split": args.split,
            "patch": list(patch),
            "estimator": args.estimator,
            "border": args.border,
            "min_samples": args.min_samples,
            "clamp": list(clamp),
            "stride": args.stride,
        },
        "files": sorted(Path(p).name for p in written),
    }
    (out_dir / PRED_MANIFEST).write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(written)} parametric map files to {out_dir}")
    return 0


def _truth_channel(kind: str) -> str:
    return {"log10_alpha": "log10_alpha", "m": "m", "omega": "omega"}[kind]


def cmd_eval(args) -> int:
    dataset = Path(args.dataset)
    pred_dir = Path(args.pred)
    manifest = load_manifest(dataset, validate=False)
    records = manifest.split_records(args.split)
    if not records:
        raise ConfigError(f"no images in split {args.split!r}")
    report = MetricReport(denominator=args.denominator)
    report.config = {
        "dataset": str(dataset),
        "predictions": str(pred_dir),
        "split": args.split,
        "denominator": args.denominator,
        "zero_tol": args.zero_tol,
        "toolkit_version": __version__,
    }
    rows = []
    examples = []
    scored = 0
    for rec in records:
        pred_path = pred_dir / Path(rec.envelope).name
        if not pred_path.exists():
            continue
        truth = read_map(dataset / rec.truth)
        pred = read_map(pred_path)
        row = {"index": rec.index, "split": rec.split}
        kinds = [k for k in ("log10_alpha", "m") if k in pred.channels]
        for kind in kinds:
            img = ParametricImage.from_values(pred.channels[kind], kind)
            value, excluded = rrmse_detail(img, truth.channel(_truth_channel(kind)),
                                           denominator=args.denominator,
                                           zero_tol=args.zero_tol)
            report.add(kind, value, excluded)
            row[f"rrmse_{kind}"] = value
            row[f"excluded_{kind}"] = excluded
        if "log10_alpha" in pred.channels and "m" in pred.channels:
            img_a = ParametricImage.from_values(pred.channels["log10_alpha"], "log10_alpha")
            img_m = ParametricImage.from_values(pred.channels["m"], "m")
            try:
                corr = map_correlation(img_a, img_m)
            except Exception:
                corr = float("nan")
            report.correlations.append(corr)
            row["alpha_m_correlation"] = corr
            if len(examples) < 3:
                examples.append((rec, truth, pred))
        rows.append(row)
        scored += 1
    if scored == 0:
        raise ConfigError(f"no predictions found in {pred_dir} for split {args.split!r}")

    if args.baseline:
        baseline = json.loads(Path(args.baseline).read_text())
        base_params = baseline.get("parameters", {})
        for kind in report.per_image:
            if kind in base_params:
                mean, _ = report.mean_std(kind)
                report.improvements[kind] = improvement_percent(
                    base_params[kind]["rrmse_mean"], mean
                )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = report.summary()
    (out_dir / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    fieldnames = sorted({key for row in rows for key in row})
    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    if args.figures:
        from . import figures

        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        save_paths = [figures.save_rrmse_histogram(report.per_image, fig_dir / "rrmse_hist.png")]
        for rec, truth, pred in examples:
            panels = []
            for kind in ("log10_alpha", "m"):
                if kind in pred.channels:
                    panels.append((f"truth {kind}", truth.channel(_truth_channel(kind))))
                    panels.append((f"pred {kind}", pred.channels[kind]))
            if panels:
                save_paths.append(
                    figures.save_comparison_figure(
                        panels, fig_dir / f"maps_{rec.index:05d}.png"
                    )
                )
        if examples and "log10_alpha" in examples[0][2].channels and "m" in examples[0][2].channels:
            _, _, pred0 = examples[0]
            save_paths.append(
                figures.save_correlation_scatter(
                    ParametricImage.from_values(pred0.channels["log10_alpha"], "log10_alpha"),
                    ParametricImage.from_values(pred0.channels["m"], "m"),
                    fig_dir / "alpha_m_scatter.png",
                )
            )
        print(f"wrote {len(save_paths)} figures to {fig_dir}")

    for kind in report.per_image:
        mean, std = report.mean_std(kind)
        line = f"rrmse[{kind}] = {mean:.4f} +/- {std:.4f} over {scored} images"
        if kind in report.improvements:
            line += f" (improvement {report.improvements[kind]:.1f}%)"
        print(line)
    if report.correlations:
        corr = np.asarray([c for c in report.correlations if np.isfinite(c)])
        if corr.size:
            print(f"alpha-m correlation = {corr.mean():.4f} +/- {corr.std(ddof=0):.4f}")
    print(f"report written to {out_dir}")
    return 0


def cmd_render(args) -> int:
    data = read_map(args.input)
    name = args.channel or next(iter(data.channels))
    values = data.channel(name)
    if args.range:
        lo, hi = _parse_range(args.range)
    else:
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            raise ConfigError("map has no finite pixels; pass --range")
        lo, hi = float(finite.min()), float(finite.max())
        if lo == hi:
            hi = lo + 1.0
    out = Path(args.out)
    render_pgm(values, (lo, hi), out)
    print(f"rendered {name} to {out} with range [{lo:g}, {hi:g}]")
    if args.png:
        from . import figures

        png = out.with_suffix(".png")
        figures.save_map_figure(values, png, title=name, value_range=(lo, hi))
        print(f"rendered {name} to {png}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quspeckle",
        description="Synthetic HK speckle phantoms, patch-based QUS parametric images, "
                    "and evaluation metrics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a phantom dataset")
    p.add_argument("--count", type=int, required=True, help="number of images")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--size", help="image size HxW (default 256x128)")
    p.add_argument("--split", help="comma-separated train,val[,test] counts; remainder is test")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output-invariant)")
    p.add_argument("--config", help="JSON config file (manifest schema); flags override it")
    p.add_argument("--log10-alpha-range", dest="log10_alpha_range", help="lo,hi")
    p.add_argument("--sigma-range", dest="sigma_range", help="lo,hi")
    p.add_argument("--truth-m", dest="truth_m", choices=["mle", "moment"],
                   help="ground-truth m mapping (default mle)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="reconstruct parametric maps with the patch baseline")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="dataset directory (reads its manifest)")
    src.add_argument("--input", help="single envelope map file")
    p.add_argument("--split", default=None, help="restrict to one split of the dataset")
    p.add_argument("--out", required=True, help="output directory for parametric map files")
    p.add_argument("--patch", default=f"{DEFAULT_PATCH[0]}x{DEFAULT_PATCH[1]}",
                   help="patch size HxW (default 32x16)")
    p.add_argument("--estimator", choices=["alpha", "nakagami", "both"], default="both")
    p.add_argument("--border", choices=["shrink", "mirror"], default="shrink")
    p.add_argument("--min-samples", dest="min_samples", type=int, default=DEFAULT_MIN_SAMPLES,
                   help=f"window validity threshold (default {DEFAULT_MIN_SAMPLES})")
    p.add_argument("--clamp", help="alpha clamp lo,hi (default 0.05,100)")
    p.add_argument("--stride", type=int, default=1, help="estimation stride (default 1, dense)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output-invariant)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("eval", help="score predictions against dataset ground truth")
    p.add_argument("--dataset", required=True, help="dataset directory with ground truth")
    p.add_argument("--pred", required=True, help="directory of prediction map files")
    p.add_argument("--split", default=None, help="restrict to one split")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--baseline", help="report.json of a baseline run for improvement %%")
    p.add_argument("--denominator", choices=["per-pixel", "global-mean"], default="per-pixel")
    p.add_argument("--zero-tol", dest="zero_tol", type=float, default=1e-12,
                   help="truth-zero exclusion tolerance (default 1e-12)")
    p.add_argument("--figures", action="store_true", help="also render matplotlib figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render a map channel to PGM (optionally PNG)")
    p.add_argument("--input", required=True, help="map file")
    p.add_argument("--out", required=True, help="output PGM path")
    p.add_argument("--channel", help="channel name (default: first channel)")
    p.add_argument("--range", help="display range lo,hi (default: data range)")
    p.add_argument("--png", action="store_true", help="also write a matplotlib PNG")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface runtime failures as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
