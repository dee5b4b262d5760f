"""Command-line interface.

Subcommands: simulate, pick, denoise, eval, render, tune-lambda.
Exit status is 0 on success, 1 for invalid input or parameters and 2 for
unreadable or malformed files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .batch import pick_dataset, tune_lambda_dataset
from .config import RunConfig
from .data import DatasetGrid
from .errors import FormatError, FramePickError, UnattainableTargetError
from .evaluation import evaluate_many
from .formats import (
    MAGIC,
    read_dataset,
    read_peak_lists,
    read_spectrum_csv,
    write_dataset,
    write_json,
    write_peak_lists,
)
from .peakpick import Peak, extract_peaks, tune_lambda
from .render import render_mz_image, report_figure
from .synth import PhantomSpec, SynthSpec, synth_phantom, synth_spectrum

log = logging.getLogger("framepick")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

DENOISE_NOTE = (
    "The output holds the indicator z for every spot. Peak intensities in z "
    "do not have any relation to peak intensities in the original spectrum; "
    "use z to locate peaks or to display m/z images, not for quantitation."
)


class UsageError(FramePickError, ValueError):
    """Bad command line (unknown flag, missing argument)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# pipeline flags map onto RunConfig fields; None means "not given"
PIPELINE_FLAGS = {
    "slice_len": "slice_len",
    "overlap": "overlap",
    "frame": "frame",
    "window_width": "window_width",
    "time_step": "time_step",
    "freq_step": "freq_step",
    "fmin": "fmin",
    "bw": "bw",
    "bins": "bins",
    "lam": "base_lambda",
    "lambda_mode": "lambda_mode",
    "target": "target",
    "spatial": "spatial",
    "kernel_size": "kernel_size",
    "baseline": "baseline",
    "tic": "tic",
    "min_score": "min_score",
    "min_separation": "min_separation",
    "threads": "threads",
    "seed": "seed",
}


def _add_pipeline_flags(p):
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="JSON config, or any output file embedding one")
    g.add_argument("--slice-len", type=int, help="slice length M (default 60)")
    g.add_argument("--overlap", type=float, help="slice overlap O in (0, 1) (default 0.5)")
    g.add_argument("--frame", choices=("gabor", "filterbank"), help="frame type (default gabor)")
    g.add_argument("--window-width", type=int, help="Hann window width for gabor (default 20)")
    g.add_argument("--time-step", type=int, help="gabor time step a (default 1)")
    g.add_argument("--freq-step", type=int, help="gabor channel step b (default 1)")
    g.add_argument("--fmin", type=float, help="lowest filterbank centre, cycles/sample")
    g.add_argument("--bw", type=float, help="filterbank bandwidth at fmin, cycles/sample")
    g.add_argument("--bins", type=int, help="filterbank channels per octave")
    g.add_argument("--lambda", dest="lam", type=float, help="base lambda (default 1.5e-3)")
    g.add_argument("--lambda-mode", choices=("fixed", "noise_adaptive", "target_count"))
    g.add_argument("--target", type=int, help="peak count for --lambda-mode target_count")
    g.add_argument("--spatial", help="none | average | gaussian[:sigma] | disk[:r] | median")
    g.add_argument("--kernel-size", type=int, help="odd neighbourhood side (default 3)")
    g.add_argument("--baseline", help="none | tophat[:W]")
    g.add_argument("--tic", action="store_const", const=True, help="TIC-normalize spectra")
    g.add_argument("--min-score", type=float, help="minimum indicator value of a peak")
    g.add_argument("--min-separation", type=int, help="minimum peak distance in bins")
    g.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    g.add_argument("--seed", type=int, help="random seed recorded with the outputs")


def _load_config(path):
    raw = Path(path).read_bytes()
    if raw.startswith(MAGIC):
        start = len(MAGIC)
        doc = json.loads(raw[start:raw.index(b"\n", start)])
    else:
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise FormatError(f"bad config JSON in {path}: {exc}") from None
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise FormatError(f"{path} holds no config object")
    return RunConfig.from_dict(doc)


def build_config(args):
    """RunConfig from --config (if any) overlaid with explicit flags."""
    cfg = _load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for flag, name in PIPELINE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.lambda_mode != "target_count" and getattr(args, "target", None) is None:
        cfg.target = None
    return cfg.validate()


def _read_input(path):
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return read_dataset(path)
    spec = read_spectrum_csv(path)
    return DatasetGrid((1, 1), spec.mz, spec.intensity[None, :]), {}


def _run_pipeline(args):
    cfg = build_config(args)
    grid, _ = _read_input(args.input)
    spatial = cfg.neighborhood()
    if spatial is not None and grid.n_spots < 2:
        warnings.warn("--spatial needs more than one spectrum; using basic mode")
        cfg.spatial = "none"
        spatial = None
    res = pick_dataset(
        grid, cfg.slice_config(), cfg.build_frame(), cfg.policy(), spatial=spatial,
        preprocess=cfg.preprocess, threads=cfg.threads,
        min_score=cfg.min_score, min_separation_bins=cfg.min_separation,
    )
    for e in res.errors:
        print(f"warning: spot ({e.row}, {e.col}): {e.kind}: {e.message}", file=sys.stderr)
    return cfg, grid, res


def _lambda_list(res):
    return [None if np.isnan(v) else float(v) for v in res.lambdas]


def cmd_pick(args):
    cfg, grid, res = _run_pipeline(args)
    meta = {"errors": [e.to_dict() for e in res.errors], "lambdas": _lambda_list(res)}
    peaks = [
        extract_peaks(z, grid.mz, cfg.min_score, cfg.min_separation) for z in res.indicators
    ]
    write_peak_lists(args.peaks, grid.coords(), peaks, cfg.to_dict(), meta)
    if args.output:
        write_dataset(args.output, grid.with_intensities(res.indicators), cfg.to_dict(),
                      {"content": "indicator", "note": DENOISE_NOTE, **meta})
    if args.report:
        _write_report(Path(args.report), cfg, grid, res, peaks)
    print(f"{grid.n_spots} spots, {sum(map(len, peaks))} peaks, {len(res.errors)} failed")
    return EXIT_OK


def _write_report(outdir, cfg, grid, res, peaks, n_figures=4):
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "summary.tsv", "w") as fh:
        fh.write("row\tcol\tn_peaks\tlambda\ttop_mz\ttop_score\n")
        for (r, c), pk, lam in zip(grid.coords(), peaks, _lambda_list(res)):
            top = pk[0] if pk else None
            cells = [r, c, len(pk), "" if lam is None else repr(float(lam)),
                     "" if top is None else repr(float(top.mz)),
                     "" if top is None else repr(float(top.score))]
            fh.write("\t".join(map(str, cells)) + "\n")
    for i, (r, c) in enumerate(grid.coords()[:n_figures]):
        report_figure(outdir / f"spot_{r}_{c}.png", grid.mz, grid.intensities[i],
                      res.indicators[i], peaks[i], title=f"spot ({r}, {c})")
    write_json(outdir / "config.json", {"config": cfg.to_dict()})


def cmd_denoise(args):
    cfg, grid, res = _run_pipeline(args)
    meta = {"content": "indicator", "note": DENOISE_NOTE,
            "errors": [e.to_dict() for e in res.errors], "lambdas": _lambda_list(res)}
    write_dataset(args.output, grid.with_intensities(res.indicators), cfg.to_dict(), meta)
    print(f"wrote indicators of {grid.n_spots} spots to {args.output}")
    return EXIT_OK


def cmd_eval(args):
    det_coords, detected, det_doc = read_peak_lists(args.detected)
    ref_coords, reference, _ = read_peak_lists(args.truth)
    by_coord = dict(zip(ref_coords, reference))
    missing = [c for c in det_coords if c not in by_coord]
    if missing or len(det_coords) != len(ref_coords):
        raise FramePickError(f"detected and truth cover different spots (e.g. {missing[:3]})")
    report = evaluate_many(detected, [by_coord[c] for c in det_coords], args.tol)
    print(report.format())
    if args.json:
        config = dict(det_doc.get("config") or {})
        config["match_tol"] = args.tol
        write_json(args.json, {"config": config, "report": report.to_dict()})
    return EXIT_OK


def cmd_render(args):
    grid, header = read_dataset(args.input)
    if args.mz is not None:
        lo = int(np.argmin(np.abs(grid.mz - args.mz[0])))
        hi = int(np.argmin(np.abs(grid.mz - args.mz[-1])))
        bins = (lo, hi)
    elif args.bin is not None:
        bins = (args.bin[0], args.bin[-1])
    else:
        raise FramePickError("give --bin or --mz")
    render_mz_image(grid, bins, args.output, args.hotspot, fmt=args.format)
    write_json(str(args.output) + ".json", {
        "config": header.get("config", {}),
        "render": {"source": str(args.input), "bins": list(bins), "hotspot": args.hotspot},
    })
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_tune(args):
    cfg = build_config(args)
    grid, _ = _read_input(args.input)
    mode = "noise_adaptive" if cfg.lambda_mode == "noise_adaptive" else "fixed"
    extract = {"min_score": cfg.min_score, "min_separation_bins": cfg.min_separation,
               "mode": mode}
    sc, frame = cfg.slice_config(), cfg.build_frame()
    out = {"config": cfg.to_dict(), "target": args.target_peaks, "mode": mode}
    if args.scope == "global":
        lam = tune_lambda_dataset(grid, sc, frame, args.target_peaks,
                                  preprocess=cfg.preprocess, **extract)
        out.update(scope="global", lambda_=lam)
        print(f"lambda {lam!r}")
    else:
        rows = []
        for (r, c), f in zip(grid.coords(), grid.intensities):
            try:
                lam = tune_lambda(cfg.preprocess(f), sc, frame, args.target_peaks, **extract)
                rows.append({"row": r, "col": c, "lambda": lam})
            except UnattainableTargetError as exc:
                rows.append({"row": r, "col": c, "lambda": None, "error": str(exc),
                             "max_count": exc.max_count})
            except FramePickError as exc:
                rows.append({"row": r, "col": c, "lambda": None, "error": str(exc)})
            print(f"{r}\t{c}\t{rows[-1]['lambda']}")
        out.update(scope="per_spot", spots=rows)
    if "lambda_" in out:
        out["lambda"] = out.pop("lambda_")
    if args.output:
        write_json(args.output, out)
    return EXIT_OK


def cmd_simulate(args):
    cfg = RunConfig(seed=args.seed)
    if args.kind == "spectra":
        spectra, truths = [], []
        for i in range(args.n):
            spec = SynthSpec(length=args.length, n_peaks=args.n_peaks,
                             baseline_scale=args.baseline_scale, noise_sigma0=args.noise,
                             noise_decay=args.noise_decay, seed=args.seed + i)
            s, truth = synth_spectrum(spec)
            spectra.append(s.intensity)
            truths.append(truth)
        grid = DatasetGrid.from_spectra(spectra, s.mz)
        meta = {"generator": "spectra", "spec": SynthSpec(
            length=args.length, n_peaks=args.n_peaks, baseline_scale=args.baseline_scale,
            noise_sigma0=args.noise, noise_decay=args.noise_decay, seed=args.seed).to_dict(),
            "seeds": [args.seed + i for i in range(args.n)]}
    else:
        pspec = PhantomSpec(grid_dims=(args.rows, args.cols), length=args.length,
                            noise_sigma=args.noise, seed=args.seed)
        grid, occ = synth_phantom(pspec)
        truths = []
        for r, c in grid.coords():
            truths.append([Peak(b, float(grid.mz[b]), 1.0) for b, m in occ.items() if m[r, c]])
        meta = {"generator": "phantom", "spec": pspec.to_dict()}
    write_dataset(args.output, grid, cfg.to_dict(), meta)
    write_peak_lists(args.truth, grid.coords(), truths, cfg.to_dict(), meta)
    print(f"wrote {grid.n_spots} spectra to {args.output} and truth to {args.truth}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="framepick", description="Peak picking with sparse frame multipliers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="write a synthetic dataset and its truth peaks")
    s.add_argument("--kind", choices=("spectra", "phantom"), default="spectra")
    s.add_argument("-n", type=int, default=10, help="number of spectra (kind=spectra)")
    s.add_argument("--length", type=int, default=None, help="bins per spectrum")
    s.add_argument("--n-peaks", type=int, default=20)
    s.add_argument("--baseline-scale", type=float, default=0.0, help="0 disables the baseline")
    s.add_argument("--noise", type=float, default=None, help="noise std (at bin 0)")
    s.add_argument("--noise-decay", type=float, default=0.0)
    s.add_argument("--rows", type=int, default=40)
    s.add_argument("--cols", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True, help="dataset container")
    s.add_argument("--truth", required=True, help="truth peak list JSON")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("pick", help="detect peaks in every spectrum")
    k.add_argument("input", help="dataset container or mz,intensity CSV")
    k.add_argument("--peaks", required=True, help="output peak list JSON")
    k.add_argument("-o", "--output", help="also write the indicators as a dataset")
    k.add_argument("--report", help="directory for a TSV summary and figures")
    _add_pipeline_flags(k)
    k.set_defaults(func=cmd_pick)

    d = sub.add_parser("denoise", help="write the indicator z of every spectrum",
                       description=DENOISE_NOTE)
    d.add_argument("input", help="dataset container or mz,intensity CSV")
    d.add_argument("-o", "--output", required=True, help="output dataset of indicators")
    _add_pipeline_flags(d)
    d.set_defaults(func=cmd_denoise)

    e = sub.add_parser("eval", help="score detected peaks against truth")
    e.add_argument("detected")
    e.add_argument("truth")
    e.add_argument("--tol", type=float, default=0.01, help="relative m/z tolerance")
    e.add_argument("--json", help="machine-readable report")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="m/z image of a dataset")
    r.add_argument("input")
    r.add_argument("--bin", type=int, nargs="+", help="bin index or lo hi")
    r.add_argument("--mz", type=float, nargs="+", help="m/z value or lo hi")
    r.add_argument("--hotspot", type=float, default=0.0, help="fraction of top values to clip")
    r.add_argument("--format", choices=("pgm", "png"))
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_render)

    t = sub.add_parser("tune-lambda", help="lambda giving a target peak count")
    t.add_argument("input")
    t.add_argument("--target-peaks", type=int, required=True)
    t.add_argument("--scope", choices=("per_spot", "global"), default="per_spot")
    t.add_argument("-o", "--output", help="JSON report")
    _add_pipeline_flags(t)
    t.set_defaults(func=cmd_tune)
    return p


def _fill_simulate_defaults(args):
    if args.command != "simulate":
        return
    if args.length is None:
        args.length = 15000 if args.kind == "spectra" else PhantomSpec.length
    if args.noise is None:
        args.noise = SynthSpec.noise_sigma0 if args.kind == "spectra" else PhantomSpec.noise_sigma


def main(argv=None):
    logging.basicConfig(format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        _fill_simulate_defaults(args)
        return args.func(args)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FramePickError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
