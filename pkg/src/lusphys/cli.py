"""Command-line entry point.

Every run prints its effective configuration (all parameters, defaults
included) as a single JSON line on stderr. Feeding that JSON back through
``--replay`` re-executes the identical command.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, energymaps, evaluation, localphase, phantom, scorer
from .fusion import fuse
from .imagecore import (
    FORMAT_VERSION,
    ImageError,
    ImageFormatError,
    load_image,
    normalize,
    save_image,
    write_atomic,
)
from .pipeline import FeatureConfig, compute_features
from .rectify import EdgeSegment, derive_geometry, detect_edges, estimate_apex, rectify

REPORT_SCHEMA = "1"
IMAGE_SUFFIXES = {".pgm", ".pfm"}


class UsageError(Exception):
    pass


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_json(path, obj):
    write_atomic(path, _dump(obj).encode("utf-8"))


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------


def _edges_arg(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"edges must be 8 comma-separated numbers, got {text!r}")
    if len(vals) != 8:
        raise argparse.ArgumentTypeError(f"edges need 8 numbers, got {len(vals)}")
    return vals


def _add_geometry(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--edges", type=_edges_arg, metavar="R0,C0,R1,C1,R0',C0',R1',C1'",
                   help="left then right fan edge endpoints (row, col)")
    g.add_argument("--auto-edges", action="store_true", help="fit fan edges from the image support")
    g.add_argument("--identity", action="store_true", help="linear probe: no rectification")
    p.add_argument("--content-threshold", type=float, default=0.0,
                   help="intensity above which a pixel counts as fan content")
    p.add_argument("--out-rows", type=int, default=None)
    p.add_argument("--out-cols", type=int, default=None)


def _add_features(p):
    p.add_argument("--wavelength", type=float, default=32.0)
    p.add_argument("--sigma-ratio", type=float, default=0.55)
    p.add_argument("--sigma-divisor", type=float, default=4.0)
    p.add_argument("--literal-shadow", action="store_true",
                   help="shadow summand ignores depth index (SH == I), for auditing")


def _feature_config(args):
    return FeatureConfig(
        localphase.LogGaborParams(args.wavelength, args.sigma_ratio),
        energymaps.ShadowParams(args.sigma_divisor),
        args.literal_shadow,
    )


def _scorer_config(args):
    return scorer.ScorerConfig.load(args.thresholds) if args.thresholds else scorer.ScorerConfig()


def _rectify_from_args(img, args):
    if args.identity or (args.edges is None and not args.auto_edges):
        return rectify(img, None)
    if args.edges is not None:
        e = args.edges
        edges = (EdgeSegment(e[0:2], e[2:4]), EdgeSegment(e[4:6], e[6:8]))
    else:
        edges = detect_edges(img, args.content_threshold)
    apex = estimate_apex(*edges)
    geo = derive_geometry(apex, img, edges, args.content_threshold)
    return rectify(img, geo, args.out_rows, args.out_cols)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_rectify(args):
    img = load_image(args.input)
    save_image(_rectify_from_args(img, args), args.out)


def cmd_features(args):
    outputs = {"lpi": args.lpi, "ibs": args.ibs, "shadow": args.shadow, "shibs": args.shibs}
    if not any(outputs.values()):
        raise UsageError("features: give at least one of --lpi, --ibs, --shadow, --shibs")
    maps = compute_features(load_image(args.input), _feature_config(args))
    for name, path in outputs.items():
        if path:
            save_image(getattr(maps, name), path)


def cmd_fuse(args):
    img = normalize(load_image(args.input))
    save_image(fuse(img, load_image(args.lpi), load_image(args.shibs)), args.out)


def cmd_phantom(args):
    if args.randomize:
        spec = phantom.random_spec(args.severity, args.rows, args.cols, args.seed, args.speckle)
    else:
        spec = phantom.class_spec(args.severity, args.rows, args.cols, args.seed, args.speckle)
    img, truth = phantom.generate(spec)
    save_image(img, args.out)
    if args.truth:
        _write_json(args.truth, {"spec": spec.to_dict(), "truth": truth.to_dict()})


def _frame_report(cls, fs, map_paths, config):
    return {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "class": int(cls),
        "class_name": cls.name,
        "summary": fs.to_dict(),
        "notes": {"consolidation_score": "artifact-defined proxy, not a C-line detector"},
        "maps": map_paths,
        "config": config,
    }


def _process_frame(path, args, out_dir, config):
    """Run one frame end to end; write maps into ``out_dir`` if given."""
    img = load_image(path)
    rect = _rectify_from_args(img, args)
    maps = compute_features(rect, _feature_config(args))
    sc = _scorer_config(args)
    fs = scorer.summarize(maps, sc)
    cls = scorer.classify(fs, sc)
    map_paths = {name: None for name, _ in maps.items()}
    if out_dir is not None:
        out_dir = Path(out_dir)
        for name, arr in maps.items():
            target = out_dir / f"{name}.pfm"
            save_image(arr, target)
            map_paths[name] = str(target)
    return _frame_report(cls, fs, map_paths, config)


def cmd_classify(args, config):
    report = _process_frame(args.input, args, args.maps_dir, config)
    _write_json(args.report, report)


def _pipeline_job(job):
    path, args, out_dir, config = job
    report = _process_frame(path, args, out_dir, config)
    _write_json(Path(out_dir) / "report.json", report)
    return str(path), report["class"]


def cmd_pipeline(args, config):
    src = Path(args.input)
    out = Path(args.out_dir)
    if not src.is_dir():
        _pipeline_job((src, args, out, config))
        return
    frames = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not frames:
        raise ImageFormatError(f"no .pgm/.pfm frames in {src}")
    jobs = [(p, args, out / p.stem, config) for p in frames]
    workers = args.workers or os.cpu_count() or 1
    if workers == 1:
        results = [_pipeline_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pipeline_job, jobs))
    _write_json(out / "batch.json", {"schema": REPORT_SCHEMA,
                                     "frames": [{"input": p, "class": c} for p, c in results],
                                     "config": config})


def _load_json(path):
    return json.loads(Path(path).read_text())


def _array_or_image(value):
    if isinstance(value, str):
        return load_image(value)
    return np.asarray(value, dtype=float)


def cmd_eval(args):
    if args.table2_check:
        rows = evaluation.table2_check(args.n_per_class)
        return {"table2_check": rows, "all_pass": all(r["pass"] for r in rows)}
    if args.eval_command is None:
        raise UsageError("eval: choose a subcommand (loss, similarity, ci, metrics) or --table2-check")
    if args.eval_command == "ci":
        half, lo, hi = evaluation.acc_ci95(args.acc, args.n)
        return {"acc": args.acc, "n": args.n, "half_width": half, "lo": lo, "hi": hi}
    data = _load_json(args.input)
    if args.eval_command == "loss":
        if "y_true" in data:
            y_true = data["y_true"]
        else:
            y_true = evaluation.one_hot(data["true_class"]).tolist()
        params = evaluation.LossParams(args.lambda1, args.lambda2)
        loss = evaluation.lusnet_loss(_array_or_image(data["x"]), _array_or_image(data["y"]),
                                      y_true, data["y_hat"], params)
        return {"loss": loss, "lambda1": params.lambda1, "lambda2": params.lambda2}
    if args.eval_command == "similarity":
        triples = data["triples"] if isinstance(data, dict) else data
        return {"similarity_score": evaluation.similarity_score(triples), "count": len(triples)}
    per_class, confusion = evaluation.class_metrics(data["pred"], data["truth"])
    return {"per_class": {str(k): v for k, v in per_class.items()}, "confusion": confusion}


def format_table2_grid(rows):
    lines = ["  ACC  printed  computed  rounded  cells  result"]
    for r in rows:
        lines.append(
            f"{r['acc']:5.2f}  {r['printed']:7.2f}  {r['half_width']:8.4f}  {r['rounded']:7.2f}"
            f"  {r['cells']:5d}  {'PASS' if r['pass'] else 'FAIL'}"
        )
    failed = sum(not r["pass"] for r in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} distinct (ACC, +/-) pairs reproduced")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lusphys", description="Lung ultrasound acoustic feature maps and severity scoring."
    )
    parser.add_argument("--version", action="version",
                        version=f"lusphys {__version__} (image format {FORMAT_VERSION}, "
                                f"report schema {REPORT_SCHEMA})")
    parser.add_argument("--replay", metavar="CONFIG.json",
                        help="re-run a command from its effective-config JSON")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("rectify", help="sector to rectangular scan conversion")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_geometry(p, required=True)

    p = sub.add_parser("features", help="LPI, IBS, shadow and SHIBS maps")
    p.add_argument("--in", dest="input", required=True)
    for name in ("lpi", "ibs", "shadow", "shibs"):
        p.add_argument(f"--{name}")
    _add_features(p)

    p = sub.add_parser("fuse", help="fused image from image, LPI and SHIBS")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--lpi", required=True)
    p.add_argument("--shibs", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("phantom", help="synthetic frame with ground truth")
    p.add_argument("--class", dest="severity", type=int, choices=range(1, 6), required=True)
    p.add_argument("--rows", type=int, default=512)
    p.add_argument("--cols", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speckle", type=float, default=0.05)
    p.add_argument("--randomize", action="store_true",
                   help="draw geometry from the seed instead of the fixed class template")
    p.add_argument("--out", required=True)
    p.add_argument("--truth")

    for name, helptext in (("classify", "score one frame"), ("pipeline", "rectify, features, fuse, score")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--in", dest="input", required=True)
        _add_geometry(p)
        _add_features(p)
        p.add_argument("--thresholds", help="scorer config JSON")
        if name == "classify":
            p.add_argument("--report", required=True)
            p.add_argument("--maps-dir")
        else:
            p.add_argument("--out-dir", required=True)
            p.add_argument("--workers", type=int, default=None,
                           help="worker processes for directory input (default: CPU count)")

    p = sub.add_parser("eval", help="evaluation formulas")
    p.add_argument("--table2-check", action="store_true",
                   help="recompute the +/- column of the ablation table")
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--out", help="also write the JSON result here")
    esub = p.add_subparsers(dest="eval_command")
    e = esub.add_parser("loss")
    e.add_argument("--input", required=True, help="JSON with x, y, y_true|true_class, y_hat")
    e.add_argument("--lambda1", type=float, default=0.3)
    e.add_argument("--lambda2", type=float, default=0.7)
    e = esub.add_parser("similarity")
    e.add_argument("--input", required=True, help="JSON list of label triples")
    e = esub.add_parser("ci")
    e.add_argument("--acc", type=float, required=True)
    e.add_argument("--n", type=int, required=True)
    e = esub.add_parser("metrics")
    e.add_argument("--input", required=True, help="JSON with pred and truth lists")
    return parser


def effective_config(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "replay"}
    if args.command in ("classify", "pipeline"):
        cfg["scorer"] = _scorer_config(args).to_dict()
    return cfg


def _namespace_from_config(parser, path):
    cfg = _load_json(path)
    if "command" not in cfg:
        raise UsageError(f"{path}: not an effective-config JSON (no 'command')")
    # Start from the parser defaults for that command so missing keys stay valid.
    base = vars(parser.parse_args(_minimal_argv(cfg)))
    base.update({k: v for k, v in cfg.items() if k != "scorer"})
    return argparse.Namespace(**base)


def _minimal_argv(cfg):
    """Just enough argv to satisfy required options; values are overwritten."""
    cmd = cfg["command"]
    argv = [cmd]
    required = {
        "rectify": ["--in", "x", "--out", "x", "--identity"],
        "features": ["--in", "x"],
        "fuse": ["--in", "x", "--lpi", "x", "--shibs", "x", "--out", "x"],
        "phantom": ["--class", "1", "--out", "x"],
        "classify": ["--in", "x", "--report", "x"],
        "pipeline": ["--in", "x", "--out-dir", "x"],
        "eval": [],
    }
    if cmd not in required:
        raise UsageError(f"unknown command {cmd!r} in config")
    argv += required[cmd]
    if cmd == "eval" and cfg.get("eval_command"):
        sub = cfg["eval_command"]
        argv.append(sub)
        argv += {"loss": ["--input", "x"], "similarity": ["--input", "x"],
                 "ci": ["--acc", "0", "--n", "1"], "metrics": ["--input", "x"]}[sub]
    return argv


def _dispatch(args):
    config = effective_config(args)
    print(json.dumps({"effective_config": config}, sort_keys=True), file=sys.stderr)
    cmd = args.command
    if cmd == "rectify":
        cmd_rectify(args)
    elif cmd == "features":
        cmd_features(args)
    elif cmd == "fuse":
        cmd_fuse(args)
    elif cmd == "phantom":
        cmd_phantom(args)
    elif cmd == "classify":
        cmd_classify(args, config)
    elif cmd == "pipeline":
        cmd_pipeline(args, config)
    elif cmd == "eval":
        result = cmd_eval(args)
        text = _dump(result)
        sys.stdout.write(format_table2_grid(result["table2_check"]) if args.table2_check else text)
        if args.out:
            write_atomic(args.out, text.encode("utf-8"))


def run(argv=None):
    """Parse ``argv`` and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.replay:
            if args.command:
                raise UsageError("--replay takes no subcommand")
            args = _namespace_from_config(parser, args.replay)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 2
        _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ImageFormatError as exc:
        print(f"error: bad image file: {exc}", file=sys.stderr)
        return 1
    except ImageError as exc:
        print(f"error: invalid image or geometry: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}: no such file", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError) as exc:
        print(f"error: missing or malformed field in input: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
