"""Command-line surface: solve, synth, eval, export-traj.

Exit codes: 0 success, 1 validation/input error, 2 solver failure.
GROUNDPOSE_SEED serves as a fallback seed when neither flag nor config file
provides one.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import serialization as io
from .errors import (
    EmptySceneError,
    GroundPoseError,
    NoProgressError,
    SchemaError,
    ValidationError,
)
from .evaluation import ADD_THRESHOLDS, VIEWPOINT_THRESHOLDS, add_accuracy, viewpoint_precision
from .joint_solver import solve_scene
from .scene_model import (
    CameraIntrinsics,
    RansacConfig,
    SolverConfig,
    WeightSchedule,
)
from .synth_oracle import SynthConfig, car_atlas, generate_scene


def _env_seed():
    raw = os.environ.get("GROUNDPOSE_SEED")
    return int(raw) if raw else None


def _solver_config_from_file(path):
    doc = io._load_json(path)

    def sched(key, default):
        if key not in doc:
            return default
        d = doc[key]
        return WeightSchedule(d["initial"], d["growth"], d["cap"])

    base = SolverConfig()
    ransac = doc.get("ransac", {})
    return SolverConfig(
        mu_shape=doc.get("mu_shape", base.mu_shape),
        mu1_schedule=sched("mu1_schedule", base.mu1_schedule),
        mu2_schedule=sched("mu2_schedule", base.mu2_schedule),
        max_iters=doc.get("max_iters", base.max_iters),
        convergence_tol=doc.get("convergence_tol", base.convergence_tol),
        inner_max_iters=doc.get("inner_max_iters", base.inner_max_iters),
        inner_tol=doc.get("inner_tol", base.inner_tol),
        ransac=RansacConfig(
            iterations=ransac.get("iterations", base.ransac.iterations),
            distance_threshold=ransac.get("distance_threshold", base.ransac.distance_threshold),
            angle_threshold=ransac.get("angle_threshold", base.ransac.angle_threshold),
            seed=ransac.get("seed", base.ransac.seed),
        ),
        coeff_bound_mode=doc.get("coeff_bound_mode", base.coeff_bound_mode),
        dlt_score_threshold=doc.get("dlt_score_threshold", base.dlt_score_threshold),
    )


def _synth_config_from_file(path):
    doc = io._load_json(path)
    base = SynthConfig()
    kwargs = {}
    for name in (
        "n_objects", "focal_range", "plane_tilt_range", "depth_range",
        "keypoint_noise_sigma", "outlier_fraction", "coeff_sigma", "seed",
        "image_size", "margin",
    ):
        if name in doc:
            kwargs[name] = tuple(doc[name]) if isinstance(doc[name], list) else doc[name]
    return replace(base, **kwargs)


def _cmd_solve(args):
    scene = io.load_scene(args.scene)
    atlas = io.load_atlas(args.atlas)
    config = _solver_config_from_file(args.config) if args.config else SolverConfig()
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        config = replace(config, ransac=replace(config.ransac, seed=seed))
    if args.focal is not None:
        w, h = scene.image_size
        cam = CameraIntrinsics(focal=args.focal, principal_point=[w / 2, h / 2])
        scene = replace(scene, intrinsics_hint=cam)
    estimate, diagnostics = solve_scene(scene, atlas, config, use_plane=not args.no_plane)
    io.save_estimate(estimate, args.out)
    diag_path = args.diagnostics or str(Path(args.out).with_suffix(".diag.jsonl"))
    io.save_diagnostics(diagnostics, diag_path)
    print(
        f"solved {len(scene.detections)} objects: focal={estimate.intrinsics.focal:.2f} "
        f"iterations={estimate.iterations} converged={estimate.converged}"
    )
    return 0


def _cmd_synth(args):
    atlas = io.load_atlas(args.atlas) if args.atlas else car_atlas()
    config = _synth_config_from_file(args.config) if args.config else SynthConfig()
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        config = replace(config, seed=seed)
    scene, truth = generate_scene(atlas, config)
    io.save_scene(scene, args.out_scene)
    io.save_estimate(truth, args.out_truth)
    if args.out_atlas:
        io.save_atlas(atlas, args.out_atlas)
    print(f"generated {len(scene.detections)} objects (seed {config.seed})")
    return 0


def _print_table(title, thresholds, values):
    print(title)
    print("  threshold " + "".join(f"{t:>8.2f}" for t in thresholds))
    print("  percent   " + "".join(f"{v:>8.2f}" for v in values))


def _cmd_eval(args):
    est = io.load_estimate(args.est)
    truth = io.load_estimate(args.truth)
    atlas = io.load_atlas(args.atlas)
    if len(est.objects) != len(truth.objects):
        raise ValidationError("estimate and truth have different object counts")
    pairs = [
        (e, g) for e, g in zip(est.objects, truth.objects) if e is not None and g is not None
    ]
    add_thresholds = tuple(args.add_thresholds or ADD_THRESHOLDS)
    vp_thresholds = tuple(args.viewpoint_thresholds or VIEWPOINT_THRESHOLDS)
    _print_table("ADD accuracy (threshold in object diameters)", add_thresholds,
                 add_accuracy(pairs, atlas, add_thresholds))
    _print_table("Viewpoint precision (threshold in radians)", vp_thresholds,
                 viewpoint_precision(pairs, vp_thresholds))
    return 0


def _cmd_export_traj(args):
    est_dir = Path(args.estimates)
    if not est_dir.is_dir():
        raise SchemaError(f"not a directory: {est_dir}")
    frames = []
    for path in sorted(est_dir.glob("*.json")):
        est = io.load_estimate(path)
        frames.append(
            {
                "name": path.stem,
                "focal": est.intrinsics.focal,
                "principal_point": est.intrinsics.principal_point.tolist(),
                "plane": est.plane.coeffs.tolist(),
                "objects": [
                    None
                    if o is None
                    else {
                        "rotation": o.rotation.tolist(),
                        "translation": o.translation.tolist(),
                        "coeffs": o.coeffs.tolist(),
                    }
                    for o in est.objects
                ],
            }
        )
    if not frames:
        raise SchemaError(f"no estimate files found in {est_dir}")
    io._dump_json({"schema_version": io.SCHEMA_VERSION, "frames": frames}, args.out)
    print(f"exported {len(frames)} frames to {args.out}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(prog="groundpose")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="jointly solve poses, plane, and focal for one scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--atlas", required=True)
    p.add_argument("--focal", type=float, default=None, help="fix the focal length (pixels)")
    p.add_argument("--no-plane", action="store_true", help="disable the plane constraint")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="solver config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics", default=None, help="diagnostics JSONL path")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--atlas", default=None, help="atlas JSON (default: built-in car atlas)")
    p.add_argument("--config", default=None, help="generator config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-scene", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-atlas", default=None, help="also write the atlas used")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="score an estimate against ground truth")
    p.add_argument("--est", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--atlas", required=True)
    p.add_argument("--thresholds", dest="add_thresholds", type=float, nargs="+", default=None)
    p.add_argument(
        "--viewpoint-thresholds", dest="viewpoint_thresholds", type=float, nargs="+", default=None
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-traj", help="bundle per-frame estimates into a trajectory JSON")
    p.add_argument("--estimates", required=True, help="directory of estimate JSON files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_traj)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ValidationError, EmptySceneError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NoProgressError, GroundPoseError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
