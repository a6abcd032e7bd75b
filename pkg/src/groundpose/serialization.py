"""JSON file formats for scenes, atlases, estimates, and diagnostics.

One JSON document per object, "schema_version": 1, arrays row-major, pixels
for image quantities, object units for 3D, radians for angles. Floats are
written with Python's repr (17 significant digits), so round-trips are
lossless.
"""

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError, ValidationError
from .scene_model import (
    CameraIntrinsics,
    Detection,
    ObjectState,
    Plane,
    Scene,
    SceneEstimate,
    validate_atlas,
    validate_scene,
)
from .scene_model import ShapeAtlas

SCHEMA_VERSION = 1


def _require(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"missing field {key!r} at {path}")
    return doc[key]


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})")


def _dump_json(doc, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _arr(x):
    return np.asarray(x, dtype=float).tolist()


# --- intrinsics

def intrinsics_to_dict(cam):
    return {"focal": cam.focal, "principal_point": _arr(cam.principal_point)}


def intrinsics_from_dict(doc, path="intrinsics"):
    return CameraIntrinsics(
        focal=_require(doc, "focal", path),
        principal_point=_require(doc, "principal_point", path),
    )


# --- atlas

def save_atlas(atlas, path):
    _dump_json(
        {
            "schema_version": SCHEMA_VERSION,
            "keypoint_names": list(atlas.keypoint_names),
            "mean_shape": _arr(atlas.mean_shape),
            "basis": _arr(atlas.basis),
            "coeff_bounds": _arr(atlas.coeff_bounds),
            "diameter": atlas.diameter,
        },
        path,
    )


def load_atlas(path):
    doc = _load_json(path)
    try:
        atlas = ShapeAtlas(
            mean_shape=_require(doc, "mean_shape", "atlas"),
            basis=_require(doc, "basis", "atlas"),
            coeff_bounds=_require(doc, "coeff_bounds", "atlas"),
            diameter=_require(doc, "diameter", "atlas"),
            keypoint_names=tuple(doc.get("keypoint_names", ())),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}")
    report = validate_atlas(atlas)
    if report:
        raise ValidationError(f"{path}: " + "; ".join(report))
    return atlas


# --- scene

def save_scene(scene, path):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "image_size": _arr(scene.image_size),
        "detections": [
            {"id": d.id, "keypoints": _arr(d.keypoints), "scores": _arr(d.scores)}
            for d in scene.detections
        ],
    }
    if scene.intrinsics_hint is not None:
        doc["intrinsics_hint"] = intrinsics_to_dict(scene.intrinsics_hint)
    _dump_json(doc, path)


def load_scene(path, margin=200.0):
    doc = _load_json(path)
    dets = []
    for i, d in enumerate(_require(doc, "detections", "scene")):
        where = f"detections[{i}]"
        try:
            dets.append(
                Detection(
                    keypoints=_require(d, "keypoints", where),
                    scores=_require(d, "scores", where),
                    id=d.get("id", str(i)),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{path}: {where}: {exc}")
    hint = doc.get("intrinsics_hint")
    try:
        scene = Scene(
            detections=tuple(dets),
            image_size=_require(doc, "image_size", "scene"),
            intrinsics_hint=intrinsics_from_dict(hint) if hint else None,
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}")
    report = validate_scene(scene, margin=margin)
    if report:
        raise ValidationError(f"{path}: " + "; ".join(report))
    return scene


# --- estimates

def _object_to_dict(state):
    if state is None:
        return None
    return {
        "rotation": _arr(state.rotation),
        "translation": _arr(state.translation),
        "coeffs": _arr(state.coeffs),
    }


def _object_from_dict(doc, where):
    if doc is None:
        return None
    return ObjectState(
        rotation=_require(doc, "rotation", where),
        translation=_require(doc, "translation", where),
        coeffs=_require(doc, "coeffs", where),
    )


def save_estimate(estimate, path):
    _dump_json(
        {
            "schema_version": SCHEMA_VERSION,
            "objects": [_object_to_dict(o) for o in estimate.objects],
            "plane": _arr(estimate.plane.coeffs),
            "intrinsics": intrinsics_to_dict(estimate.intrinsics),
            "per_object_loss": list(estimate.per_object_loss),
            "converged": bool(estimate.converged),
            "iterations": int(estimate.iterations),
            "flags": list(estimate.flags),
        },
        path,
    )


def load_estimate(path):
    doc = _load_json(path)
    try:
        objects = [
            _object_from_dict(o, f"objects[{i}]")
            for i, o in enumerate(_require(doc, "objects", "estimate"))
        ]
        return SceneEstimate(
            objects=tuple(objects),
            plane=Plane(coeffs=_require(doc, "plane", "estimate")),
            intrinsics=intrinsics_from_dict(_require(doc, "intrinsics", "estimate")),
            per_object_loss=tuple(_require(doc, "per_object_loss", "estimate")),
            converged=bool(_require(doc, "converged", "estimate")),
            iterations=int(_require(doc, "iterations", "estimate")),
            flags=tuple(doc.get("flags", ())),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}")


# --- diagnostics (JSON lines, one record per outer iteration)

def save_diagnostics(diagnostics, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for d in diagnostics:
            rec = {
                "iteration": d.iteration,
                "total_loss": d.total_loss,
                "focal": d.focal,
                "plane": _arr(d.plane.coeffs),
                "mu1": d.mu1,
                "mu2": d.mu2,
                "inlier_counts": list(d.inlier_counts),
                "max_plane_residual": d.max_plane_residual,
                "max_inner_loss_increase": d.max_inner_loss_increase,
            }
            fh.write(json.dumps(rec) + "\n")


def load_diagnostics(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
