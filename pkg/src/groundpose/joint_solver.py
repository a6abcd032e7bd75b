"""End-to-end joint solve: init, per-object solves, plane consensus, focal.

Outer loop per iteration: RANSAC plane from translations, RANSAC plane from
up-axes, normalize both, correct the focal from their disagreement and
rescale depths, re-solve every object against the consensus plane, then grow
the context weights. Each object's subproblem is independent at fixed
plane/focal/weights, so the scene-level system stays block-diagonal and is
solved object by object.
"""

from dataclasses import dataclass, replace

import numpy as np

from .deformable_pose import object_loss, solve_object
from .errors import EmptySceneError, GroundPoseError
from .plane_consensus import (
    normalize_plane,
    point_plane_distance,
    ransac_plane_from_rotations,
    ransac_plane_from_translations,
)
from .pnp_init import dlt_pose
from .scene_model import CameraIntrinsics, Plane, SceneEstimate
from .self_calibration import depth_rescale, focal_polish, focal_update


@dataclass(frozen=True)
class IterationDiagnostics:
    """Observable state of one outer iteration."""

    iteration: int
    total_loss: float
    focal: float
    plane: Plane
    mu1: float
    mu2: float
    inlier_counts: tuple  # (translations-plane inliers, rotations-plane inliers)
    max_plane_residual: float
    max_inner_loss_increase: float = 0.0


def weight_schedule(iteration, config):
    """Context weights for an outer iteration: (0, 0) first, then geometric growth."""
    if iteration <= 0:
        return 0.0, 0.0
    mu1 = min(config.mu1_schedule.initial * config.mu1_schedule.growth ** (iteration - 1),
              config.mu1_schedule.cap)
    mu2 = min(config.mu2_schedule.initial * config.mu2_schedule.growth ** (iteration - 1),
              config.mu2_schedule.cap)
    return mu1, mu2


def total_loss(estimate, scene, atlas, weights, plane_mask=None):
    """Scene loss: per-object reprojection + Tikhonov terms plus plane terms.

    plane_mask selects which objects contribute plane terms (all by default);
    failed objects (None entries) are skipped entirely.
    """
    mu, mu1, mu2 = weights
    total = 0.0
    for k, (state, det) in enumerate(zip(estimate.objects, scene.detections)):
        if state is None:
            continue
        with_plane = plane_mask is None or bool(plane_mask[k])
        pl = estimate.plane if with_plane else None
        total += object_loss(state, det, atlas, estimate.intrinsics, pl, (mu, mu1, mu2))
    return total


def _cold_solve(scene, atlas, cam, config):
    """DLT plus a plane-free deformable solve for every detection.

    Returns (states, losses, errors) where failed detections hold None and
    their error message lands in the errors dict keyed by index.
    """
    n_det = len(scene.detections)
    states, losses, errors = [None] * n_det, [None] * n_det, {}
    for k, det in enumerate(scene.detections):
        try:
            init = dlt_pose(det, atlas, cam, config.dlt_score_threshold)
            st, loss, _ = solve_object(
                init, det, atlas, cam, None, (config.mu_shape, 0.0, 0.0), config
            )
            states[k], losses[k] = st, loss
        except GroundPoseError as exc:
            errors[k] = str(exc)
    return states, losses, errors


def _recalibrate(scene, atlas, cam, diag, config):
    """Bracket the focal by a coarse scan of the cold-start scene loss, then
    polish it jointly with every object's pose.

    The plane-ratio focal update is a one-dimensional fixed-point iteration;
    on some scenes it stalls at a spurious fixed point or enters a limit
    cycle, because the estimated up-axes also shift with the focal. The
    cold-start reprojection loss as a function of the focal, by contrast, has
    a single sharp minimum, so a geometric bracket around the current value
    followed by a joint refinement is a reliable finisher.
    """
    scan_cfg = replace(config, inner_max_iters=min(config.inner_max_iters, 10))
    best_score, best_focal = np.inf, cam.focal
    for mult in np.geomspace(1.0 / 2.8, 2.8, 9):
        f = float(np.clip(cam.focal * mult, 0.1 * diag, 10.0 * diag))
        trial = CameraIntrinsics(focal=f, principal_point=cam.principal_point)
        _, losses, errors = _cold_solve(scene, atlas, trial, scan_cfg)
        score = sum(l for l in losses if l is not None) + 1e9 * len(errors)
        if score < best_score:
            best_score, best_focal = score, f
    cam = CameraIntrinsics(focal=best_focal, principal_point=cam.principal_point)
    states, losses, errors = _cold_solve(scene, atlas, cam, config)
    live = [k for k in range(len(states)) if states[k] is not None]
    if live:
        polished, cam, _ = focal_polish(
            [states[k] for k in live],
            [scene.detections[k] for k in live],
            atlas,
            cam,
            config.mu_shape,
            config.coeff_bound_mode,
        )
        for j, k in enumerate(live):
            states[k] = polished[j]
            losses[k] = object_loss(
                states[k], scene.detections[k], atlas, cam, None, (config.mu_shape, 0.0, 0.0)
            )
    return cam, states, losses, errors


def _fit_report_plane(states, config, rng):
    """Best-effort plane for reporting when no consensus plane was computed."""
    live = [s for s in states if s is not None]
    trans = np.array([s.translation for s in live])
    if len(live) >= 3:
        try:
            plane, _ = ransac_plane_from_translations(trans, config, rng)
            return plane
        except GroundPoseError:
            pass
    if live:
        plane, _ = ransac_plane_from_rotations(live, config, rng)
        return plane
    return Plane(coeffs=np.array([0.0, 0.0, 1.0, 0.0]))


def solve_scene(scene, atlas, config, use_plane=True, update_focal=None):
    """Run the full joint optimization on one scene.

    update_focal defaults to True when no intrinsics hint is present. With
    fewer than three detections the translations-plane consensus is
    unavailable: the plane falls back to the rotation consensus, the focal is
    held fixed, and the result is flagged "few-objects".

    Returns (SceneEstimate, [IterationDiagnostics]).
    """
    n_det = len(scene.detections)
    if n_det == 0:
        raise EmptySceneError("scene has no detections")
    rng = np.random.default_rng(config.ransac.seed)
    w, h = float(scene.image_size[0]), float(scene.image_size[1])
    diag = float(np.hypot(w, h))
    center = np.array([w / 2.0, h / 2.0])
    if scene.intrinsics_hint is not None:
        cam = CameraIntrinsics(
            focal=scene.intrinsics_hint.focal,
            principal_point=scene.intrinsics_hint.principal_point,
        )
        if update_focal is None:
            update_focal = False
    else:
        cam = CameraIntrinsics(focal=rng.uniform(0.5, 2.0) * diag, principal_point=center)
        if update_focal is None:
            update_focal = True

    flags = []
    few = n_det < 3
    if few:
        update_focal = False
        flags.append("few-objects")

    rcfg = config.ransac
    if rcfg.distance_threshold is None:
        rcfg = replace(rcfg, distance_threshold=0.15 * atlas.diameter)

    # --- initialization: DLT then a plane-free deformable solve per object
    states, losses, errors = _cold_solve(scene, atlas, cam, config)
    if not any(s is not None for s in states):
        raise EmptySceneError("no detection could be initialized: " + "; ".join(errors.values()))
    if errors:
        flags.append("object-failures")

    def live_indices():
        return [k for k in range(n_det) if states[k] is not None]

    def interim_estimate(plane, converged, iters):
        return SceneEstimate(
            objects=tuple(states),
            plane=plane,
            intrinsics=cam,
            per_object_loss=tuple(losses),
            converged=converged,
            iterations=iters,
            flags=tuple(flags),
        )

    diagnostics = []
    plane_work = _fit_report_plane(states, rcfg, np.random.default_rng(rcfg.seed + 1))
    plane_mask = np.zeros(n_det, dtype=bool)
    est0 = interim_estimate(plane_work, False, 0)
    loss0 = total_loss(est0, scene, atlas, (config.mu_shape, 0.0, 0.0), plane_mask)
    diagnostics.append(
        IterationDiagnostics(
            iteration=0,
            total_loss=loss0,
            focal=cam.focal,
            plane=plane_work,
            mu1=0.0,
            mu2=0.0,
            inlier_counts=(0, 0),
            max_plane_residual=0.0,
        )
    )

    prev_total = loss0
    prev_focal = cam.focal
    prev_weights = (0.0, 0.0)
    converged = False
    t = 0
    # The context-weight schedule advances on its own counter, held at zero
    # while the focal estimate is still moving: growing mu2 early would drag
    # the up-axes onto the (still miscalibrated) translations plane and erase
    # the very disagreement the focal update reads.
    phase = 0
    # One bracket-and-polish pass settles the focal once the ratio update
    # stalls (or fails to stall within the first iterations).
    calibrated = False
    recalibrate_deadline = 8
    for t in range(1, config.max_iters + 1):
        live = live_indices()
        mu1, mu2 = weight_schedule(phase, config)
        focal_step_rel = 0.0
        inlier_counts = (0, 0)
        plane_mask = np.zeros(n_det, dtype=bool)
        if use_plane:
            live_states = [states[k] for k in live]
            if len(live) < 3:
                plane_r, mask_r = ransac_plane_from_rotations(live_states, rcfg, rng)
                plane_work = plane_r
                inlier_counts = (0, int(mask_r.sum()))
                for j, k in enumerate(live):
                    plane_mask[k] = bool(mask_r[j])
            else:
                trans = np.array([states[k].translation for k in live])
                plane_t, mask_t = ransac_plane_from_translations(trans, rcfg, rng)
                plane_r, mask_r = ransac_plane_from_rotations(live_states, rcfg, rng)
                inlier_counts = (int(mask_t.sum()), int(mask_r.sum()))
                # after the bracket-and-polish pass the focal sits at the
                # reprojection optimum; further ratio updates would only
                # wander, so the estimate is held there
                if update_focal and not calibrated:
                    upd = focal_update(
                        plane_t, plane_r, cam.focal, f_min=0.1 * diag, f_max=10.0 * diag
                    )
                    if upd.clamped and "focal-clamped" not in flags:
                        flags.append("focal-clamped")
                    if upd.unobservable and "focal-unobservable" not in flags:
                        flags.append("focal-unobservable")
                    rho = upd.focal / cam.focal
                    focal_step_rel = abs(rho - 1.0)
                    if rho != 1.0:
                        cam = CameraIntrinsics(focal=upd.focal, principal_point=cam.principal_point)
                        for k in live:
                            states[k] = depth_rescale(states[k], rho)
                        # the translations plane rides along with the rescaled depths
                        c = plane_t.coeffs.copy()
                        c[2] /= rho
                        plane_t = normalize_plane(Plane(coeffs=c))
                    if not calibrated and (
                        focal_step_rel < 0.01 or t >= recalibrate_deadline
                    ):
                        f_before = cam.focal
                        cam, states, losses, cold_errors = _recalibrate(
                            scene, atlas, cam, diag, config
                        )
                        calibrated = True
                        if cold_errors:
                            errors.update(cold_errors)
                            if "object-failures" not in flags:
                                flags.append("object-failures")
                        focal_step_rel = abs(cam.focal / f_before - 1.0)
                        live = live_indices()
                        live_states = [states[k] for k in live]
                        plane_mask = np.zeros(n_det, dtype=bool)
                        if len(live) >= 3:
                            trans = np.array([states[k].translation for k in live])
                            plane_t, mask_t = ransac_plane_from_translations(trans, rcfg, rng)
                            plane_r, mask_r = ransac_plane_from_rotations(live_states, rcfg, rng)
                        else:
                            plane_r, mask_r = ransac_plane_from_rotations(live_states, rcfg, rng)
                            plane_t, mask_t = plane_r, mask_r
                        inlier_counts = (int(mask_t.sum()), int(mask_r.sum()))
                plane_work = plane_t
                for j, k in enumerate(live):
                    plane_mask[k] = bool(mask_t[j] and mask_r[j])
        else:
            mu1, mu2 = 0.0, 0.0
        if focal_step_rel < 0.01:
            phase += 1

        # --- per-object re-solve with the consensus plane, then lambda finetune
        max_increase = 0.0
        for k in live:
            pl = plane_work if (use_plane and plane_mask[k]) else None
            wts = (config.mu_shape, mu1 if pl is not None else 0.0, mu2 if pl is not None else 0.0)
            try:
                st, loss, hist = solve_object(states[k], scene.detections[k], atlas, cam, pl, wts, config)
                states[k], losses[k] = st, loss
                increases = np.diff(hist)
                if increases.size:
                    max_increase = max(max_increase, float(increases.max()))
            except GroundPoseError as exc:
                errors[k] = str(exc)
                states[k], losses[k] = None, None
                if "object-failures" not in flags:
                    flags.append("object-failures")

        est = interim_estimate(plane_work, False, t)
        cur_total = total_loss(est, scene, atlas, (config.mu_shape, mu1, mu2), plane_mask)
        mpr = 0.0
        for k in live_indices():
            if plane_mask[k]:
                mpr = max(mpr, abs(point_plane_distance(states[k].translation, plane_work)))
        diagnostics.append(
            IterationDiagnostics(
                iteration=t,
                total_loss=cur_total,
                focal=cam.focal,
                plane=plane_work,
                mu1=mu1,
                mu2=mu2,
                inlier_counts=inlier_counts,
                max_plane_residual=mpr,
                max_inner_loss_increase=max_increase,
            )
        )
        same_weights = (mu1, mu2) == prev_weights
        rel = abs(cur_total - prev_total) / max(abs(prev_total), 1e-12)
        focal_rel = abs(cam.focal - prev_focal) / max(prev_focal, 1e-12)
        if same_weights and rel < config.convergence_tol and focal_rel < 1e-3:
            converged = True
        prev_total, prev_focal, prev_weights = cur_total, cam.focal, (mu1, mu2)
        if converged:
            break

    return interim_estimate(plane_work, converged, t), diagnostics
