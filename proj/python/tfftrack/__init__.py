"""Temporal flow field pose tracking.

Array conventions: fields are (height, width, 2) float arrays, poses are
(joints, 3) arrays of x, y, confidence with NaN x for a missing joint.
Sequence-level helpers take and return the JSON documents the CLI reads
and writes, decoded to dicts.
"""

import json

from . import _tfftrack
from ._tfftrack import (
    InputError,
    aggregate_tff,
    flow_aggregate,
    greedy_assign,
    hungarian_assign,
    iou_potential,
    joint_potential,
    oks_potential,
    pckh_potential,
    render_person_tff,
    run_cli,
    tff_support,
)

__all__ = [
    "InputError",
    "aggregate_tff",
    "evaluate",
    "flow_aggregate",
    "generate",
    "greedy_assign",
    "hungarian_assign",
    "iou_potential",
    "joint_potential",
    "oks_potential",
    "pckh_potential",
    "render_person_tff",
    "run_cli",
    "tff_support",
    "track",
]


def generate(scenario_yaml):
    """Returns (ground_truth, detections) for a scenario given as YAML text."""
    gt, det = _tfftrack.generate(scenario_yaml)
    return json.loads(gt), json.loads(det)


def track(detections, metric="tff", oracle=None, min_track_length=7):
    """Tracks a detections document. TFF and flow metrics render their
    inputs from the `oracle` ground truth."""
    oracle_json = json.dumps(oracle) if oracle is not None else ""
    return json.loads(_tfftrack.track(json.dumps(detections), metric, oracle_json, min_track_length))


def evaluate(tracks, gt):
    return json.loads(_tfftrack.evaluate(json.dumps(tracks), json.dumps(gt)))
