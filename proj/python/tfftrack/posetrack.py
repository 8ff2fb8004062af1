"""Converter from PoseTrack 2018 style annotations to the sequence JSON.

This is an extension point rather than a full importer. It maps the 17
PoseTrack keypoints onto the 15-joint skeleton (ears are dropped,
head_bottom becomes neck), keeps keypoints with visibility > 0 and turns
ignore polygons into their bounding rectangles.
"""

import json

from . import _tfftrack

POSETRACK_TO_SKELETON = {
    "right_ankle": 16,
    "right_knee": 14,
    "right_hip": 12,
    "left_hip": 11,
    "left_knee": 13,
    "left_ankle": 15,
    "right_wrist": 10,
    "right_elbow": 8,
    "right_shoulder": 6,
    "left_shoulder": 5,
    "left_elbow": 7,
    "left_wrist": 9,
    "neck": 1,
    "nose": 0,
    "head_top": 2,
}


def default_skeleton():
    return json.loads(_tfftrack.default_skeleton())


def convert(doc, width, height):
    """`doc` is a decoded PoseTrack annotation file for one video."""
    skeleton = default_skeleton()
    slots = [POSETRACK_TO_SKELETON[name] for name in skeleton["joint_names"]]
    images = sorted(doc["images"], key=lambda im: im.get("frame_id", im["id"]))
    frame_of = {im["id"]: t for t, im in enumerate(images)}

    frames = [{"index": t, "poses": []} for t in range(len(images))]
    for ann in doc.get("annotations", []):
        kp = ann.get("keypoints") or []
        joints = []
        for k in slots:
            x, y, v = kp[3 * k : 3 * k + 3] if len(kp) >= 3 * k + 3 else (0, 0, 0)
            joints.append([float(x), float(y), 1.0] if v > 0 else None)
        if all(j is None for j in joints):
            continue
        pose = {"joints": joints}
        if "track_id" in ann:
            pose["id"] = int(ann["track_id"])
        frames[frame_of[ann["image_id"]]]["poses"].append(pose)

    regions = []
    for t, im in enumerate(images):
        for xs, ys in zip(im.get("ignore_regions_x", []), im.get("ignore_regions_y", [])):
            if xs and ys:
                regions.append({"first_frame": t, "last_frame": t, "box": [min(xs), min(ys), max(xs), max(ys)]})

    return {
        "skeleton": skeleton,
        "image": {"width": width, "height": height},
        "frames": frames,
        "ignore_regions": regions,
    }
