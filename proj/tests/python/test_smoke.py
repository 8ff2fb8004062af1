import math

import numpy as np
import pytest

import tfftrack


def test_field_rendering_and_aggregate():
    f = tfftrack.render_person_tff((2, 5), (8, 5), 1.0, 20, 10)
    assert f.shape == (10, 20, 2)
    assert tuple(f[5, 5]) == (1.0, 0.0)
    assert np.count_nonzero(f[..., 0]) == len(tfftrack.tff_support((2, 5), (8, 5), 1.0, 20, 10)) == 21
    agg = tfftrack.aggregate_tff([f, -f])
    assert np.all(agg == 0)


def test_potentials():
    field = np.zeros((8, 8, 2))
    field[..., 0] = 1.0
    assert tfftrack.flow_aggregate(field, (1, 1), (6, 1)) == pytest.approx(1.0)
    assert tfftrack.flow_aggregate(field, (6, 1), (1, 1)) == pytest.approx(-1.0)
    assert tfftrack.joint_potential(field, (3, 3), (3, 4)) == 1.0

    pose = np.full((15, 3), np.nan)
    pose[:, 0] = np.arange(15) * 3.0
    pose[:, 1] = np.arange(15) * 2.0
    pose[:, 2] = 1.0
    assert tfftrack.iou_potential(pose, pose) == pytest.approx(1.0)
    assert tfftrack.oks_potential(pose, pose) == pytest.approx(1.0)
    assert tfftrack.pckh_potential(pose, pose) == pytest.approx(1.0)
    headless = pose.copy()
    headless[14, 0] = np.nan
    with pytest.raises(ValueError, match="head size"):
        tfftrack.pckh_potential(headless, pose)


def test_assignment():
    m = np.array([[3.0, 2.9], [2.8, 0.0]])
    assert tfftrack.greedy_assign(m) == [(0, 0)]
    assert tfftrack.hungarian_assign(m) == [(0, 1), (1, 0)]
    assert tfftrack.greedy_assign(m, threshold=5.0) == []


def test_sequence_round_trip():
    gt, det = tfftrack.generate("frames: 10\npersons: 3\nseed: 2\nmotion: {model: crossing}\n")
    assert len(gt["frames"]) == 10
    assert all("id" not in p for f in det["frames"] for p in f["poses"])
    tracks = tfftrack.track(det, metric="tff", oracle=gt)
    report = tfftrack.evaluate(tracks, gt)
    assert report["total"]["mota_percent"] == 100.0
    assert report["total"]["id_switches"] == 0
    with pytest.raises(ValueError, match="requires a field source"):
        tfftrack.track(det, metric="tff")


def test_cli_entry_point():
    code, out, _ = tfftrack.run_cli(["--help"])
    assert code == 0
    assert "--tau-nms 0.2" in out
    code, _, err = tfftrack.run_cli(["eval", "nope.json", "nope.json"])
    assert code == 2 and "error" in err


def test_posetrack_converter():
    from tfftrack import posetrack

    kp = []
    for k in range(17):
        kp += [10.0 + k, 20.0 + k, 0 if k in (3, 4, 16) else 1]
    doc = {
        "images": [
            {"id": 7, "frame_id": 1, "ignore_regions_x": [[0, 5, 3]], "ignore_regions_y": [[1, 2, 9]]},
            {"id": 3, "frame_id": 0},
        ],
        "annotations": [{"image_id": 3, "track_id": 4, "keypoints": kp}],
    }
    seq = posetrack.convert(doc, 64, 48)
    assert [f["index"] for f in seq["frames"]] == [0, 1]
    pose = seq["frames"][0]["poses"][0]
    assert pose["id"] == 4
    names = seq["skeleton"]["joint_names"]
    assert pose["joints"][names.index("neck")] == [11.0, 21.0, 1.0]
    assert pose["joints"][names.index("right_ankle")] is None
    assert seq["ignore_regions"] == [{"first_frame": 1, "last_frame": 1, "box": [0, 1, 5, 9]}]
    # the result is a valid ground-truth document
    tracks = tfftrack.track(seq, metric="iou", min_track_length=1)
    assert tfftrack.evaluate(tracks, seq)["total"]["mota_percent"] == 100.0
