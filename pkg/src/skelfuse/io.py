"""File schemas: detection streams, calibration, truth, track events, snapshots.

Detection streams are JSONL, one world-frame DetectionSet per line in arrival
order, so recorded real-sensor data replays through the identical tracker
path as simulation:

    {"camera_id": "c0", "stamp": 0.1,
     "skeletons": [{"joints": [{"id": 0, "x": ..., "y": ..., "z": ..., "valid": true}, ...]}]}

Calibration files are a single JSON document; the extrinsic maps CAMERA-frame
points to WORLD-frame points (stated in the file's "convention" field to
prevent inversion bugs):

    {"convention": "...", "cameras": [{"id", "fx", "fy", "cx", "cy", "extrinsic": [16 row-major]}]}
"""

from __future__ import annotations

import json
from typing import Iterable

from .errors import ConfigError
from .model import CameraModel, DetectionSet
from .tracker import FusedSnapshot, TrackEvent

CALIBRATION_CONVENTION = (
    "extrinsic is a 4x4 row-major rigid transform mapping camera-frame points "
    "to world-frame points (camera->world)"
)


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def write_detections(path, detections: Iterable[DetectionSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ds in detections:
            fh.write(_dumps(ds.to_dict()) + "\n")


def read_detections(path) -> list[DetectionSet]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(DetectionSet.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: line {lineno}: bad detection record: {exc}") from exc
    return out


def write_calibration(path, cameras: Iterable[CameraModel]) -> None:
    doc = {
        "convention": CALIBRATION_CONVENTION,
        "cameras": [cam.to_dict() for cam in cameras],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


def read_calibration(path) -> dict[str, CameraModel]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or "cameras" not in doc:
        raise ConfigError(f"{path}: calibration file must hold a 'cameras' list")
    cams = {}
    for entry in doc["cameras"]:
        cam = CameraModel.from_dict(entry)
        if cam.camera_id in cams:
            raise ConfigError(f"{path}: duplicate camera id {cam.camera_id!r}")
        cams[cam.camera_id] = cam
    return cams


def event_to_dict(ev: TrackEvent) -> dict:
    return {
        "event": ev.kind,
        "track_id": ev.track_id,
        "stamp": ev.stamp,
        "camera_id": ev.camera_id,
    }


def snapshot_to_dict(snap: FusedSnapshot) -> dict:
    tracks = []
    for tp in snap.tracks:
        joints = []
        for entry, trace in zip(tp.skeleton.to_dict()["joints"], tp.cov_traces):
            entry["cov_trace"] = trace
            joints.append(entry)
        tracks.append({"track_id": tp.track_id, "joints": joints})
    return {"stamp": snap.stamp, "tracks": tracks}


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(_dumps(rec) + "\n")
