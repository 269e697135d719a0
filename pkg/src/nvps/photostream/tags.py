"""Shot-synchronized photon time-tag streams and their CSV / binary serialization."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .detector import DetectorConfig

PS = 1e-12


@dataclass
class TagStream:
    """Detection timestamps on a global clock, grouped into equally spaced shots.

    Shot ``k`` covers ``[k*shot_period, (k+1)*shot_period)`` and its sync
    instant is ``k*shot_period + sync_offset``. A cw acquisition is a single
    shot with ``sync_offset = 0``.
    """

    tags: np.ndarray  # s, sorted
    shot: np.ndarray  # shot index of each tag
    n_shots: int
    shot_period: float
    sync_offset: float
    detector: DetectorConfig
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.tags.size

    @property
    def duration(self) -> float:
        return self.n_shots * self.shot_period

    @property
    def sync_times(self) -> np.ndarray:
        return np.arange(self.n_shots) * self.shot_period + self.sync_offset

    def relative(self) -> np.ndarray:
        """Tag times measured from their shot's sync instant."""
        return self.tags - (self.shot * self.shot_period + self.sync_offset)

    def metadata(self) -> dict:
        return {
            "n_shots": self.n_shots,
            "shot_period_s": self.shot_period,
            "sync_offset_s": self.sync_offset,
            "duration_s": self.duration,
            "n_tags": int(self.tags.size),
            "detector": self.detector.to_dict(),
            "seed": self.seed,
            "meta": self.meta,
            "version": __version__,
        }


def header_lines(meta: dict) -> str:
    return "".join("# " + line + "\n" for line in json.dumps(meta, sort_keys=True, indent=1, default=_json_default).splitlines())


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def read_header(text: str) -> dict:
    lines = [ln[2:] if ln.startswith("# ") else ln[1:] for ln in text.splitlines() if ln.startswith("#")]
    return json.loads("\n".join(lines)) if lines else {}


def write_csv(stream: TagStream, path) -> None:
    buf = io.StringIO()
    buf.write(header_lines(stream.metadata()))
    buf.write("shot,sync_time_s,tag_time_s\n")
    sync = stream.shot * stream.shot_period + stream.sync_offset
    for s, y, t in zip(stream.shot.tolist(), sync.tolist(), stream.tags.tolist()):
        buf.write(f"{s},{y!r},{t!r}\n")
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> TagStream:
    text = Path(path).read_text()
    meta = read_header(text)
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")][1:]
    if body:
        arr = np.array([ln.split(",") for ln in body], dtype=float)
        shot, tags = arr[:, 0].astype(np.int64), arr[:, 2]
    else:
        shot, tags = np.empty(0, dtype=np.int64), np.empty(0)
    return _from_meta(meta, tags, shot)


def _from_meta(meta, tags, shot) -> TagStream:
    return TagStream(
        tags=tags,
        shot=shot,
        n_shots=int(meta["n_shots"]),
        shot_period=float(meta["shot_period_s"]),
        sync_offset=float(meta["sync_offset_s"]),
        detector=DetectorConfig.from_dict(meta["detector"]),
        seed=meta.get("seed"),
        meta=meta.get("meta", {}),
    )


def write_binary(stream: TagStream, path) -> Path:
    """Little-endian uint64 picosecond timestamps plus a ``.json`` sidecar."""
    path = Path(path)
    ps = np.rint(stream.tags / PS).astype("<u8")
    path.write_bytes(ps.tobytes())
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(stream.metadata(), sort_keys=True, indent=1, default=_json_default) + "\n")
    return sidecar


def read_binary(path) -> TagStream:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    tags = np.frombuffer(path.read_bytes(), dtype="<u8").astype(np.float64) * PS
    period = float(meta["shot_period_s"])
    shot = np.minimum((tags // period).astype(np.int64), int(meta["n_shots"]) - 1)
    return _from_meta(meta, tags, shot)
