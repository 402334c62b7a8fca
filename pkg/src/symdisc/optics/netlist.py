"""Netlist data model and its two serializations.

Modes are (path, polarization) pairs flattened as ``2 * path + pol`` with
``H = 0`` and ``V = 1``.  A netlist lives on ``n_paths`` spatial paths: the
first ``dim`` carry the logical states, the rest are monitor paths that
collect inconclusive photons.

Text format, one element per line::

    I HWP angle=1.0471975511965976 path=0
    I PBS paths=0,1
    IV DETECTOR label=D1 path=2

preceded by ``dim``, ``paths`` and ``meta`` header lines.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import MalformedNetlist

H, V = 0, 1
STAGE_LABELS = ("I", "II", "III", "IV")
KINDS = ("HWP", "PBS", "PS", "BS", "MIRROR", "DETECTOR")
_TWO_PATH = {"PBS", "BS"}
SCHEMA_VERSION = 1


def mode(path: int, pol: int) -> int:
    return 2 * path + pol


@dataclass(frozen=True)
class Element:
    kind: str
    paths: tuple
    angle: float | None = None
    phase: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedNetlist(f"unknown element kind {self.kind!r}")
        need = 2 if self.kind in _TWO_PATH else 1
        if len(self.paths) != need:
            raise MalformedNetlist(f"{self.kind} takes {need} path(s), got {self.paths}")
        if need == 2 and self.paths[0] == self.paths[1]:
            raise MalformedNetlist(f"{self.kind} couples a path to itself: {self.paths}")
        if self.kind == "HWP" and self.angle is None:
            raise MalformedNetlist("HWP needs an angle")
        if self.kind == "PS" and self.phase is None:
            raise MalformedNetlist("PS needs a phase")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.angle is not None:
            d["angle"] = self.angle
        if self.phase is not None:
            d["phase"] = self.phase
        if self.label is not None:
            d["label"] = self.label
        if len(self.paths) == 1:
            d["path"] = self.paths[0]
        else:
            d["paths"] = list(self.paths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Element":
        if "path" in d:
            paths = (int(d["path"]),)
        else:
            paths = tuple(int(p) for p in d.get("paths", ()))
        angle = d.get("angle")
        phase = d.get("phase")
        return cls(
            d["kind"],
            paths,
            None if angle is None else float(angle),
            None if phase is None else float(phase),
            d.get("label"),
        )

    def to_text(self) -> str:
        parts = [self.kind]
        if self.angle is not None:
            parts.append(f"angle={self.angle!r}")
        if self.phase is not None:
            parts.append(f"phase={self.phase!r}")
        if self.label is not None:
            parts.append(f"label={self.label}")
        if len(self.paths) == 1:
            parts.append(f"path={self.paths[0]}")
        else:
            parts.append("paths=" + ",".join(str(p) for p in self.paths))
        return " ".join(parts)


@dataclass(frozen=True)
class Stage:
    label: str
    elements: tuple
    # compile-time bookkeeping; the netlist-level metadata is what serializes
    metadata: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class OpticalNetlist:
    dim: int
    n_paths: int
    stages: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = [s.label for s in self.stages]
        order = [STAGE_LABELS.index(lab) if lab in STAGE_LABELS else -1 for lab in labels]
        if -1 in order:
            raise MalformedNetlist(f"unknown stage label in {labels}")
        if order != sorted(order) or len(set(order)) != len(order):
            raise MalformedNetlist(f"stages out of order: {labels}")
        for el in self.elements():
            if any(p < 0 or p >= self.n_paths for p in el.paths):
                raise MalformedNetlist(
                    f"{el.kind} references path outside 0..{self.n_paths - 1}: {el.paths}"
                )

    @property
    def n_modes(self) -> int:
        return 2 * self.n_paths

    def elements(self):
        return [el for stage in self.stages for el in stage.elements]

    def stage(self, label: str) -> Stage:
        for s in self.stages:
            if s.label == label:
                return s
        raise KeyError(label)

    def detectors(self) -> dict:
        """Detector label -> path."""
        return {
            el.label: el.paths[0] for el in self.elements() if el.kind == "DETECTOR"
        }

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dim": self.dim,
            "n_paths": self.n_paths,
            "metadata": self.metadata,
            "stages": [
                {"label": s.label, "elements": [e.to_dict() for e in s.elements]}
                for s in self.stages
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = ["# symmetric-state discrimination netlist"]
        lines.append(f"dim {self.dim}")
        lines.append(f"paths {self.n_paths}")
        for key in sorted(self.metadata):
            lines.append(f"meta {key}={_meta_to_text(self.metadata[key])}")
        for s in self.stages:
            if not s.elements:
                lines.append(f"stage {s.label}")
            for e in s.elements:
                lines.append(f"{s.label} {e.to_text()}")
        return "\n".join(lines) + "\n"


def _meta_to_text(value) -> str:
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(str(int(v)) for v in value) + "]"
    return str(int(value))


def _meta_from_text(text: str):
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1]
        return [int(v) for v in inner.split(",")] if inner else []
    return int(text)


def from_dict(d: dict) -> OpticalNetlist:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise MalformedNetlist(f"unsupported schema_version {version!r}")
    try:
        stages = tuple(
            Stage(s["label"], tuple(Element.from_dict(e) for e in s["elements"]))
            for s in d["stages"]
        )
        return OpticalNetlist(int(d["dim"]), int(d["n_paths"]), stages, dict(d.get("metadata", {})))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedNetlist):
            raise
        raise MalformedNetlist(f"bad netlist document: {exc}") from exc


def from_json(text: str) -> OpticalNetlist:
    return from_dict(json.loads(text))


def parse_text(text: str) -> OpticalNetlist:
    dim = n_paths = None
    metadata = {}
    stage_elems: dict[str, list] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "dim":
                dim = int(rest[0])
            elif head == "paths":
                n_paths = int(rest[0])
            elif head == "meta":
                key, _, value = rest[0].partition("=")
                metadata[key] = _meta_from_text(value)
            elif head == "stage":
                stage_elems.setdefault(rest[0], [])
            elif head in STAGE_LABELS:
                stage_elems.setdefault(head, []).append(_parse_element(rest))
            else:
                raise MalformedNetlist(f"unrecognised line: {line!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, MalformedNetlist):
                raise MalformedNetlist(f"line {lineno}: {exc}") from exc
            raise MalformedNetlist(f"line {lineno}: cannot parse {line!r}") from exc
    if dim is None or n_paths is None:
        raise MalformedNetlist("missing 'dim' or 'paths' header")
    stages = tuple(Stage(lab, tuple(els)) for lab, els in stage_elems.items())
    return OpticalNetlist(dim, n_paths, stages, metadata)


def _parse_element(tokens) -> Element:
    kind, *params = tokens
    kv = dict(p.split("=", 1) for p in params)
    d = {"kind": kind}
    if "angle" in kv:
        d["angle"] = float(kv["angle"])
    if "phase" in kv:
        d["phase"] = float(kv["phase"])
    if "label" in kv:
        d["label"] = kv["label"]
    if "path" in kv:
        d["path"] = int(kv["path"])
    if "paths" in kv:
        d["paths"] = [int(p) for p in kv["paths"].split(",")]
    return Element.from_dict(d)
