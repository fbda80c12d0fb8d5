"""Run configuration: a YAML file with geometry, truncation, task and output blocks.

Every validation error carries the line of the offending entry so the CLI
can point into the file.
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field

import yaml

from .cross_section import Grid1D, Grid2D, Interval, Rectangle
from .errors import GeometryError, ValidationError

SECTION_KINDS = {
    "Interval": (Interval, ("length",)),
    "Rectangle": (Rectangle, ("width", "height")),
    "Grid1D": (Grid1D, ("length", "n")),
    "Grid2D": (Grid2D, ("width", "height", "nx", "ny")),
}

BLOCKS = {
    "geometry": {"chambers", "offsets", "middle_lengths"},
    "truncation": {"K", "K_L", "X", "h"},
    "task": None,  # free-form, read per subcommand
    "output": {"directory", "formats"},
}

DEFAULTS = {
    "truncation": {"K": 32, "K_L": None, "X": 8.0, "h": 1 / 128},
    "task": {},
    "output": {"directory": "out", "formats": ["csv", "txt"]},
}


def _load_with_lines(text):
    """Parse YAML into plain data plus a {path tuple: line} map."""
    loader = yaml.SafeLoader(text)
    try:
        root = loader.get_single_node()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ValidationError(f"YAML syntax: {getattr(exc, 'problem', exc)}",
                              None if mark is None else mark.line + 1) from exc
    lines = {}

    def build(node, path):
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = loader.construct_object(k)
                if key in out:
                    raise ValidationError(f"duplicate key {key!r}", k.start_mark.line + 1)
                out[key] = build(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [build(v, path + (i,)) for i, v in enumerate(node.value)]
        return loader.construct_object(node)

    if root is None:
        return {}, lines
    try:
        data = build(root, ())
    finally:
        loader.dispose()
    if not isinstance(data, dict):
        raise ValidationError("top level must be a mapping", 1)
    return data, lines


@dataclass
class RunConfig:
    chambers: list  # section kinds, narrowest (leftmost) first
    offsets: list
    middle_lengths: list | None
    K: int
    K_L: int | None
    X: float
    h: float
    task: dict
    output_dir: str
    formats: list
    raw: dict = field(repr=False, default_factory=dict)
    digest: str = ""
    lines: dict = field(repr=False, default_factory=dict)

    def line(self, *path):
        """Best known line for a dotted path, walking up to the nearest parent."""
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return None

    def task_value(self, key, default=None, kind=None):
        value = self.task.get(key, default)
        if kind is not None and value is not None:
            try:
                value = kind(value)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"task.{key}: expected {kind.__name__}, got {value!r}",
                                      self.line("task", key)) from exc
        return value


def apply_override(data: dict, assignment: str) -> None:
    """Apply one ``dotted.key=value`` override (value parsed as YAML)."""
    if "=" not in assignment:
        raise ValidationError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ValidationError(f"--set has an empty key segment in {key!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ValidationError(f"--set {key}: unparsable value {raw!r}") from exc
    node = data
    for p in parts[:-1]:
        if isinstance(node, list):
            try:
                node = node[int(p)]
            except (ValueError, IndexError) as exc:
                raise ValidationError(f"--set {key}: no list entry {p!r}") from exc
            continue
        node = node.setdefault(p, {})
        if not isinstance(node, (dict, list)):
            raise ValidationError(f"--set {key}: {p!r} is not a block")
    if isinstance(node, list):
        try:
            node[int(parts[-1])] = value
        except (ValueError, IndexError) as exc:
            raise ValidationError(f"--set {key}: no list entry {parts[-1]!r}") from exc
    else:
        node[parts[-1]] = value


def _number(value, where, line, integer=False, positive=True, allow_none=False):
    if value is None and allow_none:
        return None
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        raise ValidationError(f"{where}: expected {'an integer' if integer else 'a number'}, got {value!r}", line)
    if positive and value <= 0:
        raise ValidationError(f"{where}: must be positive, got {value!r}", line)
    return value if integer else float(value)


def _section(entry, idx, lines):
    path = ("geometry", "chambers", idx)
    line = lines.get(path)
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ValidationError(f"chamber {idx}: expected a mapping with a 'kind'", line)
    kind = entry["kind"]
    if kind not in SECTION_KINDS:
        raise ValidationError(f"chamber {idx}: unknown kind {kind!r} (expected one of {sorted(SECTION_KINDS)})",
                              lines.get(path + ("kind",), line))
    cls, params = SECTION_KINDS[kind]
    extra = set(entry) - set(params) - {"kind"}
    if extra:
        bad = sorted(extra)[0]
        raise ValidationError(f"chamber {idx}: unknown parameter {bad!r}", lines.get(path + (bad,), line))
    args = []
    for p in params:
        if p not in entry:
            raise ValidationError(f"chamber {idx}: missing parameter {p!r}", line)
        args.append(_number(entry[p], f"chamber {idx}.{p}", lines.get(path + (p,), line),
                            integer=p in ("n", "nx", "ny")))
    try:
        return cls(*args)
    except GeometryError as exc:
        raise ValidationError(f"chamber {idx}: {exc}", line) from exc


def validate(data: dict, lines: dict | None = None, digest: str = "") -> RunConfig:
    lines = lines or {}
    for block, value in data.items():
        if block not in BLOCKS:
            raise ValidationError(f"unknown block {block!r}", lines.get((block,)))
        if not isinstance(value, dict):
            raise ValidationError(f"block {block!r} must be a mapping", lines.get((block,)))
        allowed = BLOCKS[block]
        if allowed is not None:
            for key in value:
                if key not in allowed:
                    raise ValidationError(f"unknown key {block}.{key}", lines.get((block, key)))
    merged = copy.deepcopy(DEFAULTS)
    for block, value in data.items():
        merged.setdefault(block, {}).update(value)

    geo = merged.get("geometry")
    if not geo or "chambers" not in geo:
        raise ValidationError("geometry.chambers is required", lines.get(("geometry",)))
    entries = geo["chambers"]
    if not isinstance(entries, list) or not entries:
        raise ValidationError("geometry.chambers must be a non-empty list", lines.get(("geometry", "chambers")))
    chambers = [_section(e, i, lines) for i, e in enumerate(entries)]
    offsets = geo.get("offsets")
    if offsets is None:
        offsets = [None] * max(0, len(chambers) - 1)
    if not isinstance(offsets, list) or len(offsets) != max(0, len(chambers) - 1):
        raise ValidationError(f"geometry.offsets needs {len(chambers) - 1} entries", lines.get(("geometry", "offsets")))
    for j, o in enumerate(offsets):
        line = lines.get(("geometry", "offsets", j))
        if o is None:
            continue
        comps = o if isinstance(o, list) else [o]
        if len(comps) != chambers[j].dim:
            raise ValidationError(f"offset {j} needs {chambers[j].dim} component(s)", line)
        for c in comps:
            _number(c, f"offset {j}", line, positive=False)
    middle = geo.get("middle_lengths")
    if middle is not None:
        if not isinstance(middle, list) or len(middle) != max(0, len(chambers) - 2):
            raise ValidationError(f"geometry.middle_lengths needs {max(0, len(chambers) - 2)} entries",
                                  lines.get(("geometry", "middle_lengths")))
        middle = [_number(v, "middle length", lines.get(("geometry", "middle_lengths", i)))
                  for i, v in enumerate(middle)]

    tr = merged["truncation"]
    K = _number(tr["K"], "truncation.K", lines.get(("truncation", "K")), integer=True)
    K_L = _number(tr["K_L"], "truncation.K_L", lines.get(("truncation", "K_L")), integer=True, allow_none=True)
    X = _number(tr["X"], "truncation.X", lines.get(("truncation", "X")))
    h = _number(tr["h"], "truncation.h", lines.get(("truncation", "h")))

    out = merged["output"]
    formats = out["formats"]
    if not isinstance(formats, list) or not set(formats) <= {"csv", "txt"}:
        raise ValidationError("output.formats must list 'csv' and/or 'txt'", lines.get(("output", "formats")))
    if not isinstance(out["directory"], str) or not out["directory"]:
        raise ValidationError("output.directory must be a path", lines.get(("output", "directory")))
    return RunConfig(chambers, offsets, middle, K, K_L, X, h, dict(merged["task"]), out["directory"],
                     formats, merged, digest, lines)


def load_config(path, overrides=()) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
    data, lines = _load_with_lines(blob.decode("utf-8"))
    digest = hashlib.sha256(blob).hexdigest()
    if overrides:
        for ov in overrides:
            apply_override(data, ov)
            # overridden entries no longer sit on a file line
            path_ = tuple(ov.split("=", 1)[0].strip().split("."))
            lines = {k: v for k, v in lines.items() if k[:len(path_)] != path_}
        digest = hashlib.sha256(blob + "\n".join(overrides).encode()).hexdigest()
    return validate(data, lines, digest)
