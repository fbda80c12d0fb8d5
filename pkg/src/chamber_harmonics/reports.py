"""Deterministic artifact writers and the run manifest."""
from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def fmt(value) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(value, (float, np.floating)):
        text = f"{float(value):.17g}"
        # keep integral floats recognisable as floats
        return text if any(c in text for c in ".eni") else text + ".0"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ArtifactWriter:
    """Writes CSV / key-value text into one directory and records every file."""

    def __init__(self, directory, formats=("csv", "txt")):
        self.directory = str(directory)
        self.formats = set(formats)
        self.artifacts = []
        os.makedirs(self.directory, exist_ok=True)
        if not os.access(self.directory, os.W_OK):
            raise PermissionError(f"output directory {self.directory} is not writable")

    def path(self, name):
        return os.path.join(self.directory, name)

    def register(self, name):
        if name not in self.artifacts:
            self.artifacts.append(name)

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return None
        with open(self.path(name), "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        self.register(name)
        return self.path(name)

    def text(self, name, body):
        if "txt" not in self.formats:
            return None
        with open(self.path(name), "w") as fh:
            fh.write(body)
        self.register(name)
        return self.path(name)

    def keyvalue(self, name, pairs):
        return self.text(name, "".join(f"{k}: {fmt(v)}\n" for k, v in pairs))

    def manifest(self, subcommand, config_digest, tolerances, results, version):
        body = {
            "subcommand": subcommand,
            "version": version,
            "config_sha256": config_digest,
            "tolerances": tolerances,
            "results": {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in results.items()},
            "artifacts": {name: sha256_file(self.path(name)) for name in sorted(self.artifacts)},
        }
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return body
