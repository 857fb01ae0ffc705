"""Run manifests: enough provenance to re-run any pipeline stage bit-identically."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

ARTIFACT_VERSION = "1"


def sha256_file(path: str | Path) -> str:
    hasher = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


@dataclass
class RunManifest:
    command: str
    args: dict
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    artifact_version: str = ARTIFACT_VERSION
    package_version: str = ""

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def save(self, path: str | Path) -> None:
        doc = {
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "artifact_version": self.artifact_version,
            "package_version": self.package_version,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            command=doc["command"],
            args=doc["args"],
            seed=doc.get("seed"),
            inputs=doc.get("inputs", {}),
            outputs=doc.get("outputs", []),
            artifact_version=doc.get("artifact_version", ARTIFACT_VERSION),
            package_version=doc.get("package_version", ""),
        )

    def verify_inputs(self) -> list[str]:
        """Return the inputs whose on-disk content no longer matches."""
        return [p for p, digest in self.inputs.items() if sha256_file(p) != digest]
