"""Bundled 8-bit test images (centre crops of public sample photographs
and textures; see ``tools/make_bundled_images.py``)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .image_io import GrayImage, load_image

__all__ = ["Sample", "bundled_samples", "load_sample"]


@dataclass(frozen=True)
class Sample:
    name: str
    path: Path
    size: int
    category: str

    @property
    def natural(self) -> bool:
        return self.category == "natural"

    def load(self) -> GrayImage:
        return load_image(self.path)


def _data_dir() -> Path:
    return Path(str(resources.files("dctrecover") / "data"))


def bundled_samples(category: str | None = None) -> list[Sample]:
    root = _data_dir()
    manifest = json.loads((root / "manifest.json").read_text())
    out = [
        Sample(name, root / f"{name}.pgm", info["size"], info["category"])
        for name, info in manifest.items()
    ]
    if category is not None:
        out = [s for s in out if s.category == category]
    return out


def load_sample(name: str) -> GrayImage:
    for s in bundled_samples():
        if s.name == name:
            return s.load()
    raise KeyError(f"no bundled sample named {name!r}")
