"""Regenerate the bundled test images from scikit-image's sample data.

Colour images are converted to luminance.  Every image is a centre crop
at native resolution (no resampling).  Run from the repository root:

    python tools/make_bundled_images.py
"""

import json
from pathlib import Path

import numpy as np
from skimage import color, data

OUT = Path(__file__).resolve().parents[1] / "src" / "dctrecover" / "data"

# (output name, sample name, crop size, category)
IMAGES = [
    ("camera", "camera", 128, "natural"),
    ("camera_64", "camera", 64, "natural"),
    ("camera_256", "camera", 256, "natural"),
    ("astronaut", "astronaut", 128, "natural"),
    ("coffee", "coffee", 128, "natural"),
    ("chelsea", "chelsea", 128, "natural"),
    ("rocket", "rocket", 128, "natural"),
    ("moon", "moon", 128, "natural"),
    ("coins", "coins", 128, "natural"),
    ("clock", "clock", 128, "natural"),
    ("cell", "cell", 128, "natural"),
    ("microaneurysms", "microaneurysms", 96, "natural"),
    ("retina", "retina", 128, "natural"),
    ("hubble", "hubble_deep_field", 128, "natural"),
    ("ihc", "immunohistochemistry", 128, "natural"),
    ("brick", "brick", 128, "texture"),
    ("grass", "grass", 128, "texture"),
    ("gravel", "gravel", 128, "texture"),
    ("page", "page", 128, "document"),
    ("text", "text", 128, "document"),
]


def gray(a):
    if a.ndim == 3:
        a = np.round(color.rgb2gray(a[..., :3]) * 255).astype(np.uint8)
    return a


def centre_crop(a, size):
    h, w = a.shape
    top, left = (h - size) // 2, (w - size) // 2
    return a[top : top + size, left : left + size]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for name, sample, size, category in IMAGES:
        a = centre_crop(gray(getattr(data, sample)()), size)
        header = f"P5\n{size} {size}\n255\n".encode()
        (OUT / f"{name}.pgm").write_bytes(header + a.astype(np.uint8).tobytes())
        manifest[name] = {"source": sample, "size": size, "category": category}
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
