"""Record frontend test fixtures from the real segmentation service.

Drives the HTTP API in-process (no sockets), captures every payload the
browser client would exchange, and cross-checks that the returned mask is
byte-identical to the direct library path for the same scribbles and config.
Output lands in frontend/tests/fixtures/.

Run from the repository root:  python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

from geoseg.imagecore import ImageBuffer, ScribbleMap, encode_mask_png
from geoseg.segmenter import config_from_dict, segment
from geoseg.service import create_app

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

IMAGE_SIZE = 48
OVERRIDES = {"superpixels": 32}
FG_POINTS = [[10, 24], [11, 24], [12, 24], [13, 24]]
BG_POINTS = [[35, 24], [36, 24], [37, 24], [38, 24]]
# Radius 0.4 covers exactly the pixel under each integer-coordinate point,
# so the sidecar scribble map is reproducible without the rasterizer.
RADIUS = 0.4


def fixture_image() -> ImageBuffer:
    px = np.zeros((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
    px[:, : IMAGE_SIZE // 2] = (40, 90, 200)
    px[:, IMAGE_SIZE // 2 :] = (230, 200, 60)
    return ImageBuffer(px)


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    img = fixture_image()
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img.pixels)).save(buf, format="PNG")
    image_png = buf.getvalue()

    strokes = [
        {"label": "fg", "points": FG_POINTS, "radius": RADIUS},
        {"label": "bg", "points": BG_POINTS, "radius": RADIUS},
    ]

    client = TestClient(create_app())
    created = client.post("/sessions", files={"image": ("img.png", image_png)})
    created.raise_for_status()
    session = created.json()
    counts = client.post(
        f"/sessions/{session['id']}/scribbles", json={"strokes": strokes}
    )
    counts.raise_for_status()
    segmented = client.post(
        f"/sessions/{session['id']}/segment", json=OVERRIDES
    )
    segmented.raise_for_status()
    body = segmented.json()
    mask_png = base64.b64decode(body["mask_png"])

    labels = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=np.uint8)
    for x, y in FG_POINTS:
        labels[y, x] = 1
    for x, y in BG_POINTS:
        labels[y, x] = 2
    state = segment(img, ScribbleMap(labels), config_from_dict(OVERRIDES))
    library_mask = encode_mask_png(state.mask)
    if library_mask != mask_png:
        raise SystemExit("service mask differs from the library mask")

    (FIXTURE_DIR / "image.png").write_bytes(image_png)
    (FIXTURE_DIR / "mask.png").write_bytes(mask_png)
    (FIXTURE_DIR / "exchange.json").write_text(
        json.dumps(
            {
                "session": session,
                "strokes": strokes,
                "seed_counts": counts.json(),
                "overrides": OVERRIDES,
                "stats": body["stats"],
                "mask_png_base64": body["mask_png"],
            },
            indent=2,
        )
        + "\n"
    )
    print(f"fixtures written to {FIXTURE_DIR} (mask {len(mask_png)} bytes, "
          f"seeds {counts.json()})")


if __name__ == "__main__":
    main()
