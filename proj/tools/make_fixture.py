#!/usr/bin/env python3
"""Regenerate the bundled fixture dataset in data/fixture.

Twelve small synthetic scenes with polygon labels, a prediction file with
a known mix of hits, misses and false alarms, and a settings file. The
output is deterministic; rerunning produces identical bytes.
"""

import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "data" / "fixture"
CLASSES = ["bottle", "can", "wrapper"]
WIDTH, HEIGHT = 64, 48


def star(rng, cx, cy, rmin, rmax, n):
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
    return [(cx + r * math.cos(a), cy + r * math.sin(a))
            for a, r in ((a, rng.uniform(rmin, rmax)) for a in angles)]


def clamp_poly(poly):
    return [(min(max(x, 0.0), WIDTH), min(max(y, 0.0), HEIGHT)) for x, y in poly]


def inside(poly, px, py):
    hit = False
    j = len(poly) - 1
    for i in range(len(poly)):
        (xi, yi), (xj, yj) = poly[i], poly[j]
        if (yi > py) != (yj > py):
            xc = (xj - xi) * (py - yi) / (yj - yi) + xi
            if px < xc:
                hit = not hit
        j = i
    return hit


def rasterize(poly):
    return [[1 if inside(poly, x + 0.5, y + 0.5) else 0 for x in range(WIDTH)] for y in range(HEIGHT)]


def rle(mask):
    counts, current, run = [], 0, 0
    for row in mask:
        for v in row:
            if v == current:
                run += 1
            else:
                counts.append(run)
                current, run = v, 1
    counts.append(run)
    return {"h": HEIGHT, "w": WIDTH, "counts": counts}


def bbox(poly):
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return [round(min(xs), 3), round(min(ys), 3), round(max(xs), 3), round(max(ys), 3)]


def write_ppm(path, objects, rng):
    pixels = bytearray()
    base = [rng.randrange(40, 90) for _ in range(3)]
    masks = [(rasterize(poly), cls) for poly, cls in objects]
    for y in range(HEIGHT):
        for x in range(WIDTH):
            colour = list(base)
            for m, cls in masks:
                if m[y][x]:
                    colour = [200 if c == cls else 60 for c in range(3)]
            pixels.extend(min(255, c + rng.randrange(0, 16)) for c in colour)
    path.write_bytes(b"P6\n%d %d\n255\n" % (WIDTH, HEIGHT) + bytes(pixels))


def main():
    rng = random.Random(20240517)
    (ROOT / "images").mkdir(parents=True, exist_ok=True)
    (ROOT / "labels").mkdir(parents=True, exist_ok=True)
    (ROOT / "classes.txt").write_text("\n".join(CLASSES) + "\n")
    predictions = {}
    for idx in range(12):
        image_id = "scene_%02d" % idx
        objects = []
        for _ in range(idx % 3 + 1):
            cx, cy = rng.uniform(12, WIDTH - 12), rng.uniform(10, HEIGHT - 10)
            poly = clamp_poly(star(rng, cx, cy, 4, 10, rng.randrange(5, 9)))
            objects.append((poly, rng.randrange(len(CLASSES))))
        write_ppm(ROOT / "images" / (image_id + ".ppm"), objects, rng)
        lines = []
        for poly, cls in objects:
            coords = " ".join("%.6f %.6f" % (x / WIDTH, y / HEIGHT) for x, y in poly)
            lines.append("%d %s" % (cls, coords))
        (ROOT / "labels" / (image_id + ".txt")).write_text("\n".join(lines) + "\n")

        records = []
        for k, (poly, cls) in enumerate(objects):
            # Every fourth object is missed entirely.
            if (idx + k) % 4 == 3:
                continue
            jitter = 0.6 if idx % 2 else 1.8
            moved = clamp_poly([(x + rng.uniform(-jitter, jitter), y + rng.uniform(-jitter, jitter))
                                for x, y in poly])
            # Every fifth kept object is labelled with the wrong class.
            pred_cls = (cls + 1) % len(CLASSES) if (idx + k) % 5 == 4 else cls
            records.append({"class_id": pred_cls, "score": round(rng.uniform(0.55, 0.99), 4),
                            "box": bbox(moved), "mask": rle(rasterize(moved))})
        if idx % 3 == 1:
            ghost = clamp_poly(star(rng, rng.uniform(8, 20), rng.uniform(8, 20), 3, 6, 6))
            records.append({"class_id": rng.randrange(len(CLASSES)), "score": round(rng.uniform(0.6, 0.9), 4),
                            "box": bbox(ghost), "mask": rle(rasterize(ghost))})
        if idx % 4 == 0:
            # Low-confidence noise below the default threshold.
            poly = objects[0][0]
            records.append({"class_id": objects[0][1], "score": 0.2, "box": bbox(poly),
                            "mask": rle(rasterize(poly))})
        predictions[image_id] = records
    (ROOT / "predictions.json").write_text(json.dumps(predictions, indent=2) + "\n")


if __name__ == "__main__":
    main()
