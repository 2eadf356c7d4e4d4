#!/usr/bin/env python3
"""Squarification and center-priority NMS, step by step.

Run from the repository root:  python3 demos/demo_box_geometry.py
"""

from hqcrop.annotations import BBox
from hqcrop.boxgeom import center_priority_nms, iou, size_gate, squarify

IMG_W, IMG_H = 640, 480

print(f"Image is {IMG_W}x{IMG_H}; crops use the box's longer edge as side length.\n")

boxes = [
    BBox(60, 20, 240, 400),    # tall person near the left
    BBox(100, 30, 240, 400),   # heavy overlap with the first
    BBox(420, 48, 160, 384),   # second person on the right
    BBox(500, 300, 90, 150),   # far-away person, too small
]

crops = [squarify(b, IMG_W, IMG_H) for b in boxes]
for b, c in zip(boxes, crops):
    print(
        f"box ({b.x:5.0f},{b.y:5.0f},{b.w:3.0f}x{b.h:3.0f}) -> square "
        f"({c.x:5.1f},{c.y:5.1f}) side {c.side:5.1f}, center distance {c.center_distance:6.1f}"
    )

print("\nSize gate at min_side=384:")
survivors = []
for c in crops:
    keep = size_gate(c, 384)
    print(f"  side {c.side:5.1f}: {'keep' if keep else 'reject (too small)'}")
    if keep:
        survivors.append(c)

print("\nPairwise IoU of the surviving squares:")
for i, a in enumerate(survivors):
    for b in survivors[i + 1 :]:
        v = iou((a.x, a.y, a.side, a.side), (b.x, b.y, b.side, b.side))
        print(f"  ({a.x:5.1f},{a.y:5.1f}) vs ({b.x:5.1f},{b.y:5.1f}): IoU {v:.3f}")

kept = center_priority_nms(survivors, iou_threshold=0.45)
print(f"\nNMS (threshold 0.45) keeps {len(kept)} of {len(survivors)} crops;")
print("the crop closest to the image center wins each overlapping cluster:")
for c in kept:
    print(f"  kept ({c.x:5.1f},{c.y:5.1f}) side {c.side:5.1f}, distance {c.center_distance:6.1f}")
