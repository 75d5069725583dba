"""Decode detector score/geometry maps into page boxes and suppress the
duplicates, using hand-built maps for three words.
"""

import numpy as np

from handscribe.detect import DetectConfig, ScoreGeoMaps, decode_geometry, iou, nms

grid_h, grid_w = 20, 32
score = np.zeros((grid_h, grid_w))
geometry = np.zeros((5, grid_h, grid_w))


def plant(i, j, strength, d_top, d_right, d_bottom, d_left, theta=0.0):
    score[i, j] = strength
    geometry[:, i, j] = (d_top, d_right, d_bottom, d_left, theta)


# two confident words plus a weaker duplicate firing one cell to the left
plant(4, 6, 0.92, 6, 16, 6, 12)
plant(4, 5, 0.58, 6, 20, 6, 8)
plant(11, 20, 0.81, 7, 14, 5, 14, theta=0.12)

maps = ScoreGeoMaps(score=score, geometry=geometry)
raw = decode_geometry(maps, score_threshold=0.5)
print(f"{len(raw)} boxes above threshold:")
for box in raw:
    print(f"  center ({box.cx:6.1f},{box.cy:6.1f})  {box.w:4.0f}x{box.h:2.0f}"
          f"  angle {box.angle:+.2f}  score {box.score:.2f}")

print("\npairwise envelope IoU:")
for a in range(len(raw)):
    for b in range(a + 1, len(raw)):
        print(f"  box{a} vs box{b}: {iou(raw[a], raw[b]):.3f}")

kept = nms(raw, DetectConfig().iou_threshold)
print(f"\nafter suppression: {len(kept)} boxes")
for box in kept:
    print(f"  center ({box.cx:6.1f},{box.cy:6.1f})  score {box.score:.2f}")
