#!/usr/bin/env python3
"""From pixels to a NIQE score: MSCN field, distribution fits, distance.

Run from the repository root:  python3 demos/demo_quality_metrics.py
"""

from pathlib import Path

import cv2
import numpy as np

from hqcrop import imaging
from hqcrop.iqa import brisque, niqe, nss

DATA = Path(__file__).parent.parent / "tests" / "data"

img = imaging.load_image(DATA / "quality50" / "tile_00.png")
gray = imaging.to_luma(img)

print("1. The MSCN field normalizes each pixel by its local mean and deviation.")
field = nss.mscn(gray)
print(f"   field mean {field.mean():+.4f}, std {field.std():.4f} (roughly unit scale)\n")

print("2. A generalized Gaussian fit summarizes the field's shape:")
g = nss.estimate_ggd(field)
print(f"   alpha {g.alpha:.3f} (2 = Gaussian, smaller = heavier tails), sigma^2 {g.sigma_sq:.4f}\n")

print("3. Products of neighboring coefficients get asymmetric fits (4 orientations):")
for name, prod in zip("H V D1 D2".split(), nss.pairwise_products(field)):
    a = nss.estimate_aggd(prod)
    print(
        f"   {name:>2}: alpha {a.alpha:.3f}  beta_l {a.beta_left:.4f}  "
        f"beta_r {a.beta_right:.4f}  mean {a.mean_offset:+.4f}"
    )

print("\n4. 18 such features at two scales make the 36-vector NIQE works on.")
feats = brisque.features(gray)
print(f"   brisque-style feature vector: shape {feats.shape}, all finite: {np.all(np.isfinite(feats))}\n")

print("5. NIQE = distance between the image's feature statistics and a")
print("   pristine-corpus Gaussian model (lower is better):")
model = niqe.default_model()
score_sharp = niqe.score(img, model)
blurred = cv2.GaussianBlur(img, (13, 13), 3.0)
score_blur = niqe.score(blurred, model)
u8 = np.clip(np.round(img), 0, 255).astype(np.uint8)
_, enc = cv2.imencode(".jpg", u8[:, :, ::-1], [cv2.IMWRITE_JPEG_QUALITY, 10])
jpeg = cv2.imdecode(enc, cv2.IMREAD_COLOR)[:, :, ::-1].astype(np.float64)
score_jpeg = niqe.score(jpeg, model)
print(f"   original     : {score_sharp:6.3f}")
print(f"   blur sigma=3 : {score_blur:6.3f}")
print(f"   JPEG q=10    : {score_jpeg:6.3f}")
