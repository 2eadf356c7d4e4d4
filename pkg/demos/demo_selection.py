#!/usr/bin/env python3
"""Score standardization and top-third selection on a tiny table.

Run from the repository root:  python3 demos/demo_selection.py
"""

import numpy as np

from hqcrop.selection import Direction, MetricSpec, ScoreTable, normalize, select_top

rng = np.random.default_rng(7)
n = 9
table = ScoreTable(
    crop_ids=[f"crop{i}" for i in range(n)],
    columns={
        "niqe": rng.uniform(2.5, 8.0, n),       # lower is better
        "clipiqa": rng.uniform(0.2, 0.9, n),     # higher is better
    },
)

specs = [
    MetricSpec("niqe", Direction.LOWER_BETTER),
    MetricSpec("clipiqa", Direction.HIGHER_BETTER, threshold=0.35),
]

print("Raw scores (niqe lower-better gets negated before standardizing):\n")
print(f"{'crop':<7} {'niqe':>7} {'clipiqa':>8}")
for i, cid in enumerate(table.crop_ids):
    print(f"{cid:<7} {table.columns['niqe'][i]:>7.3f} {table.columns['clipiqa'][i]:>8.3f}")

normed = normalize(table, specs)
print("\nEach metric column is standardized (population mean 0, std 1) and the")
print("aggregate is the average of the per-metric z-scores:\n")
print(f"{'crop':<7} {'z_niqe':>8} {'z_clipiqa':>10} {'aggregate':>10}")
for i, cid in enumerate(normed.crop_ids):
    print(
        f"{cid:<7} {normed.columns['z_niqe'][i]:>+8.3f} "
        f"{normed.columns['z_clipiqa'][i]:>+10.3f} {normed.columns['aggregate'][i]:>+10.3f}"
    )

manifest = select_top(normed, fraction=1 / 3, specs=specs)
print(f"\nTop third of {n} rows = {n // 3} slots; a clipiqa threshold of 0.35 must")
print("also hold (failures are not back-filled from below the cut):\n")
for e in manifest.entries:
    extra = f" [failed {e.failed_metric}]" if e.failed_metric else ""
    print(f"rank {e.rank:>2}  {e.crop_id:<7} aggregate {e.aggregate:+.3f}  -> {e.status.value}{extra}")
