"""Regenerate dnn_noncp5.json: a 5x5 doubly nonnegative matrix that is not completely positive.

Seeded search over random nonnegative matrices supported on a 5-cycle plus
small chord weights; the first PSD candidate that a Horn-type copositive
witness separates is kept.  Run from the repository root.
"""

import json
from pathlib import Path

import numpy as np

from covgap.cones import cp_refute, is_psd


def search(seed: int = 2024, tries: int = 100000) -> np.ndarray:
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        R = np.diag(rng.uniform(1.0, 2.0, 5))
        for i in range(5):
            j = (i + 1) % 5
            R[i, j] = R[j, i] = rng.uniform(0.3, 1.2)
            k = (i + 2) % 5
            R[i, k] = R[k, i] = rng.uniform(0.0, 0.05)
        R = np.round(R, 3)
        if not is_psd(R).member:
            continue
        w = cp_refute(R)
        if w is not None and w.family == "horn" and w.inner_product < -1e-3:
            return R
    raise RuntimeError("no fixture found")


if __name__ == "__main__":
    R = search()
    out = Path(__file__).with_name("dnn_noncp5.json")
    out.write_text(json.dumps({"entries": R.tolist()}, indent=1) + "\n")
    print(R)
