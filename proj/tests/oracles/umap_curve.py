"""Least-squares fit of the low-dimensional UMAP kernel 1 / (1 + a x^(2b))
to the target curve 1 for x < min_dist, exp(-(x - min_dist) / spread)
otherwise, sampled at 300 points on [0, 3 * spread]. Writes
tests/data/umap_curve_expected.json."""

import json
import pathlib

import numpy as np
from scipy.optimize import curve_fit


def fit(min_dist, spread):
    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(lambda x, a, b: 1.0 / (1.0 + a * x ** (2 * b)), xv, yv, p0=(1.0, 1.0), maxfev=20000)
    return {"min_dist": min_dist, "spread": spread, "a": float(a), "b": float(b)}


if __name__ == "__main__":
    cases = [fit(0.1, 1.0), fit(0.0, 1.0), fit(0.5, 1.0), fit(0.25, 2.0)]
    out = pathlib.Path(__file__).resolve().parents[1] / "data" / "umap_curve_expected.json"
    out.write_text(json.dumps(cases, indent=1) + "\n")
    print(cases)
