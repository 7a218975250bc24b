"""Small descriptive-statistics helpers shared by reports"""
from typing import Dict

import numpy as np

FIVE_NUMBER_LABELS = ("Min.", "1st Qu.", "Median", "3rd Qu.", "Max.")


def five_number_summary(values) -> Dict[str, float]:
    """Min, quartiles and max of the finite entries (all NaN when none are finite)."""
    data = np.asarray(values, dtype=float)
    data = data[np.isfinite(data)]
    if data.size == 0:
        return {label: float("nan") for label in FIVE_NUMBER_LABELS}
    points = np.percentile(data, [0, 25, 50, 75, 100])
    return dict(zip(FIVE_NUMBER_LABELS, (float(p) for p in points)))
