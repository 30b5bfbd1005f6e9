"""Pure-numpy split scan, the fallback for the compiled kernel.

Both implementations accumulate prefix sums sequentially over the caller's
canonical sort order and evaluate the gain with an identical expression tree,
so they return bit-identical results.
"""

from __future__ import annotations

import numpy as np


def scan_column(
    vals: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    lam: float,
    gamma: float,
    min_child_weight: float,
):
    """Best split of one presorted feature column.

    Candidates are the midpoints between consecutive distinct values; ties
    resolve to the lowest threshold.  Returns
    (pos, threshold, gain, g_left, h_left, g_total, h_total) where rows
    [0..pos] go left, or None when no candidate has positive gain and both
    children satisfy min_child_weight.
    """
    n = vals.shape[0]
    if n < 2:
        return None
    cg = np.cumsum(g)
    ch = np.cumsum(h)
    gt = cg[-1]
    ht = ch[-1]
    cut = np.nonzero(vals[:-1] < vals[1:])[0]
    if cut.size == 0:
        return None
    gl = cg[cut]
    hl = ch[cut]
    gr = gt - gl
    hr = ht - hl
    ok = (hl >= min_child_weight) & (hr >= min_child_weight)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - gt * gt / (ht + lam)) - gamma
    gain = np.where(ok, gain, -np.inf)
    best = int(np.argmax(gain))
    best_gain = float(gain[best])
    if not best_gain > 0.0:
        return None
    pos = int(cut[best])
    threshold = float((vals[pos] + vals[pos + 1]) / 2.0)
    return pos, threshold, best_gain, float(gl[best]), float(hl[best]), float(gt), float(ht)
