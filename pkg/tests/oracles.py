"""Independent reference implementations used as test oracles. These stay
deliberately naive (path enumeration, full DP tables, O(n^2) scans) and
never call into the code they check."""

import itertools

import numpy as np


def softmax(logits):
    x = np.asarray(logits, dtype=np.float64)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def collapse(path, blank):
    out = []
    prev = None
    for cls in path:
        if cls != prev and cls != blank:
            out.append(cls)
        prev = cls
    return tuple(out)


def all_labelings(num_frames, num_classes, blank):
    """Every labeling reachable by collapsing some frame path."""
    seen = set()
    for path in itertools.product(range(num_classes), repeat=num_frames):
        seen.add(collapse(path, blank))
    return sorted(seen)


def label_probability(logits, label, blank):
    """Brute-force sum of all frame paths collapsing to `label`."""
    probs = softmax(logits)
    num_frames, num_classes = probs.shape
    target = tuple(label)
    total = 0.0
    for path in itertools.product(range(num_classes), repeat=num_frames):
        if collapse(path, blank) != target:
            continue
        p = 1.0
        for t, cls in enumerate(path):
            p *= probs[t, cls]
        total += p
    return total


def map_labeling(logits, blank):
    """Exact MAP labeling by enumeration; ties break lexicographically."""
    probs = softmax(logits)
    num_frames, num_classes = probs.shape
    agg = {}
    for path in itertools.product(range(num_classes), repeat=num_frames):
        key = collapse(path, blank)
        p = 1.0
        for t, cls in enumerate(path):
            p *= probs[t, cls]
        agg[key] = agg.get(key, 0.0) + p
    return sorted(agg.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def central_difference(fn, x, h=1e-5, samples=None):
    """Central finite differences of scalar fn at selected flat indices of
    x; returns (indices, derivative estimates)."""
    x = np.asarray(x, dtype=np.float64)
    idx = range(x.size) if samples is None else samples
    grads = []
    taken = []
    for flat in idx:
        xp = x.copy()
        xm = x.copy()
        xp.flat[flat] += h
        xm.flat[flat] -= h
        grads.append((fn(xp) - fn(xm)) / (2.0 * h))
        taken.append(flat)
    return taken, np.array(grads)


def max_relative_error(analytic, numeric, floor=1e-7):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float((np.abs(analytic - numeric)[mask] / scale[mask]).max())


def dp_levenshtein(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[-1][-1]
