"""Independent brute-force oracles used to check the package implementations.

Everything here is deliberately written as plain loops over definitions, with
no code shared with the package paths it checks.
"""

import math

import numpy as np


def cosine_argmax_oracle(frame_rows: np.ndarray, caption_rows: np.ndarray) -> np.ndarray:
    """For each frame row, scan all caption rows and keep the first maximal
    cosine. Zero-norm rows score -inf against everything."""
    n = frame_rows.shape[0]
    out = np.zeros(n, dtype=np.int64)
    f_norms = [math.sqrt(float(np.dot(r, r))) for r in frame_rows]
    c_norms = [math.sqrt(float(np.dot(r, r))) for r in caption_rows]
    f_unit = [frame_rows[i] / f_norms[i] if f_norms[i] else frame_rows[i] for i in range(n)]
    c_unit = [caption_rows[j] / c_norms[j] if c_norms[j] else caption_rows[j] for j in range(n)]
    for t in range(n):
        best_j, best_sim = 0, -math.inf
        for j in range(n):
            if f_norms[t] == 0.0 or c_norms[j] == 0.0:
                sim = -math.inf
            else:
                sim = float(np.dot(f_unit[t], c_unit[j]))
            if sim > best_sim:
                best_sim, best_j = sim, j
        out[t] = best_j
    return out


def knn_refine_oracle(scores, text_rows, mean, precision, k):
    """Definition-level KNN refinement: self is a forced neighbor, the other
    k-1 slots go to smallest cosine distance with lower index on ties, and
    each neighbor contributes exp(-Mahalanobis) weight."""
    n = len(scores)
    norms = [math.sqrt(float(np.dot(r, r))) for r in text_rows]
    units = [text_rows[i] / norms[i] if norms[i] else text_rows[i] for i in range(n)]

    def cos_dist(a, b):
        return 1.0 - float(np.dot(units[a], units[b]))

    def maha(j):
        d = text_rows[j] - mean
        return math.sqrt(max(float(d @ precision @ d), 0.0))

    out = np.zeros(n)
    for t in range(n):
        ranked = sorted((j for j in range(n) if j != t), key=lambda j: (cos_dist(t, j), j))
        members = [t] + ranked[: k - 1]
        dms = [maha(j) for j in members]
        shift = min(dms)
        weights = [math.exp(-(d - shift)) for d in dms]
        total = sum(weights)
        out[t] = sum(w * scores[j] for w, j in zip(weights, members)) / total
    return out


def auc_pairwise_oracle(scores, labels) -> float:
    """Mann-Whitney by explicit pair counting with half credit for ties."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def ap_sweep_oracle(scores, labels) -> float:
    """Average precision by sweeping every distinct score as a threshold,
    from the highest down, computing precision and recall at >= threshold."""
    scores = list(map(float, scores))
    labels = list(map(int, labels))
    n_pos = sum(labels)
    thresholds = sorted(set(scores), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for th in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= th and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= th and y == 0)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def inverse_2x2(m: np.ndarray) -> np.ndarray:
    """Closed-form 2x2 matrix inverse."""
    (a, b), (c, d) = m
    det = a * d - b * c
    return np.array([[d, -b], [-c, a]]) / det
