"""Pure NumPy tree growers; reference twin of the compiled ``_tree_core``.

Same node order, same RNG stream, same floating-point operation order, so
both backends grow identical trees.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


class _SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


def _threshold(a: float, b: float) -> float:
    t = a / 2.0 + b / 2.0
    if t >= b or t < a:
        t = a
    return t


def _finish(feature, threshold, left, right, value):
    n = len(feature)
    return (
        np.asarray(feature, dtype=np.intp).reshape(n),
        np.asarray(threshold, dtype=np.float64).reshape(n),
        np.asarray(left, dtype=np.intp).reshape(n),
        np.asarray(right, dtype=np.intp).reshape(n),
        np.asarray(value, dtype=np.float64),
    )


def grow_gini_tree(X, y, samples, n_classes, max_depth, max_features, min_samples_split, seed):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    d = X.shape[1]
    rng = _SplitMix64(seed)
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [None]
    stack = [(0, np.array(samples, dtype=np.intp), 0)]
    while stack:
        node, seg, depth = stack.pop()
        n = seg.size
        counts = np.bincount(y[seg], minlength=n_classes).astype(np.float64)
        value[node] = counts / n
        if (counts == n).any() or n < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue
        onehot = np.eye(n_classes)[y[seg]]

        feats = list(range(d))
        best_f, best_proxy, best_thr = -1, -1.0, 0.0
        found = 0
        for k in range(d):
            if found >= max_features:
                break
            j = k + rng.next() % (d - k)
            feats[k], feats[j] = feats[j], feats[k]
            f = feats[k]
            vals = X[seg, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            if sv[0] == sv[-1]:
                continue
            found += 1
            cl = np.cumsum(onehot[order], axis=0)[:-1]
            sq_left = np.sum(cl * cl, axis=1)
            cr = counts - cl
            sq_right = np.sum(cr * cr, axis=1)
            nl = np.arange(1, n, dtype=np.float64)
            proxy = sq_left / nl + sq_right / (n - nl)
            valid = sv[1:] > sv[:-1]
            proxy = np.where(valid, proxy, -np.inf)
            i = int(np.argmax(proxy))
            if proxy[i] > best_proxy:
                best_proxy = float(proxy[i])
                best_f = f
                best_thr = _threshold(float(sv[i]), float(sv[i + 1]))
        if best_f < 0:
            continue
        mask = X[seg, best_f] <= best_thr
        li, ri = len(feature), len(feature) + 1
        feature[node], threshold[node], left[node], right[node] = best_f, best_thr, li, ri
        feature += [-1, -1]
        threshold += [0.0, 0.0]
        left += [-1, -1]
        right += [-1, -1]
        value += [None, None]
        stack.append((ri, seg[~mask], depth + 1))
        stack.append((li, seg[mask], depth + 1))
    return _finish(feature, threshold, left, right, np.vstack(value))


def grow_newton_tree(X, grad, hess, samples, max_depth, reg_lambda, min_child_weight):
    X = np.ascontiguousarray(X, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    d = X.shape[1]
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    stack = [(0, np.array(samples, dtype=np.intp), 0)]
    while stack:
        node, seg, depth = stack.pop()
        n = seg.size
        G = float(np.cumsum(grad[seg])[-1])
        H = float(np.cumsum(hess[seg])[-1])
        value[node] = -G / (H + reg_lambda)
        if n < 2 or depth >= max_depth or H < 2.0 * min_child_weight:
            continue
        parent = G * G / (H + reg_lambda)
        best_f, best_gain, best_thr = -1, 1e-6, 0.0
        for f in range(d):
            vals = X[seg, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            if sv[0] == sv[-1]:
                continue
            s = seg[order]
            GL = np.cumsum(grad[s])[:-1]
            HL = np.cumsum(hess[s])[:-1]
            GR = G - GL
            HR = H - HL
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent
            ok = (sv[1:] > sv[:-1]) & (HL >= min_child_weight) & (HR >= min_child_weight)
            gain = np.where(ok, gain, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best_gain:
                best_gain = float(gain[i])
                best_f = f
                best_thr = _threshold(float(sv[i]), float(sv[i + 1]))
        if best_f < 0:
            continue
        mask = X[seg, best_f] <= best_thr
        li, ri = len(feature), len(feature) + 1
        feature[node], threshold[node], left[node], right[node] = best_f, best_thr, li, ri
        feature += [-1, -1]
        threshold += [0.0, 0.0]
        left += [-1, -1]
        right += [-1, -1]
        value += [0.0, 0.0]
        stack.append((ri, seg[~mask], depth + 1))
        stack.append((li, seg[mask], depth + 1))
    return _finish(feature, threshold, left, right, np.asarray(value))


def apply_tree(X, feature, threshold, left, right):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.intp)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
