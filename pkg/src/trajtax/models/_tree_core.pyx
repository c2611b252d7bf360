# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree growers. Must stay bit-identical to ``_tree_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

ctypedef cnp.intp_t intp


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline bint _less(double va, intp pa, double vb, intp pb) noexcept nogil:
    return va < vb or (va == vb and pa < pb)


cdef void _sort(double* v, intp* p, intp n) noexcept nogil:
    # quicksort on (value, position); keys are unique so the order is canonical
    cdef intp i, j, mid
    cdef double pv, tv
    cdef intp pp, tp
    while n > 16:
        mid = n // 2
        if _less(v[mid], p[mid], v[0], p[0]):
            v[0], v[mid] = v[mid], v[0]
            p[0], p[mid] = p[mid], p[0]
        if _less(v[n - 1], p[n - 1], v[0], p[0]):
            v[0], v[n - 1] = v[n - 1], v[0]
            p[0], p[n - 1] = p[n - 1], p[0]
        if _less(v[n - 1], p[n - 1], v[mid], p[mid]):
            v[mid], v[n - 1] = v[n - 1], v[mid]
            p[mid], p[n - 1] = p[n - 1], p[mid]
        pv = v[mid]
        pp = p[mid]
        i = 0
        j = n - 1
        while True:
            while _less(v[i], p[i], pv, pp):
                i += 1
            while _less(pv, pp, v[j], p[j]):
                j -= 1
            if i >= j:
                break
            v[i], v[j] = v[j], v[i]
            p[i], p[j] = p[j], p[i]
            i += 1
            j -= 1
        # recurse on the smaller side
        if j + 1 < n - j - 1:
            _sort(v, p, j + 1)
            v += j + 1
            p += j + 1
            n -= j + 1
        else:
            _sort(v + j + 1, p + j + 1, n - j - 1)
            n = j + 1
    for i in range(1, n):
        tv = v[i]
        tp = p[i]
        j = i - 1
        while j >= 0 and _less(tv, tp, v[j], p[j]):
            v[j + 1] = v[j]
            p[j + 1] = p[j]
            j -= 1
        v[j + 1] = tv
        p[j + 1] = tp


cdef inline double _threshold(double a, double b) noexcept nogil:
    cdef double t = a / 2.0 + b / 2.0
    if t >= b or t < a:
        t = a
    return t


def grow_gini_tree(const double[:, ::1] X, const intp[::1] y, const intp[::1] samples,
                   int n_classes, int max_depth, int max_features, int min_samples_split,
                   uint64_t seed):
    """Grow a CART classification tree on ``X[samples]``.

    Returns ``(feature, threshold, left, right, value)``; leaves have
    ``feature == -1`` and ``value`` holds class proportions.
    """
    cdef intp m = samples.shape[0]
    cdef intp d = X.shape[1]
    cdef intp cap = 2 * m + 1
    feature_a = np.full(cap, -1, dtype=np.intp)
    threshold_a = np.zeros(cap, dtype=np.float64)
    left_a = np.full(cap, -1, dtype=np.intp)
    right_a = np.full(cap, -1, dtype=np.intp)
    value_a = np.zeros((cap, n_classes), dtype=np.float64)
    cdef intp[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef intp[::1] left = left_a
    cdef intp[::1] right = right_a
    cdef double[:, ::1] value = value_a

    idx_a = np.array(samples, dtype=np.intp)
    cdef intp[::1] idx = idx_a
    cdef intp[::1] tmp = np.empty(m, dtype=np.intp)
    cdef double[::1] vals = np.empty(m, dtype=np.float64)
    cdef intp[::1] pos = np.empty(m, dtype=np.intp)
    cdef intp[::1] feats = np.empty(d, dtype=np.intp)
    cdef double[::1] cnt_total = np.zeros(n_classes, dtype=np.float64)
    cdef double[::1] cnt_left = np.zeros(n_classes, dtype=np.float64)
    cdef intp[:, ::1] stack = np.empty((cap, 4), dtype=np.intp)

    cdef uint64_t state = seed
    cdef intp n_nodes = 1, top = 0
    cdef intp node, start, end, depth, n, i, k, c, f, pos_i, j, found, nl, nr
    cdef intp best_f, li, ri
    cdef double best_proxy, sq_total, sq_left, sq_right, proxy, best_thr, thr
    cdef bint pure

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    with nogil:
        while top > 0:
            top -= 1
            node = stack[top, 0]
            start = stack[top, 1]
            end = stack[top, 2]
            depth = stack[top, 3]
            n = end - start

            for c in range(n_classes):
                cnt_total[c] = 0.0
            for i in range(start, end):
                cnt_total[y[idx[i]]] += 1.0
            pure = False
            for c in range(n_classes):
                value[node, c] = cnt_total[c] / n
                if cnt_total[c] == n:
                    pure = True
            if pure or n < min_samples_split or (max_depth >= 0 and depth >= max_depth):
                continue

            sq_total = 0.0
            for c in range(n_classes):
                sq_total += cnt_total[c] * cnt_total[c]

            for k in range(d):
                feats[k] = k
            best_f = -1
            best_proxy = -1.0
            best_thr = 0.0
            found = 0
            for k in range(d):
                if found >= max_features:
                    break
                j = k + <intp>(_next(&state) % <uint64_t>(d - k))
                f = feats[j]
                feats[j] = feats[k]
                feats[k] = f

                for i in range(n):
                    vals[i] = X[idx[start + i], f]
                    pos[i] = i
                _sort(&vals[0], &pos[0], n)
                if vals[0] == vals[n - 1]:
                    continue
                found += 1

                for c in range(n_classes):
                    cnt_left[c] = 0.0
                sq_left = 0.0
                sq_right = sq_total
                for i in range(n - 1):
                    c = y[idx[start + pos[i]]]
                    sq_left += 2.0 * cnt_left[c] + 1.0
                    sq_right -= 2.0 * (cnt_total[c] - cnt_left[c]) - 1.0
                    cnt_left[c] += 1.0
                    if vals[i + 1] <= vals[i]:
                        continue
                    nl = i + 1
                    nr = n - nl
                    proxy = sq_left / nl + sq_right / nr
                    if proxy > best_proxy:
                        best_proxy = proxy
                        best_f = f
                        best_thr = _threshold(vals[i], vals[i + 1])

            if best_f < 0:
                continue

            li = start
            ri = 0
            for i in range(start, end):
                if X[idx[i], best_f] <= best_thr:
                    idx[li] = idx[i]
                    li += 1
                else:
                    tmp[ri] = idx[i]
                    ri += 1
            for i in range(ri):
                idx[li + i] = tmp[i]

            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = n_nodes
            right[node] = n_nodes + 1
            stack[top, 0] = n_nodes + 1
            stack[top, 1] = li
            stack[top, 2] = end
            stack[top, 3] = depth + 1
            stack[top + 1, 0] = n_nodes
            stack[top + 1, 1] = start
            stack[top + 1, 2] = li
            stack[top + 1, 3] = depth + 1
            top += 2
            n_nodes += 2

    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(), left_a[:n_nodes].copy(),
            right_a[:n_nodes].copy(), value_a[:n_nodes].copy())


def grow_newton_tree(const double[:, ::1] X, const double[::1] grad, const double[::1] hess,
                     const intp[::1] samples, int max_depth, double reg_lambda,
                     double min_child_weight):
    """Grow a second-order regression tree; leaf value is ``-G / (H + lambda)``."""
    cdef intp m = samples.shape[0]
    cdef intp d = X.shape[1]
    cdef intp cap = 2 * m + 1
    feature_a = np.full(cap, -1, dtype=np.intp)
    threshold_a = np.zeros(cap, dtype=np.float64)
    left_a = np.full(cap, -1, dtype=np.intp)
    right_a = np.full(cap, -1, dtype=np.intp)
    value_a = np.zeros(cap, dtype=np.float64)
    cdef intp[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef intp[::1] left = left_a
    cdef intp[::1] right = right_a
    cdef double[::1] value = value_a

    idx_a = np.array(samples, dtype=np.intp)
    cdef intp[::1] idx = idx_a
    cdef intp[::1] tmp = np.empty(m, dtype=np.intp)
    cdef double[::1] vals = np.empty(m, dtype=np.float64)
    cdef intp[::1] pos = np.empty(m, dtype=np.intp)
    cdef intp[:, ::1] stack = np.empty((cap, 4), dtype=np.intp)

    cdef intp n_nodes = 1, top = 0
    cdef intp node, start, end, depth, n, i, f, best_f, li, ri, s
    cdef double G, H, GL, HL, GR, HR, parent, gain, best_gain, best_thr

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    with nogil:
        while top > 0:
            top -= 1
            node = stack[top, 0]
            start = stack[top, 1]
            end = stack[top, 2]
            depth = stack[top, 3]
            n = end - start

            G = 0.0
            H = 0.0
            for i in range(start, end):
                G += grad[idx[i]]
                H += hess[idx[i]]
            value[node] = -G / (H + reg_lambda)
            if n < 2 or depth >= max_depth or H < 2.0 * min_child_weight:
                continue
            parent = G * G / (H + reg_lambda)

            best_f = -1
            best_gain = 1e-6
            best_thr = 0.0
            for f in range(d):
                for i in range(n):
                    vals[i] = X[idx[start + i], f]
                    pos[i] = i
                _sort(&vals[0], &pos[0], n)
                if vals[0] == vals[n - 1]:
                    continue
                GL = 0.0
                HL = 0.0
                for i in range(n - 1):
                    s = idx[start + pos[i]]
                    GL += grad[s]
                    HL += hess[s]
                    if vals[i + 1] <= vals[i]:
                        continue
                    GR = G - GL
                    HR = H - HL
                    if HL < min_child_weight or HR < min_child_weight:
                        continue
                    gain = GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = _threshold(vals[i], vals[i + 1])

            if best_f < 0:
                continue

            li = start
            ri = 0
            for i in range(start, end):
                if X[idx[i], best_f] <= best_thr:
                    idx[li] = idx[i]
                    li += 1
                else:
                    tmp[ri] = idx[i]
                    ri += 1
            for i in range(ri):
                idx[li + i] = tmp[i]

            feature[node] = best_f
            threshold[node] = best_thr
            left[node] = n_nodes
            right[node] = n_nodes + 1
            stack[top, 0] = n_nodes + 1
            stack[top, 1] = li
            stack[top, 2] = end
            stack[top, 3] = depth + 1
            stack[top + 1, 0] = n_nodes
            stack[top + 1, 1] = start
            stack[top + 1, 2] = li
            stack[top + 1, 3] = depth + 1
            top += 2
            n_nodes += 2

    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(), left_a[:n_nodes].copy(),
            right_a[:n_nodes].copy(), value_a[:n_nodes].copy())


def apply_tree(const double[:, ::1] X, const intp[::1] feature, const double[::1] threshold,
               const intp[::1] left, const intp[::1] right):
    """Leaf index reached by every row of ``X``."""
    cdef intp n = X.shape[0]
    out_a = np.empty(n, dtype=np.intp)
    cdef intp[::1] out = out_a
    cdef intp i, node
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = node
    return out_a
