"""Independent brute-force reference implementations (plain loops, no bmgf imports)."""

import numpy as np


def cos(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def multi_cos(v1, v2, W):
    return np.array([cos(W[k] * v1, W[k] * v2) for k in range(W.shape[0])])


def full_matching(h1, h2, Wf, Wl):
    m1 = np.array([np.concatenate([multi_cos(h1[i], h2[0], Wf), multi_cos(h1[i], h2[-1], Wl)]) for i in range(len(h1))])
    m2 = np.array([np.concatenate([multi_cos(h1[0], h2[j], Wf), multi_cos(h1[-1], h2[j], Wl)]) for j in range(len(h2))])
    return m1, m2


def maxpooling_matching(h1, h2, W):
    m1 = np.full((len(h1), W.shape[0]), -np.inf)
    m2 = np.full((len(h2), W.shape[0]), -np.inf)
    for i in range(len(h1)):
        for j in range(len(h2)):
            c = multi_cos(h1[i], h2[j], W)
            m1[i] = np.maximum(m1[i], c)
            m2[j] = np.maximum(m2[j], c)
    return m1, m2


def attentive_matching(h1, h2, W, eps=1e-8):
    c = np.array([[cos(h1[i], h2[j]) for j in range(len(h2))] for i in range(len(h1))])
    m1, m2 = [], []
    for i in range(len(h1)):
        total = sum(c[i, j] for j in range(len(h2)))
        if abs(total) < eps:
            avg = sum(h2[j] for j in range(len(h2))) / len(h2)
        else:
            avg = sum(c[i, j] * h2[j] for j in range(len(h2))) / total
        m1.append(multi_cos(h1[i], avg, W))
    for j in range(len(h2)):
        total = sum(c[i, j] for i in range(len(h1)))
        if abs(total) < eps:
            avg = sum(h1[i] for i in range(len(h1))) / len(h1)
        else:
            avg = sum(c[i, j] * h1[i] for i in range(len(h1))) / total
        m2.append(multi_cos(h2[j], avg, W))
    return np.array(m1), np.array(m2)


def max_attentive_matching(h1, h2, W):
    c = np.array([[cos(h1[i], h2[j]) for j in range(len(h2))] for i in range(len(h1))])
    m1, m2 = [], []
    for i in range(len(h1)):
        best = 0
        for j in range(1, len(h2)):
            if c[i, j] > c[i, best]:
                best = j
        m1.append(multi_cos(h1[i], h2[best], W))
    for j in range(len(h2)):
        best = 0
        for i in range(1, len(h1)):
            if c[i, j] > c[best, j]:
                best = i
        m2.append(multi_cos(h2[j], h1[best], W))
    return np.array(m1), np.array(m2)


def conv_pool(f, kernels, biases):
    """f: (L, C); kernels[c-1]: (c, C, S)."""
    out = []
    for w, b in zip(kernels, biases):
        c = w.shape[0]
        best = np.full(w.shape[2], -np.inf)
        for t in range(len(f) - c + 1):
            resp = b.copy()
            for o in range(c):
                for s in range(w.shape[2]):
                    resp[s] += sum(f[t + o, ch] * w[o, ch, s] for ch in range(f.shape[1]))
            best = np.maximum(best, np.maximum(resp, 0.0))
        out.append(best)
    return np.concatenate(out)


def f1_from_confusion(matrix):
    scores = []
    for k in range(len(matrix)):
        tp = matrix[k][k]
        pred = sum(matrix[r][k] for r in range(len(matrix)))
        gold = sum(matrix[k])
        p = tp / pred if pred else 0.0
        r = tp / gold if gold else 0.0
        scores.append(2 * p * r / (p + r) if p + r else 0.0)
    return scores
