"""Definitional reference computations, independent of the package code paths."""
import math

import numpy as np


def naive_rmse(a, b):
    s = 0.0
    for x, y in zip(a, b):
        s += (float(x) - float(y)) ** 2
    return math.sqrt(s / len(a))


def naive_head_loss(arrays, X, y, masks=None):
    """Batch RMSE of a ReLU MLP given flat [W0, b0, W1, b1, ...] arrays."""
    n_layers = len(arrays) // 2
    preds = []
    for i in range(len(X)):
        a = [float(v) for v in X[i]]
        if masks is not None:
            a = [v * float(m) for v, m in zip(a, masks[i])]
        for layer in range(n_layers):
            W, b = arrays[2 * layer], arrays[2 * layer + 1]
            z = [sum(W[o, k] * a[k] for k in range(len(a))) + b[o] for o in range(W.shape[0])]
            a = z if layer == n_layers - 1 else [max(v, 0.0) for v in z]
        preds.append(a[0])
    return naive_rmse(preds, y)


def fd_gradients(loss_fn, arrays, h=1e-6):
    """Central finite differences of ``loss_fn(arrays)`` for every entry."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = loss_fn(arrays)
            arr[idx] = old - h
            down = loss_fn(arrays)
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-7):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def average_ranks(x):
    """Fractional ranks by explicit comparison counting (1-based)."""
    ranks = []
    for v in x:
        below = sum(1 for w in x if w < v)
        equal = sum(1 for w in x if w == v)
        ranks.append(below + (equal + 1) / 2.0)
    return ranks


def naive_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def naive_spearman(x, y):
    return naive_pearson(average_ranks(list(x)), average_ranks(list(y)))


def naive_column_means(M):
    R, V = len(M), len(M[0])
    return [sum(float(M[r][v]) for r in range(R)) / R for v in range(V)]


def naive_pairwise_rmse(M):
    R = len(M)
    vals = [naive_rmse(M[i], M[j]) for i in range(R) for j in range(i + 1, R)]
    return sum(vals) / len(vals)


def oracle_mean(f):
    L, D = len(f), len(f[0])
    out = []
    for j in range(D):
        s = 0.0
        for i in range(L):
            s += float(f[i][j])
        out.append(s / L)
    return out


def oracle_std(f):
    mu = oracle_mean(f)
    L, D = len(f), len(f[0])
    out = []
    for j in range(D):
        s = 0.0
        for i in range(L):
            s += (float(f[i][j]) - mu[j]) ** 2
        out.append(math.sqrt(s / (L - 1)))
    return out


def fd_head_gradients_hp(arrays, X, y, masks=None, h=1e-6, digits=40):
    """Central differences of the head RMSE with the loss in high-precision decimal.

    Parameters stay the given float64 values (converted exactly) and are
    stepped by exactly ``h``; evaluating the loss with ``digits`` significant
    digits removes the float64 cancellation error of the difference quotient,
    leaving only the O(h^2) truncation term.
    """
    from decimal import Decimal, localcontext

    with localcontext() as ctx:
        ctx.prec = digits
        dec = [[Decimal(float(v)) for v in a.ravel()] for a in arrays]
        shapes = [a.shape for a in arrays]
        Xd = [[Decimal(float(v)) for v in row] for row in X]
        if masks is not None:
            Xd = [[v * Decimal(float(m)) for v, m in zip(row, mrow)] for row, mrow in zip(Xd, masks)]
        yd = [Decimal(float(v)) for v in y]
        n_layers = len(arrays) // 2
        zero = Decimal(0)

        def loss():
            total = zero
            for row, target in zip(Xd, yd):
                a = row
                for layer in range(n_layers):
                    W, b = dec[2 * layer], dec[2 * layer + 1]
                    n_out, n_in = shapes[2 * layer]
                    z = [sum((W[o * n_in + k] * a[k] for k in range(n_in)), b[o]) for o in range(n_out)]
                    a = z if layer == n_layers - 1 else [v if v > 0 else zero for v in z]
                total += (a[0] - target) ** 2
            return (total / len(yd)).sqrt()

        hd = Decimal(h)
        grads = []
        for ai, arr in enumerate(dec):
            g = np.zeros(len(arr))
            for j in range(len(arr)):
                old = arr[j]
                arr[j] = old + hd
                up = loss()
                arr[j] = old - hd
                down = loss()
                arr[j] = old
                g[j] = float((up - down) / (2 * hd))
            grads.append(g.reshape(shapes[ai]))
    return grads
