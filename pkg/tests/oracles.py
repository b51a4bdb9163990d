"""Independent brute-force reference implementations used only by tests.

Nothing here imports the library's metric or solver code; the only shared
convention is the luma weighting, restated below.
"""

import math

import numpy as np

PEAK = 255.0
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2


def luma(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 3:
        return 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
    return a


def psnr_loop(ref, test, cap=99.0):
    ref = np.asarray(ref, dtype=np.float64).ravel().tolist()
    test = np.asarray(test, dtype=np.float64).ravel().tolist()
    total = 0.0
    for a, b in zip(ref, test):
        total += (a - b) * (a - b)
    mse = total / len(ref)
    if mse == 0.0:
        return cap
    return 10.0 * math.log10(PEAK * PEAK / mse)


def ssim_loop(ref, test, radius=5, sigma=1.5):
    """Mean SSIM by explicit windows; border windows are cropped and renormalized."""
    x, y = luma(ref), luma(test)
    h, w = x.shape
    k = np.arange(-radius, radius + 1)
    g1 = np.exp(-(k * k) / (2 * sigma * sigma))
    g1 /= g1.sum()
    g2 = np.outer(g1, g1)
    acc = 0.0
    for i in range(h):
        for j in range(w):
            i0, i1 = max(i - radius, 0), min(i + radius + 1, h)
            j0, j1 = max(j - radius, 0), min(j + radius + 1, w)
            wt = g2[i0 - i + radius : i1 - i + radius, j0 - j + radius : j1 - j + radius]
            wt = wt / wt.sum()
            px, py = x[i0:i1, j0:j1], y[i0:i1, j0:j1]
            mx, my = (wt * px).sum(), (wt * py).sum()
            vx = (wt * (px - mx) ** 2).sum()
            vy = (wt * (py - my) ** 2).sum()
            cxy = (wt * (px - mx) * (py - my)).sum()
            acc += ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2))
    return acc / (h * w)


def change_rate_direct(entries):
    """Signed max change rate by exhaustive search, first occurrence on ties."""
    rs = sorted(entries)
    best_hi, best_lo = rs[0], rs[0]
    for r in rs:
        if entries[r] > entries[best_hi]:
            best_hi = r
        if entries[r] < entries[best_lo]:
            best_lo = r
    hi, lo = entries[best_hi], entries[best_lo]
    d = best_hi - best_lo
    sign = 1 if d > 0 else (-1 if d < 0 else 0)
    return sign * (hi - lo) / hi


def laplace_dense(values, mask):
    """Solve the 4-neighbour Laplace system inside ``mask`` with a dense solver."""
    values = np.asarray(values, dtype=np.float64)
    h, w = mask.shape
    pts = list(zip(*np.nonzero(mask)))
    idx = {p: n for n, p in enumerate(pts)}
    A = np.zeros((len(pts), len(pts)))
    b = np.zeros(len(pts))
    for n, (i, j) in enumerate(pts):
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, c = i + di, j + dj
            if not (0 <= a < h and 0 <= c < w):
                continue
            A[n, n] += 1.0
            if mask[a, c]:
                A[n, idx[(a, c)]] -= 1.0
            else:
                b[n] += values[a, c]
    out = values.copy()
    sol = np.linalg.solve(A, b)
    for n, p in enumerate(pts):
        out[p] = sol[n]
    return out


def segments_direct(slope, intercept, lo=0.0, hi=1.0):
    """Breakpoints of the seven-segment split, by hand."""
    x0 = -intercept / slope
    x0 = min(max(x0, lo), hi)
    q = (x0 - lo) / 4
    t = (hi - x0) / 3
    return [lo, lo + q, lo + 2 * q, lo + 3 * q, x0, x0 + t, x0 + 2 * t, hi]
