"""Compiled inner loops. Inputs are int64 arrays of 1-based images."""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _merge_count(src, dst):
    n = src.shape[0]
    total = 0
    w = 1
    while w < n:
        for lo in range(0, n, 2 * w):
            mid = min(lo + w, n)
            hi = min(lo + 2 * w, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    j += 1
                    total += mid - i
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        w *= 2
    return total


@numba.njit(cache=True)
def count_inversions(image):
    """Bottom-up merge sort; counts pairs i < j with image[i] > image[j]."""
    src = image.copy()
    dst = np.empty_like(src)
    return _merge_count(src, dst)


@numba.njit(cache=True)
def count_inversions_rows(images):
    rows, n = images.shape
    out = np.zeros(rows, np.int64)
    src = np.empty(n, images.dtype)
    dst = np.empty(n, images.dtype)
    for r in range(rows):
        for i in range(n):
            src[i] = images[r, i]
        out[r] = _merge_count(src, dst)
    return out
