# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split scan over one presorted feature column.

Mirrors _scan_py.scan_column operation for operation: sequential prefix
sums and an identical gain expression, so the two backends return
bit-identical results on identical input.
"""


def scan_column(const double[::1] vals, const double[::1] g, const double[::1] h,
                double lam, double gamma, double min_child_weight):
    cdef Py_ssize_t n = vals.shape[0]
    if n < 2:
        return None

    cdef double gt = 0.0, ht = 0.0
    cdef double gl = 0.0, hl = 0.0, gr, hr, gain
    cdef double best_gain = 0.0, best_gl = 0.0, best_hl = 0.0
    cdef Py_ssize_t i, best_pos = -1

    with nogil:
        for i in range(n):
            gt += g[i]
            ht += h[i]
        for i in range(n - 1):
            gl += g[i]
            hl += h[i]
            if vals[i] == vals[i + 1]:
                continue
            hr = ht - hl
            if hl < min_child_weight or hr < min_child_weight:
                continue
            gr = gt - gl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - gt * gt / (ht + lam)) - gamma
            if gain > best_gain:
                best_gain = gain
                best_pos = i
                best_gl = gl
                best_hl = hl

    if best_pos < 0:
        return None
    cdef double threshold = (vals[best_pos] + vals[best_pos + 1]) / 2.0
    return int(best_pos), threshold, best_gain, best_gl, best_hl, gt, ht
