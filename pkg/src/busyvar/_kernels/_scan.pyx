# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled renewal scan; same contract as ``_scan_py.scan``."""


def scan(const double[::1] gaps, const double[::1] services, double[::1] out,
         Py_ssize_t n_done, Py_ssize_t n_target, double t, double cover, bint is_open):
    cdef Py_ssize_t i
    cdef Py_ssize_t n = gaps.shape[0]
    cdef Py_ssize_t consumed = n
    cdef double end
    with nogil:
        for i in range(n):
            if not is_open:
                cover = services[i]
                t = 0.0
                is_open = True
                continue
            t = t + gaps[i]
            if t < cover:
                end = t + services[i]
                if end > cover:
                    cover = end
            else:
                out[n_done] = cover
                n_done += 1
                if n_done == n_target:
                    consumed = i
                    break
                cover = services[i]
                t = 0.0
    return consumed, n_done, t, cover, is_open
