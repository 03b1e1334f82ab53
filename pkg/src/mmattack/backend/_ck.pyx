# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution and pooling kernels.

Same contracts as mmattack.backend.numpy_kernels; see that module for the
layout and tie-handling notes.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def conv2d_forward(x_in, w_in, b_in, int stride, int padding):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c_in = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t c_out = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t h_out = (h + 2 * padding - kh) // stride + 1
    cdef Py_ssize_t w_out = (wd + 2 * padding - kw) // stride + 1
    out_arr = np.empty((n, c_out, h_out, w_out))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t ni, oc, ic, oh, ow, i, j, ih, iw
    cdef double acc
    with nogil:
        for ni in range(n):
            for oc in range(c_out):
                for oh in range(h_out):
                    for ow in range(w_out):
                        acc = b[oc]
                        for ic in range(c_in):
                            for i in range(kh):
                                ih = oh * stride + i - padding
                                if ih < 0 or ih >= h:
                                    continue
                                for j in range(kw):
                                    iw = ow * stride + j - padding
                                    if iw < 0 or iw >= wd:
                                        continue
                                    acc += x[ni, ic, ih, iw] * w[oc, ic, i, j]
                        out[ni, oc, oh, ow] = acc
    return out_arr


def conv2d_backward(x_in, w_in, dout_in, int stride, int padding):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef double[:, :, :, ::1] dout = np.ascontiguousarray(dout_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c_in = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t c_out = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t h_out = dout.shape[2], w_out = dout.shape[3]
    dx_arr = np.zeros((n, c_in, h, wd))
    dw_arr = np.zeros((c_out, c_in, kh, kw))
    db_arr = np.zeros(c_out)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t ni, oc, ic, oh, ow, i, j, ih, iw
    cdef double g
    with nogil:
        for ni in range(n):
            for oc in range(c_out):
                for oh in range(h_out):
                    for ow in range(w_out):
                        g = dout[ni, oc, oh, ow]
                        db[oc] += g
                        for ic in range(c_in):
                            for i in range(kh):
                                ih = oh * stride + i - padding
                                if ih < 0 or ih >= h:
                                    continue
                                for j in range(kw):
                                    iw = ow * stride + j - padding
                                    if iw < 0 or iw >= wd:
                                        continue
                                    dw[oc, ic, i, j] += g * x[ni, ic, ih, iw]
                                    dx[ni, ic, ih, iw] += g * w[oc, ic, i, j]
    return dx_arr, dw_arr, db_arr


def maxpool2d_forward(x_in, int kernel, int stride):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t h_out = (h - kernel) // stride + 1
    cdef Py_ssize_t w_out = (wd - kernel) // stride + 1
    out_arr = np.empty((n, c, h_out, w_out))
    idx_arr = np.empty((n, c, h_out, w_out), dtype=np.int64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, :, ::1] idx = idx_arr
    cdef Py_ssize_t ni, ci, oh, ow, i, j, ih, iw
    cdef double best, v
    cdef cnp.int64_t besti
    with nogil:
        for ni in range(n):
            for ci in range(c):
                for oh in range(h_out):
                    for ow in range(w_out):
                        best = x[ni, ci, oh * stride, ow * stride]
                        besti = (oh * stride) * wd + (ow * stride)
                        for i in range(kernel):
                            ih = oh * stride + i
                            for j in range(kernel):
                                iw = ow * stride + j
                                v = x[ni, ci, ih, iw]
                                if v > best:
                                    best = v
                                    besti = ih * wd + iw
                        out[ni, ci, oh, ow] = best
                        idx[ni, ci, oh, ow] = besti
    return out_arr, idx_arr


def maxpool2d_backward(idx_in, dout_in, int h, int w):
    cdef cnp.int64_t[:, :, :, ::1] idx = np.ascontiguousarray(idx_in, dtype=np.int64)
    cdef double[:, :, :, ::1] dout = np.ascontiguousarray(dout_in, dtype=np.float64)
    cdef Py_ssize_t n = dout.shape[0], c = dout.shape[1]
    cdef Py_ssize_t h_out = dout.shape[2], w_out = dout.shape[3]
    dx_arr = np.zeros((n, c, h * w))
    cdef double[:, :, ::1] dx = dx_arr
    cdef Py_ssize_t ni, ci, oh, ow
    with nogil:
        for ni in range(n):
            for ci in range(c):
                for oh in range(h_out):
                    for ow in range(w_out):
                        dx[ni, ci, idx[ni, ci, oh, ow]] += dout[ni, ci, oh, ow]
    return dx_arr.reshape(n, c, h, w)
