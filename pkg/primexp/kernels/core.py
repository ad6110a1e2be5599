import math

import numba

_PARTIALS = numba.types.UniTuple(numba.float64, 4)
# Input arrays may be read-only (cached tables); writable arrays convert implicitly.
_RO_I64 = numba.types.Array(numba.int64, 1, "C", readonly=True)
_RO_F64 = numba.types.Array(numba.float64, 1, "C", readonly=True)


@numba.jit(
    numba.void(
        numba.int64[::1],
        _RO_I64,
        numba.int64,
        numba.int64,
    ),
    nopython=True,
    nogil=True,
)
def power_residues_jit(out, ns, k, q):
    for i in range(ns.shape[0]):
        base = ns[i] % q
        result = 1 % q
        e = k
        while e > 0:
            if e & 1:
                result = (result * base) % q
            base = (base * base) % q
            e >>= 1
        out[i] = result


@numba.jit(
    _PARTIALS(
        _RO_I64,
        _RO_F64,
        _RO_F64,
        _RO_F64,
    ),
    nopython=True,
    nogil=True,
)
def table_sum_jit(residues, weights, cos_table, sin_table):
    re_s = re_c = im_s = im_c = 0.0
    for i in range(residues.shape[0]):
        r = residues[i]
        w = weights[i]
        v = w * cos_table[r]
        t = re_s + v
        if abs(re_s) >= abs(v):
            re_c += (re_s - t) + v
        else:
            re_c += (v - t) + re_s
        re_s = t
        v = w * sin_table[r]
        t = im_s + v
        if abs(im_s) >= abs(v):
            im_c += (im_s - t) + v
        else:
            im_c += (v - t) + im_s
        im_s = t
    return re_s, re_c, im_s, im_c


@numba.jit(
    _PARTIALS(
        _RO_F64,
        _RO_F64,
    ),
    nopython=True,
    nogil=True,
)
def phase_sum_jit(phases, weights):
    # phases are centred in [-1/2, 1/2) so that negation is exact
    two_pi = 2.0 * math.pi
    re_s = re_c = im_s = im_c = 0.0
    for i in range(phases.shape[0]):
        z = two_pi * phases[i]
        w = weights[i]
        v = w * math.cos(z)
        t = re_s + v
        if abs(re_s) >= abs(v):
            re_c += (re_s - t) + v
        else:
            re_c += (v - t) + re_s
        re_s = t
        v = w * math.sin(z)
        t = im_s + v
        if abs(im_s) >= abs(v):
            im_c += (im_s - t) + v
        else:
            im_c += (v - t) + im_s
        im_s = t
    return re_s, re_c, im_s, im_c


@numba.jit(nopython=True, nogil=True)
def neumaier_jit(values):
    s = 0.0
    c = 0.0
    for i in range(values.shape[0]):
        v = values[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s, c
