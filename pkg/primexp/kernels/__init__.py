from numpy import ascontiguousarray, empty, float64, int64

from .core import neumaier_jit, phase_sum_jit, power_residues_jit, table_sum_jit

# (q - 1)^2 must fit in a signed 64-bit word.
MAX_KERNEL_MODULUS = 3_037_000_499


def power_residues(ns, k, q):
    """n^k mod q for every n in ``ns``."""
    if not 1 <= q <= MAX_KERNEL_MODULUS:
        raise ValueError(f"modulus {q} outside the int64 kernel range")
    ns = ascontiguousarray(ns, dtype=int64)
    out = empty(ns.shape[0], dtype=int64)
    power_residues_jit(out, ns, int(k), int(q))
    return out


def table_sum(residues, weights, cos_table, sin_table):
    """Compensated partials (re_s, re_c, im_s, im_c) of sum w * e(r/q) via a root table."""
    return table_sum_jit(
        ascontiguousarray(residues, dtype=int64),
        ascontiguousarray(weights, dtype=float64),
        ascontiguousarray(cos_table, dtype=float64),
        ascontiguousarray(sin_table, dtype=float64),
    )


def phase_sum(phases, weights):
    """Compensated partials (re_s, re_c, im_s, im_c) of sum w * e(t)."""
    return phase_sum_jit(
        ascontiguousarray(phases, dtype=float64),
        ascontiguousarray(weights, dtype=float64),
    )


def compensated_total(values):
    s, c = neumaier_jit(ascontiguousarray(values, dtype=float64))
    return s + c
