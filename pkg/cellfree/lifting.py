"""
Complex-to-real lifting helpers.

A complex vector w is stored in a real variable vector as its real parts at one
set of indices and its imaginary parts at another. For a fixed complex g,

    Re(g^T w) = g_r . w_r - g_i . w_i
    Im(g^T w) = g_i . w_r + g_r . w_i

so both parts are linear rows in the real variables.
"""

import numpy as np
import scipy.sparse as sp


def inner_product_rows(g, re_indices, im_indices, num_vars):
    """
    Real rows of g^T w.

    Args:
        g: Complex coefficient vector
        re_indices: Variable indices holding Re(w), same length as g
        im_indices: Variable indices holding Im(w), same length as g
        num_vars: Total number of real variables

    Returns:
        (2, num_vars) csr matrix; row 0 is Re(g^T w), row 1 is Im(g^T w)
    """
    g = np.asarray(g, dtype=np.complex128).reshape(-1)
    re_indices = np.asarray(re_indices, dtype=int).reshape(-1)
    im_indices = np.asarray(im_indices, dtype=int).reshape(-1)
    if not (g.size == re_indices.size == im_indices.size):
        raise ValueError('coefficient and index vectors differ in length')
    cols = np.concatenate([re_indices, im_indices, re_indices, im_indices])
    rows = np.repeat([0, 1], 2 * g.size)
    data = np.concatenate([g.real, -g.imag, g.imag, g.real])
    return sp.csr_matrix((data, (rows, cols)), shape=(2, num_vars))


def to_complex(x, re_slice, im_slice, shape):
    """Rebuild a complex array from its lifted real parts."""
    x = np.asarray(x, dtype=float)
    return (x[re_slice] + 1j * x[im_slice]).reshape(shape)
