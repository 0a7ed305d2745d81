"""Closed-form 2x2 unitaries for Hamiltonians of the form hx*sx + hz*sz.

exp(-i (hx sx + hz sz) tau) = cos(|h| tau) I - i sin(|h| tau) (h.sigma)/|h|,
exactly unitary up to rounding, with no series truncation.
"""
from __future__ import annotations

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def su2_components(hx, hz, tau):
    """Entries (u00, u01, u11) of exp(-i(hx sx + hz sz) tau); u10 = u01.

    Broadcasts over array inputs.  The matrix is symmetric because there is
    no sy term.
    """
    hx = np.asarray(hx, dtype=float)
    hz = np.asarray(hz, dtype=float)
    tau = np.asarray(tau, dtype=float)
    h = np.hypot(hx, hz)
    theta = h * tau
    safe = np.where(h == 0.0, 1.0, h)
    ct = np.cos(theta)
    st = np.sin(theta) / safe
    u00 = ct - 1j * st * hz
    u01 = -1j * st * hx
    u11 = ct + 1j * st * hz
    return u00, u01, u11


def su2_matrix(hx: float, hz: float, tau: float) -> np.ndarray:
    """exp(-i(hx sx + hz sz) tau) as a dense 2x2 array."""
    u00, u01, u11 = su2_components(hx, hz, tau)
    return np.array([[complex(u00), complex(u01)], [complex(u01), complex(u11)]])


def expm_2x2(a: np.ndarray, tau: float) -> np.ndarray:
    """exp(a*tau) for an arbitrary complex 2x2 matrix, in closed form.

    Splits a into trace and traceless parts; for traceless b, b^2 = -det(b) I,
    so exp(b tau) = cosh(mu tau) I + tau sinhc(mu tau) b with mu^2 = -det(b).
    Branch-free in mu because cosh and sinhc are even.
    """
    tr = (a[0, 0] + a[1, 1]) / 2
    b = a - tr * np.eye(2)
    mu2 = -(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])
    mu = np.sqrt(mu2 + 0j)
    w = mu * tau
    if abs(w) < 1e-4:
        w2 = w * w
        ch = 1 + w2 / 2 * (1 + w2 / 12 * (1 + w2 / 30))
        shc = 1 + w2 / 6 * (1 + w2 / 20 * (1 + w2 / 42))
        return np.exp(tr * tau) * (ch * np.eye(2) + tau * shc * b)
    # factor out exp(|Re w|) so cosh/sinh cannot overflow at large arguments
    r = abs(w.real)
    ep = np.exp(w - r)
    em = np.exp(-w - r)
    ch = (ep + em) / 2
    shc = (ep - em) / (2 * w)
    return np.exp(tr * tau + r) * (ch * np.eye(2) + tau * shc * b)


def sinhc(w):
    """sinh(w)/w, stable near w = 0; accepts complex scalars or arrays."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-4
    ws = np.where(small, 0.0, w)
    out = np.where(small, 1 + w * w / 6 * (1 + w * w / 20), np.sinh(ws) / np.where(small, 1.0, ws))
    if out.ndim == 0:
        return complex(out)
    return out
