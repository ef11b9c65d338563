"""Compiled inner loops for the fixed-step RK4 integrators.

Everything in here works on raw contiguous complex128 arrays; the
wrapping and validation live in `dynamics`. Jump operators arrive in a
concatenated COO layout (rows, cols, vals, off) where entries
off[k]:off[k+1] belong to the k-th channel, so the dissipator sum
L rho L+ never mixes entries of different channels.

The drift matrix A = -iH - (1/2) sum L+L enters ready-made: for a
Hermitian rho the coherent-plus-anticommutator part of the Lindblad
right-hand side is A rho + (A rho)+, which costs a single matmul per
stage plus a conjugate fold.

Kernels return early with the offending step index when the trace
leaves its tolerance band; the caller turns that into an error with
the physical time attached.
"""

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _lindblad_apply(A, rows, cols, vals, off, rho, out):
    n = rho.shape[0]
    np.dot(A, rho, out)
    for i in range(n):
        for j in range(i, n):
            s = out[i, j] + np.conj(out[j, i])
            out[i, j] = s
            out[j, i] = np.conj(s)
    for k in range(off.shape[0] - 1):
        for p in range(off[k], off[k + 1]):
            for q in range(off[k], off[k + 1]):
                out[rows[p], rows[q]] += (
                    vals[p] * np.conj(vals[q]) * rho[cols[p], cols[q]]
                )


@numba.njit(cache=True, inline="always")
def _rk4_combine(rho, dt, k1, k2, k3, k4):
    """Final RK4 update; returns the pre-correction Hermiticity drift."""
    n = rho.shape[0]
    for i in range(n):
        for j in range(n):
            rho[i, j] = rho[i, j] + (dt / 6.0) * (
                k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
            )
    drift = 0.0
    for i in range(n):
        for j in range(i, n):
            a = rho[i, j]
            b = np.conj(rho[j, i])
            d = abs(a - b)
            if d > drift:
                drift = d
            m = 0.5 * (a + b)
            rho[i, j] = m
            rho[j, i] = np.conj(m)
    return drift


@numba.njit(cache=True)
def master_chunk(A, rows, cols, vals, off, rho, dt, n_steps, tol, k1, k2, k3, k4, tmp):
    """Advance a density matrix n_steps; returns (max drift, bad step or -1)."""
    n = rho.shape[0]
    drift = 0.0
    for step in range(n_steps):
        _lindblad_apply(A, rows, cols, vals, off, rho, k1)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
        _lindblad_apply(A, rows, cols, vals, off, tmp, k2)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
        _lindblad_apply(A, rows, cols, vals, off, tmp, k3)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + dt * k3[i, j]
        _lindblad_apply(A, rows, cols, vals, off, tmp, k4)
        d = _rk4_combine(rho, dt, k1, k2, k3, k4)
        if d > drift:
            drift = d
        tr = 0.0
        for i in range(n):
            tr += rho[i, i].real
        if not (abs(tr - 1.0) <= tol):
            return drift, step
    return drift, -1


@numba.njit(cache=True)
def master_step_td(A1, A2, A3, rows, cols, vals, off, rho, dt, k1, k2, k3, k4, tmp):
    """One RK4 step with the drift matrix sampled at t, t+dt/2, t+dt."""
    n = rho.shape[0]
    _lindblad_apply(A1, rows, cols, vals, off, rho, k1)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
    _lindblad_apply(A2, rows, cols, vals, off, tmp, k2)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
    _lindblad_apply(A2, rows, cols, vals, off, tmp, k3)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = rho[i, j] + dt * k3[i, j]
    _lindblad_apply(A3, rows, cols, vals, off, tmp, k4)
    return _rk4_combine(rho, dt, k1, k2, k3, k4)


@numba.njit(cache=True)
def linear_chunk(G, psi, dt, n_steps, tol, check_norm):
    """RK4 for dpsi/dt = G psi on a (dim, ncols) block.

    With G = -iH this is the Schrodinger equation; an anti-Hermitian
    defect in G (no-click conditional evolution) simply decays the
    norm, so the unit-norm watchdog is optional. Returns the step at
    which a column left the norm band, or -1.
    """
    for step in range(n_steps):
        k1 = np.dot(G, psi)
        k2 = np.dot(G, psi + (0.5 * dt) * k1)
        k3 = np.dot(G, psi + (0.5 * dt) * k2)
        k4 = np.dot(G, psi + dt * k3)
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if check_norm:
            for c in range(psi.shape[1]):
                acc = 0.0
                for i in range(psi.shape[0]):
                    acc += abs(psi[i, c]) ** 2
                if not (abs(np.sqrt(acc) - 1.0) <= tol):
                    return step
    return -1


@numba.njit(cache=True)
def linear_step_td(G1, G2, G3, psi, dt):
    """One RK4 step of dpsi/dt = G(t) psi with G at t, t+dt/2, t+dt."""
    k1 = np.dot(G1, psi)
    k2 = np.dot(G2, psi + (0.5 * dt) * k1)
    k3 = np.dot(G2, psi + (0.5 * dt) * k2)
    k4 = np.dot(G3, psi + dt * k3)
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
