"""Pure-NumPy propagation kernel, the fallback when the extension is absent.

Same contract as the compiled module: column batches of independent state
vectors, coefficient tables on the half-step grid, in-place update.
"""

import numpy as np

NAME = "python"
SUPPORTS_THREADS = False


def rk4_evolve_batch(psi, diag, ax, bz, dt, norms_out):
    """Integrate i dpsi/dt = H(t) psi in place over len(ax)//2 RK4 steps.

    psi, diag: (dim, nb) column batches.  Returns the first step index at
    which amplitudes became non-finite, or -1.  Final squared column norms
    are written into norms_out.
    """
    dim, _ = psi.shape
    n_steps = (ax.shape[0] - 1) // 2
    n_qubits = int(dim).bit_length() - 1
    flips = [np.arange(dim) ^ (1 << l) for l in range(n_qubits)]

    def hpsi(p, j):
        acc = p[flips[0]]
        if n_qubits > 1:
            acc = acc.copy()
            for f in flips[1:]:
                acc += p[f]
        return (ax[j] * acc + (bz[j] * diag) * p) * (-1j)

    half_dt = 0.5 * dt
    for step in range(n_steps):
        j = 2 * step
        k1 = hpsi(psi, j)
        k2 = hpsi(psi + half_dt * k1, j + 1)
        k3 = hpsi(psi + half_dt * k2, j + 1)
        k4 = hpsi(psi + dt * k3, j + 2)
        k1 += k4
        k2 += k3
        k1 += 2.0 * k2
        psi += (dt / 6.0) * k1
        checksum = complex(psi.sum())
        if not (np.isfinite(checksum.real) and np.isfinite(checksum.imag)):
            return step
    np.einsum("ij,ij->j", psi.real, psi.real, out=norms_out)
    norms_out += np.einsum("ij,ij->j", psi.imag, psi.imag)
    return -1
