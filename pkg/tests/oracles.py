"""Reference constructions that share no code with the package's simulator.

Matrices here are assembled entry by entry over basis states (little-endian:
qubit i is bit i of the index) or from textbook closed forms.
"""

import numpy as np


def bit(x, i):
    return (x >> i) & 1


def dft_matrix(n):
    dim = 2**n
    w = np.exp(2j * np.pi / dim)
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return w ** (j * k) / np.sqrt(dim)


def bit_reverse(x, n):
    return int(format(x, f"0{n}b")[::-1], 2)


def bit_reversal_matrix(n):
    dim = 2**n
    m = np.zeros((dim, dim))
    for x in range(dim):
        m[bit_reverse(x, n), x] = 1
    return m


def qft_no_swap_oracle(n):
    """QFT without the final swaps, with qubit 0 the least significant bit.

    Qubit 0 is the first qubit the textbook circuit acts on, i.e. the most
    significant input bit; input |x> therefore lands on DFT column rev(x).
    """
    return dft_matrix(n) @ bit_reversal_matrix(n)


def controlled_matrix(u, control, target, n):
    """Controlled-u built from basis-state action."""
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        if not bit(x, control):
            m[x, x] = 1
            continue
        b = bit(x, target)
        for b2 in (0, 1):
            y = x & ~(1 << target) | (b2 << target)
            m[y, x] += u[b2, b]
    return m


def single_matrix(u, q, n):
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        b = bit(x, q)
        for b2 in (0, 1):
            y = x & ~(1 << q) | (b2 << q)
            m[y, x] += u[b2, b]
    return m


def zz_product_diagonal(edges, n):
    """prod_e exp(-i theta Z_p Z_q) as a diagonal matrix."""
    diag = np.ones(2**n, dtype=complex)
    for x in range(2**n):
        for p, q, theta in edges:
            sign = 1 - 2 * (bit(x, p) ^ bit(x, q))
            diag[x] *= np.exp(-1j * theta * sign)
    return np.diag(diag)


_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def pauli_operator(pauli):
    """Character i acts on qubit i, assembled from basis-state action."""
    n = len(pauli)
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        # column x: tensor product of each factor's column
        amps = {0: 1.0 + 0j}
        for i, ch in enumerate(pauli):
            col = _PAULI[ch][:, bit(x, i)]
            new = {}
            for y, a in amps.items():
                for b2 in (0, 1):
                    if col[b2] != 0:
                        new[y | (b2 << i)] = new.get(y | (b2 << i), 0) + a * col[b2]
            amps = new
        for y, a in amps.items():
            m[y, x] = a
    return m


def hermitian_exp(h, theta):
    """exp(-i theta h) via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.exp(-1j * theta * w)) @ v.conj().T


def haar_unitary(rng, dim=2):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / abs(d))


def haar_state(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return v / np.linalg.norm(v)


def ghz_vector(k):
    v = np.zeros(2**k, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def infidelity(a, b):
    return 1 - abs(np.vdot(a, b)) ** 2


def max_phase_aligned_error(a, b):
    """min over phi of max|a - e^{i phi} b|, by dense scan plus refinement."""
    best = np.inf
    phis = np.linspace(0, 2 * np.pi, 721)
    for phi in phis:
        best = min(best, np.max(np.abs(a - np.exp(1j * phi) * b)))
    # refine around the trace-aligned phase
    tr = np.vdot(b.reshape(-1), a.reshape(-1))
    if abs(tr) > 0:
        phi = np.angle(tr)
        best = min(best, np.max(np.abs(a - np.exp(1j * phi) * b)))
    return best
