"""Dephasing maps on one- and two-qubit density matrices."""

from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .exceptions import DomainError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


class DensityMatrix:
    """Validated qubit (2x2) or two-qubit (4x4) density matrix."""

    __slots__ = ("data",)

    def __init__(self, entries):
        data = np.array(entries, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] not in (2, 4):
            raise DomainError(f"expected a 2x2 or 4x4 matrix, got shape {data.shape}")
        if np.max(np.abs(data - data.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(data) - 1.0) > TRACE_TOL:
            raise DomainError(f"trace is {np.trace(data).real:.15g}, not 1")
        data = 0.5 * (data + data.conj().T)
        lowest = np.linalg.eigvalsh(data)[0]
        if lowest < -POSITIVITY_TOL:
            raise DomainError(f"negative eigenvalue {lowest:.3g}")
        self.data = data

    @property
    def dim(self):
        return self.data.shape[0]

    @classmethod
    def pure(cls, vector):
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix({self.data!r})"


class StatePair(NamedTuple):
    first: DensityMatrix
    second: DensityMatrix


def bloch_state(theta, phi):
    """Ket ``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


KET_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
KET_MINUS = np.array([1.0, -1.0]) / np.sqrt(2)
BELL_STATES = {
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


def _check_gamma(gamma_value):
    if not np.isfinite(gamma_value) or abs(gamma_value) > 1.0 + 1e-12:
        raise DomainError(f"dephasing value must lie in [-1, 1], got {gamma_value}")
    return float(np.clip(gamma_value, -1.0, 1.0))


# number of local coherences carried by |ab><cd| in the 4x4 basis 00,01,10,11
_bits = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
_TWO_QUBIT_ORDER = (_bits[:, None, 0] != _bits[None, :, 0]).astype(int) \
    + (_bits[:, None, 1] != _bits[None, :, 1]).astype(int)


def _dephasing_mask(dim, gamma_value):
    if dim == 2:
        return np.array([[1.0, gamma_value], [gamma_value, 1.0]])
    return float(gamma_value) ** _TWO_QUBIT_ORDER


def apply_dephasing(rho0, gamma_value):
    """Scale the coherences of a qubit state by ``gamma_value``."""
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0)
    if rho0.dim != 2:
        raise DomainError("single-qubit map needs a 2x2 state")
    g = _check_gamma(gamma_value)
    return DensityMatrix(rho0.data * _dephasing_mask(2, g))


def apply_dephasing_two_qubit(rho0, gamma_value):
    """Independent, identical dephasing of both qubits of a 4x4 state.

    Element ``|ab><cd|`` is scaled by ``gamma_value**h`` with ``h`` the
    number of qubits on which the bra and ket differ.
    """
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(rho0)
    if rho0.dim != 4:
        raise DomainError("two-qubit map needs a 4x4 state")
    g = _check_gamma(gamma_value)
    return DensityMatrix(rho0.data * _dephasing_mask(4, g))


def _trace_distance_batch(a, b):
    diff = a - b
    diff = 0.5 * (diff + np.conj(np.swapaxes(diff, -1, -2)))
    return 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)


def trace_distance(pair):
    """Half the trace norm of ``first - second``."""
    first, second = (np.asarray(m, dtype=complex) for m in pair)
    if first.shape != second.shape:
        raise DomainError(f"dimension mismatch: {first.shape} vs {second.shape}")
    return float(_trace_distance_batch(first, second))


def _recoverable(kets1, kets2, gamma_value):
    """``D(Phi_g rho1, Phi_g rho2) - D(Phi_0 rho1, Phi_0 rho2)`` for stacks
    of pure states given as kets."""
    r1 = kets1[:, :, None] * kets1[:, None, :].conj()
    r2 = kets2[:, :, None] * kets2[:, None, :].conj()
    dim = r1.shape[-1]
    m_g = _dephasing_mask(dim, gamma_value)
    m_0 = _dephasing_mask(dim, 0.0)
    return _trace_distance_batch(r1 * m_g, r2 * m_g) - _trace_distance_batch(r1 * m_0, r2 * m_0)


def _fibonacci_angles(n):
    k = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * k / n)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    return theta, np.mod(phi, 2 * np.pi)


def _single_qubit_search(g, n_samples):
    theta, phi = _fibonacci_angles(n_samples)
    kets = np.stack([bloch_state(t, p) for t, p in zip(theta, phi)])
    i, j = np.triu_indices(n_samples, k=1)
    score = _recoverable(kets[i], kets[j], g)
    best = int(np.argmax(score))
    x0 = np.array([theta[i[best]], phi[i[best]], theta[j[best]], phi[j[best]]])

    def loss(x):
        k1 = bloch_state(x[0], x[1])[None]
        k2 = bloch_state(x[2], x[3])[None]
        return -float(_recoverable(k1, k2, g)[0])

    res = minimize(loss, x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    if -res.fun >= score[best]:
        k1, k2 = bloch_state(res.x[0], res.x[1]), bloch_state(res.x[2], res.x[3])
        value = -res.fun
    else:
        k1, k2, value = kets[i[best]], kets[j[best]], float(score[best])
    return StatePair(DensityMatrix.pure(k1), DensityMatrix.pure(k2)), float(value)


def two_qubit_candidates(side=20):
    """Candidate two-qubit pairs: orthogonal product pairs on a
    ``side x side`` Bloch-angle grid per qubit, plus all Bell-state pairs.

    Returns ``(kets1, kets2, labels)`` where ``labels[k]`` describes the
    pair as ``(kind, angles)``.
    """
    th = np.arange(side) * np.pi / side
    ph = np.arange(side) * 2 * np.pi / side
    T, P = np.meshgrid(th, ph, indexing="ij")
    T, P = T.ravel(), P.ravel()
    up = np.stack([bloch_state(t, p) for t, p in zip(T, P)])
    down = np.stack([bloch_state(np.pi - t, p + np.pi) for t, p in zip(T, P)])
    ia, ib = np.meshgrid(np.arange(T.size), np.arange(T.size), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    kets1, kets2, labels = [], [], []
    for kind, (fa, fb) in {"both": (down, down), "first": (down, up),
                           "second": (up, down)}.items():
        kets1.append(np.einsum("ni,nj->nij", up[ia], up[ib]).reshape(-1, 4))
        kets2.append(np.einsum("ni,nj->nij", fa[ia], fb[ib]).reshape(-1, 4))
        labels.extend((kind, (T[a], P[a], T[b], P[b])) for a, b in zip(ia, ib))
    names = list(BELL_STATES)
    for x in range(len(names)):
        for y in range(x + 1, len(names)):
            kets1.append(BELL_STATES[names[x]][None].astype(complex))
            kets2.append(BELL_STATES[names[y]][None].astype(complex))
            labels.append(("bell", (names[x], names[y])))
    return np.concatenate(kets1), np.concatenate(kets2), labels


def _product_pair(kind, x):
    a = bloch_state(x[0], x[1])
    b = bloch_state(x[2], x[3])
    a_perp = bloch_state(np.pi - x[0], x[1] + np.pi)
    b_perp = bloch_state(np.pi - x[2], x[3] + np.pi)
    second = {"both": (a_perp, b_perp), "first": (a_perp, b), "second": (a, b_perp)}[kind]
    return np.kron(a, b), np.kron(*second)


def _two_qubit_search(g, side, chunk=40000):
    kets1, kets2, labels = two_qubit_candidates(side)
    score = np.concatenate([
        _recoverable(kets1[s:s + chunk], kets2[s:s + chunk], g)
        for s in range(0, len(labels), chunk)
    ])
    best = int(np.argmax(score))
    k1, k2, value = kets1[best], kets2[best], float(score[best])
    kind, angles = labels[best]
    if kind != "bell":
        def loss(x):
            p1, p2 = _product_pair(kind, x)
            return -float(_recoverable(p1[None], p2[None], g)[0])

        res = minimize(loss, np.array(angles), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        if -res.fun > value:
            k1, k2 = _product_pair(kind, res.x)
            value = -res.fun
    return StatePair(DensityMatrix.pure(k1), DensityMatrix.pure(k2)), float(value)


def optimal_pair_search(gamma_value, n_samples=400, qubits=1):
    """Search for the initial pair with the most recoverable distinguishability.

    Candidates are scored by ``D(Phi rho1, Phi rho2) - D(Phi_0 rho1, Phi_0 rho2)``
    where ``Phi_0`` is complete dephasing: the part of the distinguishability
    carried by coherences, which is what can flow back under a revival of the
    dephasing factor.  Pairs differing in populations are distinguishable at
    any time and therefore do not witness backflow.

    Parameters
    ----------
    gamma_value : float
        Dephasing factor in ``[-1, 1]``.
    n_samples : int
        Single qubit: number of Fibonacci-sphere states (all pairs are
        scored).  Two qubits: ``int(sqrt(n_samples))`` grid points per
        Bloch angle.
    qubits : {1, 2}

    Returns
    -------
    pair : StatePair
        Initial states (before the map) of the best candidate after
        Nelder-Mead refinement.
    achieved : float
        Its score; equals ``|gamma_value|`` for the optimal pair.
    """
    g = _check_gamma(gamma_value)
    if n_samples < 100:
        raise DomainError("n_samples must be at least 100")
    if qubits == 1:
        return _single_qubit_search(g, int(n_samples))
    if qubits == 2:
        return _two_qubit_search(g, int(np.sqrt(n_samples)))
    raise DomainError("qubits must be 1 or 2")


def recoverable_distance(pair, gamma_value):
    """Score used by :func:`optimal_pair_search` for an explicit pair."""
    g = _check_gamma(gamma_value)
    first, second = (np.asarray(m, dtype=complex) for m in pair)
    dim = first.shape[0]
    m_g, m_0 = _dephasing_mask(dim, g), _dephasing_mask(dim, 0.0)
    return float(_trace_distance_batch(first * m_g, second * m_g)
                 - _trace_distance_batch(first * m_0, second * m_0))
