"""Spin-1/2 operator algebra in the Pauli basis.

An operator ``c0*1 + cx*sx + cy*sy + cz*sz`` is stored as its four
coefficients.  Superoperators acting on those coefficients are real 4x4
matrices (Pauli transfer matrices).  The half anticommutator
``A+ : B -> {A, B}/2`` and half commutator ``A- : B -> -i[A, B]/2`` are the
building blocks of the nested correlation strings evaluated by
:func:`eval_correlation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PAULI_MATRICES",
    "PauliOperator",
    "SuperOperator",
    "CorrSignString",
    "pauli_mul",
    "anti_half",
    "comm_half",
    "spin",
    "heisenberg_Ix",
    "eval_correlation",
    "IDENTITY",
    "MAXIMALLY_MIXED",
]

PAULI_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class PauliOperator:
    """A 2x2 operator ``c0*1 + cx*sx + cy*sy + cz*sz``.

    Coefficients are real for Hermitian operators; products of Hermitian
    operators are generally not Hermitian, so complex coefficients are
    allowed for intermediate results.
    """

    c0: complex = 0.0
    cx: complex = 0.0
    cy: complex = 0.0
    cz: complex = 0.0

    @classmethod
    def from_vector(cls, vec: Sequence[complex]) -> PauliOperator:
        c0, cx, cy, cz = (complex(v) if np.iscomplexobj(v) else float(v) for v in vec)
        return cls(c0, cx, cy, cz)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> PauliOperator:
        mat = np.asarray(mat, dtype=complex)
        coeffs = [np.trace(p @ mat) / 2 for p in PAULI_MATRICES]
        if all(abs(c.imag) < _HERMITIAN_TOL for c in coeffs):
            coeffs = [c.real for c in coeffs]
        return cls(*coeffs)

    @classmethod
    def density(cls, bloch: Sequence[float]) -> PauliOperator:
        """Density operator with the given Bloch vector."""
        bx, by, bz = bloch
        return cls(0.5, bx / 2, by / 2, bz / 2)

    @property
    def vector(self) -> np.ndarray:
        vec = np.array([self.c0, self.cx, self.cy, self.cz], dtype=complex)
        return vec.real.copy() if self.is_hermitian() else vec

    @property
    def matrix(self) -> np.ndarray:
        coeffs = (self.c0, self.cx, self.cy, self.cz)
        return sum(c * p for c, p in zip(coeffs, PAULI_MATRICES))

    @property
    def bloch(self) -> np.ndarray:
        """Bloch vector of a density operator (2 * (cx, cy, cz))."""
        return 2 * np.real([self.cx, self.cy, self.cz])

    def trace(self) -> complex:
        return 2 * self.c0

    def is_hermitian(self, tol: float = _HERMITIAN_TOL) -> bool:
        return all(abs(np.imag(c)) < tol for c in (self.c0, self.cx, self.cy, self.cz))

    def __add__(self, other: PauliOperator) -> PauliOperator:
        return PauliOperator.from_vector(self._raw() + other._raw())

    def __sub__(self, other: PauliOperator) -> PauliOperator:
        return PauliOperator.from_vector(self._raw() - other._raw())

    def __mul__(self, scalar: complex) -> PauliOperator:
        return PauliOperator.from_vector(scalar * self._raw())

    __rmul__ = __mul__

    def __neg__(self) -> PauliOperator:
        return -1 * self

    def _raw(self) -> np.ndarray:
        return np.array([self.c0, self.cx, self.cy, self.cz], dtype=complex)

    def allclose(self, other: PauliOperator, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self._raw(), other._raw(), rtol=0.0, atol=atol))


IDENTITY = PauliOperator(1.0, 0.0, 0.0, 0.0)
MAXIMALLY_MIXED = PauliOperator(0.5, 0.0, 0.0, 0.0)


def spin(axis: str) -> PauliOperator:
    """Spin-1/2 operator ``I_k = s_k / 2`` for ``axis`` in ``"xyz"``."""
    coeffs = {"x": (0, 0.5, 0, 0), "y": (0, 0, 0.5, 0), "z": (0, 0, 0, 0.5)}[axis]
    return PauliOperator(*map(float, coeffs))


def pauli_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Operator product ``a @ b`` via ``(a0 + a.s)(b0 + b.s) = a0 b0 + a.b + (a0 b + b0 a + i a x b).s``."""
    a0, av = complex(a.c0), np.array([a.cx, a.cy, a.cz], dtype=complex)
    b0, bv = complex(b.c0), np.array([b.cx, b.cy, b.cz], dtype=complex)
    c0 = a0 * b0 + av @ bv
    cv = a0 * bv + b0 * av + 1j * np.cross(av, bv)
    return PauliOperator.from_vector(_realify(np.concatenate([[c0], cv])))


def _realify(vec: np.ndarray) -> np.ndarray:
    if np.all(np.abs(vec.imag) < _HERMITIAN_TOL):
        return vec.real
    return vec


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Linear map on Pauli coefficients, stored as a real 4x4 transfer matrix.

    ``s @ t`` composes (``t`` acts first); ``s @ op`` applies to a
    :class:`PauliOperator`; ``s @ vec`` applies to a raw coefficient vector.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        if mat.shape != (4, 4):
            raise ValueError(f"transfer matrix must be 4x4, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls) -> SuperOperator:
        return cls(np.eye(4))

    @classmethod
    def from_map(cls, fn: Callable[[PauliOperator], PauliOperator]) -> SuperOperator:
        """Tabulate a Hermiticity-preserving linear map column by column."""
        cols = []
        for k in range(4):
            basis = np.zeros(4)
            basis[k] = 1.0
            out = fn(PauliOperator.from_vector(basis))
            if not out.is_hermitian(1e-10):
                raise ValueError("map does not preserve Hermiticity")
            cols.append(np.real(out._raw()))
        return cls(np.column_stack(cols))

    def __matmul__(self, other):
        if isinstance(other, SuperOperator):
            return SuperOperator(self.matrix @ other.matrix)
        if isinstance(other, PauliOperator):
            return PauliOperator.from_vector(_realify(self.matrix @ other._raw()))
        return self.matrix @ np.asarray(other)

    def __add__(self, other: SuperOperator) -> SuperOperator:
        return SuperOperator(self.matrix + other.matrix)

    def __sub__(self, other: SuperOperator) -> SuperOperator:
        return SuperOperator(self.matrix - other.matrix)

    def __mul__(self, scalar: float) -> SuperOperator:
        return SuperOperator(scalar * self.matrix)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> SuperOperator:
        return SuperOperator(np.linalg.matrix_power(self.matrix, n))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SuperOperator) and np.array_equal(self.matrix, other.matrix)

    def trace_of(self, rho: PauliOperator) -> float:
        """``Tr[self(rho)]``, i.e. twice the identity coefficient of the image."""
        return float(2 * np.real(self.matrix[0] @ rho._raw()))


def anti_half(a: PauliOperator) -> SuperOperator:
    """``A+``: B -> (AB + BA)/2."""
    return SuperOperator.from_map(lambda b: 0.5 * (pauli_mul(a, b) + pauli_mul(b, a)))


def comm_half(a: PauliOperator) -> SuperOperator:
    """``A-``: B -> -i(AB - BA)/2."""
    return SuperOperator.from_map(lambda b: -0.5j * (pauli_mul(a, b) - pauli_mul(b, a)))


def heisenberg_Ix(t: float, omega0: float) -> PauliOperator:
    """Interaction-picture ``I_x(t) = exp(i w0 Iz t) Ix exp(-i w0 Iz t)``."""
    return PauliOperator(0.0, 0.5 * np.cos(omega0 * t), -0.5 * np.sin(omega0 * t), 0.0)


@dataclass(frozen=True)
class CorrSignString:
    """Signs ``s_1 ... s_n`` with times ``t_1 > ... > t_n`` (latest first)."""

    signs: tuple[str, ...]
    times: tuple[float, ...]

    def __post_init__(self) -> None:
        signs = tuple(self.signs)
        times = tuple(float(t) for t in self.times)
        if not signs:
            raise ValueError("a correlation string needs at least one sign")
        if len(signs) != len(times):
            raise ValueError("signs and times must have equal length")
        if any(s not in "+-" for s in signs):
            raise ValueError(f"signs must be '+' or '-', got {signs}")
        if any(t1 <= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError(f"times must be strictly descending, got {times}")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "times", times)

    @classmethod
    def parse(cls, signs: str, times: Sequence[float]) -> CorrSignString:
        return cls(tuple(signs), tuple(times))

    @property
    def is_quantum(self) -> bool:
        return "-" in self.signs


def eval_correlation(
    string: CorrSignString,
    params=None,
    rho: PauliOperator = MAXIMALLY_MIXED,
    field: Callable[[float], PauliOperator] | None = None,
) -> float:
    """``Tr[B^{s1}(t1) ... B^{sn}(tn) rho]`` with the earliest operation applied first.

    By default ``B(t) = 2 a I_x(t)`` with ``a`` and ``omega0`` from ``params``.
    ``field`` overrides ``B`` (e.g. a classical ``b(t) * 1`` path).
    """
    if field is None:
        if params is None:
            raise ValueError("either params or field must be given")
        a, omega0 = params.a, params.omega0

        def field(t: float) -> PauliOperator:
            return 2 * a * heisenberg_Ix(t, omega0)

    state = rho
    for sign, t in zip(reversed(string.signs), reversed(string.times)):
        b = field(t)
        state = (anti_half(b) if sign == "+" else comm_half(b)) @ state
    return float(np.real(state.trace()))
