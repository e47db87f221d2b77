"""Pauli strings in binary symplectic form and their conjugation by mapping gates.

A Pauli string on ``q`` qubits is stored as two bitmasks plus a phase code::

    bit i of x_mask / z_mask  ->  letter on qubit i
    (0, 0) = I,  (1, 0) = X,  (0, 1) = Z,  (1, 1) = Y

and the operator is ``1j**phase * P_0 (x) P_1 (x) ... (x) P_{q-1}`` where the
letter Y is the Hermitian matrix [[0, -i], [i, 0]].  Qubit 0 is the leftmost
character of the text form and the most significant Kronecker factor.

Conjugation follows the ``m^dagger P m`` convention, i.e. a gate word
``(m_1, ..., m_k)`` maps ``P`` to ``(m_1...m_k)^dagger P (m_1...m_k)`` and
``m_1`` is applied first.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

LETTERS = "IXZY"  # indexed by x + 2*z
PHASE_TEXT = ("+", "+i", "-", "-i")

GATE_KINDS = ("H", "S", "SDG", "CNOT", "SWAP")
# SDG never appears in an action space; it only shows up when a word is
# inverted without expanding S^dagger into S.S.S (conjugate tails).
SINGLE_QUBIT = frozenset({"H", "S", "SDG"})

DENSE_LIMIT = 6


class PauliParseError(ValueError):
    def __init__(self, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"invalid Pauli letter {text[position]!r} at position {position} in {text!r}")


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    q: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("qubit count must be >= 1")
        full = (1 << self.q) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask has bits beyond the qubit count")

    @classmethod
    def identity(cls, q: int) -> "PauliString":
        return cls(q)

    @classmethod
    def from_key(cls, q: int, key: int) -> "PauliString":
        full = (1 << q) - 1
        return cls(q, key & full, key >> q)

    @property
    def key(self) -> int:
        """Phase-free integer label, ``x | z << q``."""
        return self.x | (self.z << self.q)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def letter(self, i: int) -> str:
        return LETTERS[((self.x >> i) & 1) + 2 * ((self.z >> i) & 1)]

    def letters(self) -> str:
        return "".join(self.letter(i) for i in range(self.q))

    def support(self) -> list[int]:
        return [i for i in range(self.q) if (self.x | self.z) >> i & 1]

    def same_up_to_phase(self, other: "PauliString") -> bool:
        return self.q == other.q and self.x == other.x and self.z == other.z

    def negate(self) -> "PauliString":
        return PauliString(self.q, self.x, self.z, (self.phase + 2) % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return self.letters()

    def __repr__(self) -> str:
        sign = PHASE_TEXT[self.phase]
        return f"PauliString({sign}{self.letters()})"


def parse_pauli(text: str) -> PauliString:
    text = text.strip()
    if not text:
        raise ValueError("empty Pauli string")
    x = z = 0
    for i, c in enumerate(text):
        code = LETTERS.find(c)
        if code < 0:
            raise PauliParseError(text, i)
        x |= (code & 1) << i
        z |= (code >> 1) << i
    return PauliString(len(text), x, z)


def format_pauli(p: PauliString) -> str:
    return p.letters()


def _check_same_q(a: PauliString, b: PauliString):
    if a.q != b.q:
        raise ValueError(f"qubit count mismatch: {a.q} != {b.q}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a * b`` including the power of i."""
    _check_same_q(a, b)
    x1, z1, x2, z2 = a.x, a.z, b.x, b.z
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = z1 & ~x1
    # per-qubit exponents of i: Y*Z=iX, Y*X=-iZ, X*Y=iZ, X*Z=-iY, Z*X=iY, Z*Y=-iX
    e = (_popcount(y1 & z2 & ~x2) - _popcount(y1 & x2 & ~z2)
         + _popcount(xo & x2 & z2) - _popcount(xo & z2 & ~x2)
         + _popcount(zo & x2 & ~z2) - _popcount(zo & x2 & z2))
    return PauliString(a.q, x1 ^ x2, z1 ^ z2, (a.phase + b.phase + e) % 4)


def weight(p: PauliString) -> int:
    return p.weight


def overlap(a: PauliString, b: PauliString) -> int:
    """``q - weight(a*b)``; phase never matters."""
    _check_same_q(a, b)
    return a.q - _popcount((a.x ^ b.x) | (a.z ^ b.z))


def similarity(state: Iterable[PauliString], natives: Sequence[PauliString]) -> int:
    """Sum over ``state`` of the largest overlap with any native string."""
    return sum(max(overlap(p, n) for n in natives) for p in state)


@dataclass(frozen=True)
class MappingGate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in SINGLE_QUBIT:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} takes one qubit")
        else:
            if len(self.qubits) != 2 or self.qubits[1] != self.qubits[0] + 1:
                raise ValueError(f"{self.kind} needs an adjacent pair (j, j+1), got {self.qubits}")
        if min(self.qubits) < 0:
            raise ValueError("negative qubit index")

    @property
    def span(self) -> int:
        return max(self.qubits) + 1

    def inverse(self) -> "MappingGate":
        if self.kind == "S":
            return MappingGate("SDG", self.qubits)
        if self.kind == "SDG":
            return MappingGate("S", self.qubits)
        return self

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.qubits)])

    def __repr__(self) -> str:
        return f"{self.kind}({', '.join(map(str, self.qubits))})"


def H(j: int) -> MappingGate:
    return MappingGate("H", (j,))


def S(j: int) -> MappingGate:
    return MappingGate("S", (j,))


def SDG(j: int) -> MappingGate:
    return MappingGate("SDG", (j,))


def CNOT(j: int) -> MappingGate:
    """CNOT with control ``j`` and target ``j + 1``."""
    return MappingGate("CNOT", (j, j + 1))


def SWAP(j: int) -> MappingGate:
    return MappingGate("SWAP", (j, j + 1))


def parse_gate(text: str) -> MappingGate:
    parts = text.split()
    if not parts:
        raise ValueError("empty gate line")
    try:
        qubits = tuple(int(t) for t in parts[1:])
    except ValueError:
        raise ValueError(f"bad gate line {text!r}") from None
    return MappingGate(parts[0].upper(), qubits)


GateWord = tuple[MappingGate, ...]


def inverse_word(word: Sequence[MappingGate], expand_s: bool = True) -> list[MappingGate]:
    """Adjoint of a word; with ``expand_s`` every S^dagger becomes S.S.S."""
    out: list[MappingGate] = []
    for g in reversed(word):
        if g.kind == "S" and expand_s:
            out.extend([g, g, g])
        elif g.kind == "SDG" and expand_s:
            out.append(MappingGate("S", g.qubits))
        else:
            out.append(g.inverse())
    return out


def conjugate(p: PauliString, g: MappingGate) -> PauliString:
    """``g^dagger p g`` with exact sign."""
    if g.span > p.q:
        raise IndexError(f"gate {g!r} out of range for {p.q} qubits")
    x, z, ph = p.x, p.z, p.phase
    kind = g.kind
    if kind == "H":
        b = 1 << g.qubits[0]
        xb, zb = x & b, z & b
        if xb and zb:
            ph += 2
        x = (x & ~b) | zb
        z = (z & ~b) | xb
    elif kind == "S" or kind == "SDG":
        b = 1 << g.qubits[0]
        xb, zb = x & b, z & b
        # S^dag X S = -Y, S^dag Y S = X;  S X S^dag = Y, S Y S^dag = -X
        if kind == "S" and xb and not zb:
            ph += 2
        elif kind == "SDG" and xb and zb:
            ph += 2
        z ^= xb
    elif kind == "CNOT":
        c, t = g.qubits
        xc, zc = (x >> c) & 1, (z >> c) & 1
        xt, zt = (x >> t) & 1, (z >> t) & 1
        if xc and zt and (xt ^ zc ^ 1):
            ph += 2
        x ^= xc << t
        z ^= zt << c
    else:  # SWAP
        a, b = g.qubits
        for m in ("x", "z"):
            v = x if m == "x" else z
            va, vb = (v >> a) & 1, (v >> b) & 1
            if va != vb:
                v ^= (1 << a) | (1 << b)
            if m == "x":
                x = v
            else:
                z = v
    return PauliString(p.q, x, z, ph % 4)


def conjugate_word(p: PauliString, word: Iterable[MappingGate]) -> PauliString:
    for g in word:
        p = conjugate(p, g)
    return p


def action_space(q: int) -> list[MappingGate]:
    """The 4q-2 mapping gates in fixed order: H's, S's, CNOTs, SWAPs."""
    if q < 1:
        raise ValueError("need at least one qubit")
    return ([H(j) for j in range(q)] + [S(j) for j in range(q)]
            + [CNOT(j) for j in range(q - 1)] + [SWAP(j) for j in range(q - 1)])


@lru_cache(maxsize=None)
def conjugation_table(q: int, gates: tuple[MappingGate, ...]) -> tuple[tuple[int, ...], ...]:
    """``table[a][key]`` is the phase-free key of ``gates[a]^dag P gates[a]``."""
    n = 4 ** q
    rows = []
    for g in gates:
        rows.append(tuple(conjugate(PauliString.from_key(q, k), g).key for k in range(n)))
    return tuple(rows)


# ---------------------------------------------------------------- dense oracle

_I2 = np.eye(2, dtype=complex)
_PAULI_MATS = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_GATE_MATS = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def _embed(mat: np.ndarray, first: int, q: int) -> np.ndarray:
    width = int(round(np.log2(mat.shape[0])))
    left = np.eye(2 ** first, dtype=complex)
    right = np.eye(2 ** (q - first - width), dtype=complex)
    return np.kron(np.kron(left, mat), right)


def dense_matrix(obj, q: int, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Explicit 2^q x 2^q matrix of a Pauli string, a gate, or a gate word.

    For a word the matrix is the product ``m_1 m_2 ... m_k`` so that
    ``U^dag P U`` reproduces :func:`conjugate_word`.
    """
    if q > limit:
        raise ValueError(f"dense matrices limited to q <= {limit}")
    if isinstance(obj, PauliString):
        if obj.q != q:
            raise ValueError("qubit count mismatch")
        m = np.ones((1, 1), dtype=complex)
        for i in range(q):
            m = np.kron(m, _PAULI_MATS[obj.letter(i)])
        return (1j ** obj.phase) * m
    if isinstance(obj, MappingGate):
        if obj.span > q:
            raise IndexError("gate out of range")
        return _embed(_GATE_MATS[obj.kind], obj.qubits[0], q)
    u = np.eye(2 ** q, dtype=complex)
    for g in obj:
        u = u @ dense_matrix(g, q, limit)
    return u
