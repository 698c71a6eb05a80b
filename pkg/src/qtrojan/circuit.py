"""Flat circuit IR and an OpenQASM 2 subset reader/writer.

Only the gates the QAOA/Trojan pipeline needs are supported:
``h, x, sx, rx, rz, cx, swap, barrier, measure``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class GateKind(Enum):
    H = "h"
    X = "x"
    SX = "sx"
    RX = "rx"
    RZ = "rz"
    CX = "cx"
    SWAP = "swap"
    BARRIER = "barrier"
    MEASURE = "measure"

    @property
    def num_qubits(self) -> int | None:
        """Arity; ``None`` for barriers, which span any number of qubits."""
        if self is GateKind.BARRIER:
            return None
        return 2 if self in (GateKind.CX, GateKind.SWAP) else 1

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RZ)


class CircuitError(ValueError):
    """Structurally invalid gate or circuit."""


class QasmError(ValueError):
    """Base class for OpenQASM reading errors."""


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedGateError(QasmError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"unsupported gate {name!r} (line {line}, column {column})")
        self.name = name
        self.line = line
        self.column = column


class QubitRangeError(QasmError):
    def __init__(self, reg: str, index: int, size: int, line: int, column: int):
        super().__init__(
            f"index {reg}[{index}] out of range for register of size {size} "
            f"(line {line}, column {column})"
        )
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    param: float | None = None
    clbit: int | None = None

    def __post_init__(self):
        kind = self.kind
        arity = kind.num_qubits
        if arity is not None and len(self.qubits) != arity:
            raise CircuitError(f"{kind.name} acts on {arity} qubit(s), got {self.qubits}")
        if not self.qubits:
            raise CircuitError(f"{kind.name} needs at least one qubit")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {kind.name}{self.qubits}")
        if kind.parametric != (self.param is not None):
            raise CircuitError(f"{kind.name} parameter mismatch: {self.param!r}")
        if (kind is GateKind.MEASURE) != (self.clbit is not None):
            raise CircuitError("clbit is required for MEASURE and only for MEASURE")

    def __str__(self) -> str:
        args = ",".join(map(str, self.qubits))
        if self.param is not None:
            return f"{self.kind.name}({self.param:g})[{args}]"
        return f"{self.kind.name}[{args}]"


# Shorthand constructors used throughout the package and tests.
def h(q: int) -> Gate:
    return Gate(GateKind.H, (q,))


def x(q: int) -> Gate:
    return Gate(GateKind.X, (q,))


def sx(q: int) -> Gate:
    return Gate(GateKind.SX, (q,))


def rx(theta: float, q: int) -> Gate:
    return Gate(GateKind.RX, (q,), float(theta))


def rz(theta: float, q: int) -> Gate:
    return Gate(GateKind.RZ, (q,), float(theta))


def cx(control: int, target: int) -> Gate:
    return Gate(GateKind.CX, (control, target))


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, (a, b))


def barrier(*qubits: int) -> Gate:
    return Gate(GateKind.BARRIER, tuple(qubits))


def measure(q: int, c: int) -> Gate:
    return Gate(GateKind.MEASURE, (q,), clbit=c)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    num_clbits: int = 0
    name: str = "circuit"

    def __post_init__(self):
        if not isinstance(self.gates, tuple):
            object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        measured: set[int] = set()
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(f"{g} references qubit outside 0..{self.num_qubits - 1}")
                if q in measured and g.kind is not GateKind.BARRIER:
                    raise CircuitError(f"{g} follows a measurement on qubit {q}")
            if g.kind is GateKind.MEASURE:
                if not 0 <= g.clbit < self.num_clbits:
                    raise CircuitError(f"clbit {g.clbit} outside 0..{self.num_clbits - 1}")
                measured.add(g.qubits[0])

    def __len__(self) -> int:
        return len(self.gates)

    def replace(self, gates=None, **kw) -> "Circuit":
        return Circuit(
            num_qubits=kw.get("num_qubits", self.num_qubits),
            gates=tuple(self.gates if gates is None else gates),
            num_clbits=kw.get("num_clbits", self.num_clbits),
            name=kw.get("name", self.name),
        )

    def without_measurements(self) -> "Circuit":
        return self.replace(
            [g for g in self.gates if g.kind not in (GateKind.MEASURE, GateKind.BARRIER)]
        )

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.kind.value] = counts.get(g.kind.value, 0) + 1
        return counts


def insert_gate_at(c: Circuit, index: int, g: Gate) -> Circuit:
    """Return a copy of ``c`` with ``g`` placed at position ``index``."""
    if not 0 <= index <= len(c.gates):
        raise IndexError(f"insert index {index} outside 0..{len(c.gates)}")
    for q in g.qubits:
        if not 0 <= q < c.num_qubits:
            raise CircuitError(f"{g} references qubit outside 0..{c.num_qubits - 1}")
    return c.replace(c.gates[:index] + (g,) + c.gates[index:])


# --------------------------------------------------------------------------
# OpenQASM 2 subset

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[;,()\[\]\-+])
    """,
    re.VERBOSE,
)

_GATE_NAMES = {k.value: k for k in GateKind if k not in (GateKind.BARRIER, GateKind.MEASURE)}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    return toks


@dataclass
class _Parser:
    toks: list[_Tok]
    pos: int = 0
    qreg: tuple[str, int] | None = None
    creg: tuple[str, int] | None = None
    gates: list[Gate] = field(default_factory=list)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, expected: str | None = None) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("", "", 1, 0)
            raise QasmSyntaxError(
                f"unexpected end of input, expected {expected or 'more'}",
                last.line, last.col + len(last.text),
            )
        if expected is not None and tok.text != expected and tok.kind != expected:
            raise QasmSyntaxError(f"expected {expected!r}, got {tok.text!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def integer(self) -> int:
        tok = self.next("number")
        if not tok.text.isdigit():
            raise QasmSyntaxError(f"expected integer, got {tok.text!r}", tok.line, tok.col)
        return int(tok.text)

    def real(self) -> float:
        sign = 1.0
        tok = self.peek()
        if tok is not None and tok.text in "+-":
            self.next()
            sign = -1.0 if tok.text == "-" else 1.0
        return sign * float(self.next("number").text)

    def operand(self, reg: tuple[str, int] | None, what: str) -> int | None:
        """Parse ``name[i]`` (returns i) or a bare register name (returns None)."""
        tok = self.next("ident")
        if reg is None or tok.text != reg[0]:
            raise QasmSyntaxError(f"unknown {what} register {tok.text!r}", tok.line, tok.col)
        if self.peek() is None or self.peek().text != "[":
            return None
        self.next("[")
        idx_tok = self.peek()
        idx = self.integer()
        self.next("]")
        if idx >= reg[1]:
            raise QubitRangeError(reg[0], idx, reg[1], idx_tok.line, idx_tok.col)
        return idx

    def qubit(self) -> int:
        tok = self.peek()
        idx = self.operand(self.qreg, "quantum")
        if idx is None:
            raise QasmSyntaxError("expected indexed qubit", tok.line, tok.col)
        return idx

    def statement(self):
        tok = self.next("ident")
        name = tok.text
        if name == "include":
            self.next("string")
        elif name in ("qreg", "creg"):
            reg_name = self.next("ident").text
            self.next("[")
            size = self.integer()
            self.next("]")
            if getattr(self, name) is not None:
                raise QasmSyntaxError(f"only one {name} is supported", tok.line, tok.col)
            setattr(self, name, (reg_name, size))
        elif name == "measure":
            q = self.qubit()
            self.next("->")
            ctok = self.peek()
            c = self.operand(self.creg, "classical")
            if c is None:
                raise QasmSyntaxError("expected indexed clbit", ctok.line, ctok.col)
            self.gates.append(Gate(GateKind.MEASURE, (q,), clbit=c))
        elif name == "barrier":
            qubits: list[int] = []
            while True:
                idx = self.operand(self.qreg, "quantum")
                qubits.extend(range(self.qreg[1]) if idx is None else [idx])
                if self.peek() is None or self.peek().text != ",":
                    break
                self.next(",")
            self.gates.append(Gate(GateKind.BARRIER, tuple(dict.fromkeys(qubits))))
        elif name in _GATE_NAMES:
            kind = _GATE_NAMES[name]
            param = None
            if self.peek() is not None and self.peek().text == "(":
                self.next("(")
                param = self.real()
                self.next(")")
            qubits = [self.qubit()]
            while self.peek() is not None and self.peek().text == ",":
                self.next(",")
                qubits.append(self.qubit())
            try:
                self.gates.append(Gate(kind, tuple(qubits), param))
            except CircuitError as exc:
                raise QasmSyntaxError(str(exc), tok.line, tok.col) from None
        else:
            raise UnsupportedGateError(name, tok.line, tok.col)
        self.next(";")


def parse_qasm(text: str, name: str = "circuit") -> Circuit:
    """Read a program in the supported OpenQASM 2.0 subset."""
    p = _Parser(_tokenize(text))
    head = p.next("ident")
    if head.text != "OPENQASM":
        raise QasmSyntaxError("program must start with 'OPENQASM 2.0;'", head.line, head.col)
    version = p.next("number")
    if version.text not in ("2.0", "2"):
        raise QasmSyntaxError(f"unsupported version {version.text}", version.line, version.col)
    p.next(";")
    while p.peek() is not None:
        tok = p.peek()
        if tok.kind != "ident":
            raise QasmSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
        if p.qreg is None and tok.text not in ("include", "qreg", "creg"):
            if tok.text in _GATE_NAMES or tok.text in ("measure", "barrier"):
                raise QasmSyntaxError("gate used before qreg declaration", tok.line, tok.col)
        p.statement()
    if p.qreg is None:
        raise QasmSyntaxError("missing qreg declaration", head.line, head.col)
    try:
        return Circuit(p.qreg[1], tuple(p.gates), p.creg[1] if p.creg else 0, name)
    except CircuitError as exc:
        raise QasmSyntaxError(str(exc), head.line, head.col) from None


def _fmt(x: float) -> str:
    return format(x, ".17g")


def emit_qasm(c: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.num_qubits}];"]
    if c.num_clbits:
        lines.append(f"creg c[{c.num_clbits}];")
    for g in c.gates:
        args = ",".join(f"q[{q}]" for q in g.qubits)
        if g.kind is GateKind.MEASURE:
            lines.append(f"measure {args} -> c[{g.clbit}];")
        elif g.param is not None:
            lines.append(f"{g.kind.value}({_fmt(g.param)}) {args};")
        else:
            lines.append(f"{g.kind.value} {args};")
    return "\n".join(lines) + "\n"
