"""A small assembler for building register-machine programs in Python.

Labels resolve to relative jump displacements in a second pass, and
``reg()`` hands out scratch registers so independently written fragments
never collide.  ``code()`` produces the numeric program code.
"""
from __future__ import annotations

from ._progcode import (
    ADD, CONST, COPY, HALT, INC, JMP, JZ, MONUS, MUL, PAIR, UNL, UNR, UEVAL,
    encode_program, zz_encode,
)


class Label:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"<label {self.name}>"


class Asm:
    """Accumulates instructions; jump operands may be labels until assembly."""

    def __init__(self, first_free_reg: int = 8):
        self._instrs: list[tuple[int, list]] = []
        self._positions: dict[Label, int] = {}
        self._next_reg = first_free_reg
        self._n_labels = 0

    # -- resources ---------------------------------------------------------

    def reg(self) -> int:
        """A scratch register not handed out before."""
        r = self._next_reg
        self._next_reg += 1
        return r

    def label(self, name: str | None = None) -> Label:
        self._n_labels += 1
        return Label(name or f"L{self._n_labels}")

    def mark(self, lab: Label) -> None:
        """Bind ``lab`` to the next emitted instruction."""
        if lab in self._positions:
            raise ValueError(f"label {lab.name} marked twice")
        self._positions[lab] = len(self._instrs)

    @property
    def here(self) -> int:
        return len(self._instrs)

    # -- instructions ------------------------------------------------------

    def halt(self) -> None:
        self._instrs.append((HALT, []))

    def const(self, r: int, v: int) -> None:
        self._instrs.append((CONST, [r, v]))

    def copy(self, r: int, s: int) -> None:
        self._instrs.append((COPY, [r, s]))

    def inc(self, r: int) -> None:
        self._instrs.append((INC, [r]))

    def add(self, r: int, s: int, t: int) -> None:
        self._instrs.append((ADD, [r, s, t]))

    def monus(self, r: int, s: int, t: int) -> None:
        self._instrs.append((MONUS, [r, s, t]))

    def mul(self, r: int, s: int, t: int) -> None:
        self._instrs.append((MUL, [r, s, t]))

    def pair(self, r: int, s: int, t: int) -> None:
        self._instrs.append((PAIR, [r, s, t]))

    def unl(self, r: int, s: int) -> None:
        self._instrs.append((UNL, [r, s]))

    def unr(self, r: int, s: int) -> None:
        self._instrs.append((UNR, [r, s]))

    def jz(self, r: int, lab: Label) -> None:
        self._instrs.append((JZ, [r, lab]))

    def jmp(self, lab: Label) -> None:
        self._instrs.append((JMP, [lab]))

    def jmp_raw(self, operand: int) -> None:
        """Jump with an explicit zigzag operand (e.g. 0 for a self-loop)."""
        self._instrs.append((JMP, [operand]))

    def jz_raw(self, r: int, operand: int) -> None:
        self._instrs.append((JZ, [r, operand]))

    def ueval(self, r: int, s: int, t: int) -> None:
        self._instrs.append((UEVAL, [r, s, t]))

    # -- assembly ----------------------------------------------------------

    def instructions(self) -> list[tuple[int, list[int]]]:
        """Resolve labels; returns (opcode, raw operand) rows."""
        resolved: list[tuple[int, list[int]]] = []
        for pc, (op, operands) in enumerate(self._instrs):
            row: list[int] = []
            for v in operands:
                if isinstance(v, Label):
                    if v not in self._positions:
                        raise ValueError(f"label {v.name} never marked")
                    row.append(zz_encode(self._positions[v] - pc))
                else:
                    row.append(v)
            resolved.append((op, row))
        return resolved

    def code(self) -> int:
        return encode_program(self.instructions())
