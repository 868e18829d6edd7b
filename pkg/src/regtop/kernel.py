"""Fuel-bounded universal evaluation over numeric program codes.

Everything else in the package reduces to this module: running a program
code on an input with a step budget, parameterizing codes (``smn``), composing
them, and enumerating halting sets by dovetailing.

Two interpreter backends exist: a compiled one (built from
``_interp_cy.pyx``) and the pure-Python reference in ``_interp_py``.  The
compiled backend is chosen at import when available; set ``REGTOP_PURE=1``
to force the reference.  Both implement identical step semantics, so every
result — including step counts — is backend-independent.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

from . import _interp_py
from ._progcode import (
    Decoded, Delegate, decode_program, encode_program, format_program,
    pair, parse_asm, unpair,
)

__all__ = [
    "Halted", "OutOfFuel", "Outcome", "pair", "unpair", "run", "smn",
    "compose", "halts_within", "w_enumerate", "w_union", "w_intersect",
    "assemble", "disassemble", "BACKEND",
]


@dataclass(frozen=True)
class Halted:
    value: int
    steps: int


@dataclass(frozen=True)
class OutOfFuel:
    steps: int


Outcome = Halted | OutOfFuel


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

_decode_cached = lru_cache(maxsize=4096)(decode_program)

if os.environ.get("REGTOP_PURE"):
    _fast_execute = None
    BACKEND = "pure"
else:
    try:
        from . import _interp_cy

        _fast_execute = _interp_cy.execute
        BACKEND = "compiled"
    except ImportError:
        _fast_execute = None
        BACKEND = "pure"


def run(p: int, x: int, fuel: int) -> Outcome:
    """Run program code ``p`` on input ``x`` for at most ``fuel`` steps.

    Deterministic and fuel-monotone: once ``Halted(v, k)`` appears it is the
    result for every budget ≥ k.  Nested ``UEVAL`` burns the same budget.
    """
    if fuel < 0:
        raise ValueError("fuel must be a natural number")
    if _fast_execute is not None:
        try:
            halted, value, steps = _fast_execute(_decode_cached, p, x, fuel)
        except Delegate:
            halted, value, steps = _interp_py.execute(_decode_cached, p, x, fuel)
    else:
        halted, value, steps = _interp_py.execute(_decode_cached, p, x, fuel)
    return Halted(value, steps) if halted else OutOfFuel(steps)


# ---------------------------------------------------------------------------
# Program construction
# ---------------------------------------------------------------------------

from ._progcode import CONST, HALT, PAIR, UEVAL  # noqa: E402  (opcode constants)


def smn(p: int, a: int) -> int:
    """Freeze the left half of a paired input: φ_result(x) = φ_p(pair(a, x)).

    The produced program adds at most 5 steps on top of the inner run.
    """
    return encode_program([
        (CONST, [1, a]),
        (PAIR, [0, 1, 0]),   # r0 := pair(a, x)
        (CONST, [1, p]),
        (UEVAL, [0, 1, 0]),  # r0 := φ_p(r0); falling off the end halts
    ])


def compose(i: int, j: int) -> int:
    """φ_result(x) = φ_i(φ_j(x)); diverges whenever either stage does."""
    return encode_program([
        (CONST, [1, j]),
        (UEVAL, [0, 1, 0]),
        (CONST, [1, i]),
        (UEVAL, [0, 1, 0]),
    ])


def halts_within(p: int, n: int, k: int) -> tuple[bool, int | None]:
    """Decide whether φ_p(n) halts within k steps; exact step count if so."""
    out = run(p, n, k)
    if isinstance(out, Halted):
        return True, out.steps
    return False, None


def w_enumerate(i: int, rounds: int) -> list[int]:
    """Finite approximation of dom(φ_i) by dovetailing.

    Schedule: in round t the inputs 0..t each get t steps, so input m is
    first seen halting in round max(m, steps_m).  One run per input at the
    final budget recovers exactly that discovery order: keep m iff it halts
    with max(m, steps_m) ≤ rounds, sorted by (max(m, steps_m), m).
    """
    found: list[tuple[int, int]] = []
    for m in range(rounds + 1):
        out = run(i, m, rounds)
        if isinstance(out, Halted):
            t = max(m, out.steps)
            if t <= rounds:
                found.append((t, m))
    found.sort()
    return [m for _, m in found]


def w_intersect(i: int, j: int) -> int:
    """Program whose domain is dom(φ_i) ∩ dom(φ_j) (sequential runs)."""
    return encode_program([
        (CONST, [1, i]),
        (UEVAL, [2, 1, 0]),
        (CONST, [1, j]),
        (UEVAL, [2, 1, 0]),
        (HALT, []),           # r0 still holds the input
    ])


def w_union(i: int, j: int) -> int:
    """Program whose domain is dom(φ_i) ∪ dom(φ_j) (interleaved execution).

    Sequential runs would lose the union when the first program diverges, so
    the produced code alternates bounded simulation rounds of both programs
    with doubling budgets until either halts.
    """
    from . import progs

    return progs.w_union_code(i, j)


# ---------------------------------------------------------------------------
# Textual program form
# ---------------------------------------------------------------------------

def assemble(text: str) -> int:
    """Program text (one 'MNEMONIC operands…' per line) -> program code."""
    return parse_asm(text)


def disassemble(code: int) -> str:
    """Program code -> textual listing (inverse of :func:`assemble`)."""
    return format_program(code)
