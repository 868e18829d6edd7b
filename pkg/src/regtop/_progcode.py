"""Numeric program codes for the register machine.

Every natural number is a program.  A code decodes as ``pair(n, tree)`` where
``n`` is the declared instruction count and ``tree`` is a balanced pair-tree
whose leaves are instruction codes: a tree for a range of size s > 1 splits
into a left subtree of size ceil(s/2) and a right subtree of the rest.  A
subtree value of 0 stands for an all-HALT block, which keeps decoding cheap
even when ``n`` is astronomically large.

An instruction code decodes as ``(oc, args) = unpair(code)`` with opcode
``oc mod 13``; ``args`` packs the operands with nested pairing according to
the opcode's arity.  Jump operands are sign-pair relative displacements:
``pair(0, d)`` jumps forward by d, ``pair(s, m)`` with s >= 1 jumps backward
by m + 1 — a shape a program can decode about other programs with two
unpairings, no division.  A jump that lands outside the program terminates
execution like a HALT.
"""
from __future__ import annotations

from math import isqrt

# Opcode numbers are frozen: changing them changes every program code.
HALT = 0
CONST = 1   # r, v      r := v
COPY = 2    # r, s      r := s
INC = 3     # r         r := r + 1
ADD = 4     # r, s, t   r := s + t
MONUS = 5   # r, s, t   r := max(s - t, 0)
MUL = 6     # r, s, t   r := s * t
PAIR = 7    # r, s, t   r := pair(s, t)
UNL = 8     # r, s      r := left component of s
UNR = 9     # r, s      r := right component of s
JZ = 10     # r, o      if r == 0 jump by sign-pair(o) else fall through
JMP = 11    # o         jump by sign-pair(o)
UEVAL = 12  # r, s, t   r := run(program s, input t) with the remaining fuel

N_OPCODES = 13

MNEMONICS = (
    "HALT", "CONST", "COPY", "INC", "ADD", "MONUS", "MUL", "PAIR",
    "UNL", "UNR", "JZ", "JMP", "UEVAL",
)
ARITY = (0, 2, 2, 1, 3, 3, 3, 3, 2, 2, 2, 1, 3)

#: Programs up to this many instructions decode to a dense list; longer (or
#: absurdly long) ones decode to a sparse pc -> instruction dict.
DENSE_MAX = 4096

HALT_TUPLE = (HALT, 0, 0, 0)


class Delegate(Exception):
    """Raised by a backend that cannot run this workload (caller retries pure)."""


# ---------------------------------------------------------------------------
# Pairing.
#
# CPython's math.isqrt costs roughly quadratic time in the bit length, which
# makes unpairing the dominant cost as soon as values carry embedded program
# text (hundreds of kilobits).  Huge values therefore get their unpairing
# memoized: interpreting a program whose code embeds another program unpairs
# the same tree nodes once per simulated step, so caching turns each repeat
# into a dict hit.
# ---------------------------------------------------------------------------

#: Values at least this large get their unpairing memoized.
_UNPAIR_MEMO_GATE = 1 << 8192
_UNPAIR_MEMO_CAP = 65536
_unpair_memo: dict[int, tuple[int, int]] = {}


def pair(n: int, m: int) -> int:
    """Cantor pairing (n + m)(n + m + 1)/2 + m."""
    s = n + m
    return s * (s + 1) // 2 + m


def unpair(k: int) -> tuple[int, int]:
    """Inverse of :func:`pair`."""
    if k >= _UNPAIR_MEMO_GATE:
        hit = _unpair_memo.get(k)
        if hit is not None:
            return hit
        w = (isqrt(8 * k + 1) - 1) // 2
        m = k - w * (w + 1) // 2
        out = (w - m, m)
        if len(_unpair_memo) >= _UNPAIR_MEMO_CAP:
            _unpair_memo.clear()
        _unpair_memo[k] = out
        return out
    w = (isqrt(8 * k + 1) - 1) // 2
    m = k - w * (w + 1) // 2
    return w - m, m


def zz_encode(d: int) -> int:
    """Signed displacement -> natural operand (sign-pair form)."""
    return pair(0, d) if d >= 0 else pair(1, -d - 1)


def zz_decode(o: int) -> int:
    """Natural operand -> signed displacement.  Total: any left component
    >= 1 reads as a backward jump."""
    s, m = unpair(o)
    return m if s == 0 else -(m + 1)


def encode_instruction(op: int, operands: tuple[int, ...] | list[int]) -> int:
    """Pack one instruction. Jump operands must already be sign-pair naturals."""
    arity = ARITY[op]
    if len(operands) != arity:
        raise ValueError(f"{MNEMONICS[op]} takes {arity} operands, got {len(operands)}")
    if arity == 0:
        args = 0
    elif arity == 1:
        args = operands[0]
    elif arity == 2:
        args = pair(operands[0], operands[1])
    else:
        args = pair(operands[0], pair(operands[1], operands[2]))
    return pair(op, args)


def decode_instruction_fields(code: int) -> tuple[int, list[int]]:
    """One instruction code -> (opcode, raw operand list).

    Total: any natural decodes. Jump operands stay in sign-pair form.
    """
    oc, args = unpair(code)
    op = oc % N_OPCODES
    arity = ARITY[op]
    if arity == 0:
        return op, []
    if arity == 1:
        return op, [args]
    if arity == 2:
        a, b = unpair(args)
        return op, [a, b]
    a, bc = unpair(args)
    b, c = unpair(bc)
    return op, [a, b, c]


def _decode_leaf(code: int, pc: int) -> tuple[int, int, int, int]:
    """Instruction code -> executable (op, x, y, z) tuple.

    Jump targets are resolved to absolute indices (possibly negative or past
    the end; the interpreter treats out-of-range as HALT).
    """
    op, ops = decode_instruction_fields(code)
    if op == JZ:
        return (JZ, ops[0], pc + zz_decode(ops[1]), 0)
    if op == JMP:
        return (JMP, pc + zz_decode(ops[0]), 0, 0)
    arity = ARITY[op]
    if arity == 0:
        return (op, 0, 0, 0)
    if arity == 1:
        return (op, ops[0], 0, 0)
    if arity == 2:
        return (op, ops[0], ops[1], 0)
    return (op, ops[0], ops[1], ops[2])


class Decoded:
    """A decoded program: instruction count plus a dense or sparse listing."""

    __slots__ = ("n", "dense", "sparse")

    def __init__(self, n: int, dense: list | None, sparse: dict | None):
        self.n = n
        self.dense = dense
        self.sparse = sparse

    def instruction(self, pc: int) -> tuple[int, int, int, int]:
        if not (0 <= pc < self.n):
            return HALT_TUPLE
        if self.dense is not None:
            return self.dense[pc]
        return self.sparse.get(pc, HALT_TUPLE)


def _walk_leaves(tree: int, n: int):
    """Yield (pc, instruction-code) for every explicitly coded position.

    All-zero subtrees are HALT blocks and are pruned, so the work is bounded
    by the bit length of the code, never by n.
    """
    stack = [(tree, 0, n)] if n else []
    while stack:
        node, lo, size = stack.pop()
        if node == 0:
            continue
        if size == 1:
            yield lo, node
            continue
        lsz = (size + 1) // 2
        left, right = unpair(node)
        stack.append((right, lo + lsz, size - lsz))
        stack.append((left, lo, lsz))


def decode_program(code: int) -> Decoded:
    """Total decoding of any natural number into a program listing."""
    n, tree = unpair(code)
    if n == 0:
        return Decoded(0, [], None)
    entries: dict[int, tuple[int, int, int, int]] = {}
    for lo, node in _walk_leaves(tree, n):
        ins = _decode_leaf(node, lo)
        if ins != HALT_TUPLE:
            entries[lo] = ins
    if n <= DENSE_MAX:
        dense = [HALT_TUPLE] * n
        for pc, ins in entries.items():
            dense[pc] = ins
        return Decoded(n, dense, None)
    return Decoded(n, None, entries)


def _tree(values: list[int]) -> int:
    if not values:
        return 0
    if len(values) == 1:
        return values[0]
    lsz = (len(values) + 1) // 2
    return pair(_tree(values[:lsz]), _tree(values[lsz:]))


def encode_program(instructions: list[tuple[int, list[int]]]) -> int:
    """List of (opcode, raw operands) -> program code."""
    leaves = [encode_instruction(op, ops) for op, ops in instructions]
    return pair(len(leaves), _tree(leaves))


# ---------------------------------------------------------------------------
# Textual form: one instruction per line, "OPCODE arg1 arg2 arg3", raw
# numeric operands (jump operands in sign-pair form). '#' starts a comment.
# ---------------------------------------------------------------------------

_MNEMONIC_TO_OP = {name: i for i, name in enumerate(MNEMONICS)}


def parse_asm(text: str) -> int:
    """Assemble textual instructions into a program code."""
    instructions: list[tuple[int, list[int]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0].upper()
        if name not in _MNEMONIC_TO_OP:
            raise ValueError(f"line {lineno}: unknown mnemonic {parts[0]!r}")
        op = _MNEMONIC_TO_OP[name]
        try:
            operands = [int(tok) for tok in parts[1:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad operand in {line!r}") from exc
        if len(operands) != ARITY[op]:
            raise ValueError(
                f"line {lineno}: {name} takes {ARITY[op]} operands, got {len(operands)}"
            )
        if any(v < 0 for v in operands):
            raise ValueError(f"line {lineno}: operands must be naturals")
        instructions.append((op, operands))
    return encode_program(instructions)


def format_program(code: int, limit: int = 100_000) -> str:
    """Disassemble a program code into textual instructions.

    Trailing HALT padding is kept (the listing always has the declared length)
    unless the program is longer than ``limit``, in which case only the
    explicitly coded instructions are listed and a summary line notes the rest.
    """
    n, tree = unpair(code)
    explicit: dict[int, str] = {}
    for lo, node in _walk_leaves(tree, n):
        op, ops = decode_instruction_fields(node)
        explicit[lo] = " ".join([MNEMONICS[op]] + [str(v) for v in ops])
    lines: list[str] = []
    if n <= limit:
        for pc in range(n):
            lines.append(explicit.get(pc, "HALT"))
    else:
        for pc in sorted(explicit):
            lines.append(f"# pc {pc}")
            lines.append(explicit[pc])
        lines.append(f"# {n} instructions declared; unlisted positions are HALT")
    return "\n".join(lines)
