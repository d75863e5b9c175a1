"""Minimal stack machine for locking and unlocking scripts.

An output carries a locking script (the challenge). A spender supplies an
unlocking script (the response). Validation runs the unlocking script and
then the locking script on one shared stack; the spend is authorized iff
execution finishes without fault and leaves a truthy top of stack.

The instruction set is six opcodes, enough for the two supported
templates:

* pay-to-public-key-hash: ``DUP HASH PUSH:<digest> EQUALVERIFY CHECKSIG``,
  unlocked by ``PUSH:<signature> PUSH:<public key>``.
* pay-to-hash: ``HASH PUSH:<digest> EQUAL``, unlocked by
  ``PUSH:<preimage>``. No identity is involved; whoever knows the
  preimage can spend.

Scripts are loop-free straight-line programs, so execution is trivially
bounded by the instruction count. Truthiness is defined here once: a
result is FALSE iff the stack is empty, or the top item is empty, or the
top item is all zero bytes; anything else is TRUE.

In validation mode (the default) the unlocking script must be push-only,
which precludes preparing the stack with computed values a later locking
script was never meant to see.

Everything in this module is pure and immutable; it is safe for
unrestricted concurrent use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .crypto import DIGEST_SIZE, CryptoScheme, digest as _digest
from .errors import FormatError


class Opcode(enum.Enum):
    PUSH = "PUSH"
    DUP = "DUP"
    HASH = "HASH"
    EQUAL = "EQUAL"
    EQUALVERIFY = "EQUALVERIFY"
    CHECKSIG = "CHECKSIG"


@dataclass(frozen=True)
class Op:
    """One instruction; only PUSH carries an operand."""

    opcode: Opcode
    operand: bytes | None = None

    def __post_init__(self) -> None:
        if self.opcode is Opcode.PUSH:
            if self.operand is None:
                raise FormatError("PUSH requires an operand")
        elif self.operand is not None:
            raise FormatError(f"{self.opcode.value} takes no operand")


Script = tuple[Op, ...]

# Stack truth values. EQUAL and CHECKSIG push one of these.
TRUE_BYTES = b"\x01"
FALSE_BYTES = b""


def push(data: bytes) -> Op:
    return Op(Opcode.PUSH, bytes(data))


def is_truthy(item: bytes) -> bool:
    return any(item)


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------


def compile_p2pkh(pubkey_hash: bytes) -> Script:
    """Locking script that encumbers an output with a public key hash."""
    if len(pubkey_hash) != DIGEST_SIZE:
        raise FormatError(
            f"pubkey hash must be {DIGEST_SIZE} bytes, got {len(pubkey_hash)}"
        )
    return (
        Op(Opcode.DUP),
        Op(Opcode.HASH),
        push(pubkey_hash),
        Op(Opcode.EQUALVERIFY),
        Op(Opcode.CHECKSIG),
    )


def compile_p2h(target: bytes) -> Script:
    """Locking script satisfied by revealing the digest's preimage."""
    if len(target) != DIGEST_SIZE:
        raise FormatError(f"hash target must be {DIGEST_SIZE} bytes, got {len(target)}")
    return (Op(Opcode.HASH), push(target), Op(Opcode.EQUAL))


def p2pkh_unlocking(signature: bytes, public_key: bytes) -> Script:
    return (push(signature), push(public_key))


def p2h_unlocking(preimage: bytes) -> Script:
    return (push(preimage),)


def classify(locking: Script) -> str:
    """Name the template a locking script instantiates, if any."""
    if (
        len(locking) == 5
        and tuple(op.opcode for op in locking)
        == (Opcode.DUP, Opcode.HASH, Opcode.PUSH, Opcode.EQUALVERIFY, Opcode.CHECKSIG)
    ):
        return "p2pkh"
    if len(locking) == 3 and tuple(op.opcode for op in locking) == (
        Opcode.HASH,
        Opcode.PUSH,
        Opcode.EQUAL,
    ):
        return "p2h"
    return "other"


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionContext:
    """What CHECKSIG verifies against: the spending transaction's canonical
    bytes with every unlocking field zeroed, plus the verifier to use."""

    signing_payload: bytes
    scheme: CryptoScheme


@dataclass(frozen=True)
class ExecResult:
    ok: bool
    fault: str | None = None
    stack: tuple[bytes, ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok


FAULT_NON_PUSH_UNLOCKING = "non-push-unlocking"
FAULT_STACK_UNDERFLOW = "stack-underflow"
FAULT_EQUALVERIFY = "equalverify-failed"
FAULT_CHECKSIG_MALFORMED = "checksig-malformed"


def _run(ops: Script, stack: list[bytes], ctx: ExecutionContext) -> str | None:
    """Execute ops against the stack in place; return a fault name or None."""
    for op in ops:
        if op.opcode is Opcode.PUSH:
            stack.append(op.operand)  # type: ignore[arg-type]
        elif op.opcode is Opcode.DUP:
            if not stack:
                return FAULT_STACK_UNDERFLOW
            stack.append(stack[-1])
        elif op.opcode is Opcode.HASH:
            if not stack:
                return FAULT_STACK_UNDERFLOW
            stack.append(_digest(stack.pop()))
        elif op.opcode is Opcode.EQUAL:
            if len(stack) < 2:
                return FAULT_STACK_UNDERFLOW
            a, b = stack.pop(), stack.pop()
            stack.append(TRUE_BYTES if a == b else FALSE_BYTES)
        elif op.opcode is Opcode.EQUALVERIFY:
            if len(stack) < 2:
                return FAULT_STACK_UNDERFLOW
            a, b = stack.pop(), stack.pop()
            if a != b:
                return FAULT_EQUALVERIFY
        elif op.opcode is Opcode.CHECKSIG:
            if len(stack) < 2:
                return FAULT_STACK_UNDERFLOW
            public_key = stack.pop()
            signature = stack.pop()
            try:
                valid = ctx.scheme.verify(public_key, ctx.signing_payload, signature)
            except FormatError:
                return FAULT_CHECKSIG_MALFORMED
            stack.append(TRUE_BYTES if valid else FALSE_BYTES)
        else:  # pragma: no cover - enum is closed
            raise AssertionError(f"unhandled opcode {op.opcode}")
    return None


def execute(
    unlocking: Script,
    locking: Script,
    ctx: ExecutionContext,
    *,
    push_only_unlocking: bool = True,
) -> ExecResult:
    """Run unlocking then locking on one shared stack.

    TRUE iff execution completes without fault and the top of stack is
    truthy. Faults (underflow, failed EQUALVERIFY, undecodable CHECKSIG
    key material, non-push unlocking op in validation mode) yield FALSE
    with the fault named. Pure function of its inputs.
    """
    if push_only_unlocking:
        for op in unlocking:
            if op.opcode is not Opcode.PUSH:
                return ExecResult(ok=False, fault=FAULT_NON_PUSH_UNLOCKING)
    stack: list[bytes] = []
    fault = _run(unlocking, stack, ctx)
    if fault is None:
        fault = _run(locking, stack, ctx)
    if fault is not None:
        return ExecResult(ok=False, fault=fault, stack=tuple(stack))
    if not stack or not is_truthy(stack[-1]):
        return ExecResult(ok=False, fault=None, stack=tuple(stack))
    return ExecResult(ok=True, fault=None, stack=tuple(stack))


# ---------------------------------------------------------------------------
# Text notation
# ---------------------------------------------------------------------------


def script_to_text(script: Script) -> str:
    """Render a script in the fixture notation, e.g. `DUP HASH PUSH:ab12`."""
    parts = []
    for op in script:
        if op.opcode is Opcode.PUSH:
            parts.append(f"PUSH:{op.operand.hex()}")  # type: ignore[union-attr]
        else:
            parts.append(op.opcode.value)
    return " ".join(parts)


def script_from_text(text: str) -> Script:
    """Parse the fixture notation; inverse of script_to_text."""
    ops: list[Op] = []
    for token in text.split():
        if token.startswith("PUSH:"):
            hex_part = token[len("PUSH:") :]
            try:
                operand = bytes.fromhex(hex_part)
            except ValueError as exc:
                raise FormatError(f"bad PUSH operand {hex_part!r}") from exc
            ops.append(push(operand))
        elif token == "PUSH":
            raise FormatError("PUSH requires a `:hex` operand")
        else:
            try:
                ops.append(Op(Opcode(token)))
            except ValueError as exc:
                raise FormatError(f"unknown opcode {token!r}") from exc
    return tuple(ops)
