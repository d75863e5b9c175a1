"""Account kernel: balances keyed by account holder, updated by debit/credit.

A transfer debits the payer and credits the payee by the same amount, so
the balance total is invariant under every transfer; only minting changes
supply. Overdrafts are forbidden: a payer must hold at least the amount
being sent.

Replay protection is a mode switch, not a fixed behavior:

* ``naive`` mode accepts any correctly signed, sufficiently funded
  transfer, however often it is resubmitted. Replaying a transfer k times
  debits the payer k times. This is the unprotected semantics the other
  kernels are contrasted against.
* ``nonce-protected`` mode requires each transfer to carry the payer's
  next sequence number; a replayed transfer carries a stale nonce and is
  rejected.

Transactions carry the payer's public key in full; the payer address must
equal the key's digest, and the signature must verify over the canonical
serialization with the signature field zeroed.

States are immutable snapshots: apply operations return new states and
never touch their inputs. Share them freely across threads; route writes
through a single owner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from .crypto import Address, Amount, CryptoScheme, Wallet, address_of, check_amount, digest
from .encoding import Reader, u8, u64, varbytes
from .errors import AuthError, FormatError, FundsError, ReplayError

AccountMode = Literal["naive", "nonce-protected"]

_MAGIC = b"ATX1"
_ADDRESS_BYTES = 32


def _address_to_bytes(address: Address) -> bytes:
    try:
        raw = bytes.fromhex(address)
    except ValueError as exc:
        raise FormatError(f"address is not hex: {address!r}") from exc
    if len(raw) != _ADDRESS_BYTES:
        raise FormatError(f"address must be {_ADDRESS_BYTES} bytes of hex")
    return raw


@dataclass(frozen=True)
class AccountTx:
    """A signed transfer order: payer pays payee a fixed amount.

    `nonce` is the payer's sequence number; None outside protected mode.
    `payer_signature` covers the canonical serialization with the
    signature field zeroed.
    """

    payer: Address
    payee: Address
    amount: Amount
    nonce: int | None
    payer_public_key: bytes
    payer_signature: bytes


@dataclass(frozen=True)
class AccountState:
    """Balances plus per-account nonces (nonces used only in protected mode)."""

    balances: dict[Address, Amount] = field(default_factory=dict)
    nonces: dict[Address, int] = field(default_factory=dict)

    @staticmethod
    def empty() -> "AccountState":
        return AccountState()

    def balance(self, address: Address) -> Amount:
        return self.balances.get(address, 0)

    def nonce(self, address: Address) -> int:
        return self.nonces.get(address, 0)

    def total(self) -> Amount:
        return sum(self.balances.values())


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def encode_account_tx(tx: AccountTx, *, for_signing: bool = False) -> bytes:
    """Canonical bytes; with for_signing=True the signature field is zeroed."""
    check_amount(tx.amount)
    if tx.nonce is not None and (not isinstance(tx.nonce, int) or tx.nonce < 0):
        raise FormatError(f"nonce must be a non-negative integer, got {tx.nonce!r}")
    signature = b"" if for_signing else tx.payer_signature
    return b"".join(
        [
            _MAGIC,
            _address_to_bytes(tx.payer),
            _address_to_bytes(tx.payee),
            u64(tx.amount),
            u8(0 if tx.nonce is None else 1),
            u64(tx.nonce or 0),
            varbytes(tx.payer_public_key),
            varbytes(signature),
        ]
    )


def decode_account_tx(data: bytes) -> AccountTx:
    reader = Reader(data)
    reader.expect(_MAGIC)
    payer = reader.read(_ADDRESS_BYTES).hex()
    payee = reader.read(_ADDRESS_BYTES).hex()
    amount = reader.u64()
    has_nonce = reader.u8()
    if has_nonce not in (0, 1):
        raise FormatError(f"bad nonce flag {has_nonce}")
    nonce_value = reader.u64()
    nonce = nonce_value if has_nonce else None
    if has_nonce == 0 and nonce_value != 0:
        raise FormatError("absent nonce must encode as zero")
    public_key = reader.varbytes()
    signature = reader.varbytes()
    reader.finish()
    return AccountTx(
        payer=payer,
        payee=payee,
        amount=amount,
        nonce=nonce,
        payer_public_key=public_key,
        payer_signature=signature,
    )


def account_txid(tx: AccountTx) -> bytes:
    return digest(encode_account_tx(tx))


def account_signing_payload(tx: AccountTx) -> bytes:
    return encode_account_tx(tx, for_signing=True)


def make_account_tx(
    scheme: CryptoScheme,
    payer: Wallet,
    payee: Address,
    amount: Amount,
    *,
    nonce: int | None = None,
) -> AccountTx:
    """Build and sign a transfer from the payer's wallet."""
    unsigned = AccountTx(
        payer=payer.address,
        payee=payee,
        amount=amount,
        nonce=nonce,
        payer_public_key=payer.public_key,
        payer_signature=b"",
    )
    signature = scheme.sign(payer.private_key, account_signing_payload(unsigned))
    return AccountTx(
        payer=unsigned.payer,
        payee=unsigned.payee,
        amount=unsigned.amount,
        nonce=unsigned.nonce,
        payer_public_key=unsigned.payer_public_key,
        payer_signature=signature,
    )


# ---------------------------------------------------------------------------
# State transitions
# ---------------------------------------------------------------------------


def account_apply(
    state: AccountState,
    tx: AccountTx,
    mode: AccountMode,
    scheme: CryptoScheme,
) -> AccountState:
    """Apply one transfer, returning the successor state.

    Raises AuthError for a bad key binding or signature, FundsError for
    an overdraft, ReplayError for a missing or stale nonce in protected
    mode. The input state is never modified.
    """
    check_amount(tx.amount)
    if address_of(tx.payer_public_key) != tx.payer:
        raise AuthError("public key does not hash to the payer address")
    if not scheme.verify(
        tx.payer_public_key, account_signing_payload(tx), tx.payer_signature
    ):
        raise AuthError("payer signature does not verify")
    if mode == "nonce-protected":
        expected = state.nonce(tx.payer)
        if tx.nonce is None:
            raise ReplayError(f"missing nonce; expected {expected}")
        if tx.nonce != expected:
            raise ReplayError(f"stale nonce {tx.nonce}; expected {expected}")
    if state.balance(tx.payer) < tx.amount:
        raise FundsError(
            f"payer holds {state.balance(tx.payer)}, cannot send {tx.amount}"
        )

    balances = dict(state.balances)
    balances[tx.payer] = balances.get(tx.payer, 0) - tx.amount
    balances[tx.payee] = balances.get(tx.payee, 0) + tx.amount
    nonces = state.nonces
    if mode == "nonce-protected":
        nonces = dict(state.nonces)
        nonces[tx.payer] = nonces.get(tx.payer, 0) + 1
    return AccountState(balances=balances, nonces=nonces)


def account_mint(state: AccountState, payee: Address, amount: Amount) -> AccountState:
    """Credit new units to an account; the only way total supply changes."""
    check_amount(amount)
    balances = dict(state.balances)
    balances[payee] = balances.get(payee, 0) + amount
    return AccountState(balances=balances, nonces=state.nonces)


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------


def account_snapshot(state: AccountState) -> dict:
    return {
        "kernel": "account",
        "balances": dict(sorted(state.balances.items())),
        "nonces": dict(sorted(state.nonces.items())),
    }


def account_from_snapshot(doc: dict) -> AccountState:
    if doc.get("kernel") != "account":
        raise FormatError("not an account snapshot")
    balances = doc.get("balances")
    nonces = doc.get("nonces", {})
    if not isinstance(balances, dict) or not isinstance(nonces, dict):
        raise FormatError("malformed account snapshot")
    for mapping, label in ((balances, "balance"), (nonces, "nonce")):
        for key, value in mapping.items():
            if not isinstance(key, str) or isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise FormatError(f"malformed {label} entry {key!r}: {value!r}")
    return AccountState(balances=dict(balances), nonces=dict(nonces))
