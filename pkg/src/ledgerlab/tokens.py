"""Token kernel: payment objects with owners, updated by ownership transfer.

Each object is issued once with a fixed value and then only ever changes
hands; the multiset of (id, value) pairs is invariant under any sequence
of transfers. Physical cash works this way, which is why no deployed
system maintains such a registry centrally; the structure exists here as
an observer's oracle so that semantics stated about it are testable. The
`authoritative` flag is permanently False to mark that status.

States are immutable snapshots; operations return new registries and
never touch their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .crypto import Address, Amount, check_amount
from .errors import ConfigError, FormatError, NotFoundError, OwnershipError

TokenId = str


@dataclass(frozen=True)
class TokenObject:
    value: Amount
    owner: Address


@dataclass(frozen=True)
class TokenRegistry:
    """All payment objects ever issued, keyed by token id.

    authoritative is always False: this registry records what an
    omniscient observer would know, not what any party maintains.
    """

    objects: dict[TokenId, TokenObject] = field(default_factory=dict)
    authoritative: bool = False

    @staticmethod
    def empty() -> "TokenRegistry":
        return TokenRegistry()

    def owner_of(self, token: TokenId) -> Address:
        if token not in self.objects:
            raise NotFoundError(f"unknown token {token!r}")
        return self.objects[token].owner

    def value_multiset(self) -> list[tuple[TokenId, Amount]]:
        return sorted((tid, obj.value) for tid, obj in self.objects.items())


def token_issue(
    state: TokenRegistry, token: TokenId, value: Amount, owner: Address
) -> TokenRegistry:
    """Create a new object; ids are never reused."""
    check_amount(value, context="token value")
    if value == 0:
        raise FormatError("token value must be positive")
    if token in state.objects:
        raise ConfigError(f"token id {token!r} already issued")
    objects = dict(state.objects)
    objects[token] = TokenObject(value=value, owner=owner)
    return TokenRegistry(objects=objects, authoritative=state.authoritative)


def token_transfer(
    state: TokenRegistry, payer: Address, payee: Address, token: TokenId
) -> TokenRegistry:
    """Move one object from payer to payee; value stays constant."""
    if token not in state.objects:
        raise NotFoundError(f"unknown token {token!r}")
    obj = state.objects[token]
    if obj.owner != payer:
        raise OwnershipError(
            f"token {token!r} is owned by {obj.owner}, not {payer}"
        )
    if payee == payer:
        return state
    objects = dict(state.objects)
    objects[token] = TokenObject(value=obj.value, owner=payee)
    return TokenRegistry(objects=objects, authoritative=state.authoritative)


def token_snapshot(state: TokenRegistry) -> dict:
    return {
        "kernel": "token",
        "authoritative": state.authoritative,
        "objects": {
            tid: {"value": obj.value, "owner": obj.owner}
            for tid, obj in sorted(state.objects.items())
        },
    }


def token_from_snapshot(doc: dict) -> TokenRegistry:
    if doc.get("kernel") != "token":
        raise FormatError("not a token snapshot")
    raw = doc.get("objects")
    if not isinstance(raw, dict):
        raise FormatError("malformed token snapshot")
    objects = {}
    for tid, entry in raw.items():
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("value"), int)
            or isinstance(entry.get("value"), bool)
            or entry.get("value", 0) <= 0
            or not isinstance(entry.get("owner"), str)
        ):
            raise FormatError(f"malformed token entry {tid!r}")
        objects[tid] = TokenObject(value=entry["value"], owner=entry["owner"])
    return TokenRegistry(objects=objects, authoritative=bool(doc.get("authoritative", False)))
