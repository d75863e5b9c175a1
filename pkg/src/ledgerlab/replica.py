"""Deterministic replica simulation: why transaction ordering needs an owner.

Several replicas start from one genesis chainstate and receive the same
transaction set, each in its own seed-determined arrival permutation.
A settlement round then has every replica order its pending transactions
by a rule and apply them, skipping whatever fails validation:

* ``canonical-txid-order`` is a total order identical at every replica
  (sort by transaction id), standing in for what consensus provides.
  Under it, all replicas finish bit-identical regardless of arrival
  permutations, and of two transactions spending the same outpoint every
  replica accepts the same single winner.
* ``arrival-order`` applies transactions as they came. Conflict-free
  sets still converge, but two transactions spending the same outpoint
  can be accepted differently at different replicas, and the harness
  reports the divergence rather than hiding it.

There is no proof-of-work and there are no blocks here: the simulation
isolates exactly one property, that a shared total order is what makes
the double-spend decision unanimous. Delivery is reliable and duplicate-
free; everything is a pure function of (transaction set, seed, rule), so
every divergence is replayable from its seed.

Settlement finality is modeled as log depth: an entry is confirmed once
a configured number of later entries has accumulated on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

from .crypto import CryptoScheme, digest
from .encoding import canonical_json
from .errors import ConfigError, TxRejected
from .rng import SeededStream
from .utxo import Chainstate, UtxoTx, chainstate_snapshot, txid_of, utxo_apply

OrderingRule = Literal["arrival-order", "canonical-txid-order"]

ORDERING_RULES: tuple[OrderingRule, ...] = ("arrival-order", "canonical-txid-order")


@dataclass
class Replica:
    """One independent validator: a chainstate and pending transactions.

    The mempool preserves arrival order; settlement consumes it."""

    replica_id: int
    chainstate: Chainstate
    mempool: list[UtxoTx] = field(default_factory=list)

    def deliver(self, tx: UtxoTx) -> None:
        self.mempool.append(tx)


def state_digest(state: Chainstate) -> str:
    """Digest of the canonical snapshot; equal iff states are bit-identical."""
    return digest(canonical_json(chainstate_snapshot(state)).encode("utf-8")).hex()


def make_replicas(count: int, genesis: Chainstate) -> list[Replica]:
    if count < 1:
        raise ConfigError("need at least one replica")
    return [Replica(replica_id=i, chainstate=genesis) for i in range(count)]


def broadcast(
    txs: Sequence[UtxoTx], replicas: Sequence[Replica], seed: int
) -> dict[int, list[UtxoTx]]:
    """Deliver every transaction to every replica exactly once, each
    replica in its own seed-determined permutation. Returns the delivery
    sequences for the record."""
    deliveries: dict[int, list[UtxoTx]] = {}
    stream = SeededStream(seed)
    for replica in replicas:
        order = stream.fork(f"replica-{replica.replica_id}").shuffled(list(txs))
        for tx in order:
            replica.deliver(tx)
        deliveries[replica.replica_id] = order
    return deliveries


def deliver_explicit(replicas: Sequence[Replica], orders: Sequence[Sequence[UtxoTx]]) -> None:
    """Deliver caller-chosen permutations; for exhaustive schedule search."""
    if len(orders) != len(replicas):
        raise ConfigError("one delivery order per replica required")
    for replica, order in zip(replicas, orders):
        for tx in order:
            replica.deliver(tx)


@dataclass(frozen=True)
class ReplicaOutcome:
    replica_id: int
    delivery: tuple[str, ...]
    accepted: tuple[str, ...]
    rejected: tuple[tuple[str, tuple[str, ...]], ...]
    state_digest: str


@dataclass(frozen=True)
class RoundReport:
    rule: OrderingRule
    outcomes: tuple[ReplicaOutcome, ...]
    divergent: bool

    def doc(self) -> dict:
        """Stable-keyed document form for report files."""
        return {
            "report": "replica-round",
            "rule": self.rule,
            "divergent": self.divergent,
            "replicas": [
                {
                    "id": o.replica_id,
                    "delivery": list(o.delivery),
                    "accepted": list(o.accepted),
                    "rejected": [
                        {"txid": txid, "reasons": list(reasons)}
                        for txid, reasons in o.rejected
                    ],
                    "state_digest": o.state_digest,
                }
                for o in self.outcomes
            ],
        }


def settle_round(
    replicas: Sequence[Replica], rule: OrderingRule, scheme: CryptoScheme
) -> RoundReport:
    """Have every replica order its mempool by the rule and apply it.

    Invalid transactions are skipped, not fatal: a losing double-spend is
    an expected rejection. Mempools are drained. The report carries each
    replica's acceptances, rejections with reasons, and a state digest;
    `divergent` is True iff any two replicas ended on different digests.
    """
    if rule not in ORDERING_RULES:
        raise ConfigError(f"unknown ordering rule {rule!r}")
    outcomes = []
    for replica in replicas:
        pending = list(replica.mempool)
        delivery = tuple(txid_of(tx).hex() for tx in pending)
        if rule == "canonical-txid-order":
            pending.sort(key=lambda tx: txid_of(tx))
        accepted: list[str] = []
        rejected: list[tuple[str, tuple[str, ...]]] = []
        for tx in pending:
            txid_hex = txid_of(tx).hex()
            try:
                replica.chainstate = utxo_apply(replica.chainstate, tx, scheme)
                accepted.append(txid_hex)
            except TxRejected as exc:
                reasons = exc.report.reasons if exc.report is not None else ()
                rejected.append((txid_hex, tuple(reasons)))
        replica.mempool.clear()
        outcomes.append(
            ReplicaOutcome(
                replica_id=replica.replica_id,
                delivery=delivery,
                accepted=tuple(accepted),
                rejected=tuple(rejected),
                state_digest=state_digest(replica.chainstate),
            )
        )
    digests = {o.state_digest for o in outcomes}
    return RoundReport(rule=rule, outcomes=tuple(outcomes), divergent=len(digests) > 1)


def run_round(
    genesis: Chainstate,
    txs: Sequence[UtxoTx],
    n_replicas: int,
    seed: int,
    rule: OrderingRule,
    scheme: CryptoScheme,
) -> tuple[list[Replica], RoundReport]:
    """Broadcast then settle: the whole simulation as one deterministic call."""
    replicas = make_replicas(n_replicas, genesis)
    broadcast(txs, replicas, seed)
    report = settle_round(replicas, rule, scheme)
    return replicas, report


def confirmation_depth_check(
    log_length: int, log_position: int, depth_param: int
) -> bool:
    """Is the entry at log_position buried at least depth_param entries deep?

    Depth 0 means confirmed as soon as logged; an unlogged position is
    never confirmed.
    """
    if depth_param < 0:
        raise ConfigError("confirmation depth must be non-negative")
    if log_position < 0 or log_position >= log_length:
        return False
    return (log_length - log_position) >= depth_param
