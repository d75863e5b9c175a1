"""Identities, amounts, and signature primitives shared by every kernel.

Two interchangeable instantiations sit behind :class:`CryptoScheme`:

* ``toy``: RSA full-domain-hash signatures at deliberately small,
  test-only parameters (256-bit modulus). Fully deterministic from seeds,
  fast enough for thousand-instance property runs, and byte-stable across
  platforms. Not secure, on purpose.
* ``real``: Ed25519 (via the ``cryptography`` package) for identity
  signatures, plus RSA-FDH at 2048-bit modulus for the blind-signature
  suite. Key generation is still deterministic from seeds so replayable
  runs stay replayable.

Both schemes share one digest (SHA-256, 32 bytes) and one key-encoding
convention: a 4-byte ASCII tag followed by the key material, so ``sign``
and ``verify`` dispatch on the key itself and callers never branch on the
active scheme.

The blind-signature suite is the classic multiplicative construction over
the RSA trapdoor permutation: ``blind`` multiplies the hashed message by
``r^e``, the issuer exponentiates with ``d``, and ``unblind`` divides by
``r``, leaving exactly the signature the issuer would have produced on the
clear message.

All operations are pure functions of their inputs; instances hold no
mutable state and are safe for unrestricted concurrent use.
"""

from __future__ import annotations

import hashlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import ConfigError, DomainError, FormatError
from .rng import SeededStream

DIGEST_SIZE = 32

# Smallest indivisible unit; amounts are plain non-negative ints.
Amount = int

# An address is the hex form of the digest of a public key.
Address = str


def digest(message: bytes) -> bytes:
    """The single core digest: SHA-256, 32 bytes, stable across releases."""
    return hashlib.sha256(message).digest()


def address_of(public_key: bytes) -> Address:
    """Derive the account address for a public key (lowercase hex digest)."""
    return digest(public_key).hex()


def check_amount(value: int, *, context: str = "amount") -> int:
    """Reject negative, fractional, or boolean amounts."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{context} must be an integer, got {value!r}")
    if value < 0:
        raise FormatError(f"{context} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class KeyPair:
    public_key: bytes
    private_key: bytes


@dataclass(frozen=True)
class Wallet:
    """A key pair plus its derived address."""

    keypair: KeyPair
    address: Address

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    @property
    def private_key(self) -> bytes:
        return self.keypair.private_key


# ---------------------------------------------------------------------------
# Key encodings
# ---------------------------------------------------------------------------

_TAG_RSA_PUB = b"RPUB"
_TAG_RSA_PRV = b"RPRV"
_TAG_ED_PUB = b"EPUB"
_TAG_ED_PRV = b"EPRV"


def _pack_ints(tag: bytes, values: tuple[int, ...]) -> bytes:
    parts = [tag]
    for v in values:
        raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        parts.append(len(raw).to_bytes(4, "big"))
        parts.append(raw)
    return b"".join(parts)


def _unpack_ints(payload: bytes, count: int) -> tuple[int, ...]:
    values = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(payload):
            raise FormatError("truncated key encoding")
        length = int.from_bytes(payload[offset : offset + 4], "big")
        offset += 4
        if offset + length > len(payload):
            raise FormatError("truncated key encoding")
        values.append(int.from_bytes(payload[offset : offset + length], "big"))
        offset += length
    if offset != len(payload):
        raise FormatError("trailing bytes in key encoding")
    return tuple(values)


def _decode_rsa_public(public_key: bytes) -> tuple[int, int]:
    if public_key[:4] != _TAG_RSA_PUB:
        raise FormatError("not an RSA public key")
    n, e = _unpack_ints(public_key[4:], 2)
    if n < 4 or e < 3:
        raise FormatError("degenerate RSA public key")
    return n, e


def _decode_rsa_private(private_key: bytes) -> tuple[int, int]:
    if private_key[:4] != _TAG_RSA_PRV:
        raise FormatError("not an RSA private key")
    n, d = _unpack_ints(private_key[4:], 2)
    return n, d


# ---------------------------------------------------------------------------
# Deterministic RSA key generation
# ---------------------------------------------------------------------------

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
_sieve = [True] * 10000
_sieve[0] = _sieve[1] = False
for _i in range(2, 100):
    if _sieve[_i]:
        for _j in range(_i * _i, 10000, _i):
            _sieve[_j] = False
_TRIAL_PRIMES = [i for i, flag in enumerate(_sieve) if flag]
del _sieve, _i, _j

_RSA_EXPONENT = 65537


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    # Miller-Rabin with bases derived from the candidate itself, so the
    # answer is a pure function of n.
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    base_stream = SeededStream(b"miller-rabin:" + n.to_bytes((n.bit_length() + 7) // 8, "big"))
    for _ in range(24):
        a = base_stream.randbelow(n - 3) + 2
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _gen_prime(stream: SeededStream, bits: int) -> int:
    while True:
        candidate = stream.randint_bits(bits) | 1
        if any(candidate % p == 0 and candidate != p for p in _TRIAL_PRIMES):
            continue
        if _is_probable_prime(candidate):
            return candidate


def _rsa_keygen(seed: bytes, modulus_bits: int) -> KeyPair:
    stream = SeededStream(b"rsa-keygen:%d:" % modulus_bits + seed)
    half = modulus_bits // 2
    while True:
        p = _gen_prime(stream, half)
        q = _gen_prime(stream, half)
        if p == q:
            continue
        phi = (p - 1) * (q - 1)
        if math.gcd(_RSA_EXPONENT, phi) != 1:
            continue
        n = p * q
        d = pow(_RSA_EXPONENT, -1, phi)
        public = _pack_ints(_TAG_RSA_PUB, (n, _RSA_EXPONENT))
        private = _pack_ints(_TAG_RSA_PRV, (n, d))
        return KeyPair(public_key=public, private_key=private)


def _fdh(message: bytes, n: int) -> int:
    """Hash a message into the RSA message space."""
    return int.from_bytes(digest(message), "big") % n


def _sig_width(n: int) -> int:
    return (n.bit_length() + 7) // 8


def _rsa_sign(private_key: bytes, message: bytes) -> bytes:
    n, d = _decode_rsa_private(private_key)
    sigma = pow(_fdh(message, n), d, n)
    return sigma.to_bytes(_sig_width(n), "big")


def _rsa_verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    n, e = _decode_rsa_public(public_key)
    if len(signature) != _sig_width(n):
        return False
    sigma = int.from_bytes(signature, "big")
    if sigma >= n:
        return False
    return pow(sigma, e, n) == _fdh(message, n)


def _decode_factor(factor: bytes, n: int) -> int:
    r = int.from_bytes(factor, "big")
    if not 1 < r < n or math.gcd(r, n) != 1:
        raise DomainError("blinding factor outside the scheme's domain")
    return r


# ---------------------------------------------------------------------------
# Scheme interface
# ---------------------------------------------------------------------------


class CryptoScheme(ABC):
    """Signature + blind-signature suite behind one interface.

    Keys are opaque tagged byte strings; ``sign``/``verify`` dispatch on
    the tag, so identity keys and blind-issuer keys go through the same
    entry points regardless of the active scheme.
    """

    name: str

    @abstractmethod
    def keygen(self, seed: bytes) -> KeyPair:
        """Deterministic identity key pair: identical seeds, identical keys."""

    @abstractmethod
    def blind_keygen(self, seed: bytes) -> KeyPair:
        """Deterministic key pair for the blind-signature suite."""

    @abstractmethod
    def sign(self, private_key: bytes, message: bytes) -> bytes:
        """Signature that verifies under the paired public key;
        deterministic for identical (key, message)."""

    @abstractmethod
    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        """True iff `signature` is valid for `message` under `public_key`.

        Returns False for wrong-but-well-formed material; raises
        FormatError if `public_key` cannot be decoded at all.
        """

    # -- blind-signature suite ---------------------------------------------

    def new_blinding_factor(self, stream: SeededStream, public_key: bytes) -> bytes:
        """Sample a fresh factor invertible modulo the issuer key."""
        n, _ = _decode_rsa_public(public_key)
        while True:
            r = stream.randbelow(n - 2) + 2
            if math.gcd(r, n) == 1:
                return r.to_bytes(_sig_width(n), "big")

    def blind(self, message: bytes, factor: bytes, public_key: bytes) -> bytes:
        n, e = _decode_rsa_public(public_key)
        r = _decode_factor(factor, n)
        blinded = (_fdh(message, n) * pow(r, e, n)) % n
        return blinded.to_bytes(_sig_width(n), "big")

    def blind_sign(self, private_key: bytes, blinded: bytes) -> bytes:
        n, d = _decode_rsa_private(private_key)
        value = int.from_bytes(blinded, "big")
        if value >= n:
            raise DomainError("blinded message outside the key's modulus")
        return pow(value, d, n).to_bytes(_sig_width(n), "big")

    def unblind(self, blinded_signature: bytes, factor: bytes, public_key: bytes) -> bytes:
        n, _ = _decode_rsa_public(public_key)
        r = _decode_factor(factor, n)
        sigma = (int.from_bytes(blinded_signature, "big") * pow(r, -1, n)) % n
        return sigma.to_bytes(_sig_width(n), "big")


class ToyScheme(CryptoScheme):
    """RSA-FDH at 256-bit modulus for everything. Test-only parameters."""

    name = "toy"
    modulus_bits = 256

    def keygen(self, seed: bytes) -> KeyPair:
        return _rsa_keygen(seed, self.modulus_bits)

    def blind_keygen(self, seed: bytes) -> KeyPair:
        return _rsa_keygen(seed, self.modulus_bits)

    def sign(self, private_key: bytes, message: bytes) -> bytes:
        return _rsa_sign(private_key, message)

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        return _rsa_verify(public_key, message, signature)


class RealScheme(CryptoScheme):
    """Ed25519 identity signatures plus RSA-FDH blind signatures at 2048 bits."""

    name = "real"
    blind_modulus_bits = 2048

    def keygen(self, seed: bytes) -> KeyPair:
        private_bytes = hashlib.sha256(b"ed25519-keygen:" + seed).digest()
        private = Ed25519PrivateKey.from_private_bytes(private_bytes)
        public_raw = private.public_key().public_bytes_raw()
        return KeyPair(
            public_key=_TAG_ED_PUB + public_raw,
            private_key=_TAG_ED_PRV + private_bytes,
        )

    def blind_keygen(self, seed: bytes) -> KeyPair:
        return _rsa_keygen(seed, self.blind_modulus_bits)

    def sign(self, private_key: bytes, message: bytes) -> bytes:
        if private_key[:4] == _TAG_ED_PRV:
            if len(private_key) != 4 + 32:
                raise FormatError("bad Ed25519 private key length")
            return Ed25519PrivateKey.from_private_bytes(private_key[4:]).sign(message)
        if private_key[:4] == _TAG_RSA_PRV:
            return _rsa_sign(private_key, message)
        raise FormatError("unknown private key tag")

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        if public_key[:4] == _TAG_ED_PUB:
            if len(public_key) != 4 + 32:
                raise FormatError("bad Ed25519 public key length")
            try:
                Ed25519PublicKey.from_public_bytes(public_key[4:]).verify(
                    signature, message
                )
                return True
            except InvalidSignature:
                return False
            except ValueError as exc:
                raise FormatError(f"bad Ed25519 public key: {exc}") from exc
        if public_key[:4] == _TAG_RSA_PUB:
            return _rsa_verify(public_key, message, signature)
        raise FormatError("unknown public key tag")


_SCHEMES: dict[str, CryptoScheme] = {}


def get_scheme(name: str) -> CryptoScheme:
    """Return the shared instance of the named scheme ('toy' or 'real')."""
    if name not in _SCHEMES:
        if name == "toy":
            _SCHEMES[name] = ToyScheme()
        elif name == "real":
            _SCHEMES[name] = RealScheme()
        else:
            raise ConfigError(
                f"unknown crypto scheme {name!r}; expected 'toy' or 'real'"
            )
    return _SCHEMES[name]


def derive_wallet(scheme: CryptoScheme, seed: bytes | str) -> Wallet:
    """Key pair plus address from a seed, for scenario participants."""
    if isinstance(seed, str):
        seed = seed.encode("utf-8")
    keypair = scheme.keygen(seed)
    return Wallet(keypair=keypair, address=address_of(keypair.public_key))
