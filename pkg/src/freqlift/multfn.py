"""Declarative 1-bounded multiplicative functions and their bulk evaluation.

A MultFnSpec describes the function; evaluation over an integer interval
factors the whole interval with one sieve pass (divide out every prime up
to sqrt; whatever remains is a single large prime factor), so evaluating
g(n) for n in a window costs O(len * loglog) rather than a factorization
per point.

Dirichlet characters are enumerated canonically: factor q into prime
powers, pick the standard generators of each local unit group, and index
characters by mixed-radix generator-exponent tuples, so (q, index) is a
stable identifier across runs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from math import gcd, isqrt

import numpy as np

from . import primes as primes_mod
from .errors import ConfigError, IndexOutOfRange

TWO_PI = 2.0 * math.pi


# -- character machinery -----------------------------------------------------

def _factorize_small(q: int) -> list[tuple[int, int]]:
    out = []
    n = q
    for p in range(2, isqrt(q) + 1):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    if n > 1:
        out.append((n, 1))
    return out


def _unit_group_components(q: int) -> list[tuple[int, int]]:
    """Cyclic components of (Z/qZ)* as (generator mod q, order) pairs.

    Odd prime powers are cyclic; 2^e splits as <-1> x <5> for e >= 3.
    Generators are lifted to modulus q via CRT (component generator at one
    factor, 1 at the others).
    """
    comps: list[tuple[int, int]] = []
    for p, e in _factorize_small(q):
        pe = p**e
        rest = q // pe
        locals_: list[tuple[int, int]] = []
        if p == 2:
            if e == 1:
                continue  # trivial group
            if e == 2:
                locals_.append((3, 2))
            else:
                locals_.append((pe - 1, 2))
                locals_.append((5, pe // 4))
        else:
            phi = pe - pe // p
            g = _primitive_root(p, pe, phi)
            locals_.append((g, phi))
        for g_loc, order in locals_:
            if rest == 1:
                comps.append((g_loc % q, order))
            else:
                # CRT lift: g_loc mod pe, 1 mod rest
                inv_pe = pow(pe, -1, rest)
                inv_rest = pow(rest, -1, pe)
                g = (g_loc * rest * inv_rest + 1 * pe * inv_pe) % q
                comps.append((g, order))
    return comps


def _primitive_root(p: int, pe: int, phi: int) -> int:
    prime_divs = [f for f, _ in _factorize_small(p - 1)]
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in prime_divs):
            # lift to p^e: g works unless g^(p-1) = 1 mod p^2
            if pe == p:
                return g
            if pow(g, p - 1, p * p) != 1:
                return g
            return g + p
    raise ArithmeticError(f"no primitive root mod {p}")  # unreachable for prime p


@dataclass(frozen=True)
class CharacterTable:
    """A Dirichlet character mod q as an explicit value table.

    ``table`` maps each residue coprime to q to a phi(q)-th root of unity;
    non-coprime residues evaluate to 0.  ``index`` identifies the character
    within the dual group (0 = principal).
    """

    modulus: int
    group_order: int
    index: int
    table: dict[int, complex]

    def __call__(self, n: int) -> complex:
        v = self.table.get(n % self.modulus)
        return 0j if v is None else v

    def values_for(self, residues: np.ndarray) -> np.ndarray:
        lut = np.zeros(self.modulus if self.modulus > 0 else 1, dtype=np.complex128)
        for r, v in self.table.items():
            lut[r] = v
        return lut[residues % self.modulus]

    @property
    def is_principal(self) -> bool:
        return self.index == 0


def build_character(q: int, index: int) -> CharacterTable:
    """Character number `index` of modulus q (indices 0..phi(q)-1)."""
    if q < 1:
        raise ConfigError("modulus must be >= 1")
    comps = _unit_group_components(q)
    phi = math.prod(order for _, order in comps) if comps else 1
    if not 0 <= index < phi:
        raise IndexOutOfRange(f"character index {index} outside [0, {phi}) for q={q}")
    # mixed-radix digits of index give the exponent k_i per component
    digits = []
    rem = index
    for _, order in comps:
        digits.append(rem % order)
        rem //= order
    # enumerate the group as products of generator powers, recording dlogs
    elements = {1 % q: [0] * len(comps)}
    for i, (g, order) in enumerate(comps):
        new = {}
        for a, vec in elements.items():
            acc = a
            for e in range(1, order):
                acc = acc * g % q
                v = vec.copy()
                v[i] = e
                new[acc] = v
        elements.update(new)
    table = {}
    for a, vec in elements.items():
        phase = sum(
            digits[i] * vec[i] / comps[i][1] for i in range(len(comps))
        )
        table[a] = cmath.exp(2j * math.pi * phase)
    if q == 1:
        table = {0: 1 + 0j}
    return CharacterTable(q, phi, index, table)


def character_count(q: int) -> int:
    comps = _unit_group_components(q)
    return math.prod(order for _, order in comps) if comps else 1


# -- function specs -----------------------------------------------------------

@dataclass(frozen=True)
class MultFnSpec:
    """Description of a 1-bounded multiplicative function.

    kind is one of: "one", "liouville", "moebius", "arch" (T0), "char"
    (q, index), "rand" (seed), "prod" (factors).
    """

    kind: str
    T0: float = 0.0
    q: int = 1
    index: int = 0
    seed: int = 0
    factors: tuple["MultFnSpec", ...] = field(default_factory=tuple)

    @property
    def is_completely_multiplicative(self) -> bool:
        if self.kind == "moebius":
            return False
        if self.kind == "prod":
            return all(f.is_completely_multiplicative for f in self.factors)
        return True

    def __str__(self) -> str:
        return format_spec(self)


def liouville() -> MultFnSpec:
    return MultFnSpec("liouville")


def moebius() -> MultFnSpec:
    return MultFnSpec("moebius")


def one() -> MultFnSpec:
    return MultFnSpec("one")


def archimedean_twist(T0: float) -> MultFnSpec:
    return MultFnSpec("arch", T0=float(T0))


def dirichlet_character(q: int, index: int) -> MultFnSpec:
    build_character(q, index)  # validate eagerly
    return MultFnSpec("char", q=q, index=index)


def random_completely_multiplicative(seed: int) -> MultFnSpec:
    return MultFnSpec("rand", seed=int(seed))


def product(*factors: MultFnSpec) -> MultFnSpec:
    return MultFnSpec("prod", factors=tuple(factors))


# -- textual spec syntax ------------------------------------------------------

def parse_spec(text: str) -> MultFnSpec:
    """Parse the CLI syntax, e.g. ``liouville``, ``char:q=3,k=1``,
    ``arch:T=300``, ``rand:seed=42``, ``prod(char:q=3,k=1|arch:T=300)``."""
    s = text.strip()
    if s.startswith("prod(") and s.endswith(")"):
        inner = s[5:-1]
        parts, depth, start = [], 0, 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "|" and depth == 0:
                parts.append(inner[start:i])
                start = i + 1
        parts.append(inner[start:])
        if any(not p.strip() for p in parts):
            raise ConfigError(f"empty factor in product spec: {text!r}")
        return product(*(parse_spec(p) for p in parts))
    name, _, args = s.partition(":")
    name = name.strip().lower()
    kv = {}
    if args:
        for item in args.split(","):
            key, eq, val = item.partition("=")
            if not eq or not val.strip():
                raise ConfigError(f"malformed argument {item!r} in spec {text!r}")
            kv[key.strip().lower()] = val.strip()
    try:
        if name == "one":
            return one()
        if name == "liouville":
            return liouville()
        if name == "moebius":
            return moebius()
        if name == "arch":
            return archimedean_twist(float(kv.pop("t")))
        if name == "char":
            return dirichlet_character(int(kv.pop("q")), int(kv.pop("k")))
        if name == "rand":
            return random_completely_multiplicative(int(kv.pop("seed")))
    except KeyError as e:
        raise ConfigError(f"spec {text!r} missing argument {e}") from None
    except ValueError as e:
        raise ConfigError(f"spec {text!r}: {e}") from None
    raise ConfigError(f"unknown function spec {text!r}")


def format_spec(g: MultFnSpec) -> str:
    """Inverse of parse_spec; parse(format(g)) reproduces g bit-exactly."""
    if g.kind in ("one", "liouville", "moebius"):
        return g.kind
    if g.kind == "arch":
        return f"arch:T={g.T0!r}"
    if g.kind == "char":
        return f"char:q={g.q},k={g.index}"
    if g.kind == "rand":
        return f"rand:seed={g.seed}"
    if g.kind == "prod":
        return "prod(" + "|".join(format_spec(f) for f in g.factors) + ")"
    raise ConfigError(f"unknown kind {g.kind!r}")


# -- evaluation ---------------------------------------------------------------

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_U64 = np.uint64


def _splitmix_signs(seed: int, values: np.ndarray) -> np.ndarray:
    """Deterministic +-1 per value: splitmix64 of (seed xor value)."""
    with np.errstate(over="ignore"):
        z = (values.astype(_U64) ^ _U64(seed & 0xFFFFFFFFFFFFFFFF)) * _U64(_SPLITMIX_GAMMA)
        z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
        z = z ^ (z >> _U64(31))
    return np.where((z >> _U64(63)).astype(np.int64) == 0, 1.0, -1.0)


def _interval_factor_data(start: int, length: int):
    """Exponent bookkeeping for n in [start, start+length).

    Returns (omega, residual) where omega[i] counts prime factors with
    multiplicity contributed by primes <= sqrt(hi) and residual[i] is the
    cofactor left after dividing those out (1 or a single large prime).
    """
    hi = start + length - 1
    n = np.arange(start, start + length, dtype=np.int64)
    omega = np.zeros(length, dtype=np.int64)
    residual = n.copy()
    for p in primes_mod._base_primes(isqrt(hi)):
        p = int(p)
        pk = p
        while pk <= hi:
            first = ((start + pk - 1) // pk) * pk
            if first > hi:
                break
            omega[first - start :: pk] += 1
            residual[first - start :: pk] //= p
            if pk > hi // p:
                break
            pk *= p
    return omega, residual


def eval_range(g: MultFnSpec, start: int, length: int) -> np.ndarray:
    """Values g(start), ..., g(start+length-1) as complex128."""
    if start < 1:
        raise ValueError("start must be >= 1")
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return np.zeros(0, dtype=np.complex128)
    n = np.arange(start, start + length, dtype=np.int64)

    if g.kind == "one":
        return np.ones(length, dtype=np.complex128)
    if g.kind == "arch":
        return np.exp(2j * math.pi * g.T0 * np.log(n.astype(np.float64)))
    if g.kind == "char":
        chi = _char_cache(g.q, g.index)
        return chi.values_for(n)
    if g.kind == "prod":
        out = np.ones(length, dtype=np.complex128)
        for f in g.factors:
            out *= eval_range(f, start, length)
        return out

    omega, residual = _interval_factor_data(start, length)
    big = residual > 1  # one extra prime factor beyond sqrt(hi)
    if g.kind == "liouville":
        total = omega + big
        return np.where(total % 2 == 0, 1.0, -1.0).astype(np.complex128)
    if g.kind == "moebius":
        # squarefree iff every prime enters once: recompute with squarefree flag
        sqfree, parity = _moebius_data(start, length)
        vals = np.where(parity % 2 == 0, 1.0, -1.0)
        return np.where(sqfree, vals, 0.0).astype(np.complex128)
    if g.kind == "rand":
        return _rand_eval(g.seed, start, length)
    raise ConfigError(f"unknown kind {g.kind!r}")


def _moebius_data(start: int, length: int):
    hi = start + length - 1
    residual = np.arange(start, start + length, dtype=np.int64)
    count = np.zeros(length, dtype=np.int64)
    sqfree = np.ones(length, dtype=bool)
    for p in primes_mod._base_primes(isqrt(hi)):
        p = int(p)
        first = ((start + p - 1) // p) * p
        if first > hi:
            continue
        count[first - start :: p] += 1
        residual[first - start :: p] //= p
        p2 = p * p
        if p2 <= hi:
            first2 = ((start + p2 - 1) // p2) * p2
            if first2 <= hi:
                sqfree[first2 - start :: p2] = False
    # squarefree entries were divided exactly once per prime, so any residual
    # > 1 is a single large prime; non-squarefree entries are masked to 0 anyway
    big = residual > 1
    return sqfree, count + big


def _rand_eval(seed: int, start: int, length: int) -> np.ndarray:
    """Completely multiplicative with g(p) = +-1 i.i.d. from a seeded hash."""
    hi = start + length - 1
    n = np.arange(start, start + length, dtype=np.int64)
    out = np.ones(length, dtype=np.float64)
    residual = n.copy()
    for p in primes_mod._base_primes(isqrt(hi)):
        p = int(p)
        sign_p = float(_splitmix_signs(seed, np.asarray([p], dtype=np.int64))[0])
        pk = p
        while pk <= hi:
            first = ((start + pk - 1) // pk) * pk
            if first > hi:
                break
            out[first - start :: pk] *= sign_p
            residual[first - start :: pk] //= p
            if pk > hi // p:
                break
            pk *= p
    big = residual > 1
    if np.any(big):
        out[big] *= _splitmix_signs(seed, residual[big])
    return out.astype(np.complex128)


_char_tables: dict[tuple[int, int], CharacterTable] = {}


def _char_cache(q: int, index: int) -> CharacterTable:
    key = (q, index)
    if key not in _char_tables:
        _char_tables[key] = build_character(q, index)
    return _char_tables[key]


def eval_at(g: MultFnSpec, n: int) -> complex:
    """Single value g(n)."""
    return complex(eval_range(g, n, 1)[0])


def prime_values(g: MultFnSpec, ps: np.ndarray) -> np.ndarray:
    """g(p) for an array of primes p (used by the pretentious distance)."""
    ps = np.asarray(ps, dtype=np.int64)
    if g.kind == "one":
        return np.ones(len(ps), dtype=np.complex128)
    if g.kind in ("liouville", "moebius"):
        return -np.ones(len(ps), dtype=np.complex128)
    if g.kind == "arch":
        return np.exp(2j * math.pi * g.T0 * np.log(ps.astype(np.float64)))
    if g.kind == "char":
        return _char_cache(g.q, g.index).values_for(ps)
    if g.kind == "rand":
        return _splitmix_signs(g.seed, ps).astype(np.complex128)
    if g.kind == "prod":
        out = np.ones(len(ps), dtype=np.complex128)
        for f in g.factors:
            out *= prime_values(f, ps)
        return out
    raise ConfigError(f"unknown kind {g.kind!r}")
