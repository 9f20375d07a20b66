"""Exact group-algebra arithmetic for a free group with shift-plus-permutation
dynamics.

Generators split into a finite permuted set (letters a, b, c, ...) and a
two-sided family of shift letters s_k, k in Z, moved to s_{k+1} by the
dynamics; two-sided indexing makes the substitution an automorphism, while
nonnegative indices realize the one-sided picture. All claims about this
family are exact identities, so coefficients are complex rationals whenever
the inputs allow, with an explicit float fallback flagged on elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt

from .errors import ConsistencyError, InputError

PERM = "p"
SHIFT = "s"

# A symbol is ("p", index into the permuted set) or ("s", shift position).
# A word is a reduced tuple of (symbol, exponent) with exponent +1 or -1.


@dataclass(frozen=True)
class RationalComplex:
    """Complex number with rational real and imaginary parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value):
        if isinstance(value, RationalComplex):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        raise InputError(f"cannot make an exact complex from {value!r}")

    def __add__(self, other):
        other = RationalComplex.of(other)
        return RationalComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return RationalComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-RationalComplex.of(other))

    def __mul__(self, other):
        other = RationalComplex.of(other)
        return RationalComplex(self.re * other.re - self.im * other.im,
                               self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self):
        return RationalComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"


IMAGINARY_UNIT = RationalComplex(Fraction(0), Fraction(1))


def _coerce(value):
    """Exact where possible; floats and complex switch the element to inexact mode."""
    if isinstance(value, (RationalComplex, complex)):
        return value
    if isinstance(value, (int, Fraction)):
        return RationalComplex.of(value)
    if isinstance(value, float):
        return complex(value)
    raise InputError(f"unsupported coefficient type {type(value).__name__}")


def _cmul(a, b):
    if isinstance(a, RationalComplex) and isinstance(b, RationalComplex):
        return a * b
    return complex(a) * complex(b)


def _cadd(a, b):
    if isinstance(a, RationalComplex) and isinstance(b, RationalComplex):
        return a + b
    return complex(a) + complex(b)


def _cconj(a):
    return a.conjugate() if isinstance(a, RationalComplex) else complex(a).conjugate()


def _cabs2(a):
    return a.abs2() if isinstance(a, RationalComplex) else abs(complex(a)) ** 2


def perm_symbol(index: int):
    return (PERM, int(index))


def shift_symbol(position: int):
    return (SHIFT, int(position))


def word(*letters):
    """Build a reduced word from (symbol, exponent) pairs."""
    out = []
    for sym, exp in letters:
        if exp not in (1, -1):
            raise InputError("letter exponents must be +1 or -1")
        if out and out[-1] == (sym, -exp):
            out.pop()
        else:
            out.append((sym, exp))
    return tuple(out)


def word_mul(u, v):
    out = list(u)
    for letter in v:
        sym, exp = letter
        if out and out[-1] == (sym, -exp):
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inv(u):
    return tuple((sym, -exp) for sym, exp in reversed(u))


def word_in_finite_orbit(u) -> bool:
    """True iff every letter belongs to the permuted (finite-orbit) set."""
    return all(sym[0] == PERM for sym, _ in u)


def word_str(u) -> str:
    if not u:
        return "e"
    parts = []
    for (kind, idx), exp in u:
        name = chr(ord("a") + idx) if kind == PERM and 0 <= idx < 26 else (
            f"p{idx}" if kind == PERM else f"s{idx}")
        parts.append(name if exp == 1 else f"{name}^-1")
    return " ".join(parts)


class GroupAlgebraElement:
    """Finitely supported function on reduced words; the dense *-algebra element."""

    __slots__ = ("support",)

    def __init__(self, support=None):
        self.support = {}
        if support:
            for w, c in support.items():
                c = _coerce(c)
                if c:
                    self.support[w] = c

    @classmethod
    def from_word(cls, w, coefficient=1):
        return cls({tuple(w): coefficient})

    @classmethod
    def one(cls):
        return cls({(): 1})

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, RationalComplex) for c in self.support.values())

    def coefficient(self, w):
        return self.support.get(tuple(w), RationalComplex(Fraction(0)))

    def __add__(self, other):
        out = dict(self.support)
        for w, c in other.support.items():
            s = _cadd(out.get(w, RationalComplex(Fraction(0))), c)
            if s:
                out[w] = s
            else:
                out.pop(w, None)
        return GroupAlgebraElement(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, factor):
        factor = _coerce(factor)
        return GroupAlgebraElement({w: _cmul(factor, c) for w, c in self.support.items()})

    def __mul__(self, other):
        """Convolution with word reduction; exact when both factors are exact."""
        out = {}
        for w1, c1 in self.support.items():
            for w2, c2 in other.support.items():
                w = word_mul(w1, w2)
                s = _cadd(out.get(w, RationalComplex(Fraction(0))), _cmul(c1, c2))
                if s:
                    out[w] = s
                else:
                    out.pop(w, None)
        return GroupAlgebraElement(out)

    def star(self):
        """Adjoint: coefficient at g is the conjugate of the one at g inverse."""
        return GroupAlgebraElement({word_inv(w): _cconj(c) for w, c in self.support.items()})

    def __eq__(self, other):
        if not isinstance(other, GroupAlgebraElement):
            return NotImplemented
        keys = set(self.support) | set(other.support)
        for w in keys:
            if complex(self.coefficient(w)) != complex(other.coefficient(w)):
                return False
        return True

    def __repr__(self):
        if not self.support:
            return "0"
        return " + ".join(f"{c!r}*[{word_str(w)}]" for w, c in sorted(
            self.support.items(), key=lambda kv: (len(kv[0]), kv[0])))


def canonical_trace(x: GroupAlgebraElement):
    """The vector state at the identity: the coefficient of the empty word."""
    return x.coefficient(())


def finite_orbit_part(x: GroupAlgebraElement) -> GroupAlgebraElement:
    """Conditional expectation onto the subalgebra of finite-orbit words.

    Keeps exactly the words all of whose letters lie in the permuted set and
    kills the rest.
    """
    return GroupAlgebraElement(
        {w: c for w, c in x.support.items() if word_in_finite_orbit(w)})


class ShiftPermAutomorphism:
    """Group automorphism permuting the finite set and shifting s_k to s_{k+1}."""

    def __init__(self, perm):
        perm = tuple(int(p) for p in perm)
        if sorted(perm) != list(range(len(perm))):
            raise InputError(f"{perm} is not a permutation")
        self.perm = perm
        inverse = [0] * len(perm)
        for i, p in enumerate(perm):
            inverse[p] = i
        self.inverse = tuple(inverse)

    @property
    def perm_size(self) -> int:
        return len(self.perm)

    def symbol_image(self, sym, n: int = 1):
        kind, idx = sym
        if kind == SHIFT:
            return (SHIFT, idx + n)
        table = self.perm if n >= 0 else self.inverse
        for _ in range(abs(n)):
            idx = table[idx]
        return (PERM, idx)

    def word_image(self, w, n: int = 1):
        # Letterwise images of a reduced word stay reduced: the map is a bijection
        # on symbols, so no new cancellations can appear.
        return tuple((self.symbol_image(sym, n), exp) for sym, exp in w)

    def apply(self, x: GroupAlgebraElement, n: int = 1) -> GroupAlgebraElement:
        return GroupAlgebraElement(
            {self.word_image(w, n): c for w, c in x.support.items()})


def relative_mixing_term(aut: ShiftPermAutomorphism, a: GroupAlgebraElement,
                         b: GroupAlgebraElement, n: int):
    """Exact value of the squared finite-orbit content of b alpha^n(a).

    Equals the sum of |coefficient|^2 over the finite-orbit words of the
    product, as a Fraction when both inputs are exact.
    """
    product = b * aut.apply(a, n)
    kept = finite_orbit_part(product)
    total = Fraction(0)
    exact = True
    for c in kept.support.values():
        v = _cabs2(c)
        if isinstance(v, Fraction):
            total += v
        else:
            exact = False
            total = float(total) + v
    return total if exact else total


def _shift_positions(x: GroupAlgebraElement):
    for w in x.support:
        for (kind, idx), _ in w:
            if kind == SHIFT:
                yield idx


def vanishing_horizon(aut: ShiftPermAutomorphism, a: GroupAlgebraElement,
                      b: GroupAlgebraElement, verify: int = 5) -> int:
    """Smallest certified N0 with finite_orbit_part(b alpha^n(a)) = 0 for all n > N0.

    Requires finite_orbit_part(a) = 0. Beyond the horizon, the lowest shift
    index occurring in a, pushed up by n, exceeds every shift index available
    in b, so at least one shift letter survives reduction in every word of the
    product. The bound is verified by direct evaluation just past the horizon.
    """
    if finite_orbit_part(a).support:
        raise InputError("vanishing horizon requires an element killed by the "
                         "finite-orbit expectation; pass a - finite_orbit_part(a)")
    if not a.support or not b.support:
        return 0
    b_top = max(_shift_positions(b), default=None)
    if b_top is None:
        horizon = 0
    else:
        a_low = min(min(idx for (kind, idx), _ in w if kind == SHIFT)
                    for w in a.support)
        horizon = max(0, b_top - a_low)
    for n in range(horizon + 1, horizon + 1 + verify):
        if finite_orbit_part(b * aut.apply(a, n)).support:
            raise ConsistencyError(f"vanishing-horizon bound violated at n={n}")
    return horizon


def commutator_norm(aut: ShiftPermAutomorphism, g, h, n: int) -> float:
    """Norm of the commutator of the evolved and static generators on the trace vector.

    Zero when the reduced words commute, sqrt(2) otherwise: the commutator
    applied to the identity's delta function is a difference of two distinct
    delta functions.
    """
    g = tuple(g)
    h = tuple(h)
    gn = aut.word_image(g, n)
    return 0.0 if word_mul(gn, h) == word_mul(h, gn) else sqrt(2.0)
