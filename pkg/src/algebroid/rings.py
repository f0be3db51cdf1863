"""Exact coefficient rings.

Multivariate polynomial and Laurent polynomial arithmetic over the
rationals, with named derivations (extended from their action on the
variables by the Leibniz rule) and ring homomorphisms given by variable
substitution.

Coefficients are `fractions.Fraction`, so every computation is exact.
Elements are immutable; all operations return fresh values.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

Exponents = Tuple[int, ...]


class RingError(Exception):
    """Structural misuse: mismatched owners, bad exponents, unknown names."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise RingError("not an exact rational scalar: %r" % (value,))


class ChartRing:
    """Q[x1,...,xn] with a chosen subset of variables inverted (Laurent).

    `derivations` maps a derivation name to its action on each variable;
    the default is the coordinate derivation d/dv for every variable v.
    Declared derivations must commute pairwise (checked on variables at
    construction, which suffices by the Leibniz rule).
    """

    def __init__(self, variables: Sequence[str], laurent: Iterable[str] = (),
                 derivations: Mapping[str, Mapping[str, object]] | None = None):
        self.variables: Tuple[str, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise RingError("variable names must be distinct")
        self._index = {v: i for i, v in enumerate(self.variables)}
        unknown = set(laurent) - set(self.variables)
        if unknown:
            raise RingError("laurent flag for unknown variables: %s" % sorted(unknown))
        self.laurent: frozenset = frozenset(laurent)
        self.zero = RingElement(self, {})
        self.one = RingElement(self, {(0,) * len(self.variables): Fraction(1)})

        if derivations is None:
            derivations = {
                "d/d" + v: {w: (1 if w == v else 0) for w in self.variables}
                for v in self.variables
            }
        self.derivation_names: Tuple[str, ...] = tuple(derivations)
        self._derivation_actions: Dict[str, Tuple[RingElement, ...]] = {}
        for name, action in derivations.items():
            row = []
            for v in self.variables:
                val = action.get(v, 0)
                if isinstance(val, dict):
                    # exponent-tuple spec, usable before the ring exists
                    val = RingElement(self, {tuple(k): as_fraction(c)
                                             for k, c in val.items()})
                row.append(self._coerce(val))
            self._derivation_actions[name] = tuple(row)
        self._check_derivations_commute()

    # -- construction helpers -------------------------------------------

    def _coerce(self, value) -> "RingElement":
        if isinstance(value, RingElement):
            if value.ring is not self:
                raise RingError("element belongs to a different ring")
            return value
        return self.const(as_fraction(value))

    def const(self, c) -> "RingElement":
        c = as_fraction(c)
        if c == 0:
            return self.zero
        return RingElement(self, {(0,) * len(self.variables): c})

    def var(self, name: str) -> "RingElement":
        if name not in self._index:
            raise RingError("unknown variable %r" % name)
        exps = [0] * len(self.variables)
        exps[self._index[name]] = 1
        return RingElement(self, {tuple(exps): Fraction(1)})

    def monomial(self, exponents: Sequence[int], coeff=1) -> "RingElement":
        return RingElement(self, {tuple(exponents): as_fraction(coeff)})

    def variable_index(self, name: str) -> int:
        if name not in self._index:
            raise RingError("unknown variable %r" % name)
        return self._index[name]

    def is_laurent(self, name: str) -> bool:
        return name in self.laurent

    # -- derivations ------------------------------------------------------

    def derivation_action(self, name: str) -> Tuple["RingElement", ...]:
        try:
            return self._derivation_actions[name]
        except KeyError:
            raise RingError("unknown derivation %r" % name) from None

    def derive(self, name: str, f: "RingElement") -> "RingElement":
        """Apply the named derivation to f (Leibniz extension, power rule)."""
        if f.ring is not self:
            raise RingError("element belongs to a different ring")
        action = self.derivation_action(name)
        out: Dict[Exponents, Fraction] = {}
        for exps, coeff in f.terms.items():
            for i, e in enumerate(exps):
                if e == 0:
                    continue
                act = action[i]
                if not act.terms:
                    continue
                lowered = list(exps)
                lowered[i] = e - 1
                base = coeff * e
                for aexps, acoeff in act.terms.items():
                    key = tuple(x + y for x, y in zip(lowered, aexps))
                    out[key] = out.get(key, Fraction(0)) + base * acoeff
        return RingElement(self, out)

    def _check_derivations_commute(self) -> None:
        names = self.derivation_names
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                for v in self.variables:
                    x = self.var(v)
                    lhs = self.derive(names[a], self.derive(names[b], x))
                    rhs = self.derive(names[b], self.derive(names[a], x))
                    if lhs != rhs:
                        raise RingError(
                            "derivations %s and %s do not commute on %s"
                            % (names[a], names[b], v))

    # -- misc --------------------------------------------------------------

    def __repr__(self):
        parts = []
        for v in self.variables:
            parts.append(v + "^±1" if v in self.laurent else v)
        return "ChartRing(%s)" % ", ".join(parts)

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


def poly_ring(*variables: str) -> ChartRing:
    """Q[variables] with coordinate derivations."""
    return ChartRing(variables)


def laurent_ring(*variables: str) -> ChartRing:
    """Q[variables, inverses] with coordinate derivations."""
    return ChartRing(variables, laurent=variables)


class RingElement:
    """A finite sum of monomials with Fraction coefficients.

    `terms` maps exponent tuples to nonzero coefficients; exponents may be
    negative only at Laurent variables of the owner.
    """

    __slots__ = ("ring", "terms")

    def __init__(self, ring: ChartRing, terms: Mapping[Exponents, Fraction]):
        clean: Dict[Exponents, Fraction] = {}
        nvars = len(ring.variables)
        for exps, coeff in terms.items():
            if coeff == 0:
                continue
            if len(exps) != nvars:
                raise RingError("exponent tuple of wrong length")
            for i, e in enumerate(exps):
                if e < 0 and ring.variables[i] not in ring.laurent:
                    raise RingError(
                        "negative exponent at non-Laurent variable %r"
                        % ring.variables[i])
            clean[exps] = coeff
        self.ring = ring
        self.terms = clean

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            if other.ring is not self.ring:
                raise RingError("operands belong to different rings")
            return other
        return self.ring.const(as_fraction(other))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for exps, coeff in other.terms.items():
            out[exps] = out.get(exps, Fraction(0)) + coeff
        return RingElement(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return RingElement(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: Dict[Exponents, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                out[key] = out.get(key, Fraction(0)) + c1 * c2
        return RingElement(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise RingError("exponents must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other)
        if not isinstance(other, RingElement) or other.ring is not self.ring:
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- unit structure ------------------------------------------------------

    def is_unit(self) -> bool:
        if len(self.terms) != 1:
            return False
        (exps,) = self.terms
        return all(e == 0 or self.ring.variables[i] in self.ring.laurent
                   for i, e in enumerate(exps))

    def inverse(self) -> "RingElement":
        if not self.is_unit():
            raise RingError("element is not a unit: %s" % self)
        ((exps, coeff),) = self.terms.items()
        return RingElement(self.ring,
                           {tuple(-e for e in exps): Fraction(1) / coeff})

    # -- structure helpers ----------------------------------------------------

    def derive(self, name: str) -> "RingElement":
        return self.ring.derive(name, self)

    def constant_term(self) -> Fraction:
        zero = (0,) * len(self.ring.variables)
        return self.terms.get(zero, Fraction(0))

    def is_constant(self) -> bool:
        zero = (0,) * len(self.ring.variables)
        return all(e == zero for e in self.terms)

    def total_degree_range(self) -> Tuple[int, int]:
        """(min, max) of the signed total degree over the support; (0, 0) if zero."""
        if not self.terms:
            return (0, 0)
        degs = [sum(e) for e in self.terms]
        return (min(degs), max(degs))

    def exponent_range(self, var_index: int) -> Tuple[int, int]:
        if not self.terms:
            return (0, 0)
        exps = [e[var_index] for e in self.terms]
        return (min(exps), max(exps))

    def coefficient(self, exponents: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exponents), Fraction(0))

    # -- rendering -------------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        pieces = []
        for exps in sorted(self.terms, reverse=True):
            coeff = self.terms[exps]
            mono = "*".join(
                v if e == 1 else "%s^%d" % (v, e)
                for v, e in zip(self.ring.variables, exps) if e != 0)
            if not mono:
                body = str(abs(coeff))
            elif abs(coeff) == 1:
                body = mono
            else:
                body = "%s*%s" % (abs(coeff), mono)
            sign = "-" if coeff < 0 else "+"
            pieces.append((sign, body))
        first_sign, first_body = pieces[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in pieces[1:]:
            text += " %s %s" % (sign, body)
        return text

    def __repr__(self):
        return "<%s>" % self

    def __hash__(self):
        return hash((id(self.ring), tuple(sorted(self.terms.items()))))


class RingMap:
    """Ring homomorphism determined by images of the source variables.

    Images of Laurent variables must be units of the target (checked at
    construction so substitution of negative exponents is always defined).
    """

    def __init__(self, source: ChartRing, target: ChartRing,
                 images: Mapping[str, RingElement]):
        self.source = source
        self.target = target
        self.images: Dict[str, RingElement] = {}
        self._inverses: Dict[str, RingElement] = {}
        for v in source.variables:
            if v not in images:
                raise RingError("no image for source variable %r" % v)
            img = images[v]
            if not isinstance(img, RingElement) or img.ring is not target:
                raise RingError("image of %r is not a target element" % v)
            self.images[v] = img
            if v in source.laurent:
                if not img.is_unit():
                    raise RingError(
                        "image of Laurent variable %r must be a unit" % v)
                self._inverses[v] = img.inverse()

    def __call__(self, f: RingElement) -> RingElement:
        if f.ring is not self.source:
            raise RingError("element is not in the source ring")
        result = self.target.zero
        for exps, coeff in f.terms.items():
            term = self.target.const(coeff)
            for v, e in zip(self.source.variables, exps):
                if e == 0:
                    continue
                if e > 0:
                    term = term * (self.images[v] ** e)
                else:
                    term = term * (self._inverses[v] ** (-e))
            result = result + term
        return result

    @classmethod
    def identity(cls, ring: ChartRing) -> "RingMap":
        return cls(ring, ring, {v: ring.var(v) for v in ring.variables})


def ring_arith(a: RingElement, b: RingElement, op: str) -> RingElement:
    """Exact +, * or - with owner check; kept as an explicit entry point."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "sub":
        return a - b
    raise RingError("unknown operation %r" % op)


def apply_derivation(name: str, f: RingElement) -> RingElement:
    return f.ring.derive(name, f)


def apply_ring_map(m: RingMap, f: RingElement) -> RingElement:
    return m(f)
