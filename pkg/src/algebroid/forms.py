"""Alternating forms on an algebroid, the differential, and windowed
cohomology.

A degree-p form stores one ring coefficient per strictly ascending
p-tuple of basis indices.  The differential follows the alternating-sum
formula (anchor terms plus bracket terms) and is only offered on
verified algebroids, where it squares to zero.

The cochain complexes are infinite-dimensional over a polynomial chart,
so dimension counts and exactness questions are answered on a finite
window of coefficient monomials.  Positive answers (a primitive, a
kernel vector) are exact; negative answers are labeled window-relative
unless a residue functional certifies them outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import Algebroid, Section, StructureError
from .linalg import SparseSystem
from .rings import ChartRing, RingElement

IndexTuple = Tuple[int, ...]


def sort_with_sign(indices: Sequence[int]) -> Tuple[Optional[IndexTuple], int]:
    """Ascending rearrangement and permutation sign; (None, 0) on repeats."""
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return None, 0
    return tuple(idx), sign


class LForm:
    """Alternating p-form with ring coefficients on ascending index tuples."""

    __slots__ = ("owner", "degree", "coeffs")

    def __init__(self, owner: Algebroid, degree: int,
                 coeffs: Mapping[IndexTuple, RingElement] | None = None):
        if degree < 0:
            raise StructureError("form degree must be nonnegative")
        self.owner = owner
        self.degree = degree
        clean: Dict[IndexTuple, RingElement] = {}
        for idx, val in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise StructureError("index tuple does not match degree")
            if any(not (0 <= t < owner.rank) for t in idx):
                raise StructureError("index out of range")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise StructureError("index tuples must be strictly ascending")
            val = owner.base._coerce(val)
            if not val.is_zero():
                clean[idx] = val
        self.coeffs = clean

    # -- algebra -------------------------------------------------------------

    def _check(self, other: "LForm"):
        if other.owner is not self.owner:
            raise StructureError("forms live on different algebroids")

    def __add__(self, other: "LForm") -> "LForm":
        self._check(other)
        if other.degree != self.degree:
            raise StructureError("cannot add forms of different degrees")
        out = dict(self.coeffs)
        for idx, val in other.coeffs.items():
            cur = out.get(idx)
            out[idx] = val if cur is None else cur + val
        return LForm(self.owner, self.degree, out)

    def __sub__(self, other: "LForm") -> "LForm":
        return self + (-other)

    def __neg__(self) -> "LForm":
        return LForm(self.owner, self.degree,
                     {i: -v for i, v in self.coeffs.items()})

    def scale(self, f) -> "LForm":
        f = self.owner.base._coerce(f)
        return LForm(self.owner, self.degree,
                     {i: f * v for i, v in self.coeffs.items()})

    def __eq__(self, other):
        return (isinstance(other, LForm) and other.owner is self.owner
                and other.degree == self.degree and other.coeffs == self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def component(self, indices: Sequence[int]) -> RingElement:
        """Value on basis sections in any order (with sign)."""
        idx, sign = sort_with_sign(indices)
        if idx is None:
            return self.owner.base.zero
        val = self.coeffs.get(idx)
        if val is None:
            return self.owner.base.zero
        return val if sign == 1 else -val

    def evaluate(self, *sections: Section) -> RingElement:
        """Multilinear evaluation on arbitrary sections."""
        if len(sections) != self.degree:
            raise StructureError("evaluation needs %d sections" % self.degree)
        base = self.owner.base
        total = base.zero
        if self.degree == 0:
            return self.coeffs.get((), base.zero)
        for idx, val in self.coeffs.items():
            # expand over permutations via the determinant of coordinates
            total = total + val * _alt_product(base, sections, idx)
        return total

    # -- calculus -------------------------------------------------------------

    def wedge(self, other: "LForm") -> "LForm":
        self._check(other)
        p, q = self.degree, other.degree
        out: Dict[IndexTuple, RingElement] = {}
        for i1, v1 in self.coeffs.items():
            for i2, v2 in other.coeffs.items():
                merged, sign = sort_with_sign(i1 + i2)
                if merged is None:
                    continue
                term = v1 * v2 if sign == 1 else -(v1 * v2)
                cur = out.get(merged)
                out[merged] = term if cur is None else cur + term
        return LForm(self.owner, p + q, out)

    def contract(self, u: Section) -> "LForm":
        if u.owner is not self.owner:
            raise StructureError("section belongs to a different algebroid")
        if self.degree == 0:
            raise StructureError("cannot contract a degree-0 form")
        out: Dict[IndexTuple, RingElement] = {}
        for idx, val in self.coeffs.items():
            for pos, t in enumerate(idx):
                c = u.coefficients[t]
                if c.is_zero():
                    continue
                rest = idx[:pos] + idx[pos + 1:]
                term = c * val if pos % 2 == 0 else -(c * val)
                cur = out.get(rest)
                out[rest] = term if cur is None else cur + term
        return LForm(self.owner, self.degree - 1, out)

    def d(self) -> "LForm":
        """The algebroid differential; requires a verified owner."""
        self.owner.require_verified("the differential")
        return self._d_unchecked()

    def _d_unchecked(self) -> "LForm":
        L = self.owner
        p = self.degree
        out: Dict[IndexTuple, RingElement] = {}

        def accumulate(idx: IndexTuple, val: RingElement):
            if val.is_zero():
                return
            cur = out.get(idx)
            out[idx] = val if cur is None else cur + val

        for big in combinations(range(L.rank), p + 1):
            total = L.base.zero
            # anchor terms
            for a in range(p + 1):
                rest = big[:a] + big[a + 1:]
                coeff = self.coeffs.get(rest)
                if coeff is None:
                    continue
                term = L.anchor_apply(L.basis_section(big[a]), coeff)
                total = total + (term if a % 2 == 0 else -term)
            # bracket terms
            for a, b in combinations(range(p + 1), 2):
                struct = L.structure_coefficients(big[a], big[b])
                if all(c.is_zero() for c in struct):
                    continue
                rest = tuple(x for t, x in enumerate(big) if t not in (a, b))
                sign_ab = (-1) ** (a + b)
                for k in range(L.rank):
                    if struct[k].is_zero():
                        continue
                    val = self.component((k,) + rest)
                    if val.is_zero():
                        continue
                    term = struct[k] * val
                    total = total + (term if sign_ab == 1 else -term)
            accumulate(big, total)
        return LForm(L, p + 1, out)

    # -- rendering -------------------------------------------------------------

    def __str__(self):
        if not self.coeffs:
            return "0"
        names = self.owner.basis_names
        parts = []
        for idx in sorted(self.coeffs):
            label = "^".join("%s^" % names[t] for t in idx) if idx else "1"
            parts.append("(%s)*%s" % (self.coeffs[idx], label) if idx
                         else "(%s)" % self.coeffs[idx])
        return " + ".join(parts)

    __repr__ = __str__


def _alt_product(base: ChartRing, sections: Sequence[Section],
                 idx: IndexTuple) -> RingElement:
    """det of the coordinate matrix sections x idx (Leibniz expansion)."""
    from itertools import permutations
    n = len(idx)
    total = base.zero
    for perm in permutations(range(n)):
        sign = _perm_sign(perm)
        prod = base.one
        for row, col in enumerate(perm):
            prod = prod * sections[row].coefficients[idx[col]]
            if prod.is_zero():
                break
        total = total + (prod if sign == 1 else -prod)
    return total


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def d_L(theta: LForm) -> LForm:
    return theta.d()


def wedge(a: LForm, b: LForm) -> LForm:
    return a.wedge(b)


def contract(theta: LForm, u: Section) -> LForm:
    return theta.contract(u)


def function_form(l: Algebroid, f) -> LForm:
    return LForm(l, 0, {(): l.base._coerce(f)})


def basis_covector(l: Algebroid, i: int) -> LForm:
    return LForm(l, 1, {(i,): l.base.one})


# -- windowed slices ------------------------------------------------------------


@dataclass(frozen=True)
class TruncationWindow:
    """Finite slice of the cochain spaces: total polynomial degree at most
    `degree`, Laurent exponents within [-laurent, laurent]."""
    degree: int = 8
    laurent: int = 12

    def __post_init__(self):
        if self.degree < 0 or self.laurent < 1:
            raise StructureError("window bounds out of range")

    def enlarged(self, amount: int) -> "TruncationWindow":
        return TruncationWindow(self.degree + amount, self.laurent + amount)

    def admits(self, ring: ChartRing, exponents: IndexTuple) -> bool:
        pos_total = 0
        for v, e in zip(ring.variables, exponents):
            if v in ring.laurent:
                if not (-self.laurent <= e <= self.laurent):
                    return False
            else:
                if e < 0:
                    return False
            if e > 0:
                pos_total += e
        return pos_total <= self.degree

    def monomials(self, ring: ChartRing) -> List[IndexTuple]:
        ranges = []
        for v in ring.variables:
            if v in ring.laurent:
                ranges.append(range(-self.laurent, self.laurent + 1))
            else:
                ranges.append(range(0, self.degree + 1))
        out: List[IndexTuple] = []

        def rec(prefix: List[int], pos: int):
            if pos == len(ranges):
                out.append(tuple(prefix))
                return
            for e in ranges[pos]:
                prefix.append(e)
                if sum(x for x in prefix if x > 0) <= self.degree:
                    rec(prefix, pos + 1)
                prefix.pop()

        rec([], 0)
        return sorted(out)


@dataclass
class DegreeReport:
    kernel_dim: int
    image_dim: int
    stable: bool

    @property
    def cohomology_dim(self) -> int:
        return self.kernel_dim - self.image_dim


@dataclass
class CohomologyReport:
    window: TruncationWindow
    degrees: Dict[int, DegreeReport] = field(default_factory=dict)

    def dim(self, p: int) -> int:
        return self.degrees[p].cohomology_dim


class _Slice:
    """The window slice of p-forms: ordered basis (index tuple, monomial)."""

    def __init__(self, l: Algebroid, p: int, window: TruncationWindow):
        self.owner = l
        self.degree = p
        self.window = window
        monos = window.monomials(l.base)
        self.basis: List[Tuple[IndexTuple, IndexTuple]] = [
            (idx, m) for idx in combinations(range(l.rank), p) for m in monos]
        self.position = {b: t for t, b in enumerate(self.basis)}

    def __len__(self):
        return len(self.basis)

    def form_from_vector(self, vec: Sequence[Fraction]) -> LForm:
        comp: Dict[IndexTuple, RingElement] = {}
        ring = self.owner.base
        for t, (idx, m) in enumerate(self.basis):
            if vec[t]:
                cur = comp.get(idx, ring.zero)
                comp[idx] = cur + ring.monomial(m, vec[t])
        return LForm(self.owner, self.degree, comp)

    def vector_from_form(self, theta: LForm) -> Optional[List[Fraction]]:
        vec = [Fraction(0)] * len(self.basis)
        for idx, val in theta.coeffs.items():
            for m, c in val.terms.items():
                pos = self.position.get((idx, m))
                if pos is None:
                    return None
                vec[pos] = c
        return vec


def _differential_entries(l: Algebroid, domain: _Slice):
    """Images of the domain basis forms under d, as sparse columns keyed by
    (index tuple, monomial)."""
    cols = []
    ring = l.base
    for idx, m in domain.basis:
        theta = LForm(l, domain.degree, {idx: ring.monomial(m, 1)})
        image = theta._d_unchecked()
        col: Dict[Tuple[IndexTuple, IndexTuple], Fraction] = {}
        for jdx, val in image.coeffs.items():
            for mm, c in val.terms.items():
                col[(jdx, mm)] = c
        cols.append(col)
    return cols


def _window_check(l: Algebroid, window: TruncationWindow) -> None:
    maxdeg = 0
    maxexp = 1
    for row in l.anchor:
        for g in row:
            if not g.is_zero():
                maxdeg = max(maxdeg, g.total_degree_range()[1])
                for i, v in enumerate(l.base.variables):
                    if v in l.base.laurent:
                        lo, hi = g.exponent_range(i)
                        maxexp = max(maxexp, abs(lo), abs(hi))
    for coeffs in l.structure.values():
        for c in coeffs:
            if not c.is_zero():
                maxdeg = max(maxdeg, c.total_degree_range()[1])
                for i, v in enumerate(l.base.variables):
                    if v in l.base.laurent:
                        lo, hi = c.exponent_range(i)
                        maxexp = max(maxexp, abs(lo), abs(hi))
    if window.degree < maxdeg or window.laurent < maxexp:
        raise StructureError(
            "window too small relative to coefficient degrees "
            "(need degree >= %d, laurent >= %d)" % (maxdeg, maxexp))


def _dims_at(l: Algebroid, p: int, window: TruncationWindow,
             drop: int) -> Tuple[int, int]:
    """(kernel dim, windowed image dim) for the degree-p slice."""
    dom = _Slice(l, p, window)
    cols = _differential_entries(l, dom)
    row_keys = sorted({k for col in cols for k in col})
    row_pos = {k: t for t, k in enumerate(row_keys)}
    sys = SparseSystem(len(row_keys), len(dom))
    for j, col in enumerate(cols):
        for k, c in col.items():
            sys.set(row_pos[k], j, c)
    kernel_dim = len(dom) - sys.rank()

    image_dim = 0
    if p > 0:
        ext = _Slice(l, p - 1, window.enlarged(drop))
        ecols = _differential_entries(l, ext)
        ekeys = sorted({k for col in ecols for k in col})
        epos = {k: t for t, k in enumerate(ekeys)}
        full = SparseSystem(len(ekeys), len(ext))
        outside = SparseSystem(len(ekeys), len(ext))
        inside = dom.position
        for j, col in enumerate(ecols):
            for k, c in col.items():
                full.set(epos[k], j, c)
                if k not in inside:
                    outside.set(epos[k], j, c)
        image_dim = full.rank() - outside.rank()
    return kernel_dim, image_dim


def truncated_cohomology(l: Algebroid, degrees: Iterable[int],
                         window: TruncationWindow | None = None) -> CohomologyReport:
    """Exact kernel/image dimensions on the window slice.

    The kernel is the honest kernel of the differential on the slice.
    The image dimension counts coboundaries of (p-1)-forms from a
    slightly enlarged slice that land inside the window, so reported
    cohomology can only shrink as windows grow.  Each degree carries a
    stability flag from a recomputation at degree + 2.
    """
    l.require_verified("cohomology")
    window = window or TruncationWindow()
    _window_check(l, window)
    drop, _bump = l.coefficient_degree_profile()
    report = CohomologyReport(window)
    for p in sorted(set(degrees)):
        if p < 0 or p > l.rank:
            report.degrees[p] = DegreeReport(0, 0, True)
            continue
        ker, im = _dims_at(l, p, window, drop)
        ker2, im2 = _dims_at(l, p, window.enlarged(2), drop)
        report.degrees[p] = DegreeReport(
            ker, im, stable=(ker - im) == (ker2 - im2))
    return report


@dataclass
class ExactnessResult:
    status: str                       # "primitive" | "no-primitive-in-window"
    primitive: Optional[LForm] = None
    certified: bool = False           # True: obstruction is window-independent
    residue_witness: Optional[str] = None
    window: Optional[TruncationWindow] = None


def exactness_solve(theta: LForm, window: TruncationWindow | None = None
                    ) -> ExactnessResult:
    """Find eta with d eta = theta inside the window, or report failure.

    Positive answers are verified by substitution before being returned.
    A failure is window-relative unless the residue certificate applies.
    """
    l = theta.owner
    l.require_verified("exactness solving")
    window = window or TruncationWindow()
    if theta.degree == 0:
        raise StructureError("exactness is a question for degree >= 1")
    if not theta.d().is_zero():
        raise StructureError("form is not closed; exactness is undefined")

    drop, _ = l.coefficient_degree_profile()
    needed = 0
    for idx, val in theta.coeffs.items():
        lo, hi = val.total_degree_range()
        needed = max(needed, hi)
        for i, v in enumerate(l.base.variables):
            if v in l.base.laurent:
                elo, ehi = val.exponent_range(i)
                needed = max(needed, abs(elo), abs(ehi))
    dom_window = TruncationWindow(max(window.degree, needed) + drop,
                                  max(window.laurent, needed) + drop)
    dom = _Slice(l, theta.degree - 1, dom_window)
    cols = _differential_entries(l, dom)
    row_keys = sorted({k for col in cols for k in col}
                      | {(idx, m) for idx, val in theta.coeffs.items()
                         for m in val.terms})
    row_pos = {k: t for t, k in enumerate(row_keys)}
    sys = SparseSystem(len(row_keys), len(dom))
    for j, col in enumerate(cols):
        for k, c in col.items():
            sys.set(row_pos[k], j, c)
    rhs = [Fraction(0)] * len(row_keys)
    for idx, val in theta.coeffs.items():
        for m, c in val.terms.items():
            rhs[row_pos[(idx, m)]] = c
    sol = sys.solve(rhs)
    if sol is not None:
        primitive = dom.form_from_vector(sol)
        if not (primitive._d_unchecked() - theta).is_zero():
            raise StructureError("internal error: primitive failed verification")
        return ExactnessResult("primitive", primitive=primitive, window=window)
    witness = residue_certificate(theta)
    if witness is not None:
        return ExactnessResult("no-primitive-in-window", certified=True,
                               residue_witness=witness, window=window)
    return ExactnessResult("no-primitive-in-window", window=window)


def residue_certificate(theta: LForm) -> Optional[str]:
    """Window-independent non-exactness certificate.

    Applies when the owner has a zero structure table and each basis
    anchor is a single monomial c * v^eps * d/dv (eps 0 or 1).  Then no
    coboundary component at (i_1..i_p) contains a monomial whose
    v-exponent equals eps - 1 for every i_a: the derivative kills it.
    Finding such a monomial in theta proves theta is not exact.
    """
    l = theta.owner
    if l.structure:
        return None
    profile = {}
    ring = l.base
    for i in range(l.rank):
        entry = None
        for d, g in enumerate(l.anchor[i]):
            if g.is_zero():
                continue
            if entry is not None:
                return None          # anchor mixes derivations
            entry = (d, g)
        if entry is None:
            return None              # zero anchor direction: no certificate
        d, g = entry
        if len(g.terms) != 1:
            return None
        ((exps, _coeff),) = g.terms.items()
        # the monomial may involve only the derivation's own variable
        name = ring.derivation_names[d]
        if not name.startswith("d/d"):
            return None
        var = name[3:]
        vi = ring.variable_index(var)
        if any(e != 0 for t, e in enumerate(exps) if t != vi):
            return None
        eps = exps[vi]
        if eps not in (0, 1):
            return None
        profile[i] = (vi, eps)
    for idx, val in theta.coeffs.items():
        targets = {}
        ok = True
        for t in idx:
            vi, eps = profile[t]
            want = eps - 1
            if targets.setdefault(vi, want) != want:
                ok = False
                break
        if not ok:
            continue
        for exps in val.terms:
            if all(exps[vi] == want for vi, want in targets.items()):
                desc = ", ".join("%s^%d" % (ring.variables[vi], want)
                                 for vi, want in sorted(targets.items()))
                return ("component (%s), residue monomial %s"
                        % (",".join(str(t + 1) for t in idx), desc))
    return None
