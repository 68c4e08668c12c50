"""Arithmetic of the three local fields in play: R, C, and Q_p for odd p.

Provides norms, square-class tests, valuations, the measure normalization
used throughout the package, and a brute-force p-adic Riemann-sum integrator
that serves as the oracle for every closed-form p-adic integral.

Conventions:
  * norm(x) is |x| on R, |x|^2 on C, q^{-v(x)} on Q_p.
  * The measure ||dx|| is ordinary Lebesgue/Haar measure times haar_scale(F),
    chosen so that the multiplicative calibration
    integral over {1 <= ||x|| < R} of ||dx||/||x|| equals log R on every field.
  * theta(0) = 1 (zero counts as a square); sign(log||x||) uses sign(0) = 0.

p-adic elements are fixed-precision values: (valuation, unit) with the unit
kept modulo p^precision. Arithmetic truncates to the working precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Union

from sympy import isprime
from sympy.ntheory.residue_ntheory import sqrt_mod

INF = math.inf

_DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class FieldDescriptor:
    """One of R, C, or Q_p with a fixed working precision (p-adic only)."""

    kind: str  # "R" | "C" | "Qp"
    p: int | None = None
    precision: int | None = None

    def __post_init__(self):
        if self.kind not in ("R", "C", "Qp"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "Qp":
            if self.p is None or self.p < 3 or self.p % 2 == 0 or not isprime(self.p):
                raise ValueError(f"p must be an odd prime >= 3, got {self.p}")
            if self.precision is None or self.precision < 4:
                raise ValueError(f"precision must be >= 4, got {self.precision}")
        elif self.p is not None or self.precision is not None:
            raise ValueError("p/precision only apply to Qp descriptors")

    @property
    def is_padic(self) -> bool:
        return self.kind == "Qp"

    @property
    def q(self) -> int:
        """Residue-field cardinality."""
        if not self.is_padic:
            raise ValueError("q is defined for Qp descriptors only")
        return self.p

    def to_json(self):
        if self.kind == "Qp":
            return {"p": self.p, "precision": self.precision}
        return self.kind

    @staticmethod
    def from_json(obj) -> "FieldDescriptor":
        if obj == "R":
            return real_field()
        if obj == "C":
            return complex_field()
        if isinstance(obj, dict):
            return padic_field(obj["p"], obj.get("precision", 12))
        raise ValueError(f"not a field descriptor: {obj!r}")


def real_field() -> FieldDescriptor:
    return FieldDescriptor("R")


def complex_field() -> FieldDescriptor:
    return FieldDescriptor("C")


def padic_field(p: int, precision: int = 12) -> FieldDescriptor:
    return FieldDescriptor("Qp", p=p, precision=precision)


class PadicNumber:
    """An element of Q_p held as p^val * unit with unit kept mod p^precision.

    Zero is the sentinel val = +inf, unit = 0. The unit part always has a
    nonzero leading digit. Instances are immutable.
    """

    __slots__ = ("p", "precision", "val", "unit")

    def __init__(self, p: int, precision: int, val, unit: int):
        modulus = p**precision
        unit %= modulus
        if unit == 0:
            val = INF
        else:
            while unit % p == 0:  # keep the leading digit nonzero
                unit //= p
                val += 1
            # refill the dropped high digits with zeros (truncation)
            unit %= modulus
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "precision", precision)
        object.__setattr__(self, "val", val)
        object.__setattr__(self, "unit", unit)

    def __setattr__(self, *a):
        raise AttributeError("PadicNumber is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_int(p: int, precision: int, n: int) -> "PadicNumber":
        return PadicNumber.from_fraction(p, precision, Fraction(n))

    @staticmethod
    def from_fraction(p: int, precision: int, x) -> "PadicNumber":
        x = Fraction(x)
        if x == 0:
            return PadicNumber(p, precision, INF, 0)
        num, den = x.numerator, x.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        unit = num * pow(den, -1, p**precision)
        return PadicNumber(p, precision, v, unit)

    # -- basic queries -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.val == INF

    def digits(self) -> list[int]:
        """Base-p digits of the unit part, leading digit first."""
        out, u = [], self.unit
        for _ in range(self.precision):
            out.append(u % self.p)
            u //= self.p
        return out

    def leading_digit(self) -> int:
        if self.is_zero:
            return 0
        return self.unit % self.p

    def residue(self) -> int:
        """Reduction mod p for elements of Z_p (val >= 0)."""
        if self.is_zero:
            return 0
        if self.val < 0:
            raise ValueError("residue of an element with negative valuation")
        if self.val > 0:
            return 0
        return self.unit % self.p

    def to_fraction(self) -> Fraction:
        """The rational p^val * unit represented by the stored digits."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.val

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, int):
            return PadicNumber.from_fraction(self.p, self.precision, other)
        if isinstance(other, Fraction):
            return PadicNumber.from_fraction(self.p, self.precision, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.is_zero:
            return o
        if o.is_zero:
            return self
        prec = min(self.precision, o.precision)
        v = min(self.val, o.val)
        m = self.p**prec
        u = (self.unit * pow(self.p, self.val - v, m) + o.unit * pow(self.p, o.val - v, m)) % m
        if u == 0:
            return PadicNumber(self.p, prec, INF, 0)
        k = 0
        while u % self.p == 0:  # digit cancellation costs relative precision
            u //= self.p
            k += 1
        return PadicNumber(self.p, prec - k, v + k, u)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero:
            return self
        return PadicNumber(self.p, self.precision, self.val, -self.unit)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.is_zero or o.is_zero:
            return PadicNumber(self.p, min(self.precision, o.precision), INF, 0)
        prec = min(self.precision, o.precision)
        return PadicNumber(self.p, prec, self.val + o.val, (self.unit * o.unit) % self.p**prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.is_zero:
            raise ZeroDivisionError("p-adic division by zero")
        if self.is_zero:
            return PadicNumber(self.p, min(self.precision, o.precision), INF, 0)
        prec = min(self.precision, o.precision)
        m = self.p**prec
        return PadicNumber(self.p, prec, self.val - o.val, (self.unit * pow(o.unit, -1, m)) % m)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return PadicNumber.from_int(self.p, self.precision, 1)
        if n < 0:
            return 1 / (self ** (-n))
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PadicNumber.from_fraction(self.p, self.precision, other)
        if not isinstance(other, PadicNumber):
            return NotImplemented
        if self.p != other.p:
            return False
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        prec = min(self.precision, other.precision)
        return self.val == other.val and (self.unit - other.unit) % self.p**prec == 0

    def __hash__(self):
        if self.is_zero:
            return hash((self.p, "zero"))
        # only the leading digit is equality-invariant across precisions
        return hash((self.p, self.val, self.unit % self.p))

    def sqrt(self) -> "PadicNumber":
        """A square root, when one exists; canonical choice is the smaller unit."""
        if self.is_zero:
            return self
        if self.val % 2 != 0:
            raise ValueError("odd valuation: not a square")
        m = self.p**self.precision
        r = sqrt_mod(self.unit % m, m)
        if r is None:
            raise ValueError("unit part is not a square")
        r = min(r % m, (-r) % m)
        return PadicNumber(self.p, self.precision, self.val // 2, r)

    def __repr__(self):
        if self.is_zero:
            return f"PadicNumber({self.p}, 0)"
        return f"PadicNumber({self.p}, {self.p}^{self.val}*{self.unit})"

    # -- serialization -----------------------------------------------------

    def to_json(self):
        if self.is_zero:
            return {"val": "inf", "digits": "0" * self.precision}
        return {"val": self.val, "digits": "".join(_DIGIT_CHARS[d] for d in self.digits())}

    @staticmethod
    def from_json(p: int, obj) -> "PadicNumber":
        digits = [_DIGIT_CHARS.index(ch) for ch in obj["digits"]]
        precision = len(digits)
        if obj["val"] == "inf":
            return PadicNumber(p, precision, INF, 0)
        unit = sum(d * p**i for i, d in enumerate(digits))
        return PadicNumber(p, precision, obj["val"], unit)


FieldElement = Union[float, complex, int, Fraction, PadicNumber]


def as_element(F: FieldDescriptor, x) -> FieldElement:
    """Lift x (int/Fraction/native) into the arithmetic of F."""
    if F.is_padic:
        if isinstance(x, PadicNumber):
            if x.p != F.p:
                raise ValueError("element from a different Q_p")
            return x
        return PadicNumber.from_fraction(F.p, F.precision, x)
    if F.kind == "R":
        return float(x)
    return complex(x)


def valuation(F: FieldDescriptor, x) -> float:
    if not F.is_padic:
        raise ValueError("valuation is p-adic only")
    return as_element(F, x).val


def norm(F: FieldDescriptor, x) -> float:
    """|x| on R, |x|^2 on C, q^{-v(x)} on Q_p; norm(0) = 0."""
    if F.kind == "R":
        return abs(float(x))
    if F.kind == "C":
        z = complex(x)
        return z.real * z.real + z.imag * z.imag
    e = as_element(F, x)
    if e.is_zero:
        return 0.0
    return float(F.p) ** (-e.val)


def norm_exact(F: FieldDescriptor, x) -> Fraction:
    """Exact q^{-v(x)} as a Fraction (p-adic descriptors only)."""
    e = as_element(F, x)
    if e.is_zero:
        return Fraction(0)
    return Fraction(F.p) ** (-e.val)


def is_square(F: FieldDescriptor, x) -> bool:
    """theta(x): 1 iff x is a square in F, with theta(0) = 1."""
    if F.kind == "C":
        return True
    if F.kind == "R":
        return float(x) >= 0.0
    e = as_element(F, x)
    if e.is_zero:
        return True
    if e.val % 2 != 0:
        return False
    return pow(e.leading_digit(), (F.p - 1) // 2, F.p) == 1


def theta(F: FieldDescriptor, x) -> int:
    return 1 if is_square(F, x) else 0


def haar_scale(F: FieldDescriptor) -> float:
    """Factor converting conventional measure to the package's ||dx||."""
    if F.kind == "R":
        return 0.5
    if F.kind == "C":
        return 1.0 / math.pi
    q = F.p
    return math.log(q) / (1.0 - 1.0 / q)


def log_norm_sign(F: FieldDescriptor, x) -> int:
    """sign(log||x||) with sign(0) = 0."""
    n = norm(F, x)
    if n > 1.0:
        return 1
    if n < 1.0:
        return -1
    return 0


@dataclass(frozen=True)
class ResidueDisc:
    """The disc {x : ||x - center|| <= q^{-m}} in Q_p."""

    center: PadicNumber
    m: int

    def volume_standard(self) -> Fraction:
        return Fraction(1, self.center.p**self.m) if self.m >= 0 else Fraction(self.center.p ** (-self.m))


Region = Union[ResidueDisc, Iterable[int]]


class IntegralResult(NamedTuple):
    value: float
    skipped: int


def _disc_centers(F: FieldDescriptor, disc: ResidueDisc, depth: int):
    """Centers of the depth-resolution discs tiling `disc`, lexicographic in digits."""
    p = F.p
    ndig = depth - disc.m
    if ndig < 0:
        raise ValueError("depth must be >= the disc radius exponent")
    base = Fraction(p) ** disc.m
    for digs in itertools.product(range(p), repeat=ndig):
        n = sum(d * p**i for i, d in enumerate(digs))
        yield disc.center + PadicNumber.from_fraction(p, F.precision, base * n)


def _shell_centers(F: FieldDescriptor, v: int, depth: int):
    """Centers tiling the sphere {||x|| = q^{-v}} by discs of radius q^{-depth}."""
    p = F.p
    ndig = depth - v
    if ndig < 1:
        raise ValueError("depth must exceed the shell valuation")
    base = Fraction(p) ** v
    for lead in range(1, p):
        for digs in itertools.product(range(p), repeat=ndig - 1):
            n = lead + sum(d * p ** (i + 1) for i, d in enumerate(digs))
            yield PadicNumber.from_fraction(p, F.precision, base * n)


def padic_integrate(
    F: FieldDescriptor,
    f: Callable[[PadicNumber], float],
    region: Region,
    depth: int,
    normalization: str = "paper",
) -> IntegralResult:
    """Riemann sum of f over the region by discs of radius q^{-depth}.

    Each disc contributes f(center) * scale * q^{-depth}, where scale is
    haar_scale(F) under the "paper" normalization and 1 under "standard"
    (vol(Z_p) = 1). The region is a ResidueDisc or an iterable of shell
    valuations v (spheres ||x|| = q^{-v} about 0). Centers are enumerated
    in lexicographic digit order; integrand failures (ZeroDivisionError,
    ValueError, ArithmeticError) skip the disc and are counted.

    Accuracy: exact for integrands locally constant at scale q^{-depth};
    near square-root singularities the relative error is O(q^{-depth/2}).
    """
    if not F.is_padic:
        raise ValueError("padic_integrate needs a Qp descriptor")
    if depth > F.precision:
        raise ValueError("depth exceeds working precision")
    if normalization not in ("paper", "standard"):
        raise ValueError(f"unknown normalization {normalization!r}")
    scale = haar_scale(F) if normalization == "paper" else 1.0
    weight = scale * float(F.p) ** (-depth)

    if isinstance(region, ResidueDisc):
        centers = _disc_centers(F, region, depth)
    else:
        shells = list(region)
        centers = itertools.chain.from_iterable(_shell_centers(F, v, depth) for v in shells)

    total = 0.0
    comp = 0.0  # Neumaier compensation: fixed order => bit-reproducible
    skipped = 0
    for c in centers:
        try:
            fv = float(f(c))
        except (ZeroDivisionError, ValueError, ArithmeticError):
            skipped += 1
            continue
        term = fv * weight
        s = total + term
        if abs(total) >= abs(term):
            comp += (total - s) + term
        else:
            comp += (term - s) + total
        total = s
    return IntegralResult(total + comp, skipped)
