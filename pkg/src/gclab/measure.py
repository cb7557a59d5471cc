"""Spherical ensembles of exact-rational probability measures.

A spherical ensemble assigns to every sphere radius n a probability
measure supported on the words of length n.  All masses are
``fractions.Fraction`` values and every verification in this package is
an exact comparison; floating point appears only in convenience columns
of exported tables.

Provided ensemble kinds: uniform, finite table, the bounded-halting
ensemble (mass 1/(|u| * 2^|w|) on code words 1^m 0 w, mass 1 on the
empty word, mass 0 on 1^k), transfers along size-invariant maps, and
conditionals induced by a decidable subset.  ``verify_transfer`` and
``verify_induced`` recompute the defining equations by brute-force
enumeration and report exact mismatches.

The transfer of mu along f assigns to a target word y the total mu-mass
of its preimage when |y| is an achieved image size, and the uniform
filler |target alphabet|^-|y| otherwise.  The subset-induced ensemble
conditions each sphere on the subset when the subset's sphere mass is
nonzero and leaves the sphere untouched otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .words import (
    Alphabet,
    AlphabetMismatchError,
    Word,
    is_sphere_max,
    lex_successor_in_sphere,
    rank_in_sphere,
)

DEFAULT_ENUMERATION_CAP = 16

ZERO = Fraction(0)
ONE = Fraction(1)


class HorizonError(ValueError):
    """An operation would enumerate a sphere beyond its allowed horizon."""


class SizeInvarianceError(ValueError):
    """A transfer was requested along a map that is not size-invariant."""


def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class Violation:
    witness: str
    expected: str
    actual: str
    note: str = ""

    def to_dict(self) -> dict:
        d = {"witness": self.witness, "expected": self.expected, "actual": self.actual}
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class CheckReport:
    """Result of an exact brute-force verification.

    ``violations`` empty means the property held at every checked point.
    """

    check: str
    horizon: int
    violations: list[Violation] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def add(self, witness: str, expected, actual, note: str = "") -> None:
        self.violations.append(
            Violation(
                witness,
                fraction_str(expected) if isinstance(expected, Fraction) else str(expected),
                fraction_str(actual) if isinstance(actual, Fraction) else str(actual),
                note,
            )
        )

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "horizon": self.horizon,
            "passed": self.passed,
            "violations": [v.to_dict() for v in self.violations],
            "details": self.details,
        }

    def summary(self) -> str:
        status = "pass" if self.passed else f"FAIL ({len(self.violations)} violations)"
        return f"{self.check} up to n={self.horizon}: {status}"


class SphericalEnsemble:
    """Base class: per-sphere probability masses with exact arithmetic.

    Subclasses implement ``mass``.  Enumeration-backed operations
    (cumulative masses, sphere sums without a closed form) respect
    ``enumeration_cap``.
    """

    kind = "abstract"

    def __init__(self, alphabet: Alphabet, enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        self.alphabet = alphabet
        self.enumeration_cap = enumeration_cap
        self._tables: dict[int, tuple[list[Word], dict[tuple, int], list[Fraction]]] = {}

    def mass(self, x: Word) -> Fraction:
        raise NotImplementedError

    def _check_word(self, x: Word) -> None:
        if x.alphabet != self.alphabet:
            raise AlphabetMismatchError("word is over a different alphabet")

    def _check_horizon(self, n: int) -> None:
        if n > self.enumeration_cap:
            raise HorizonError(
                f"sphere {n} exceeds enumeration cap {self.enumeration_cap}"
            )

    def sphere_sum(self, n: int) -> Fraction:
        """Exact total mass of the radius-n sphere (should be 1)."""
        self._check_horizon(n)
        return sum((self.mass(x) for x in self.alphabet.sphere(n)), ZERO)

    def _sphere_table(self, n: int):
        """Lex-ordered words of the sphere with inclusive cumulative masses."""
        if n not in self._tables:
            self._check_horizon(n)
            ws: list[Word] = []
            cum: list[Fraction] = []
            total = ZERO
            index: dict[tuple, int] = {}
            for i, x in enumerate(self.alphabet.sphere(n)):
                total += self.mass(x)
                ws.append(x)
                cum.append(total)
                index[x.letters] = i
            self._tables[n] = (ws, index, cum)
        return self._tables[n]

    def mu_star(self, x: Word) -> Fraction:
        """Cumulative mass strictly below x within its sphere (lex order)."""
        self._check_word(x)
        ws, index, cum = self._sphere_table(len(x))
        i = index[x.letters]
        return cum[i - 1] if i > 0 else ZERO

    def hat_mu(self, x: Word) -> Fraction:
        """Cumulative mass of the in-sphere successor, taken as 1 on the
        lexicographic maximum of the sphere.  Binary alphabets only (this
        is the dyadic-interval endpoint used by the code compressions)."""
        self._check_word(x)
        if self.alphabet.size != 2:
            raise AlphabetMismatchError("hat_mu is defined over binary alphabets")
        if is_sphere_max(x):
            return ONE
        return self.mu_star(lex_successor_in_sphere(x))

    def interval(self, x: Word) -> tuple[Fraction, Fraction]:
        """(mu_star(x), hat_mu(x)): the half-open mass interval of x."""
        return self.mu_star(x), self.hat_mu(x)

    def spec(self) -> dict:
        return {"kind": self.kind, "alphabet": "".join(self.alphabet.symbols)}


class UniformEnsemble(SphericalEnsemble):
    """Equal mass on every word of each sphere; all quantities closed-form."""

    kind = "uniform"

    def mass(self, x: Word) -> Fraction:
        self._check_word(x)
        return Fraction(1, self.alphabet.sphere_size(len(x)))

    def sphere_sum(self, n: int) -> Fraction:
        return ONE

    def mu_star(self, x: Word) -> Fraction:
        self._check_word(x)
        return Fraction(rank_in_sphere(x) - 1, self.alphabet.sphere_size(len(x)))

    def hat_mu(self, x: Word) -> Fraction:
        self._check_word(x)
        if self.alphabet.size != 2:
            raise AlphabetMismatchError("hat_mu is defined over binary alphabets")
        return Fraction(rank_in_sphere(x), self.alphabet.sphere_size(len(x)))


class TableEnsemble(SphericalEnsemble):
    """Finite table of nonzero masses, keyed by word text, valid up to n_max.

    Absent entries are zero.  The radius-0 sphere defaults to mass 1 on
    the empty word unless the table overrides it.
    """

    kind = "table"

    def __init__(
        self,
        alphabet: Alphabet,
        entries: dict[str, Fraction],
        n_max: Optional[int] = None,
        enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    ):
        super().__init__(alphabet, enumeration_cap)
        self.entries = {k: Fraction(v) for k, v in entries.items()}
        for key, value in self.entries.items():
            alphabet.word(key)  # validates symbols
            if value < 0:
                raise ValueError(f"negative mass for {key!r}")
        lengths = [len(alphabet.word(k)) for k in self.entries]
        self.n_max = n_max if n_max is not None else (max(lengths) if lengths else 0)

    def mass(self, x: Word) -> Fraction:
        self._check_word(x)
        if len(x) > self.n_max:
            raise HorizonError(f"table ensemble is only defined up to n={self.n_max}")
        if len(x) == 0 and x.text() not in self.entries:
            return ONE
        return self.entries.get(x.text(), ZERO)

    def validate(self, n_max: Optional[int] = None) -> None:
        """Check that every sphere up to n_max sums to exactly 1."""
        top = self.n_max if n_max is None else n_max
        for n in range(top + 1):
            total = self.sphere_sum(n)
            if total != 1:
                raise ValueError(f"sphere {n} sums to {total}, not 1")

    def spec(self) -> dict:
        return {
            "kind": "table",
            "alphabet": "".join(self.alphabet.symbols),
            "entries": {k: fraction_str(v) for k, v in sorted(self.entries.items())},
        }


class DBHNuEnsemble(SphericalEnsemble):
    """The bounded-halting input ensemble over the binary alphabet.

    A word 1^m 0 w gets mass 1/(n * 2^|w|) where n is the whole word's
    length; the empty word gets 1; the all-ones words get 0.  Each
    leading-ones count m contributes exactly 1/n to sphere n, so spheres
    sum to one by telescoping.
    """

    kind = "dbh_nu"

    def __init__(self, enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        from .words import BINARY

        super().__init__(BINARY, enumeration_cap)

    def mass(self, x: Word) -> Fraction:
        self._check_word(x)
        text = x.text()
        if text == "":
            return ONE
        zero_at = text.find("0")
        if zero_at < 0:
            return ZERO
        w_len = len(text) - zero_at - 1
        return Fraction(1, len(text) * 2**w_len)

    def spec(self) -> dict:
        return {"kind": "dbh_nu"}


class TransferredEnsemble(SphericalEnsemble):
    """Pushforward of a base ensemble along a size-invariant map.

    Mass of a target word y: the total base mass of f^-1(y) when |y| is
    an achieved image size, and |target|^-|y| otherwise.  Preimages are
    found by enumerating the unique source sphere whose image size is
    |y| (sizes are strictly increasing, so at most one exists).
    """

    kind = "transferred"

    def __init__(self, reduction, base: SphericalEnsemble,
                 enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        if reduction.size_growth is None:
            raise SizeInvarianceError(
                f"{reduction.name}: no size-growth declared; transfer needs a "
                "size-invariant map"
            )
        super().__init__(reduction.target, enumeration_cap)
        self.reduction = reduction
        self.base = base
        self._images: dict[int, dict[tuple, Fraction]] = {}

    def achieved_source_radius(self, m: int) -> Optional[int]:
        """The k with image size exactly m, if any."""
        growth = self.reduction.size_growth
        k = 0
        while True:
            s = growth(k)
            if s == m:
                return k
            if s > m:
                return None
            k += 1
            if k > m + 1:  # strictly increasing growth cannot stall this long
                return None

    def _image_masses(self, m: int) -> dict[tuple, Fraction]:
        if m not in self._images:
            k = self.achieved_source_radius(m)
            acc: dict[tuple, Fraction] = {}
            if k is not None:
                self.base._check_horizon(k)
                for x in self.base.alphabet.sphere(k):
                    y = self.reduction.apply(x)
                    if len(y) != m:
                        raise SizeInvarianceError(
                            f"{self.reduction.name}: |f({x.text()})| = {len(y)}, "
                            f"expected {m}; map is not size-invariant"
                        )
                    acc[y.letters] = acc.get(y.letters, ZERO) + self.base.mass(x)
            self._images[m] = acc
        return self._images[m]

    def mass(self, y: Word) -> Fraction:
        self._check_word(y)
        m = len(y)
        if self.achieved_source_radius(m) is None:
            return Fraction(1, self.alphabet.sphere_size(m))
        return self._image_masses(m).get(y.letters, ZERO)

    def spec(self) -> dict:
        return {
            "kind": "transferred",
            "reduction": getattr(self.reduction, "name", "?"),
            "base": self.base.spec(),
        }


class InducedEnsemble(SphericalEnsemble):
    """A base ensemble conditioned on a decidable subset, sphere by sphere.

    On spheres where the subset carries nonzero base mass the measure is
    the conditional one; on spheres where it carries none the base
    measure is kept unchanged.  The per-sphere subset mass may be
    supplied in closed form; otherwise it is computed by enumeration and
    cached.
    """

    kind = "induced"

    def __init__(
        self,
        base: SphericalEnsemble,
        subset: Callable[[Word], bool],
        label: str = "S",
        sphere_mass: Optional[Callable[[int], Fraction]] = None,
        enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    ):
        super().__init__(base.alphabet, enumeration_cap)
        self.base = base
        self.subset = subset
        self.label = label
        self.closed_form = sphere_mass
        self._denominators: dict[int, Fraction] = {}

    def subset_sphere_mass(self, n: int) -> Fraction:
        """Base mass of the subset inside the radius-n sphere."""
        if n not in self._denominators:
            if self.closed_form is not None:
                self._denominators[n] = Fraction(self.closed_form(n))
            else:
                self._check_horizon(n)
                self._denominators[n] = sum(
                    (self.base.mass(x) for x in self.alphabet.sphere(n) if self.subset(x)),
                    ZERO,
                )
        return self._denominators[n]

    def mass(self, x: Word) -> Fraction:
        self._check_word(x)
        denom = self.subset_sphere_mass(len(x))
        if denom == 0:
            return self.base.mass(x)
        numerator = self.base.mass(x) if self.subset(x) else ZERO
        return numerator / denom

    def spec(self) -> dict:
        return {"kind": "induced", "base": self.base.spec(), "subset": self.label}


def transfer(reduction, mu: SphericalEnsemble) -> TransferredEnsemble:
    """The pushforward ensemble of mu along a size-invariant reduction."""
    return TransferredEnsemble(reduction, mu)


def induce(
    mu: SphericalEnsemble,
    subset: Callable[[Word], bool],
    label: str = "S",
    sphere_mass: Optional[Callable[[int], Fraction]] = None,
) -> InducedEnsemble:
    """The subset-conditioned ensemble of mu."""
    return InducedEnsemble(mu, subset, label=label, sphere_mass=sphere_mass)


def verify_transfer(reduction, mu: SphericalEnsemble, nu: SphericalEnsemble,
                    n_max: int) -> CheckReport:
    """Recompute the transfer equation by enumeration on every target word
    up to n_max and compare with nu exactly."""
    report = CheckReport("transfer", n_max)
    target = nu.alphabet
    for m in range(n_max + 1):
        k = _achieved_radius(reduction, m)
        expected: dict[tuple, Fraction] = {}
        if k is not None:
            for x in mu.alphabet.sphere(k):
                y = reduction.apply(x)
                if len(y) != m:
                    report.add(x.text(), m, len(y), "image size differs inside sphere")
                    continue
                expected[y.letters] = expected.get(y.letters, ZERO) + mu.mass(x)
        filler = Fraction(1, target.sphere_size(m))
        for y in target.sphere(m):
            want = expected.get(y.letters, ZERO) if k is not None else filler
            got = nu.mass(y)
            if got != want:
                report.add(y.text(), want, got)
    return report


def _achieved_radius(reduction, m: int) -> Optional[int]:
    growth = reduction.size_growth
    if growth is None:
        return None
    k = 0
    while True:
        s = growth(k)
        if s == m:
            return k
        if s > m or k > m + 1:
            return None
        k += 1


def verify_induced(
    mu: SphericalEnsemble,
    subset: Callable[[Word], bool],
    mu_s: SphericalEnsemble,
    n_max: int,
) -> CheckReport:
    """Recompute the subset-conditioning equation by enumeration on every
    word up to n_max and compare with mu_s exactly."""
    report = CheckReport("induced", n_max)
    for n in range(n_max + 1):
        denom = sum((mu.mass(x) for x in mu.alphabet.sphere(n) if subset(x)), ZERO)
        for x in mu.alphabet.sphere(n):
            if denom == 0:
                want = mu.mass(x)
            else:
                want = (mu.mass(x) if subset(x) else ZERO) / denom
            got = mu_s.mass(x)
            if got != want:
                report.add(x.text(), want, got)
    return report


def ensemble_from_spec(spec: dict) -> SphericalEnsemble:
    """Build an ensemble from its JSON description.

    {"kind": "uniform", "alphabet": "01"} | {"kind": "dbh_nu"} |
    {"kind": "table", "alphabet": "01", "entries": {"00": "1/2", ...}} |
    {"kind": "transferred", "reduction": {...}, "base": {...}} |
    {"kind": "induced", "base": {...}, "subset": {...}}
    """
    kind = spec["kind"]
    if kind == "uniform":
        return UniformEnsemble(Alphabet(tuple(spec["alphabet"])))
    if kind == "dbh_nu":
        return DBHNuEnsemble()
    if kind == "table":
        alphabet = Alphabet(tuple(spec.get("alphabet", "01")))
        entries = {k: parse_fraction(v) for k, v in spec["entries"].items()}
        return TableEnsemble(alphabet, entries, n_max=spec.get("n_max"))
    if kind == "transferred":
        from .reductions import reduction_from_spec

        base = ensemble_from_spec(spec["base"])
        return TransferredEnsemble(reduction_from_spec(spec["reduction"]), base)
    if kind == "induced":
        from .bhp import subset_from_spec

        base = ensemble_from_spec(spec["base"])
        subset, label, closed = subset_from_spec(spec["subset"], base)
        return InducedEnsemble(base, subset, label=label, sphere_mass=closed)
    raise ValueError(f"unknown ensemble kind {kind!r}")
