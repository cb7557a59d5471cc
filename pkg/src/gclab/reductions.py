"""Word-map reductions between distributional problems.

A reduction here is a total word map with declared metadata: a
size-growth function when the map is size-invariant (image length
depends only on input length and is strictly increasing in it), a
declared polynomial time bound standing in for the map's cost, and an
optional density polynomial for measure-loss claims.

Two verified flavours:

* change-of-size: size-invariant, and the target ensemble is exactly the
  transfer of the source ensemble along the map;
* change-of-measure: size-preserving, and pointwise the image keeps at
  least a 1/d(|x|) fraction of the source mass.

``to_binary`` rebuilds any finite-alphabet problem over the binary
alphabet rank-preservingly with linear size growth.  The homomorphism
0 -> 00, 1 -> 1 is kept in the corpus as a deliberate failing fixture:
image sizes differ inside a sphere, so it admits no size growth and
transfers nothing useful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .genericity import Polynomial, exceeds_bound
from .machine import Machine
from .measure import (
    CheckReport,
    SphericalEnsemble,
    UniformEnsemble,
    ZERO,
    transfer,
    verify_transfer,
)
from .words import (
    Alphabet,
    AlphabetMismatchError,
    BINARY,
    Word,
    rank_in_sphere,
    unrank,
)

ReductionCheckReport = CheckReport


@dataclass(frozen=True)
class Reduction:
    """A total word map with declared size/time/density metadata.

    ``size_growth`` is None when the map is not size-invariant.
    ``size_growth_poly`` carries the closed form when it happens to be a
    polynomial.  ``time_bound`` is a declared stand-in for the map's
    running time; reductions are host functions, not tape machines.
    """

    name: str
    source: Alphabet
    target: Alphabet
    func: Callable[[Word], Word]
    size_growth: Optional[Callable[[int], int]] = None
    size_growth_poly: Optional[Polynomial] = None
    size_growth_form: str = ""
    time_bound: Optional[Polynomial] = None
    density_poly: Optional[Polynomial] = None
    kind: str = "plain"

    def apply(self, x: Word) -> Word:
        if x.alphabet != self.source:
            raise AlphabetMismatchError(f"{self.name}: input over wrong alphabet")
        y = self.func(x)
        if y.alphabet != self.target:
            raise AlphabetMismatchError(f"{self.name}: image over wrong alphabet")
        return y

    def time_at(self, n: int) -> int:
        return self.time_bound(n) if self.time_bound is not None else 0


@dataclass(frozen=True)
class DistributionalProblem:
    """A decision problem bundled with its spherical ensemble."""

    name: str
    alphabet: Alphabet
    positive: Callable[[Word], bool]
    measure: SphericalEnsemble


def identity_reduction(alphabet: Alphabet) -> Reduction:
    return Reduction(
        name="identity",
        source=alphabet,
        target=alphabet,
        func=lambda x: x,
        size_growth=lambda n: n,
        size_growth_poly=Polynomial((0, 1)),
        size_growth_form="n",
        time_bound=Polynomial((0, 1)),
        density_poly=Polynomial((1,)),
        kind="CM",
    )


def example41_reduction() -> Reduction:
    """The monoid homomorphism 0 -> 00, 1 -> 1 on binary words.

    Deliberately not size-invariant: inside one sphere the image length
    ranges from |x| (all ones) to 2|x| (all zeros).
    """

    def apply(x: Word) -> Word:
        return BINARY.word("".join("00" if s == "0" else "1" for s in x.letters))

    return Reduction(
        name="double-zero-homomorphism",
        source=BINARY,
        target=BINARY,
        func=apply,
        size_growth=None,
        time_bound=Polynomial((0, 2)),
        kind="plain",
    )


def example41_image_member(y: Word) -> bool:
    """Membership in the image {00, 1}*: can y be tiled by blocks 00 and 1?"""
    text = y.text()
    i = 0
    while i < len(text):
        if text[i] == "1":
            i += 1
        elif text.startswith("00", i):
            i += 2
        else:
            return False
    return True


def verify_size_invariance(f: Reduction, n_max: int) -> CheckReport:
    """Check |x1| < |x2| <=> |f(x1)| < |f(x2)| on all spheres up to n_max.

    Equal-length inputs must map to equal-length images (per-sphere
    constancy is forced by the equivalence), and per-sphere image sizes
    must be strictly increasing across spheres.  When a size growth is
    declared it must match the observed sizes.
    """
    report = CheckReport("size-invariance", n_max)
    prev_max: Optional[int] = None
    for k in range(n_max + 1):
        sizes = sorted({len(f.apply(x)) for x in f.source.sphere(k)})
        if len(sizes) > 1:
            report.add(
                f"sphere {k}",
                "one image size",
                f"sizes {sizes[0]}..{sizes[-1]}",
                "image size varies inside a sphere",
            )
        if prev_max is not None and sizes[0] <= prev_max:
            report.add(
                f"sphere {k}",
                f"> {prev_max}",
                str(sizes[0]),
                "image sizes not strictly increasing across spheres",
            )
        if f.size_growth is not None and len(sizes) == 1 and sizes[0] != f.size_growth(k):
            report.add(
                f"sphere {k}",
                str(f.size_growth(k)),
                str(sizes[0]),
                "declared size growth disagrees with the map",
            )
        prev_max = sizes[-1]
    return report


def verify_cs(
    f: Reduction, mu: SphericalEnsemble, nu: SphericalEnsemble, n_max: int
) -> CheckReport:
    """Change-of-size check: size-invariance on source spheres up to n_max
    plus exact equality of nu with the transfer of mu on all target
    spheres up to the image of n_max."""
    report = verify_size_invariance(f, n_max)
    report.check = "change-of-size"
    if f.size_growth is None:
        report.add("size growth", "declared", "missing", "cannot transfer without one")
        return report
    target_horizon = f.size_growth(n_max)
    inner = verify_transfer(f, mu, nu, target_horizon)
    report.violations.extend(inner.violations)
    report.details["target_horizon"] = target_horizon
    return report


def verify_cm(
    f: Reduction,
    mu: SphericalEnsemble,
    nu: SphericalEnsemble,
    d: Polynomial,
    n_max: int,
) -> CheckReport:
    """Change-of-measure check: the map preserves length and the image
    keeps at least mass/d(|x|) of every source point, exactly."""
    report = CheckReport("change-of-measure", n_max)
    for k in range(n_max + 1):
        dk = d(k)
        for x in mu.alphabet.sphere(k):
            y = f.apply(x)
            if len(y) != k:
                report.add(x.text(), f"|f(x)| = {k}", str(len(y)), "not size-preserving")
                continue
            lhs = nu.mass(y)
            rhs = mu.mass(x) / dk if dk else None
            if rhs is None:
                report.add(x.text(), "d(k) > 0", "0", "density polynomial vanishes")
            elif lhs < rhs:
                report.add(x.text(), f">= {rhs}", str(lhs))
    return report


def compose(f: Reduction, g: Reduction) -> Reduction:
    """g after f, with composed size growth and summed time bound."""
    if f.target != g.source:
        raise AlphabetMismatchError("compose: target of f differs from source of g")
    growth = None
    growth_poly = None
    if f.size_growth is not None and g.size_growth is not None:
        fg, gg = f.size_growth, g.size_growth
        growth = lambda n: gg(fg(n))  # noqa: E731
        if f.size_growth_poly is not None and g.size_growth_poly is not None:
            growth_poly = g.size_growth_poly.compose(f.size_growth_poly)
    time_bound = None
    if f.time_bound is not None and g.time_bound is not None and f.size_growth_poly is not None:
        time_bound = f.time_bound + g.time_bound.compose(f.size_growth_poly)
    return Reduction(
        name=f"{g.name}∘{f.name}",
        source=f.source,
        target=g.target,
        func=lambda x: g.apply(f.apply(x)),
        size_growth=growth,
        size_growth_poly=growth_poly,
        size_growth_form=f"{g.size_growth_form}∘{f.size_growth_form}",
        time_bound=time_bound,
        kind="composite",
    )


def _bits_needed(count: int) -> int:
    """Smallest m with 2^m >= count (count >= 1)."""
    return (count - 1).bit_length()


def to_binary(problem: DistributionalProblem) -> tuple[Reduction, DistributionalProblem]:
    """Rebuild a problem over the binary alphabet via a change-of-size map.

    One-letter alphabets map a^k to 0^k.  Binary problems pass through
    the identity.  Larger alphabets map the rank-r word of each sphere k
    to the rank-r word of the binary sphere that is just big enough
    (ceil(k * log2 |alphabet|) bits), which is injective and
    rank-preserving.  Image membership is decided by inverting the rank;
    the image measure is the transfer of the source measure.
    """
    sigma = problem.alphabet
    size = sigma.size
    if size == 2:
        return identity_reduction(sigma), problem

    if size == 1:
        def unary_map(x: Word) -> Word:
            return BINARY.word("0" * len(x))

        f = Reduction(
            name="unary-to-binary",
            source=sigma,
            target=BINARY,
            func=unary_map,
            size_growth=lambda n: n,
            size_growth_poly=Polynomial((0, 1)),
            size_growth_form="n",
            time_bound=Polynomial((0, 1)),
            kind="CS",
        )

        def member(y: Word) -> bool:
            if any(s != "0" for s in y.letters):
                return False
            return problem.positive(sigma.word((sigma.symbols[0],) * len(y)))

    else:
        def growth(k: int) -> int:
            return _bits_needed(size**k) if k >= 1 else 0

        def rank_map(x: Word) -> Word:
            k = len(x)
            if k == 0:
                return BINARY.empty
            return unrank(BINARY, growth(k), rank_in_sphere(x))

        f = Reduction(
            name=f"rank-to-binary-{size}",
            source=sigma,
            target=BINARY,
            func=rank_map,
            size_growth=growth,
            size_growth_form=f"ceil(n*log2({size}))",
            time_bound=Polynomial((1, 2)),
            kind="CS",
        )

        def member(y: Word) -> bool:
            m = len(y)
            if m == 0:
                return problem.positive(sigma.empty)
            k = _inverse_growth(growth, m)
            if k is None:
                return False
            r = rank_in_sphere(y)
            if r > size**k:
                return False
            return problem.positive(unrank(sigma, k, r))

    nu = transfer(f, problem.measure)
    image = DistributionalProblem(
        name=f"{problem.name}@binary", alphabet=BINARY, positive=member, measure=nu
    )
    return f, image


def _inverse_growth(growth: Callable[[int], int], m: int) -> Optional[int]:
    k = 0
    while True:
        s = growth(k)
        if s == m:
            return k
        if s > m or k > m + 1:
            return None
        k += 1


def check_control_transfer(
    machine: Machine,
    f: Reduction,
    p: Polynomial,
    mu: SphericalEnsemble,
    nu: SphericalEnsemble,
    n_max: int,
) -> CheckReport:
    """Per source sphere k, compare exactly

        mu_k{x : machine overruns p(S(k)) on f(x)}   (left side)
        <=  nu-mass at sphere S(k) of all overruns   (right side)

    which is the finite-horizon control-sequence transfer along a
    change-of-size reduction.  Both sides are reported per sphere.
    """
    report = CheckReport("control-transfer", n_max)
    if f.size_growth is None:
        report.add("size growth", "declared", "missing")
        return report
    per_sphere = []
    for k in range(n_max + 1):
        m = f.size_growth(k)
        bound = p(m)
        lhs = ZERO
        for x in mu.alphabet.sphere(k):
            mass = mu.mass(x)
            if mass != 0 and exceeds_bound(machine, f.apply(x), bound):
                lhs += mass
        rhs = ZERO
        for y in nu.alphabet.sphere(m):
            mass = nu.mass(y)
            if mass != 0 and exceeds_bound(machine, y, bound):
                rhs += mass
        per_sphere.append(
            {"k": k, "image_sphere": m, "left": str(lhs), "right": str(rhs)}
        )
        if lhs > rhs:
            report.add(f"sphere {k}", f"<= {rhs}", str(lhs))
    report.details["spheres"] = per_sphere
    return report


def check_control_transfer_cm(
    machine: Machine,
    f: Reduction,
    p: Polynomial,
    mu: SphericalEnsemble,
    nu: SphericalEnsemble,
    d: Polynomial,
    n_max: int,
) -> CheckReport:
    """Change-of-measure analogue: per sphere k,
    mu_k{x : machine overruns p(k) on f(x)} <= d(k) * (nu-control at k)."""
    report = CheckReport("control-transfer-cm", n_max)
    per_sphere = []
    for k in range(n_max + 1):
        bound = p(k)
        lhs = ZERO
        for x in mu.alphabet.sphere(k):
            mass = mu.mass(x)
            if mass != 0 and exceeds_bound(machine, f.apply(x), bound):
                lhs += mass
        control = ZERO
        for y in nu.alphabet.sphere(k):
            mass = nu.mass(y)
            if mass != 0 and exceeds_bound(machine, y, bound):
                control += mass
        rhs = control * d(k)
        per_sphere.append({"k": k, "left": str(lhs), "right": str(rhs)})
        if lhs > rhs:
            report.add(f"sphere {k}", f"<= {rhs}", str(lhs))
    report.details["spheres"] = per_sphere
    return report


def reduction_from_spec(spec: dict) -> Reduction:
    """Build a corpus reduction from its JSON description."""
    kind = spec["kind"]
    if kind == "identity":
        return identity_reduction(Alphabet(tuple(spec.get("alphabet", "01"))))
    if kind == "example41":
        return example41_reduction()
    if kind == "bin_alph":
        sigma = Alphabet(tuple(spec["sigma"]))
        problem = DistributionalProblem(
            name="anonymous",
            alphabet=sigma,
            positive=lambda x: True,
            measure=UniformEnsemble(sigma),
        )
        f, _ = to_binary(problem)
        return f
    raise ValueError(f"unknown reduction kind {kind!r}")
