"""The distributional bounded halting problem and its reduction chain.

Instances are binary words.  A word containing a zero is the code
1^m 0 w of the pair (n, w) with n the whole word's length; the empty
word and the all-ones words are valid words but not codes.  The input
ensemble gives a code mass 1/(n * 2^|w|), the empty word mass 1, and
all-ones words mass 0.

On top of the codec this module builds, with exact arithmetic
throughout:

* longevity guards and the code family C(g) = {code of (g(|w|), w)},
  whose induced ensemble has the closed-form sphere mass 1/n on achieved
  spheres;
* the self-delimiting interleaved numerals used to embed lengths and
  machine encodings into code payloads;
* the dyadic compression x -> x'' that equalizes measure: high-mass
  inputs are replaced by a short dyadic address of their cumulative-mass
  interval, low-mass inputs are shipped verbatim;
* the reduction of an arbitrary binary distributional problem to the
  bounded halting problem of a purpose-built virtual machine, together
  with the exact measure-decrease verifier;
* an interpreter-backed universal machine and the reduction of any
  machine's bounded halting problem to the universal one;
* the end-to-end pipeline composing the two reductions with the
  interleaved measure restrictions, verifying membership preservation
  and every measure inequality per stage.

Step accounting of the virtual machines is declared, not hidden: the
protocol machines charge n steps for decoding a claimed length n and
then the simulated decider's own steps; the universal machine has
slowdown exactly 1 on plain inputs.  Horizon-guarded enumeration keeps
every check exact and finite.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from .machine import (
    Configuration,
    Machine,
    RunResult,
    TuringMachine,
    VirtualMachine,
    _search_halting,
)
from .measure import (
    CheckReport,
    DBHNuEnsemble,
    HorizonError,
    InducedEnsemble,
    SphericalEnsemble,
    UniformEnsemble,
    fraction_str,
    induce,
)
from .genericity import Polynomial, parse_polynomial
from .reductions import DistributionalProblem, Reduction
from .words import BINARY, Word, unrank

ZERO = Fraction(0)
ONE = Fraction(1)

#: Shared bounded-halting input ensemble (caches its sphere tables).
NU = DBHNuEnsemble()


class NotACodeError(ValueError):
    """The word is the empty word or all ones: not an instance code."""


class GuardError(ValueError):
    """A longevity guard violates its invariants or is too small."""


class MachineDecodeError(ValueError):
    """A word does not decode to a registered or table-backed machine."""


# --- instance codec ---------------------------------------------------------


def encode_instance(n: int, w: Word) -> Word:
    """The code 1^(n-|w|-1) 0 w of the pair (n, w); its length is n."""
    if w.alphabet != BINARY:
        raise ValueError("instances are binary words")
    m = n - len(w) - 1
    if m < 0:
        raise ValueError(f"n={n} is too small to wrap a word of length {len(w)}")
    return BINARY.word("1" * m + "0" + w.text())


def decode_instance(u: Word) -> tuple[int, Word]:
    """Split at the first zero: the code 1^m 0 w denotes (|u|, w)."""
    text = u.text()
    zero_at = text.find("0")
    if zero_at < 0:
        raise NotACodeError(f"{text!r} contains no zero")
    return len(text), BINARY.word(text[zero_at + 1 :])


def is_code(u: Word) -> bool:
    return "0" in u.text()


def nu_mass(u: Word) -> Fraction:
    """Mass of u under the bounded-halting input ensemble."""
    return NU.mass(u)


def bh_member(machine: Machine, u: Word) -> bool:
    """Does the machine halt on the payload within the code's length?

    Non-codes are never members.
    """
    if not is_code(u):
        return False
    n, w = decode_instance(u)
    return _inner_min_steps(machine, w, n) is not None


def _inner_min_steps(machine: Machine, w: Word, budget: int) -> Optional[int]:
    found = _run_search(machine, w, budget)
    return None if found is None else found[0]


def _run_search(
    machine: Machine, w: Word, budget: int
) -> Optional[tuple[int, Optional[Configuration]]]:
    """Minimal halting steps and final configuration within budget."""
    if budget < 0:
        return None
    if isinstance(machine, VirtualMachine):
        result = machine.evaluator(w, budget)
        if result.is_halted and result.steps is not None and result.steps <= budget:
            return result.steps, result.final
        return None
    return _search_halting(machine, w, budget)


# --- longevity guards and the restricted code family ------------------------

GuardLike = Union["LongevityGuard", Polynomial, Callable[[int], int]]


@dataclass(frozen=True)
class LongevityGuard:
    """A step-bound function g for restricting the halting problem.

    Invariants, checked up to ``validation_horizon``: g(n) >= n, g is
    strictly increasing, and g(0) >= 1 (so codes of every payload length
    exist).  Guards need not be polynomials; the adequate guards built
    for the reductions are maxima of a polynomial and length envelopes,
    stored as callables with a readable form string.
    """

    fn: Callable[[int], int]
    form: str = "g"
    validation_horizon: int = 64

    def __post_init__(self) -> None:
        prev = None
        for n in range(self.validation_horizon + 1):
            v = self.fn(n)
            if v < n:
                raise GuardError(f"guard violates g(n) >= n at n={n}: {v}")
            if prev is not None and v <= prev:
                raise GuardError(f"guard is not strictly increasing at n={n}")
            prev = v
        if self.fn(0) < 1:
            raise GuardError("guard must satisfy g(0) >= 1")

    def __call__(self, n: int) -> int:
        return self.fn(n)


def as_guard(g: GuardLike, form: str = "") -> LongevityGuard:
    if isinstance(g, LongevityGuard):
        return g
    if isinstance(g, Polynomial):
        return LongevityGuard(g, form or str(g))
    return LongevityGuard(g, form or "g")


def guard_inverse(g: GuardLike, n: int) -> Optional[int]:
    """The k with g(k) = n, if any; guards are strictly increasing."""
    fn = g if callable(g) else g.fn
    k = 0
    while k <= n:
        v = fn(k)
        if v == n:
            return k
        if v > n:
            return None
        k += 1
    return None


def c_of_g(g: GuardLike) -> Callable[[Word], bool]:
    """Membership test for C(g): codes whose length is the guard value of
    their payload length."""
    guard = as_guard(g)

    def member(u: Word) -> bool:
        if not is_code(u):
            return False
        n, w = decode_instance(u)
        return guard_inverse(guard, n) == len(w)

    return member


def cg_sphere_mass(g: GuardLike) -> Callable[[int], Fraction]:
    """Closed form for the input-ensemble mass of C(g) in sphere n:
    1/n when n is an achieved guard value, else 0."""
    guard = as_guard(g)

    def mass(n: int) -> Fraction:
        if n >= 1 and guard_inverse(guard, n) is not None:
            return Fraction(1, n)
        return ZERO

    return mass


def nu_g(g: GuardLike) -> InducedEnsemble:
    """The input ensemble conditioned on C(g), with the closed-form
    denominator registered."""
    guard = as_guard(g)
    return induce(
        NU,
        c_of_g(guard),
        label=f"C({guard.form})",
        sphere_mass=cg_sphere_mass(guard),
    )


@dataclass(frozen=True)
class DBHProblem:
    """A machine together with the (possibly restricted) input ensemble."""

    machine: Machine
    measure: SphericalEnsemble
    guard: Optional[LongevityGuard] = None

    def positive(self, u: Word) -> bool:
        return bh_member(self.machine, u)

    def as_problem(self) -> DistributionalProblem:
        name = getattr(self.machine, "name", "machine") or "machine"
        return DistributionalProblem(
            name=f"bounded-halting[{name}]",
            alphabet=BINARY,
            positive=self.positive,
            measure=self.measure,
        )


# --- interleaved numerals ----------------------------------------------------


def numeral(n: int) -> Word:
    """Self-delimiting numeral: the binary expansion of n with a 1 marker
    in front of every bit.  Zero is represented as "10" (a single marked
    zero bit), the one value whose leading bit is allowed to be 0."""
    if n < 0:
        raise ValueError("numerals encode nonnegative integers")
    bits = bin(n)[2:] if n > 0 else "0"
    return BINARY.word("".join("1" + b for b in bits))


def decode_numeral(v: Word) -> int:
    """Invert ``numeral``; rejects malformed interleavings."""
    parsed = scan_numeral(v.text(), 0)
    if parsed is None or parsed[1] != len(v.text()):
        raise ValueError(f"{v.text()!r} is not a numeral")
    return parsed[0]


def scan_numeral(text: str, start: int) -> Optional[tuple[int, int]]:
    """Parse a numeral at ``start``; return (value, end index) or None.

    A numeral is a maximal run of marker pairs "1b"; it ends where the
    next character is a field separator "0" or the string ends.
    """
    bits = []
    j = start
    while j < len(text) and text[j] == "1":
        if j + 1 >= len(text):
            return None
        bits.append(text[j + 1])
        j += 2
    if not bits:
        return None
    if bits[0] == "0" and len(bits) > 1:
        return None  # leading bit of a nonzero numeral must be 1
    return int("".join(bits), 2), j


# --- dyadic interval compression --------------------------------------------


def xprime_value(text: str) -> Fraction:
    """The dyadic value named by a candidate string x0 x1 ... xk:
    x0 . x1 ... xk 1 in binary, i.e. (2 * int(text, 2) + 1) / 2^len."""
    if not text or any(c not in "01" for c in text):
        raise ValueError("candidate must be a nonempty binary string")
    return Fraction(2 * int(text, 2) + 1, 2 ** len(text))


def _binary_digit(q: Fraction, i: int) -> int:
    """The i-th digit (i >= 1) of the terminating binary expansion of
    q in [0, 1)."""
    return (q.numerator * (1 << i) // q.denominator) & 1


def x_prime(mu: SphericalEnsemble, x: Word, method: str = "prefix") -> Word:
    """The shortest (shortlex-least) binary string whose dyadic value lands
    strictly above the cumulative mass of x and at most at the cumulative
    mass of its successor.

    Needs a nonempty mass interval, i.e. mass(x) > 0.  When
    mass(x) > 2^-|x| (the only case the compression uses) the result is
    guaranteed no longer than x; at mass exactly 2^-|x| it can take one
    extra symbol.

    method "prefix" walks the common binary prefix of the two interval
    endpoints; "scan" brute-forces candidates in shortlex order; "both"
    runs the two and insists they agree.
    """
    lo, hi = mu.interval(x)
    if mu.mass(x) == 0:
        raise ValueError("x_prime needs mass(x) > 0 (nonempty interval)")
    if method == "scan":
        return _x_prime_scan(lo, hi, len(x))
    if method == "prefix":
        return _x_prime_prefix(lo, hi, len(x))
    if method == "both":
        a = _x_prime_prefix(lo, hi, len(x))
        b = _x_prime_scan(lo, hi, len(x))
        if a != b:
            raise AssertionError(
                f"x_prime implementations disagree on {x.text()!r}: "
                f"{a.text()!r} vs {b.text()!r}"
            )
        return a
    raise ValueError(f"unknown method {method!r}")


def _x_prime_scan(lo: Fraction, hi: Fraction, n: int) -> Word:
    for length in range(1, n + 2):
        for bits in itertools.product("01", repeat=length):
            text = "".join(bits)
            if lo < xprime_value(text) <= hi:
                return BINARY.word(text)
    raise AssertionError("no dyadic address found; interval bookkeeping is broken")


def _x_prime_prefix(lo: Fraction, hi: Fraction, n: int) -> Word:
    """The construction from the interval endpoints' binary expansions:
    they agree on a (possibly empty) prefix of fractional digits and then
    the lower endpoint shows 0 where the upper shows 1; the address is
    "0" followed by the common prefix.  The upper endpoint 1 is read as
    0.111...; terminating expansions are used otherwise."""
    prefix = []
    i = 1
    while i <= n + 2:
        da = _binary_digit(lo, i)
        db = 1 if hi == 1 else _binary_digit(hi, i)
        if da != db:
            break
        prefix.append(str(da))
        i += 1
    else:
        raise AssertionError("interval endpoints agree too long; mass bound broken")
    text = "0" + "".join(prefix)
    value = xprime_value(text)
    if not (lo < value <= hi):
        raise AssertionError("prefix construction produced a bad dyadic address")
    return BINARY.word(text)


def x_double_prime(mu: SphericalEnsemble, x: Word) -> Word:
    """Verbatim shipping for low-mass inputs, dyadic address for high-mass
    ones: 0x if mass(x) <= 2^-|x|, else 1 x'.  Always at most |x|+1 long,
    and always mass(x) <= 4 * 2^-|x''|."""
    if mu.mass(x) <= Fraction(1, 2 ** len(x)):
        return BINARY.word("0" + x.text())
    return BINARY.word("1" + x_prime(mu, x).text())


def invert_mu_star(mu: SphericalEnsemble, n: int, t: Fraction) -> Word:
    """The lexicographically least x in sphere n with
    mu_star(x) < t <= hat_mu(x); total for t in (0, 1]."""
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    if isinstance(mu, UniformEnsemble):
        size = mu.alphabet.sphere_size(n)
        rank = -((-t.numerator * size) // t.denominator)  # ceil(t * size)
        return unrank(mu.alphabet, n, rank)
    ws, _, cum = mu._sphere_table(n)
    lo, hi = 0, len(cum) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] >= t:
            hi = mid
        else:
            lo = mid + 1
    return ws[lo]


# --- the decoding-protocol machines ------------------------------------------

InnerSearch = Callable[[Word, int], Optional[tuple[int, Optional[Configuration]]]]


def _parse_protocol_payload(text: str) -> Optional[tuple[int, str, str]]:
    """Parse numeral 0 b w; returns (decoded length, branch bit, rest)."""
    head = scan_numeral(text, 0)
    if head is None:
        return None
    n, i = head
    if i >= len(text) or text[i] != "0" or i + 1 >= len(text):
        return None
    return n, text[i + 1], text[i + 2 :]


def _protocol_run(
    mu: SphericalEnsemble,
    inner: InnerSearch,
    text: str,
    budget: int,
) -> RunResult:
    """The decoding protocol shared by the purpose-built machines.

    Declared accounting: decoding a claimed length n costs n steps, the
    simulated decider then contributes its own steps.  Inputs that do
    not parse, fail a mass test, or fail the round-trip check never
    halt.  Branch 0 ships the candidate input verbatim; branch 1 carries
    a dyadic address which is resolved against the cumulative masses and
    must round-trip through the address construction.
    """
    parsed = _parse_protocol_payload(text)
    if parsed is None:
        return RunResult.budget_exhausted(budget)
    n, b, w = parsed
    if budget < n:
        return RunResult.budget_exhausted(budget)
    inner_budget = budget - n
    if b == "0":
        candidate = BINARY.word(w)
        # literal mass test: mass of w in the claimed sphere n (zero when
        # the lengths disagree) against the threshold for w's own length
        mass = mu.mass(candidate) if len(candidate) == n else ZERO
        if mass > Fraction(1, 2 ** len(candidate)):
            return RunResult.budget_exhausted(budget)
    else:
        if not w:
            return RunResult.budget_exhausted(budget)
        value = xprime_value(w)
        if not 0 < value <= 1:
            return RunResult.budget_exhausted(budget)
        if n > mu.enumeration_cap:
            raise HorizonError(
                f"protocol machine cannot search sphere {n} at desk scale"
            )
        candidate = invert_mu_star(mu, n, value)
        if mu.mass(candidate) <= Fraction(1, 2**n):
            return RunResult.budget_exhausted(budget)
        if x_prime(mu, candidate).text() != w:
            return RunResult.budget_exhausted(budget)
    found = inner(candidate, inner_budget)
    if found is None:
        return RunResult.budget_exhausted(budget)
    steps, config = found
    return RunResult("halted", steps=n + steps, final=config)


# --- reduction to the bounded halting problem --------------------------------


@dataclass(frozen=True)
class Red2BH:
    """Output of the first reduction stage: the map, the purpose-built
    machine whose bounded halting problem receives the problem, and the
    adequate guard actually used (it also is the map's size growth)."""

    reduction: Reduction
    machine: VirtualMachine
    guard: LongevityGuard

    @property
    def target(self) -> DBHProblem:
        return DBHProblem(self.machine, nu_g(self.guard), self.guard)


def adequate_guard(
    g_user: GuardLike,
    decider_guard: Optional[Callable[[int], int]] = None,
    extra_payload: int = 0,
    form: str = "",
) -> LongevityGuard:
    """Raise a user guard until codes fit and simulations finish in budget.

    The result is the pointwise maximum of the user guard, the payload
    envelope n + 2*bitlen(n) + 6 + extra_payload (room for the numeral,
    separators, and the compressed input, plus the extra embedded payload
    such as a machine encoding), and n + decider_guard(n) (decode
    accounting plus the simulated decider's own longevity).  The user
    guard must itself be a valid guard; corrupt ones fail construction.
    """
    base = as_guard(g_user, form or "g").fn

    def fn(n: int) -> int:
        best = base(n)
        envelope = n + 2 * max(n.bit_length(), 1) + 6 + extra_payload
        if envelope > best:
            best = envelope
        if decider_guard is not None:
            need = n + decider_guard(n)
            if need > best:
                best = need
        return best

    label = form or f"adequate({getattr(g_user, 'form', 'g')})"
    return LongevityGuard(fn, label)


def red2bh_map(mu: SphericalEnsemble, guard: LongevityGuard) -> Reduction:
    """The instance map x -> 1^pad 0 numeral(|x|) 0 x''.

    Images have length exactly guard(|x|), so the guard is the size
    growth; the construction errors out if the guard leaves no room for
    the payload (cannot happen for guards built by ``adequate_guard``).
    """

    def apply(x: Word) -> Word:
        n = len(x)
        body = "0" + numeral(n).text() + "0" + x_double_prime(mu, x).text()
        pad = guard(n) - len(body)
        if pad < 0:
            raise GuardError(
                f"guard {guard.form} too small for a length-{n} payload "
                f"({guard(n)} < {len(body)})"
            )
        return BINARY.word("1" * pad + body)

    return Reduction(
        name=f"to-bounded-halting[{guard.form}]",
        source=BINARY,
        target=BINARY,
        func=apply,
        size_growth=guard.fn,
        size_growth_form=guard.form,
        time_bound=None,
        kind="red2bh",
    )


def red2bh(
    problem: DistributionalProblem,
    decider: Machine,
    g_user: GuardLike,
    decider_guard: Callable[[int], int],
) -> Red2BH:
    """Reduce a binary distributional problem to the bounded halting
    problem of a purpose-built protocol machine.

    ``decider`` must accept exactly the positive words by having a
    halting computation (membership by halting); ``decider_guard`` must
    bound the steps of all its halting computations.  The machine
    decodes the payload, recovers the original input (inverting the
    cumulative masses on the dyadic-address branch), rejects payloads
    whose mass tests or round-trip checks fail by never halting, and
    otherwise simulates the decider.
    """
    if problem.alphabet != BINARY:
        raise ValueError("reduce to a binary alphabet first")
    guard = adequate_guard(g_user, decider_guard)
    mu = problem.measure

    def inner(x: Word, cap: int) -> Optional[tuple[int, Optional[Configuration]]]:
        return _run_search(decider, x, cap)

    def evaluator(v: Word, budget: int) -> RunResult:
        return _protocol_run(mu, inner, v.text(), budget)

    machine = VirtualMachine(
        name=f"bh-protocol[{problem.name}]",
        evaluator=evaluator,
        alphabet=BINARY,
        declared_guard=lambda n: n + decider_guard(n),
        definition={
            "protocol": "bounded-halting-decider",
            "problem": problem.name,
            "measure": mu.spec(),
            "guard": guard.form,
        },
    )
    return Red2BH(reduction=red2bh_map(mu, guard), machine=machine, guard=guard)


def verify_membership(
    problem: DistributionalProblem,
    f: Reduction,
    target_positive: Callable[[Word], bool],
    n_max: int,
) -> CheckReport:
    """Exhaustive two-directional membership preservation up to n_max."""
    report = CheckReport("membership-preservation", n_max)
    for n in range(n_max + 1):
        for x in problem.alphabet.sphere(n):
            source = problem.positive(x)
            image = target_positive(f.apply(x))
            if source != image:
                report.add(x.text(), str(source), str(image))
    return report


def verify_measure_decrease(
    mu: SphericalEnsemble, guard: LongevityGuard, n_max: int
) -> CheckReport:
    """Exact check of the measure loss of the bounded-halting map.

    Headline inequality, for every 1 <= |x| <= n_max:

        target_mass(f(x)) >= mass(x) / (16 |x|^2 g(|x|))

    The report carries per-branch data: which compression branch each
    input took, the exact ratio target/bound, and the sharper per-branch
    factors (8 for the verbatim branch, 16 for the address branch).  The
    length-0 sphere is outside the inequality's domain (its bound
    degenerates) and is recorded as skipped.
    """
    f = red2bh_map(mu, guard)
    report = CheckReport("measure-decrease", n_max)
    branch1_f8: list[dict] = []
    branch2_f16: list[dict] = []
    min_ratio: Optional[Fraction] = None
    for n in range(1, n_max + 1):
        g_n = guard(n)
        threshold = Fraction(1, 2**n)
        for x in mu.alphabet.sphere(n):
            mass = mu.mass(x)
            y = f.apply(x)
            got = NU.mass(y)
            bound = mass / (16 * n * n * g_n)
            if got < bound:
                report.add(x.text(), f">= {fraction_str(bound)}", fraction_str(got))
            if mass > 0:
                ratio = got / bound if bound else None
                if ratio is not None and (min_ratio is None or ratio < min_ratio):
                    min_ratio = ratio
            verbatim = mass <= threshold
            if verbatim:
                sharper = mass / (8 * n * n * g_n)
                if got < sharper:
                    branch1_f8.append(
                        {"witness": x.text(), "expected": fraction_str(sharper),
                         "actual": fraction_str(got)}
                    )
            else:
                sharper = mass / (16 * n * n * g_n)
                if got < sharper:
                    branch2_f16.append(
                        {"witness": x.text(), "expected": fraction_str(sharper),
                         "actual": fraction_str(got)}
                    )
    report.details["skipped_spheres"] = [0]
    report.details["branch1_factor8_violations"] = branch1_f8
    report.details["branch2_factor16_violations"] = branch2_f16
    if min_ratio is not None:
        report.details["min_ratio"] = fraction_str(min_ratio)
    report.details["exponent_note"] = (
        "verbatim-branch mass test uses the candidate's own length in the "
        "exponent and the claimed length for the sphere lookup"
    )
    return report


# --- machine encodings and the universal machine -----------------------------


def machine_index(machine: Machine) -> int:
    """The canonical-serialization integer of a machine description."""
    if isinstance(machine, TuringMachine):
        payload = {"table": machine.to_canonical_dict()}
    else:
        payload = {"virtual": machine.name, "definition": machine.definition}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(blob, "big")


def machine_code(machine: Machine) -> Word:
    """The interleaved-numeral encoding of the machine's canonical index.

    Bit-exact round trip for table machines; virtual machines decode via
    a registry only (their behaviour lives in host code).
    """
    return numeral(machine_index(machine))


def decode_machine(
    code: Word, registry: Optional[dict[int, Machine]] = None
) -> Machine:
    """Invert ``machine_code``; registry hits win, then table decoding."""
    index = decode_numeral(code)
    if registry is not None and index in registry:
        return registry[index]
    try:
        blob = index.to_bytes((index.bit_length() + 7) // 8, "big")
        payload = json.loads(blob.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise MachineDecodeError("not a machine encoding") from exc
    if "table" in payload:
        from .machine import load_machine

        return load_machine(payload["table"])
    raise MachineDecodeError("virtual machines decode via the registry only")


def universal_machine(registry: list[Machine]) -> VirtualMachine:
    """An interpreter-backed universal machine over the binary alphabet.

    Two input shapes, tried in order:

    * plain: machine-code 0 w -- simulate the decoded machine on w
      step-for-step.  Halting, answers and final configurations coincide
      with the simulated machine's, and the declared slowdown is exactly
      1: the step count reported equals the simulated machine's.
    * chained: numeral 0 machine-code 0 x'' -- the decoding protocol for
      the bounded halting problem of the decoded machine, with the input
      ensemble as the measure: recover the instance from x'' and run the
      bounded membership search.  Costs the decoded length in steps plus
      the simulated steps.

    Anything else (including undecodable machine fields) never halts.
    """
    index: dict[int, Machine] = {machine_index(m): m for m in registry}

    def lookup(gamma: int) -> Optional[Machine]:
        if gamma in index:
            return index[gamma]
        try:
            return decode_machine(numeral(gamma), None)
        except MachineDecodeError:
            return None

    def evaluator(v: Word, budget: int) -> RunResult:
        text = v.text()
        head = scan_numeral(text, 0)
        if head is None:
            return RunResult.budget_exhausted(budget)
        gamma, i = head
        if i < len(text) and text[i] == "0":
            machine = lookup(gamma)
            if machine is not None:
                found = _run_search(machine, BINARY.word(text[i + 1 :]), budget)
                if found is None:
                    return RunResult.budget_exhausted(budget)
                steps, config = found
                return RunResult("halted", steps=steps, final=config)
        # chained shape: numeral 0 machine-code 0 x''
        n_claimed, i = head[0], head[1]
        if i >= len(text) or text[i] != "0":
            return RunResult.budget_exhausted(budget)
        inner_head = scan_numeral(text, i + 1)
        if inner_head is None:
            return RunResult.budget_exhausted(budget)
        gamma2, j = inner_head
        machine = lookup(gamma2)
        if machine is None or j >= len(text) or text[j] != "0" or j + 1 >= len(text):
            return RunResult.budget_exhausted(budget)

        def inner(x: Word, cap: int) -> Optional[tuple[int, Optional[Configuration]]]:
            if not is_code(x):
                return None
            n_x, w_x = decode_instance(x)
            return _run_search(machine, w_x, min(n_x, cap))

        payload = numeral(n_claimed).text() + "0" + text[j + 1 :]
        return _protocol_run(NU, inner, payload, budget)

    return VirtualMachine(
        name="universal",
        evaluator=evaluator,
        alphabet=BINARY,
        definition={"protocol": "universal", "registry": sorted(index)},
    )


# --- reduction into the universal machine ------------------------------------


@dataclass(frozen=True)
class Red2BHU:
    """Second reduction stage: bounded halting of a machine into bounded
    halting of the universal machine, with the combined guard h = g * s."""

    reduction: Reduction
    h: LongevityGuard
    machine_code_text: str
    slowdown: Polynomial


def red2bhu(
    machine: Machine, g: GuardLike, slowdown: Polynomial = Polynomial((1,))
) -> Red2BHU:
    """The map x -> 1^pad 0 numeral(|x|) 0 machine-code 0 x'' with image
    length g(|x|) * s(|x|); x'' is computed against the input ensemble.

    Raises when the guard/slowdown leave no room for the payload.
    """
    guard = as_guard(g)
    code_text = machine_code(machine).text()

    def h_fn(n: int) -> int:
        return guard(n) * slowdown(n)

    h = LongevityGuard(h_fn, form=f"{guard.form}*s")

    def apply(x: Word) -> Word:
        n = len(x)
        body = (
            "0" + numeral(n).text() + "0" + code_text + "0"
            + x_double_prime(NU, x).text()
        )
        pad = h_fn(n) - len(body)
        if pad < 0:
            raise GuardError(
                f"guard/slowdown too small: image length {h_fn(n)} cannot hold "
                f"a {len(body)}-symbol payload"
            )
        return BINARY.word("1" * pad + body)

    reduction = Reduction(
        name=f"to-universal[{guard.form}]",
        source=BINARY,
        target=BINARY,
        func=apply,
        size_growth=h_fn,
        size_growth_form=h.form,
        time_bound=None,
        kind="red2bhu",
    )
    return Red2BHU(reduction=reduction, h=h, machine_code_text=code_text, slowdown=slowdown)


def verify_red2bhu_membership(
    machine: Machine, stage: Red2BHU, universal: VirtualMachine, n_max: int
) -> CheckReport:
    """Both directions of membership preservation between the machine's
    bounded halting problem and the universal one, on all words up to
    n_max."""
    problem = DBHProblem(machine, NU).as_problem()
    return verify_membership(
        problem, stage.reduction, lambda u: bh_member(universal, u), n_max
    )


def verify_red2bhu_measure(stage: Red2BHU, n_max: int) -> CheckReport:
    """Exact check of the measure loss of the universal-machine map:
    for 1 <= |x| <= n_max,

        mass(f(x)) >= mass(x) / (16 |x|^2 g(|x|) s(|x|) 2^(|code|+1))

    with both masses under the input ensemble."""
    report = CheckReport("measure-decrease-universal", n_max)
    code_len = len(stage.machine_code_text)
    shift = 2 ** (code_len + 1)
    min_ratio: Optional[Fraction] = None
    for n in range(1, n_max + 1):
        g_s = stage.h(n)
        for x in BINARY.sphere(n):
            mass = NU.mass(x)
            got = NU.mass(stage.reduction.apply(x))
            bound = mass / (16 * n * n * g_s * shift)
            if got < bound:
                report.add(x.text(), f">= {fraction_str(bound)}", fraction_str(got))
            if mass > 0 and bound > 0:
                ratio = got / bound
                if min_ratio is None or ratio < min_ratio:
                    min_ratio = ratio
    report.details["machine_code_length"] = code_len
    report.details["skipped_spheres"] = [0]
    if min_ratio is not None:
        report.details["min_ratio"] = fraction_str(min_ratio)
    return report


# --- the full chain -----------------------------------------------------------


@dataclass
class ChainReport:
    """Per-stage verification results of the completeness pipeline."""

    stages: list[tuple[str, CheckReport]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for _, r in self.stages)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "stages": [{"stage": name, **r.to_dict()} for name, r in self.stages],
        }

    def summary(self) -> str:
        lines = [f"chain: {'pass' if self.passed else 'FAIL'}"]
        for name, r in self.stages:
            lines.append(f"  {name}: {r.summary()}")
        return "\n".join(lines)


def completeness_pipeline(
    problem: DistributionalProblem,
    decider: Machine,
    g_user: GuardLike,
    decider_guard: Callable[[int], int],
    n_max: int = 3,
) -> ChainReport:
    """Run the whole chain on one problem and verify every stage.

    Stage 1 reduces the problem to the bounded halting problem of a
    protocol machine (membership both ways, exact measure decrease).
    Stage 2 relaxes the restricted ensemble back to the plain input
    ensemble through the identity (pointwise measure comparison with
    density n+1, checked on full spheres across the image range).
    Stage 3 embeds that machine into the universal machine (membership
    and the measure inequality along the chain's images).  Stage 4
    relaxes the restricted universal ensemble, checked on the final
    images and on honest restricted codes.
    """
    chain = ChainReport()
    stage1 = red2bh(problem, decider, g_user, decider_guard)
    f1 = stage1.reduction
    chain.stages.append(
        (
            "reduce-to-bounded-halting:membership",
            verify_membership(
                problem, f1, lambda u: bh_member(stage1.machine, u), n_max
            ),
        )
    )
    chain.stages.append(
        (
            "reduce-to-bounded-halting:measure",
            verify_measure_decrease(problem.measure, stage1.guard, n_max),
        )
    )

    # stage 2: identity from the C(g)-restricted ensemble into the plain one
    restricted = nu_g(stage1.guard)
    d_general = Polynomial((1, 1))
    report2 = CheckReport("restriction-relaxation", stage1.guard(n_max))
    for m in range(stage1.guard(n_max) + 1):
        if m > NU.enumeration_cap:
            report2.details["truncated_at"] = m
            break
        dk = d_general(m)
        for y in BINARY.sphere(m):
            if NU.mass(y) < restricted.mass(y) / dk:
                report2.add(y.text(), f">= {fraction_str(restricted.mass(y) / dk)}",
                            fraction_str(NU.mass(y)))
    chain.stages.append(("relax-restriction:measure", report2))

    # stage 3: embed the protocol machine into the universal machine
    code_len = len(machine_code(stage1.machine).text())
    g2 = adequate_guard(
        lambda n: 2 * n + 8,
        decider_guard=None,
        extra_payload=code_len + 1,
        form="universal-stage",
    )
    stage3 = red2bhu(stage1.machine, g2)
    universal = universal_machine([stage1.machine])
    report3m = CheckReport("universal:membership", n_max)
    report3q = CheckReport("universal:measure", n_max)
    shift = 2 ** (code_len + 1)
    for n in range(n_max + 1):
        for x in problem.alphabet.sphere(n):
            y = f1.apply(x)
            z = stage3.reduction.apply(y)
            lhs = bh_member(stage1.machine, y)
            rhs = bh_member(universal, z)
            if lhs != rhs:
                report3m.add(y.text(), str(lhs), str(rhs))
            mass_y = NU.mass(y)
            bound = mass_y / (16 * len(y) * len(y) * stage3.h(len(y)) * shift)
            if NU.mass(z) < bound:
                report3q.add(y.text(), f">= {fraction_str(bound)}",
                             fraction_str(NU.mass(z)))
    chain.stages.append(("embed-in-universal:membership", report3m))
    chain.stages.append(("embed-in-universal:measure", report3q))

    # stage 4: relax the universal restriction on the final images and on
    # honest restricted codes
    restricted_u = nu_g(stage3.h)
    report4 = CheckReport("relax-universal-restriction", n_max)
    for n in range(n_max + 1):
        for x in problem.alphabet.sphere(n):
            z = stage3.reduction.apply(f1.apply(x))
            dk = d_general(len(z))
            if NU.mass(z) < restricted_u.mass(z) / dk:
                report4.add(z.text()[:40] + "...", "restriction bound", "violated")
    for k in range(2):
        for w in BINARY.sphere(k):
            z = encode_instance(stage3.h(k), w)
            dk = d_general(len(z))
            if NU.mass(z) < restricted_u.mass(z) / dk:
                report4.add(z.text()[:40] + "...", "restriction bound", "violated")
    chain.stages.append(("relax-universal-restriction:measure", report4))
    return chain


# --- subset registry for ensemble specs --------------------------------------


def subset_from_spec(spec: dict, base: Optional[SphericalEnsemble] = None):
    """Named word predicates for induced-ensemble descriptions.

    {"name": "cg", "g": "2n+1"} -> the restricted code family;
    {"name": "image41"} -> the image of the doubling homomorphism;
    {"name": "all"} -> everything.

    Returns (predicate, label, closed-form sphere mass or None).  The
    1/n closed form of the restricted family holds only under the
    bounded-halting ensemble, so it is attached only when ``base`` is
    one; other bases fall back to enumeration.
    """
    name = spec["name"]
    if name == "cg":
        guard = as_guard(parse_polynomial(spec["g"]), form=str(spec["g"]))
        closed = cg_sphere_mass(guard) if isinstance(base, DBHNuEnsemble) else None
        return c_of_g(guard), f"C({guard.form})", closed
    if name == "image41":
        from .reductions import example41_image_member

        return example41_image_member, "image{00,1}*", None
    if name == "all":
        return (lambda x: True), "all", (lambda n: ONE)
    raise ValueError(f"unknown subset {name!r}")
