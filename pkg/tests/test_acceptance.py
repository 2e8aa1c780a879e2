"""Acceptance gate: one PASS/FAIL line per criterion.

Run with pytest, or directly as ``python tests/test_acceptance.py``.
"""

import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import pytest
from sympy import primerange

sys.path.insert(0, str(Path(__file__).parent))

from conftest import sampled_curves, worked_curve  # noqa: E402
from twocover.cli import categorize  # noqa: E402
from twocover.descent import (  # noqa: E402
    NO_POINT,
    DescentConfig,
    bad_places,
    contact_point_list,
    global_gamma,
    global_group,
    jacobian_selmer,
    rho,
    search_points,
    two_cover_descent,
)
from twocover.forms import binary_square_root, restrict_to_line  # noqa: E402
from twocover.local import (  # noqa: E402
    local_image,
    local_image_good_odd,
    local_image_padic,
    local_image_real,
    local_span,
    unramified_subgroup,
)
from twocover.moduli import (  # noqa: E402
    LABELS,
    check_concurrency,
    count_general_position_completions,
    small_field_report,
)
from twocover.theta import aronhold_sets, enumerate_syzygetic, quadruples_through, syzygetic_type, syzygy_residual  # noqa: E402

A_STYLE = (6, 20, 2026)
B_STYLE = (40, 30, 7)
ORACLE_STYLE = (6, 6, 99)
EXPECTED_S = ["inf", "2", "3", "5", "7", "11", "13", "17", "19", "29", "37", "41"]


def criterion_1():
    t = time.perf_counter()
    counts = {q: count_general_position_completions(q) for q in (3, 5, 7, 9, 11)}
    c9, c11 = small_field_report(9)["points"], small_field_report(11)["points"]
    elapsed = time.perf_counter() - t
    ok = counts == {3: 0, 5: 0, 7: 0, 9: 40, 11: 1440} and (c9, c11) == (28, 0) and elapsed < 120
    return ok, f"completions {counts}, #C9(F9)={c9}, #C11(F11)={c11}, {elapsed:.1f}s"


def criterion_2():
    t = time.perf_counter()
    quads = enumerate_syzygetic()
    orbits = Counter(syzygetic_type(q) for q in quads)
    per_label = {len(quadruples_through(l)) for l in LABELS}
    aronhold_sets.cache_clear()
    n_aronhold = len(aronhold_sets())
    elapsed = time.perf_counter() - t
    ok = (len(quads) == 315 and sorted(orbits.values()) == [105, 210] and per_label == {45}
          and n_aronhold == 288 and len(LABELS) == 28 and elapsed < 1.0)
    return ok, f"{len(quads)} quadruples {dict(orbits)}, {per_label} per label, {n_aronhold} Aronhold sets, {elapsed:.2f}s"


def criterion_3a():
    C = worked_curve()
    distinct = len({C.line_vector(l) for l in LABELS}) == 28
    squares = True
    for lab in LABELS:
        b = restrict_to_line(C.f, C.contacts[lab].param)
        a, q = binary_square_root(b)
        squares &= q * q * a == b
    conc = check_concurrency([C.line_vector(l) for l in LABELS])
    return distinct and squares, f"28 distinct={distinct}, all restrictions a*q^2={squares}, max concurrency {conc}"


def criterion_3b():
    C = worked_curve()
    bad = [q for q, d in C.syzygies.items() if not syzygy_residual(C, d).is_zero()]
    return len(C.syzygies) == 315 and not bad, f"{len(C.syzygies)} identities, {len(bad)} nonzero residuals"


def criterion_3c():
    C = worked_curve()
    S = bad_places(C)
    empty = []
    for v in S:
        span = local_span(C, v, bad_primes=S.primes)
        if not any(b & 1 for b in span.W.basis):
            empty.append(v)
    for p in primerange(2, 51):
        if len(local_image(C, p, S.primes)) == 0:
            empty.append(p)
    return not empty, f"places checked: S plus primes <= 50; empty at {sorted(set(empty))}"


def criterion_3d():
    C = worked_curve()
    r = two_cover_descent(C, DescentConfig(filter_bound=5))
    ok = r.survivors == [] and r.conclusion == NO_POINT
    return ok, f"filters {[(f.p, f.survivors) for f in r.filters]}, conclusion {r.conclusion}"


def criterion_3e():
    C = worked_curve()
    T = (31, 43, 47, 53, 71, 83)
    r = two_cover_descent(C, DescentConfig(filter_primes=T, search_height=0))
    n = len(r.survivors) if r.survivors is not None else None
    return n == 0, f"T={T}: survivors after each prime {[f.survivors for f in r.filters]}"


def criterion_3f():
    t = time.perf_counter()
    C = worked_curve()
    dim, exact = jacobian_selmer(C)
    S = bad_places(C)
    G = global_group(S)
    r = two_cover_descent(C, DescentConfig(filter_bound=5))
    extras = (S.names() == EXPECTED_S, G.dim_L == 72, r.dim_W == 10)
    detail = (f"jacobian_selmer=({dim}, {exact}); S matches 12 places: {extras[0]}, "
              f"dim L'={G.dim_L}, dim W={r.dim_W} (non-gating); {time.perf_counter() - t:.1f}s")
    return (dim, exact) == (9, True), detail


def criterion_4():
    t = time.perf_counter()
    compared = 0
    curves_used = 0
    proper = True
    for C in sampled_curves(*ORACLE_STYLE):
        S = set(bad_places(C).primes)
        good = [p for p in (13, 17, 19) if p not in S]
        for p in good:
            a = local_image_padic(C, p).values
            b = local_image_good_odd(C, p, S).values
            if a != b:
                return False, f"mismatch at p={p} for moduli {C.moduli}"
            compared += 1
        curves_used += bool(good)
        for p in primerange(3, 30):
            if p not in S:
                image = local_image_good_odd(C, p, S).values
                proper &= all(v in unramified_subgroup(p) for v in image) and len(image) < 64
    elapsed = time.perf_counter() - t
    ok = curves_used >= 5 and proper and elapsed < 300
    return ok, f"{compared} comparisons on {curves_used} curves, proper subsets for p<=29: {proper}, {elapsed:.1f}s"


def criterion_5():
    curves = [worked_curve()] + list(sampled_curves(*A_STYLE)) + list(sampled_curves(*B_STYLE))
    sizes = Counter(len(local_image_real(C)) for C in curves)
    return set(sizes) == {4}, f"{len(curves)} curves, real class counts {dict(sizes)}"


def criterion_6():
    t = time.perf_counter()
    N = 50
    verdicts = Counter()
    problems = []
    for C in sampled_curves(*A_STYLE):
        r = two_cover_descent(C, DescentConfig(filter_bound=N, search_height=10**4))
        verdicts[r.conclusion] += 1
        S = bad_places(C)
        G = global_group(S)
        for P in r.points:
            g = global_gamma(C, P, G)
            if r.W1 is None or g not in r.W1:
                problems.append(f"{P} outside W1")
            for p in primerange(2, N + 1):
                if (rho(G, p)(g) >> 1) not in local_image(C, p, S.primes):
                    problems.append(f"{P} fails the filter at {p}")
        if r.conclusion == NO_POINT and search_points(C.f, 10**4):
            problems.append(f"{C.moduli}: NoRationalPoint but the height search found points")
    elapsed = time.perf_counter() - t
    ok = not problems and elapsed < 1800
    return ok, f"verdicts {dict(verdicts)}, {len(problems)} inconsistencies {problems[:3]}, {elapsed:.0f}s"


def criterion_7():
    cats = Counter()
    bad_obstructions = []
    for C in sampled_curves(*B_STYLE):
        r = two_cover_descent(C, DescentConfig(search_height=10**4))
        cats[categorize(r, bool(contact_point_list(C)))] += 1
        S = set(bad_places(C).primes)
        bad_obstructions += [(C.moduli, v) for v in r.local_obstructions if v in S or v == 0]
    n = sum(cats.values())
    share = cats["selmer_empty"] / n
    detail = (f"categories {dict(cats)}; Selmer-empty {share:.0%} (target >= 70%, non-gating); "
              f"obstructions at bad places: {bad_obstructions}")
    return not bad_obstructions, detail


PROPERTY_TESTS = [
    "tests/test_arith.py::test_square_class_is_a_homomorphism",
    "tests/test_arith.py::test_class_is_stable_on_small_balls",
    "tests/test_local.py::test_hensel_balls_cover_liftable_residues",
    "tests/test_linalg.py::test_intersection_matches_enumeration",
    "tests/test_linalg.py::test_preimage_matches_enumeration",
    "tests/test_forms.py::test_square_root_is_exact",
    "tests/test_descent.py::test_report_emptiness_survives_bitangent_rescaling",
    "tests/test_descent.py::test_filtering_is_monotone_in_the_bound",
    "tests/test_descent.py::test_good_reduction_at_eleven_empties_the_filter",
    "tests/test_local.py::test_exact_spans_have_threshold_dimension",
]


def criterion_8():
    root = Path(__file__).resolve().parent.parent
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
                          cwd=root, capture_output=True, text=True)
    elapsed = time.perf_counter() - t
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    return proc.returncode == 0 and elapsed < 300, f"{summary} ({elapsed:.0f}s)"


CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3a": criterion_3a,
    "3b": criterion_3b,
    "3c": criterion_3c,
    "3d": criterion_3d,
    "3e": criterion_3e,
    "3f": criterion_3f,
    "4": criterion_4,
    "5": criterion_5,
    "6": criterion_6,
    "7": criterion_7,
    "8": criterion_8,
}


def run(name: str) -> bool:
    ok, detail = CRITERIA[name]()
    print(f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}", flush=True)
    return ok


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name, capsys):
    with capsys.disabled():
        ok = run(name)
    assert ok


if __name__ == "__main__":
    results = [run(name) for name in CRITERIA]
    sys.exit(0 if all(results) else 1)
