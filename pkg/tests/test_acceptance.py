"""Acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line so the
outcome is visible in ``pytest -v`` output even when it passes.
"""

import csv
import io
import itertools
import random
import statistics
import time

import pytest

from arbrf import (RF_DELTA, SYMDIFF, CostFn, NewickError, SolveParams, count_violations, delta,
                   extract_clades, min_cost_matching, parse, random_tree, rf_distance, serialize,
                   solve)
from arbrf.cli import RunRecord, ksweep, main, parse_float
from arbrf.oracle import brute_force_best

from conftest import clade_pair, taxa_of

TOL = 1e-9


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return emit


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def solved(c1, c2, f):
    res = solve(c1, c2, f)
    assert res.optimal
    return res


def test_criterion_1_fixture_rf(capsys, report, fig1_path):
    run_cli(capsys, "dist", fig1_path, "--metric", "rf")  # warm caches
    times, outputs = [], []
    for _ in range(5):
        start = time.perf_counter()
        code, out, _ = run_cli(capsys, "dist", fig1_path, "--metric", "rf")
        times.append(time.perf_counter() - start)
        outputs.append((code, out.splitlines()[0]))
    ms = statistics.median(times) * 1000
    ok = all(o == (0, "16") for o in outputs) and ms < 10
    report(1, ok, f"printed={outputs[0][1]} exit={outputs[0][0]} median_ms={ms:.2f} (<10)")
    assert ok


def test_criterion_2_structural_example(report, fig1, fig1_clades):
    c1, c2 = fig1_clades
    taxa = fig1.taxa
    a = next(i for i, c in enumerate(c1) if c.bits == taxa.bits(["1", "2"]))
    b = next(j for j, c in enumerate(c2) if c.bits == taxa.bits(["1", "10"]))
    d_pair = delta(SYMDIFF, c1[a], c2[b])
    d_gap = delta(SYMDIFF, c1[a], None) + delta(SYMDIFF, None, c2[b])
    free = min_cost_matching(c1, c2, SYMDIFF)
    arb = solved(c1, c2, SYMDIFF).incumbent
    free_ref = brute_force_best(c1, c2, SYMDIFF, False)
    arb_ref = brute_force_best(c1, c2, SYMDIFF, True)
    ok = (
        d_pair == 2 and d_gap == 4
        and (a, b) in free.pairs and (a, b) not in arb.pairs
        and (a, b) in free_ref.pairs and (a, b) not in arb_ref.pairs
        and abs(free.cost - free_ref.cost) <= TOL and abs(arb.cost - arb_ref.cost) <= TOL
    )
    report(2, ok, f"delta={d_pair} gap={d_gap} free={free.cost} arboreal={arb.cost} "
                  f"oracle=({free_ref.cost}, {arb_ref.cost})")
    assert ok


def test_criterion_3_rf_equivalence(report):
    rng = random.Random(3003)
    start = time.perf_counter()
    bad = 0
    for _ in range(100):
        n = rng.randint(4, 12)
        taxa = taxa_of(n)
        t1, t2 = random_tree(taxa, rng), random_tree(taxa, rng)
        res = solve(extract_clades(t1), extract_clades(t2), RF_DELTA)
        if not (res.optimal and res.cost_upper == rf_distance(t1, t2)):
            bad += 1
    secs = time.perf_counter() - start
    ok = bad == 0 and secs < 30
    report(3, ok, f"pairs=100 mismatches={bad} seconds={secs:.2f} (<30)")
    assert ok


def test_criterion_4_oracle_equivalence(report):
    rng = random.Random(4004)
    metrics = [SYMDIFF, CostFn.jaccard(1), CostFn.jaccard(3)]
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        c1, c2 = clade_pair(rng, rng.randint(4, 7), binary=rng.random() < 0.7)
        for f in metrics:
            free = min_cost_matching(c1, c2, f).cost
            arb = solved(c1, c2, f).cost_upper
            worst = max(worst,
                        abs(free - brute_force_best(c1, c2, f, False).cost),
                        abs(arb - brute_force_best(c1, c2, f, True).cost))
    secs = time.perf_counter() - start
    ok = worst <= TOL and secs < 300
    report(4, ok, f"instances=600 max_abs_err={worst:.3g} (<=1e-9) seconds={secs:.2f} (<300)")
    assert ok


def test_criterion_5_metric_axioms(report):
    rng = random.Random(5005)
    metrics = [CostFn.jaccard(1), SYMDIFF]
    asym = tri = 0.0
    identity_bad = 0
    for _ in range(200):
        n = rng.randint(3, 8)
        taxa = taxa_of(n)
        trees = [random_tree(taxa, rng, binary=rng.random() < 0.6) for _ in range(3)]
        cs = [extract_clades(t) for t in trees]
        for f in metrics:
            d = {}
            for x, y in itertools.product(range(3), repeat=2):
                d[x, y] = solved(cs[x], cs[y], f).cost_upper
            for x, y in itertools.product(range(3), repeat=2):
                asym = max(asym, abs(d[x, y] - d[y, x]))
                same = cs[x].bits == cs[y].bits
                if same != (d[x, y] <= TOL):
                    identity_bad += 1
            for x, y, z in itertools.permutations(range(3)):
                tri = max(tri, d[x, z] - d[x, y] - d[y, z])
    ok = asym <= TOL and identity_bad == 0 and tri <= TOL
    report(5, ok, f"triples=200 max_asymmetry={asym:.3g} identity_failures={identity_bad} "
                  f"max_triangle_excess={max(tri, 0.0):.3g}")
    assert ok


def test_criterion_6_convergence(report):
    rng = random.Random(6006)
    ks = [1, 2, 4, 8, 16, 32, 64]
    above_rf = not_monotone = missing_common = 0
    for _ in range(30):
        n = rng.randint(4, 12)
        taxa = taxa_of(n)
        t1, t2 = random_tree(taxa, rng), random_tree(taxa, rng)
        c1, c2 = extract_clades(t1), extract_clades(t2)
        d_rf = rf_distance(t1, t2)
        values = []
        for k in ks:
            res = solved(c1, c2, CostFn.jaccard(k))
            values.append(res.cost_upper)
            if k == 64:
                common = {(i, j) for i, a in enumerate(c1) for j, b in enumerate(c2)
                          if a.bits == b.bits}
                missing_common += len(common - set(res.incumbent.pairs))
        above_rf += sum(v > d_rf + TOL for v in values)
        not_monotone += sum(x > y + TOL for x, y in zip(values, values[1:]))
    ok = above_rf == 0 and not_monotone == 0 and missing_common == 0
    report(6, ok, f"pairs=30 above_rf={above_rf} decreases={not_monotone} "
                  f"common_not_self_matched={missing_common}")
    assert ok


def test_criterion_7_anytime_gap(capsys, report, tmp_path):
    rng = random.Random(7007)
    taxa = taxa_of(60)
    problems = []
    for trial in range(3):
        path = tmp_path / f"hard{trial}.nwk"
        path.write_text(serialize(random_tree(taxa, rng)) + "\n"
                        + serialize(random_tree(taxa, rng)) + "\n")
        code, out, _ = run_cli(capsys, "dist", path, "--metric", "jaccard:1",
                               "--time-limit", 1, "--format", "csv")
        rec = RunRecord.from_row(next(csv.DictReader(io.StringIO(out))))
        row = next(csv.DictReader(io.StringIO(out)))
        lo, hi = parse_float(row["weight_lower"]), parse_float(row["weight_upper"])
        printed_gap = parse_float(row["gap_percent"])
        recomputed = 100 * (hi - lo) / lo
        if not (code == 2 and rec.status == "FEASIBLE_TIMEOUT"):
            problems.append(f"trial {trial}: status {rec.status} exit {code}")
        if not (lo <= hi and rec.cost_lower <= rec.cost_upper):
            problems.append(f"trial {trial}: bounds out of order")
        if rec.violations != 0:
            problems.append(f"trial {trial}: incumbent has {rec.violations} conflicts")
        if round(printed_gap, 4) != round(recomputed, 4):
            problems.append(f"trial {trial}: gap {printed_gap} vs {recomputed}")
    ok = not problems
    report(7, ok, "instances=3 n=60 limit=1s " + ("; ".join(problems) or
                                                    f"last gap={printed_gap:.4f}%"))
    assert ok


def test_criterion_8_ksweep_shape(report, fig1, fig1_clades):
    c1, c2 = fig1_clades
    d_rf = rf_distance(fig1[0], fig1[1])
    rows = ksweep(c1, c2, d_rf, 64, "both", SolveParams())
    # past k = 64 the free optimum only changes at very large k; probe powers of two
    ks = list(range(1, 65)) + [2**e for e in range(7, 21)]
    for k in ks[64:]:
        f = CostFn.jaccard(k)
        res = solved(c1, c2, f)
        m = min_cost_matching(c1, c2, f)
        rows.append({"matched_clades": str(len(res.incumbent)),
                     "violations": str(count_violations(m, c1, c2)),
                     "d_jrf_free": repr(m.cost)})
    matched = [int(r["matched_clades"]) for r in rows]
    viol = [int(r["violations"]) for r in rows]
    d_free = [parse_float(r["d_jrf_free"]) for r in rows]
    matched_ok = all(x >= y for x, y in zip(matched, matched[1:]))
    viol_ok = all(x >= y for x, y in zip(viol, viol[1:]))
    zero_ok = all(d == d_rf for v, d in zip(viol, d_free) if v == 0)
    ok = matched_ok and viol_ok and zero_ok
    first_zero = next((k for k, v in zip(ks, viol) if v == 0), None)
    report(8, ok, f"k=1..64,128..2^20 matched {matched[0]}->{matched[-1]} violations {viol[0]}->{viol[-1]} "
                  f"first_zero_violation_k={first_zero}")
    assert ok


def test_criterion_9_matrix_counts(capsys, report, tmp_path):
    # the real corpus is not available; a synthetic file checks the record contract
    rng = random.Random(9009)
    taxa = taxa_of(8)
    path = tmp_path / "corpus.nwk"
    path.write_text("".join(serialize(random_tree(taxa, rng)) + "\n" for _ in range(120)))
    counts = {}
    for extra in ([], ["--include-self"]):
        out = tmp_path / "m.csv"
        code, _, _ = run_cli(capsys, "matrix", path, "--first", 100, "--time-limit", 120,
                             "--metric", "jaccard:1", "--out", out, *extra)
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        records = [RunRecord.from_row(r) for r in rows]
        well_formed = all(r.status == "OPTIMAL" and not r.error for r in records)
        counts[bool(extra)] = (code, len(records), well_formed)
    ok = counts == {False: (0, 4950, True), True: (0, 5050, True)}
    report(9, ok, f"synthetic 100 trees: records={counts[False][1]} "
                  f"with_self={counts[True][1]} (corpus statistics excluded)")
    assert ok


FUZZ_ALPHABET = "(),;:'[] \t\nAb1_.-|\"\\{}#e+0"


def mutate(rng, text):
    chars = list(text)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(4)
        pos = rng.randrange(len(chars) + 1)
        if op == 0 and chars:
            del chars[min(pos, len(chars) - 1)]
        elif op == 1:
            chars.insert(pos, rng.choice(FUZZ_ALPHABET))
        elif op == 2 and chars:
            chars[min(pos, len(chars) - 1)] = rng.choice(FUZZ_ALPHABET)
        else:
            cut = rng.randrange(len(chars) + 1)
            chars = chars[:cut] + chars[pos:]
    return "".join(chars)


def test_criterion_10_parser_robustness(report):
    rng = random.Random(10010)
    round_trip_bad = 0
    seeds = []
    for _ in range(1000):
        n = rng.randint(1, 64)
        taxa = taxa_of(n)
        tree = random_tree(taxa, rng, binary=rng.random() < 0.5)
        text = serialize(tree)
        back = parse(text, taxa)[0]
        if serialize(back) != text or extract_clades(back).bits != extract_clades(tree).bits:
            round_trip_bad += 1
        if n <= 12:
            seeds.append(text)
    seeds += ["((a:1.5,'b c')x:2,d)r;", "(A,(B,C)[note]);\n((A,B),C);", "('it''s',b);"]
    crashes = []
    accepted = rejected = 0
    for _ in range(100_000):
        text = mutate(rng, rng.choice(seeds))
        try:
            parse(text)
            accepted += 1
        except NewickError:
            rejected += 1
        except Exception as exc:  # anything else is a robustness failure
            crashes.append((text, repr(exc)))
    ok = round_trip_bad == 0 and not crashes
    report(10, ok, f"round_trip_failures={round_trip_bad}/1000 fuzz=100000 "
                   f"accepted={accepted} rejected={rejected} other_exceptions={len(crashes)}")
    assert ok, crashes[:5]
