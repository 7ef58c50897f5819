"""The acceptance gate: ten exact criteria, one reported verdict line each.

Every check is exact rational or cyclotomic arithmetic with zero
tolerance.  Oracles are built here from first principles so they share
no code path with the package: leaf dimensions come from coloop-free
flats of the Gale dual computed by fraction elimination, unimodularity
from Leibniz determinants, slice membership from explicit span checks,
and CLI determinism from byte comparison of real subprocess runs.  Each
criterion prints a single PASS or FAIL line on the unbuffered stdout so
the verdicts survive capture, and the sweeps assert their wall-clock
budgets."""

import itertools
import json
import subprocess
import sys
import time

from equislice import fixtures
from equislice.darboux import normalize_full, scramble_presentation
from equislice.hypertoric import (
    check_unimodular,
    decompose_at,
    enumerate_leaves,
    verify_decomposition,
)
from equislice.linalg import in_span, rank
from equislice.poisson import standard_presentation
from equislice.quantize import (
    centrality_check,
    differential_family,
    quantization_axiom_check,
    quantized_slice,
    sl2_casimir_element,
    sl2_enveloping,
    verify_sl2_localization,
)
from equislice.quotient import (
    leaf_slice_data,
    parabolic_subgroups,
    symplectic_reflections,
)
from equislice.scalars import Q


def _gate(capfd, num: int, label: str, body) -> None:
    with capfd.disabled():
        start = time.perf_counter()
        try:
            body()
        except BaseException:
            print(f"ACCEPTANCE {num:02d} {label}: FAIL "
                  f"({time.perf_counter() - start:.1f}s)", flush=True)
            raise
        print(f"ACCEPTANCE {num:02d} {label}: PASS "
              f"({time.perf_counter() - start:.1f}s)", flush=True)


# -- criterion 1: Jacobi certification ----------------------------------------


def _criterion_jacobi() -> None:
    start = time.perf_counter()
    for n in (1, 2, 3):
        for k in (-1, 0, 1, 2):
            assert standard_presentation(n, k, order=6).check_jacobi() == []
    assert fixtures.sl2_presentation(order=6).check_jacobi() == []
    for n in (2, 3, 4):
        assert fixtures.kleinian_presentation(n, order=6).check_jacobi() == []
    assert fixtures.cubic_jacobian(order=6).check_jacobi() == []
    bad = fixtures.cyclic_nonjacobi(order=6)
    rows = bad.check_jacobi()
    assert len(rows) == 1
    assert rows[0]["kind"] == "jacobi"
    assert rows[0]["triple"] == ["x", "y", "z"]
    residue = bad.ctx.parse(rows[0]["residue"])
    assert residue == bad.ctx.parse("x + y + z")
    assert time.perf_counter() - start < 10


def test_criterion_01_jacobi_certification(capfd):
    _gate(capfd, 1, "jacobi-certification", _criterion_jacobi)


# -- criterion 2: homogeneity degrees ------------------------------------------


def _criterion_homogeneity() -> None:
    assert fixtures.sl2_presentation().homogeneity_degree() == -1
    for n in (2, 3, 4):
        assert fixtures.kleinian_presentation(n).homogeneity_degree() == -2
    for n in (1, 2, 3):
        for k in (-1, 0, 1, 2):
            assert standard_presentation(n, k).homogeneity_degree() == -k


def test_criterion_02_homogeneity_degrees(capfd):
    _gate(capfd, 2, "homogeneity-degrees", _criterion_homogeneity)


# -- criterion 3: twisted counterexample fidelity ------------------------------


def _criterion_counterexample() -> None:
    pres = fixtures.coupled_line_example(order=6)
    basis = pres.poisson_center_basis((1, 1))
    assert list(basis) == [1] and len(basis[1]) == 1
    element = basis[1][0]
    z = pres.ctx.index("z")
    expected = [Q(1), Q(-1), Q(1, 2), Q(-1, 6), Q(1, 24), Q(-1, 120)]
    for power, coeff in enumerate(expected):
        exps = [0] * len(pres.ctx.variables)
        exps[pres.ctx.index("t")] = 1
        exps[z] = power
        assert element.terms[tuple(exps)] == coeff
    assert len(element.terms) == len(expected)
    cert = normalize_full(fixtures.coupled_line_example(order=6))
    assert not cert.is_product()
    assert any(cert.residual_field.values())


def test_criterion_03_counterexample_fidelity(capfd):
    _gate(capfd, 3, "counterexample-fidelity", _criterion_counterexample)


# -- criterion 4: Darboux round trips ------------------------------------------


def _criterion_round_trip() -> None:
    start = time.perf_counter()
    jobs = [
        (standard_presentation(2, 2, order=6), [("z1", "z2")]),
        (fixtures.kleinian_product(1, 2, order=6), []),
        (fixtures.kleinian_product(1, 3, order=6), []),
    ]
    runs = 0
    for pres, pairs in jobs:
        for seed in range(34):
            _, scrambled = scramble_presentation(pres, pairs, seed)
            cert = normalize_full(scrambled)
            assert cert.is_product() and cert.form == "product"
            assert all(not v for v in cert.residual_field.values())
            assert cert.certified_jorder == 5
            assert cert.verify() == []
            runs += 1
    assert runs >= 100
    assert time.perf_counter() - start < 120


def test_criterion_04_darboux_round_trip(capfd):
    _gate(capfd, 4, "darboux-round-trip", _criterion_round_trip)


# -- criterion 5: hypertoric leaves against the Gale-flat oracle ---------------


def _rational_rank(vectors) -> int:
    rows = [[Q(x) for x in v] for v in vectors]
    width = len(rows[0]) if rows else 0
    pivot_row = 0
    for col in range(width):
        for i in range(pivot_row, len(rows)):
            if rows[i][col]:
                rows[pivot_row], rows[i] = rows[i], rows[pivot_row]
                break
        else:
            continue
        lead = rows[pivot_row][col]
        rows[pivot_row] = [x / lead for x in rows[pivot_row]]
        for i in range(len(rows)):
            if i != pivot_row and rows[i][col]:
                factor = rows[i][col]
                rows[i] = [
                    a - factor * b for a, b in zip(rows[i], rows[pivot_row])
                ]
        pivot_row += 1
    return pivot_row


def _gale_rows(matrix) -> list:
    n, m = len(matrix), len(matrix[0])
    rows = [[Q(matrix[i][j]) for i in range(n)] for j in range(m)]
    pivots = []
    pivot_row = 0
    for col in range(n):
        for i in range(pivot_row, len(rows)):
            if rows[i][col]:
                rows[pivot_row], rows[i] = rows[i], rows[pivot_row]
                break
        else:
            continue
        lead = rows[pivot_row][col]
        rows[pivot_row] = [x / lead for x in rows[pivot_row]]
        for i in range(len(rows)):
            if i != pivot_row and rows[i][col]:
                factor = rows[i][col]
                rows[i] = [
                    a - factor * b for a, b in zip(rows[i], rows[pivot_row])
                ]
        pivots.append(col)
        pivot_row += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Q(0)] * n
        vec[fc] = Q(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -rows[r][fc]
        basis.append(vec)
    return [tuple(vec[i] for vec in basis) for i in range(n)]


def _leaf_dims_oracle(matrix) -> list[int]:
    """Leaf dimensions from coloop-free flats of the Gale dual: a flat
    carries a leaf exactly when no element of it is forced, and the
    leaf has twice the corank of the flat."""
    gale = _gale_rows(matrix)
    n = len(gale)
    total = len(gale[0]) if gale and gale[0] else 0

    def rk(indices) -> int:
        vecs = [gale[i] for i in indices]
        return _rational_rank(vecs) if vecs else 0

    flats = set()
    for size in range(n + 1):
        for sub in itertools.combinations(range(n), size):
            r = rk(sub)
            flats.add(frozenset(
                i for i in range(n) if rk(tuple(sub) + (i,)) == r
            ))
    dims = []
    for flat in flats:
        r = rk(tuple(flat))
        if any(rk(tuple(flat - {i})) < r for i in flat):
            continue
        dims.append(2 * (total - r))
    return sorted(dims, reverse=True)


def _criterion_hypertoric() -> None:
    start = time.perf_counter()
    expected = {
        ((1,), (1,)): [2, 0],
        ((1, 0), (1, 0), (0, 1), (0, 1)): [4, 2, 2, 0],
    }
    for key, dims in expected.items():
        matrix = [list(row) for row in key]
        leaves = enumerate_leaves(matrix)
        got = sorted((leaf.leaf_dim for leaf in leaves), reverse=True)
        assert got == dims
        assert _leaf_dims_oracle(matrix) == dims
        for leaf in leaves:
            report = decompose_at(matrix, leaf)
            weights = report.as_json()["weights"]
            for name, weight in weights.items():
                assert name[0] in "xy"
                partner = ("y" if name[0] == "x" else "x") + name[1:]
                assert partner in weights
                assert weight + weights[partner] == 2
            assert verify_decomposition(matrix, report, order=5)["ok"]
    triple = [[1], [1], [1]]
    assert _leaf_dims_oracle(triple) == sorted(
        (leaf.leaf_dim for leaf in enumerate_leaves(triple)), reverse=True
    )
    assert time.perf_counter() - start < 30


def test_criterion_05_hypertoric_oracle_equivalence(capfd):
    _gate(capfd, 5, "hypertoric-oracle-equivalence", _criterion_hypertoric)


# -- criterion 6: unimodularity against Leibniz determinants -------------------


def _permutation_signs(m: int) -> list:
    out = []
    for perm in itertools.permutations(range(m)):
        sign = 1
        for i in range(m):
            for j in range(i + 1, m):
                if perm[i] > perm[j]:
                    sign = -sign
        out.append((sign, perm))
    return out


def _criterion_unimodularity() -> None:
    start = time.perf_counter()
    compared = 0
    rejected = 0
    for m in (1, 2):
        signs = _permutation_signs(m)
        for n in range(1, 5):
            for flat in itertools.product(range(-2, 3), repeat=n * m):
                rows = [flat[i * m:(i + 1) * m] for i in range(n)]
                minors = {}
                for sel in itertools.combinations(range(n), m):
                    total = 0
                    for sign, perm in signs:
                        prod = sign
                        for i, j in enumerate(perm):
                            prod *= rows[sel[i]][j]
                        total += prod
                    minors[sel] = total
                faithful = any(minors.values())
                oracle = all(d in (-1, 0, 1) for d in minors.values())
                try:
                    ok, witness = check_unimodular([list(r) for r in rows])
                except ValueError:
                    assert not faithful
                    rejected += 1
                    continue
                assert faithful
                assert ok == oracle
                if not ok:
                    sel = tuple(i - 1 for i in witness["rows"])
                    assert minors[sel] == witness["minor"]
                compared += 1
    assert compared == 404104 and rejected == 3576
    assert time.perf_counter() - start < 60


def test_criterion_06_unimodularity_brute_force(capfd):
    _gate(capfd, 6, "unimodularity-brute-force", _criterion_unimodularity)


# -- criterion 7: finite quotient reflection data ------------------------------


def _check_reflection_forms(group, sra) -> None:
    field = group.field
    zero = field.zero()
    dim = group.dim
    for s in sra.reflections:
        form = sra.omega_s[s]
        assert rank([list(row) for row in form]) == 2
        for vec in group.fixed_space(s):
            for i in range(dim):
                row = sum((form[i][j] * vec[j] for j in range(dim)),
                          start=zero)
                col = sum((vec[j] * form[j][i] for j in range(dim)),
                          start=zero)
                assert row == zero and col == zero
        g = group.element(s)
        moved = [
            tuple(g[r][c] - (1 if r == c else 0) for r in range(dim))
            for c in range(dim)
        ]
        for u_vec in moved:
            for v_vec in moved:
                lhs = sum(
                    (u_vec[i] * form[i][j] * v_vec[j]
                     for i in range(dim) for j in range(dim)),
                    start=zero,
                )
                rhs = sum(
                    (u_vec[i] * group.omega[i][j] * v_vec[j]
                     for i in range(dim) for j in range(dim)),
                    start=zero,
                )
                assert lhs == rhs


def _criterion_quotients() -> None:
    cases = [
        (fixtures.cyclic_plane_action(2), 2, 1, (1, 0), True),
        (fixtures.cyclic_plane_action(3), 2, 2, (1, 0), False),
        (fixtures.cyclic_plane_action(4), 2, 3, (1, 0), True),
        (fixtures.pairwise_sign_action(), 4, 2, (1, 0, 1, 0), True),
    ]
    for group, parabolics, reflections, point, has_minus in cases:
        records = parabolic_subgroups(group)
        assert len(records) == parabolics
        sra = symplectic_reflections(group)
        assert len(sra.reflections) == reflections
        _check_reflection_forms(group, sra)
        minus = tuple(
            tuple(
                -group.field.one() if i == j else group.field.zero()
                for j in range(group.dim)
            )
            for i in range(group.dim)
        )
        assert (minus in group.elements) == has_minus
        open_record = next(r for r in records if len(r.subgroup) == 1)
        data = leaf_slice_data(group, open_record, list(point))
        assert data["conic_weight"] == (2 if has_minus else 1)


def test_criterion_07_finite_quotients(capfd):
    _gate(capfd, 7, "finite-quotients", _criterion_quotients)


# -- criterion 8: quantization axiom and Casimir centrality --------------------


def _criterion_quantization() -> None:
    start = time.perf_counter()
    for n in (1, 2):
        for k in (1, 2):
            report = quantization_axiom_check(
                differential_family(n, k, order=3),
                standard_presentation(n, k, order=4),
            )
            assert report["ok"]
            assert report["checked"] == n * (2 * n - 1)
    algebra = sl2_enveloping(order=3)
    casimir = sl2_casimir_element(algebra)
    assert centrality_check(algebra, casimir)["ok"]
    checked = 0
    for da in range(7):
        for db in range(7 - da):
            for dc in range(7 - da - db):
                if da + db + dc == 0:
                    continue
                word = algebra.one()
                for name, exp in (("e", da), ("f", db), ("h", dc)):
                    if exp:
                        word = algebra.multiply(word, algebra.var(name, exp))
                assert algebra.commutator(casimir, word) == {}
                checked += 1
    assert checked == 83
    localization = verify_sl2_localization(order=3)
    assert localization["ok"]
    assert localization["checks"] == {
        "pair_relation": "0",
        "casimir_with_x": "0",
        "casimir_with_y": "0",
        "casimir_with_x_inverse": "0",
    }
    assert localization["weights"] == {"hbar": 1, "x": 1, "y": 1, "casimir": 2}
    assert time.perf_counter() - start < 30


def test_criterion_08_quantization_axiom(capfd):
    _gate(capfd, 8, "quantization-axiom", _criterion_quantization)


# -- criterion 9: quantized slice recovery -------------------------------------


def _criterion_quantized_slice() -> None:
    product = differential_family(3, 2, order=3)
    res = quantized_slice(
        product, "t", [], truncation=2, weight_window=(-2, 2), degree_cap=1
    )
    assert res.closure["ok"]

    def generator(name):
        return {(0, ((product.names.index(name), 1),)): Q(1)}

    assert res.generator_candidates == [
        (0, generator("z4")),
        (0, generator("z2")),
        (2, generator("z3")),
        (2, generator("z1")),
    ]
    u_index = product.names.index("u")
    for vectors in res.basis.values():
        for vec in vectors:
            for _hpow, mono in vec:
                assert all(i != u_index for i, _exp in mono)

    localized = sl2_enveloping(order=4, localized=True)
    res = quantized_slice(
        localized, "f", [], truncation=3, weight_window=(0, 0), degree_cap=4
    )
    assert res.closure["ok"]
    shifted = localized.multiply(
        sl2_casimir_element(localized), localized.var("f", -2)
    )
    assert res.generator_candidates == [(0, shifted)]
    squared = localized.multiply(shifted, shifted)

    def truncate(element):
        return {k: v for k, v in element.items() if k[0] < 3}

    targets = [truncate(shifted), truncate(squared)]
    keys = sorted(
        {k for vec in res.basis[0] for k in vec}
        | {k for t in targets for k in t}
    )
    span = [[vec.get(k, Q(0)) for k in keys] for vec in res.basis[0]]
    for target in targets:
        assert in_span(span, [target.get(k, Q(0)) for k in keys])


def test_criterion_09_quantized_slice(capfd):
    _gate(capfd, 9, "quantized-slice", _criterion_quantized_slice)


# -- criterion 10: CLI byte determinism ----------------------------------------

CLI_JOBS = [
    (("poisson", "jacobi"), {"builder": "sl2"}),
    (("poisson", "degree"), {"builder": "kleinian", "n": 3}),
    (("poisson", "center"),
     {"builder": "coupled-line", "weight_window": [1, 1]}),
    (("poisson", "hp0"), {"builder": "kleinian", "n": 2, "degree_cap": 4}),
    (("poisson", "gradings"), {"builder": "standard", "n": 1, "k": 2}),
    (("darboux", "normalize"),
     {"builder": "kleinian-product", "n": 1, "slice_n": 2}),
    (("darboux", "slice"),
     {"builder": "kleinian-product", "n": 1, "slice_n": 2, "weight": 2}),
    (("hypertoric", "unimodular"), {"matrix": [[1, 1], [1, -1]]}),
    (("hypertoric", "leaves"),
     {"matrix": [[1, 0], [1, 0], [0, 1], [0, 1]]}),
    (("hypertoric", "decompose"), {"matrix": [[1], [1]], "flat": []}),
    (("hypertoric", "verify"), {"matrix": [[1], [1]], "flat": []}),
    (("quotient", "parabolics"), {"builder": "cyclic", "n": 4}),
    (("quotient", "reflections"), {"builder": "cyclic", "n": 3}),
    (("quotient", "slice"),
     {"builder": "cyclic", "n": 2, "base_point": [1, 0]}),
    (("quotient", "sra"),
     {"builder": "pairwise-sign", "x": [1, 0, 0, 0], "y": [0, 0, 1, 0]}),
    (("quantize", "build"), {"family": "differential", "n": 1, "k": 2}),
    (("quantize", "normalform"),
     {"presentation": {"family": "differential", "n": 1, "k": 2},
      "word": [["u", 1], ["t", 2]]}),
    (("quantize", "central"),
     {"presentation": {"family": "sl2"}, "element": {"casimir": True}}),
    (("quantize", "slice"),
     {"presentation": {"family": "differential", "n": 2, "k": 1},
      "t_lift": "t", "window": [-1, 1], "truncation": 2, "degree_cap": 1}),
    (("quantize", "axiom"),
     {"quantum": {"family": "differential", "n": 1, "k": 1},
      "classical": {"builder": "standard", "n": 1, "k": 1, "order": 4}}),
    (("selftest",), None),
]


def _cli_run(args, document):
    cmd = [sys.executable, "-m", "equislice", *args, "--json", "--seed", "7"]
    payload = None
    if document is not None:
        cmd.append("-")
        payload = json.dumps(document).encode()
    proc = subprocess.run(cmd, input=payload, capture_output=True)
    return proc.returncode, proc.stdout


def _criterion_cli_determinism() -> None:
    for args, document in CLI_JOBS:
        first = _cli_run(args, document)
        second = _cli_run(args, document)
        assert first == second, f"{' '.join(args)} is not deterministic"
        code, out = first
        assert code in (0, 1), f"{' '.join(args)} exited {code}"
        assert out and json.loads(out) is not None


def test_criterion_10_cli_determinism(capfd):
    _gate(capfd, 10, "cli-determinism", _criterion_cli_determinism)
