"""Acceptance suite: twelve numbered criteria, one verdict line each.

Each test prints ``[acceptance] NN <title>: PASS/FAIL`` so a run log shows
the full scorecard at a glance; assertions carry the failing details.
"""

import contextlib
import math
import re

import numpy as np

from nqs_geom import (
    CartanSet,
    ContextGraph,
    DensityOperator,
    GlobalActionSpec,
    MetricMatrix,
    QuadraticFunctional,
    Reset,
    Superoperator,
    build_superoperator,
    chain_continuum_report,
    charge_transport,
    classical_fisher,
    covariance_metric,
    doeblin_epsilon,
    doeblin_gap,
    fisher_from_divergence,
    gell_mann_matrices,
    gibbs_family,
    global_action,
    hessian_metric,
    holonomy_fit,
    loop_holonomy,
    matrix_exponential,
    parse_machine,
    partial_swap_channel,
    path_cost,
    quadratic_cost,
    sensitivity_report,
    solve_poisson,
    solve_self_consistent,
    spectral_gap,
    stationary_state,
    trace_norm,
    unitary_conjugation_channel,
    vectorize,
    devectorize,
)
from nqs_geom import cli
from conftest import random_primitive_gkls, random_state, random_trace_annihilating

GM = gell_mann_matrices()


@contextlib.contextmanager
def criterion(capsys, number, title):
    """Collect problems; print one PASS/FAIL line; assert at the end."""
    problems = []
    try:
        yield problems
    except BaseException as exc:
        with capsys.disabled():
            print(f"[acceptance] {number:02d} {title}: FAIL "
                  f"({type(exc).__name__}: {exc})")
        raise
    verdict = "PASS" if not problems else "FAIL"
    with capsys.disabled():
        print(f"[acceptance] {number:02d} {title}: {verdict}")
    assert not problems, "\n".join(problems)


def faithful_diag(dim):
    w = np.arange(1.0, dim + 1.0)
    return DensityOperator(np.diag(w / w.sum()))


def test_criterion_01_reset_gap(capsys):
    """Reset dynamics relax at exactly their rate."""
    with criterion(capsys, 1, "reset-channel spectral gap equals the rate") as bad:
        for kappa in (0.5, 1.0, 2.0):
            for dim in (2, 3):
                gap = spectral_gap(Reset(kappa, faithful_diag(dim)))
                if abs(gap - kappa) > 1e-10:
                    bad.append(f"kappa={kappa} d={dim}: gap={gap!r}")


def test_criterion_02_doeblin_closed_form(capsys):
    """Minorization constant of a reset channel is 1 - exp(-kappa t0)."""
    with criterion(capsys, 2, "Doeblin constant closed form and rate recovery") as bad:
        for kappa in (0.5, 1.0, 2.0):
            for dim in (2, 3):
                gen = Reset(kappa, faithful_diag(dim))
                for t0 in (0.5, 1.0, 2.0):
                    eps = doeblin_epsilon(gen, t0)
                    want = 1.0 - math.exp(-kappa * t0)
                    if abs(eps - want) > 1e-9:
                        bad.append(
                            f"kappa={kappa} d={dim} t0={t0}: eps={eps!r} != {want!r}"
                        )
                        continue
                    rate = doeblin_gap(eps, t0)
                    if abs(rate - kappa) > 1e-9:
                        bad.append(
                            f"kappa={kappa} d={dim} t0={t0}: recovered rate {rate!r}"
                        )


def test_criterion_03_doeblin_contraction(capsys):
    """(1 - eps)^n bounds the trace-norm distance after n Doeblin periods."""
    with criterion(capsys, 3, "Doeblin contraction on random semigroups") as bad:
        rng = np.random.default_rng(303)
        violations = 0
        for case in range(20):
            dim = 2 + case % 3
            gen = random_primitive_gkls(rng, dim)
            sup = build_superoperator(gen)
            rho_st = stationary_state(gen).entries
            t0 = 1.0 / spectral_gap(gen)
            eps = doeblin_epsilon(gen, t0)
            step = matrix_exponential(sup.matrix, t0)
            for _ in range(100):
                rho = random_state(rng, dim).entries
                base = trace_norm(rho - rho_st)
                v = vectorize(rho)
                for n in range(1, 11):
                    v = step @ v
                    dist = trace_norm(devectorize(v, dim) - rho_st)
                    if dist > (1.0 - eps) ** n * base + 1e-9:
                        violations += 1
        if violations:
            bad.append(f"{violations} violations out of 20000 checks")


def test_criterion_04_poisson_first_order(capsys):
    """The sensitivity solution is the first-order stationary response."""
    with criterion(capsys, 4, "Poisson equation first-order slope 2.0 +/- 0.1") as bad:
        rng = np.random.default_rng(404)
        scales = np.array([1e-2, 1e-3, 1e-4])
        for case in range(10):
            dim = 2 + case % 3
            gen = random_primitive_gkls(rng, dim)
            m = build_superoperator(gen).matrix
            dm = random_trace_annihilating(rng, dim)
            delta = solve_poisson(gen, dm)
            rho = stationary_state(gen).entries
            errors = [
                trace_norm(stationary_state(m + s * dm).entries - rho - s * delta)
                for s in scales
            ]
            order = float(np.polyfit(np.log(scales), np.log(errors), 1)[0])
            if abs(order - 2.0) > 0.1:
                bad.append(f"case {case} (d={dim}): slope {order:.4f}")


def test_criterion_05_sensitivity_bounds(capsys):
    """Certified (t0/eps) bound never violated; reset case is an equality."""
    with criterion(capsys, 5, "certified sensitivity bound and reset equality") as bad:
        rng = np.random.default_rng(505)
        violations = 0
        for case in range(100):
            dim = 2 + case % 3
            gen = random_primitive_gkls(rng, dim)
            dm = random_trace_annihilating(rng, dim)
            rep = sensitivity_report(gen, dm)
            if not rep.certified_satisfied or rep.lhs > rep.rhs_certified + 1e-9:
                violations += 1
        if violations:
            bad.append(f"{violations} certified-bound violations out of 100")
        for kappa in (0.7, 1.3):
            gen = Reset(kappa, random_state(rng, 3))
            dm = random_trace_annihilating(rng, 3)
            rep = sensitivity_report(gen, dm)
            if abs(rep.lhs - rep.rhs_nominal) > 1e-9:
                bad.append(
                    f"reset kappa={kappa}: |delta|={rep.lhs!r} "
                    f"vs bound {rep.rhs_nominal!r}"
                )


def test_criterion_06_intrinsic_metric(capsys):
    """Hessian of the local cost plus coupling terms is k + lambda * degree."""
    with criterion(capsys, 6, "intrinsic metric equals k + lambda*deg") as bad:
        for k in (1.0, 2.0):
            functional = QuadraticFunctional([[k]], [0.7])
            for lam in (0.0, 0.5):
                for deg in (1, 2):
                    neighbors = tuple(
                        (np.array([float(j)]), lam) for j in range(deg)
                    )
                    metric = hessian_metric(
                        lambda q: quadratic_cost(q, functional, neighbors),
                        np.array([0.3]),
                    )
                    got = metric.entries[0, 0]
                    want = k + lam * deg
                    if abs(got - want) > 1e-6:
                        bad.append(f"k={k} lam={lam} deg={deg}: {got!r} != {want}")


def test_criterion_07_fisher_equivalences(capsys):
    """Divergence Hessian = covariance on the qutrit; classical on diagonals."""
    with criterion(capsys, 7, "Fisher/covariance/classical equivalences") as bad:
        cartan = CartanSet([GM[2], GM[7]])
        fisher = fisher_from_divergence(gibbs_family(cartan), np.zeros(2))
        target = np.diag([2.0 / 3.0, 2.0 / 3.0])
        if np.abs(fisher.entries - target).max() > 1e-4:
            bad.append(f"qutrit Fisher at 0: {fisher.entries.tolist()}")
        cov = covariance_metric(DensityOperator(np.eye(3) / 3.0), cartan)
        if np.abs(fisher.entries - cov.entries).max() > 1e-4:
            bad.append("qutrit Fisher differs from covariance")

        rng = np.random.default_rng(707)
        for trial in range(10):
            d1 = np.diag(rng.uniform(-1.0, 1.0, size=3))
            d2 = np.diag(rng.uniform(-1.0, 1.0, size=3))
            family = gibbs_family(CartanSet([d1, d2]))
            anchor = rng.uniform(-0.2, 0.2, size=2)

            def p_family(theta):
                return np.diag(family(theta).entries).real

            quantum = fisher_from_divergence(family, anchor)
            classical = classical_fisher(p_family, anchor)
            diff = np.abs(quantum.entries - classical.entries).max()
            if diff > 1e-6:
                bad.append(f"diagonal family {trial}: max diff {diff:.2e}")

        bern = classical_fisher(lambda t: np.array([t[0], 1.0 - t[0]]), [0.5])
        if abs(bern.entries[0, 0] - 4.0) > 1e-6:
            bad.append(f"Bernoulli Fisher at 1/2: {bern.entries[0, 0]!r}")


def chain_instance():
    graph = ContextGraph(
        [("A", 1), ("B", 1), ("C", 1)], [("A", "B", 1.0), ("B", "C", 1.0)]
    )
    functionals = {
        "A": QuadraticFunctional([[1.0]], [0.0]),
        "B": QuadraticFunctional([[1.0]], [1.0]),
        "C": QuadraticFunctional([[1.0]], [0.0]),
    }
    return GlobalActionSpec(graph, functionals)


def test_criterion_08_self_consistency(capsys):
    """Three-context chain minimizer, checked against gradient descent."""
    with criterion(capsys, 8, "discrete self-consistency solution") as bad:
        spec = chain_instance()
        result = solve_self_consistent(spec)
        want = {"A": 0.25, "B": 0.5, "C": 0.25}
        for cid, value in want.items():
            if abs(result.charges[cid][0] - value) > 1e-8:
                bad.append(f"{cid}: {result.charges[cid][0]!r} != {value}")
        if result.residual_norm > 1e-10:
            bad.append(f"residual {result.residual_norm!r} > 1e-10")

        # independent minimizer: plain gradient descent on the global action,
        # with the gradient written out by hand from calculus
        k = np.ones(3)
        pref = np.array([0.0, 1.0, 0.0])
        lap = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
        rng = np.random.default_rng(808)
        solved = np.array([result.charges[c][0] for c in ("A", "B", "C")])
        for start in range(10):
            q = rng.uniform(-3.0, 3.0, size=3)
            for _ in range(4000):
                grad = k * (q - pref) + lap @ q
                if np.linalg.norm(grad) < 1e-10:
                    break
                q = q - 0.2 * grad
            if np.abs(q - solved).max() > 1e-6:
                bad.append(f"start {start}: descent reached {q.tolist()}")
        action = global_action(spec, result.charges)
        descent_action = float(0.5 * (q - pref) @ (k * (q - pref)) + 0.5 * q @ lap @ q)
        if abs(action - descent_action) > 1e-8:
            bad.append(f"action mismatch: {action!r} vs {descent_action!r}")


def test_criterion_09_continuum_order(capsys):
    """Chain Laplacian converges to -f'' at second order in the spacing."""
    with criterion(capsys, 9, "continuum limit order 2.0 +/- 0.2") as bad:
        sample = lambda x: math.sin(math.pi * x)
        second = lambda x: -math.pi * math.pi * math.sin(math.pi * x)
        e50 = chain_continuum_report(50, 1.0, sample, second).laplacian_error
        e200 = chain_continuum_report(200, 1.0, sample, second).laplacian_error
        h50, h200 = 1.0 / 49.0, 1.0 / 199.0
        order = math.log(e50 / e200) / math.log(h50 / h200)
        if abs(order - 2.0) > 0.2:
            bad.append(f"order between N=50 and N=200: {order:.4f}")


def su2_fragment_loop(theta):
    cartan = CartanSet([GM[2], GM[7]], labels=("t3", "t8"))
    return [
        charge_transport(unitary_conjugation_channel(GM[0], theta), cartan,
                         source="Q1", target="Q2"),
        charge_transport(unitary_conjugation_channel(GM[0], -theta), cartan,
                         source="Q2", target="Q1"),
    ]


def conjugation_oracle(theta):
    """Loop deviation computed by nothing but hand-built matrix conjugation."""
    u = np.eye(3, dtype=complex)
    u[0, 0] = u[1, 1] = math.cos(theta)
    u[0, 1] = u[1, 0] = 1j * math.sin(theta)
    h = [GM[2], GM[7]]

    def compress(unitary):
        m = np.empty((2, 2))
        for a in range(2):
            for b in range(2):
                m[a, b] = np.trace(
                    h[a] @ unitary.conj().T @ h[b] @ unitary
                ).real / 2.0
        return m

    return compress(u.conj().T) @ compress(u) - np.eye(2)


def test_criterion_10_qutrit_holonomy(capsys):
    """Second-order loop defect with curvature diag(-4, 0); exact swap map."""
    with criterion(capsys, 10, "qutrit holonomy exponent, curvature, swap") as bad:
        report = holonomy_fit(su2_fragment_loop, [0.1, 0.05, 0.025])
        if abs(report.fitted_exponent - 2.0) > 0.05:
            bad.append(f"fitted exponent {report.fitted_exponent!r}")
        k_fit = report.fitted_curvature
        if abs(k_fit[0, 0] + 4.0) > 0.02 * 4.0:
            bad.append(f"K[0,0] = {k_fit[0, 0]!r} not within 2% of -4")
        if max(abs(k_fit[0, 1]), abs(k_fit[1, 0]), abs(k_fit[1, 1])) > 1e-6:
            bad.append(f"K off-pattern entries: {k_fit.tolist()}")
        oracle = conjugation_oracle(0.025)
        if np.abs(report.deviation_matrix - oracle).max() > 1e-12:
            bad.append("deviation disagrees with direct-conjugation oracle")

        zero = loop_holonomy(su2_fragment_loop(0.0))
        if not np.array_equal(zero, np.zeros((2, 2))):
            bad.append(f"theta=0 deviation not exactly zero: {zero.tolist()}")

        swap = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
        cartan = CartanSet([GM[2], GM[7]])
        t = charge_transport(partial_swap_channel(swap, 1.0), cartan)
        if np.abs(t.matrix - np.diag([-1.0, 1.0])).max() > 1e-12:
            bad.append(f"full swap transport {t.matrix.tolist()}")


def test_criterion_11_geodesic_minimality(capsys):
    """Straight lines beat every perturbed path; unit metric gives L^2/2."""
    with criterion(capsys, 11, "straight-line path cost minimality") as bad:
        rng = np.random.default_rng(1111)
        a, b = np.array([0.0, 1.0]), np.array([2.0, -1.0])
        taus = np.linspace(0.0, 1.0, 11)
        straight = [a + t * (b - a) for t in taus]
        losses = 0
        for trial in range(100):
            g = rng.standard_normal((2, 2))
            metric = MetricMatrix(g @ g.T + 0.5 * np.eye(2))
            base = path_cost(straight, metric)
            bump = rng.standard_normal((11, 2)) * 0.1
            bump[0] = bump[-1] = 0.0
            perturbed = [p + db for p, db in zip(straight, bump)]
            if not path_cost(perturbed, metric) > base:
                losses += 1
        if losses:
            bad.append(f"{losses} perturbed paths did not cost more")
        unit = path_cost(straight, MetricMatrix(np.eye(2)))
        length_sq = float((b - a) @ (b - a))
        if abs(unit - length_sq / 2.0) > 1e-12:
            bad.append(f"unit-metric cost {unit!r} != {length_sq / 2.0}")


def run_demo(capsys, name, *extra):
    code = cli.main(["demo", name, *extra])
    out, _ = capsys.readouterr()
    return code, out


def by_id(report, task_id):
    for r in report.results:
        if r.task == task_id:
            return r
    raise AssertionError(f"missing task {task_id!r}")


def mutate(data: bytes, rng: np.random.Generator) -> bytes:
    junk = [b"NaN", b"Infinity", b'"zz"', b"null", b"-7", b"1e999",
            b"[", b"}", b",", b"0.0,0.0", b'"dim": 0', b'"rate": -1']
    numbers = [b"0.0", b"1.0", b"-0.5", b"2", b"1e-3", b"0.9999"]
    body = bytearray(data)
    for _ in range(int(rng.integers(1, 4))):
        op = int(rng.integers(0, 6))
        pos = int(rng.integers(0, max(len(body), 1)))
        if op == 0 and body:
            del body[pos : pos + int(rng.integers(1, 9))]
        elif op == 1:
            body[pos:pos] = bytes([int(rng.integers(0, 256))])
        elif op == 2 and body:
            body[pos : pos + 1] = bytes([int(rng.integers(32, 127))])
        elif op == 3:
            token = junk[int(rng.integers(0, len(junk)))]
            body[pos:pos] = token
        elif op == 4:
            # swap one numeric literal for another; often still parses, and
            # may only fail later inside a task (pure targets, huge rates)
            spans = [
                (m.start(), m.end())
                for m in re.finditer(rb"-?\d+(?:\.\d+)?(?:e-?\d+)?", bytes(body))
            ]
            if spans:
                lo, hi = spans[int(rng.integers(0, len(spans)))]
                body[lo:hi] = numbers[int(rng.integers(0, len(numbers)))]
        else:
            body = body[:pos] if rng.integers(0, 2) else body[pos:] + body[:pos]
    return bytes(body)


def test_criterion_12_cli_determinism_and_robustness(capsys, tmp_path):
    """Demos carry the numeric results; reports are byte-stable; fuzz-safe."""
    with criterion(capsys, 12, "CLI determinism, demo values, fuzz") as bad:
        code, markov = run_demo(capsys, "markov-chain")
        if code != 0:
            bad.append(f"markov-chain demo exit {code}")
        report = parse_machine(markov)
        for task_id, kappa in (("analyze-c1", 0.5), ("analyze-c2", 1.0),
                               ("analyze-c3", 2.0)):
            gap = by_id(report, task_id).outputs["spectral_gap"]
            if abs(gap - kappa) > 1e-10:
                bad.append(f"{task_id}: gap {gap!r} != {kappa}")
        solve = by_id(report, "solve-chain").outputs
        for cid, value in (("C1", 0.25), ("C2", 0.5), ("C3", 0.25)):
            if abs(solve["charges"][cid][0] - value) > 1e-8:
                bad.append(f"demo solve {cid}: {solve['charges'][cid][0]!r}")

        code, metric_out = run_demo(capsys, "qutrit-metric")
        if code != 0:
            bad.append(f"qutrit-metric demo exit {code}")
        report = parse_machine(metric_out)
        fisher = np.array(by_id(report, "fisher-at-zero").outputs["entries"])
        cov = np.array(by_id(report, "covariance-stationary").outputs["entries"])
        if np.abs(fisher - np.diag([2.0 / 3.0, 2.0 / 3.0])).max() > 1e-4:
            bad.append(f"demo Fisher {fisher.tolist()}")
        if np.abs(fisher - cov).max() > 1e-4:
            bad.append("demo Fisher differs from covariance")

        code, holo_out = run_demo(capsys, "qutrit-holonomy")
        if code != 0:
            bad.append(f"qutrit-holonomy demo exit {code}")
        report = parse_machine(holo_out)
        fit = by_id(report, "loop-fit").outputs
        if abs(fit["fitted_exponent"] - 2.0) > 0.05:
            bad.append(f"demo exponent {fit['fitted_exponent']!r}")
        k_fit = np.array(fit["fitted_curvature"])
        if abs(k_fit[0, 0] + 4.0) > 0.02 * 4.0 or np.abs(k_fit).max() > 4.1:
            bad.append(f"demo curvature {k_fit.tolist()}")
        swap = np.array(by_id(report, "full-swap").outputs["matrix"])
        if np.abs(swap - np.diag([-1.0, 1.0])).max() > 1e-12:
            bad.append(f"demo swap {swap.tolist()}")

        # byte determinism: same demo, repeated and with a thread pool
        for name in ("markov-chain", "qutrit-metric", "qutrit-holonomy"):
            _, first = run_demo(capsys, name, "--jobs", "1")
            _, again = run_demo(capsys, name, "--jobs", "1")
            _, pooled = run_demo(capsys, name, "--jobs", "8")
            if not (first == again == pooled):
                bad.append(f"{name}: report bytes differ across runs/jobs")

        # fuzz: 1000 mutated scenario files must fail cleanly or run cleanly
        rng = np.random.default_rng(999)
        bases = []
        from importlib import resources

        for fname in cli.DEMOS.values():
            bases.append(
                resources.files("nqs_geom").joinpath("scenarios", fname).read_bytes()
            )
        target = tmp_path / "mutant.nqs"
        seen_codes = set()
        for i in range(1000):
            target.write_bytes(mutate(bases[i % 3], rng))
            try:
                code = cli.main(["run", str(target)])
            except BaseException as exc:  # any escape is a robustness failure
                bad.append(f"mutant {i}: crashed with {type(exc).__name__}: {exc}")
                break
            capsys.readouterr()
            seen_codes.add(code)
            if code not in (0, 1, 2):
                bad.append(f"mutant {i}: exit code {code}")
                break
        if not seen_codes <= {0, 1, 2}:
            bad.append(f"unexpected exit codes {sorted(seen_codes)}")
