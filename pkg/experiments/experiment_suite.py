import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
import pandas as pd

from config import ALGEBRA_TOL, DEFAULT_RADIUS_SCHEDULE, SPECTRAL_RTOL
from crossed_products.convolution.regular_representation import full_regular_matrix, opnorm_bounds
from crossed_products.convolution.twisted_convolution import (
    CcElement,
    alpha_square,
    delta,
    expectation,
    l1_norm,
    norms,
    random_cc,
    twisted_mul,
)
from crossed_products.decay.commutative_inequality import commutative_inequality_sweep, twisted_inequality_experiment
from crossed_products.decay.content import content_probe, nested_content_probes, tail_profile
from crossed_products.decay.decay_probes import commutative_decay_chain, decay_constant_probe
from crossed_products.decay.weights import make_weight
from crossed_products.groups.discrete_groups import LengthFunction, make_length
from crossed_products.ideals.invariant_ideals import (
    central_projection_split,
    e_invariance_probe,
    enumerate_invariant_ideals,
    ideal_membership,
    psl_preset,
    quotient_system,
    random_in_ideal,
)
from crossed_products.multipliers.multipliers import geometric_kernel, multiplier_norm_probe, preserves_ideal
from crossed_products.multipliers.positive_definite import pd_check
from crossed_products.summation.convergence import run_convergence
from crossed_products.summation.summing_nets import (
    abel_poisson_net,
    approx_data_net,
    box_approximation_data,
    fejer_net,
    identity_net,
    length_kernel_net,
    unitary_box_approximation_data,
)
from crossed_products.modules.equivariant import unitary_rep_from_generators
from crossed_products.systems.twisted_system import (
    TwistedSystem,
    inverse_pair_violation,
    parse_angle,
    unit_phase,
    validate_system,
)

logger = logging.getLogger(__name__)


@dataclass
class ExperimentContext:
    system: Optional[TwistedSystem]
    length: Optional[LengthFunction]
    parameters: Dict
    rng: np.random.Generator
    n_jobs: Optional[int] = None

    def param(self, name, default=None):
        return self.parameters.get(name, default)


@dataclass
class ExperimentOutcome:
    passed: bool
    results: Dict
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)


def _support_of(system: TwistedSystem, radius: float):
    group = system.group
    return group.elements() if group.is_finite else group.ball(radius)


def element_from_parameters(ctx: ExperimentContext) -> CcElement:
    """
    The test element f: either `element` (word → scalar, or word → interleaved coordinates)
    or a seeded random element on ball(`support_radius`).
    """
    system = ctx.system
    spec = system.algebra
    given = ctx.param("element")
    if given is None:
        return random_cc(system, _support_of(system, ctx.param("support_radius", 1)), ctx.rng)
    coefficients = {}
    for word, value in given.items():
        g = system.group.normal_form(str(word))
        a = spec.from_interleaved(value) if isinstance(value, (list, tuple)) else spec.scalar(complex(value))
        coefficients[g] = coefficients[g] + a if g in coefficients else a
    f = CcElement(system, coefficients)
    if f.is_zero():
        raise ValueError("The configured element is zero")
    return f


# -- validate / arithmetic / norms ---------------------------------------------------

def run_validate(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    group = system.group
    report = validate_system(system, rng=ctx.rng)
    elements = _support_of(system, ctx.param("inverse_radius", 2))
    results = {"validation": report.to_dict(group), "inverse_pair_violation": inverse_pair_violation(system, elements)}
    return ExperimentOutcome(report.passed, results)


def _random_on_ball(ctx: ExperimentContext) -> CcElement:
    support = _support_of(ctx.system, ctx.param("support_radius", 2))
    size = int(ctx.rng.integers(1, min(len(support), ctx.param("max_support", 6)) + 1))
    picks = sorted(ctx.rng.choice(len(support), size=size, replace=False))
    return random_cc(ctx.system, [support[i] for i in picks], ctx.rng)


def run_arithmetic_suite(ctx: ExperimentContext) -> ExperimentOutcome:
    """Associativity, distributivity, involution and expectation identities on random triples."""
    system = ctx.system
    group = system.group
    trials = int(ctx.param("trials", 200))
    worst: Dict[str, float] = {
        "associativity": 0.0,
        "distributivity": 0.0,
        "involution": 0.0,
        "star_antimultiplicative": 0.0,
        "expectation_square": 0.0,
        "expectation_conjugation": 0.0,
    }
    if group.is_finite:
        worst["regular_product"] = 0.0
        worst["regular_adjoint"] = 0.0
    rows = []
    for k in range(trials):
        f1, f2, f3 = (_random_on_ball(ctx) for _ in range(3))
        scale = max(1.0, l1_norm(f1) * l1_norm(f2) * l1_norm(f3))
        residuals = {
            "associativity": ((f1 * f2) * f3).distance(f1 * (f2 * f3)) / scale,
            "distributivity": (f1 * (f2 + f3)).distance(f1 * f2 + f1 * f3) / scale,
            "involution": f1.star().star().distance(f1) / scale,
            "star_antimultiplicative": (f1 * f2).star().distance(f2.star() * f1.star()) / scale,
            "expectation_square": expectation(f1.star() * f1).distance(alpha_square(f1)) / scale,
        }
        g = group.random_element(ctx.rng) if not group.is_finite else group.elements()[k % group.order]
        d = delta(system, g)
        conjugated = expectation(d * f1 * d.star())
        residuals["expectation_conjugation"] = conjugated.distance(system.alpha(g)(expectation(f1))) / scale
        if group.is_finite:
            m1, m2 = full_regular_matrix(f1), full_regular_matrix(f2)
            residuals["regular_product"] = float(np.max(np.abs(full_regular_matrix(twisted_mul(f1, f2)) - m1 @ m2))) / scale
            residuals["regular_adjoint"] = float(np.max(np.abs(full_regular_matrix(f1.star()) - m1.conj().T))) / scale
        for name, value in residuals.items():
            worst[name] = max(worst[name], value)
        rows.append({"trial": k, **residuals})
    passed = all(value <= ALGEBRA_TOL for value in worst.values())
    if not passed:
        logger.error(f"Arithmetic suite on {system.name} failed: {worst}")
    return ExperimentOutcome(passed, {"trials": trials, "max_residuals": worst}, {"residuals": pd.DataFrame(rows)})


def run_norms(ctx: ExperimentContext) -> ExperimentOutcome:
    f = element_from_parameters(ctx)
    schedule = ctx.param("radius_schedule", list(DEFAULT_RADIUS_SCHEDULE))
    if f.system.group.is_finite:
        schedule = [min(R, f.system.group.full_radius) for R in schedule]
    bounds = opnorm_bounds(f, schedule, ctx.length, n_jobs=ctx.n_jobs)
    values = {tag: norms(f, tag) for tag in ("l1", "linf", "alpha")}
    chain_ok = values["alpha"] <= values["l1"] * (1 + SPECTRAL_RTOL) + SPECTRAL_RTOL
    chain_ok = chain_ok and bounds.lower <= bounds.upper * (1 + SPECTRAL_RTOL) + SPECTRAL_RTOL
    results = {"element": f.describe(), "norms": values, "opnorm": bounds.to_dict(), "sandwich_holds": chain_ok}
    return ExperimentOutcome(chain_ok, results, {"opnorm": bounds.to_frame()})


# -- summing nets ------------------------------------------------------------------

def _convergence(ctx: ExperimentContext, net, f: CcElement):
    schedule = ctx.param("radius_schedule", [])
    report = run_convergence(net, f, schedule, target_error=ctx.param("target_error"), rng=ctx.rng, n_jobs=ctx.n_jobs)
    return report


def run_fejer(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    group = system.group
    f = element_from_parameters(ctx)
    schedule = [int(i) for i in ctx.param("schedule", [2, 4, 8, 16])]
    net = fejer_net(system, schedule)
    report = _convergence(ctx, net, f)
    frame = report.to_frame()
    closed_form = [sum((1 - group.folner_ratio(g, i)) * a.norm() for g, a in f.items()) for i in schedule]
    frame["closed_form_l1_error"] = closed_form
    closed_form_gap = max(abs(a - b) for a, b in zip(closed_form, report.l1_errors))
    pd_rows = []
    for i, T in zip(schedule, net.multipliers):
        S = group.elements() if group.is_finite else group.ball(ctx.param("pd_radius", i))
        check = pd_check(T.kernel, S, group)
        pd_rows.append({"index": i, "min_eigenvalue": check.min_eigenvalue, "is_pd": check.is_pd})
    results = {"convergence": report.to_dict(), "closed_form_gap": closed_form_gap}
    passed = report.dominated and closed_form_gap <= 1e-12 and all(row["is_pd"] for row in pd_rows)
    if group.is_finite:
        probes = [multiplier_norm_probe(T, int(ctx.param("probe_samples", 8)), rng=ctx.rng, n_jobs=ctx.n_jobs) for T in net.multipliers]
        results["norm_probes"] = [p.to_dict() for p in probes]
        passed = passed and all(p.ratio_max <= 1 + 1e-9 for p in probes)
    return ExperimentOutcome(passed, results, {"convergence": frame, "pd": pd.DataFrame(pd_rows)})


def run_abel_poisson(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    group = system.group
    tag = ctx.param("length", "l1")
    f = element_from_parameters(ctx)
    r_schedule = [float(r) for r in ctx.param("r_schedule", [0.5, 0.9, 0.99, 0.999])]
    net = abel_poisson_net(system, tag, r_schedule, float(ctx.param("eps", 1e-8)))
    report = _convergence(ctx, net, f)
    L = make_length(group, "l1" if tag == "word" else tag)
    S = group.ball(ctx.param("pd_radius", 4), L.tag)
    pd_rows = []
    for r in ctx.param("pd_r", [0.5, 0.9, 0.99]):
        check = pd_check(geometric_kernel(float(r), L), S, group)
        pd_rows.append({"r": float(r), "min_eigenvalue": check.min_eigenvalue, "is_pd": check.is_pd})
    passed = report.dominated and all(row["is_pd"] for row in pd_rows)
    if report.target_error is not None:
        passed = passed and report.converged
    results = {"convergence": report.to_dict(), "net": net.describe()}
    return ExperimentOutcome(passed, results, {"convergence": report.to_frame(), "pd": pd.DataFrame(pd_rows)})


APPROX_DATA_KINDS = ("box", "tensor-unitary")


def _approximation_data(ctx: ExperimentContext, sizes):
    system = ctx.system
    kind = ctx.param("data", "box")
    if kind not in APPROX_DATA_KINDS:
        raise ValueError(f"Unknown approximation data {kind!r}; expected one of {list(APPROX_DATA_KINDS)}")
    if kind == "box":
        return box_approximation_data(system, sizes)
    phases = ctx.param("unitary")
    if not phases:
        raise ValueError("tensor-unitary data need `unitary`: generator letter -> diagonal phases in turns")
    images = {str(letter): np.diag([unit_phase(parse_angle(t)) for t in turns]) for letter, turns in phases.items()}
    d = next(iter(images.values())).shape[0]
    w = unitary_rep_from_generators(system.group, images)
    return unitary_box_approximation_data(system, sizes, w, d)


def run_approx_net(ctx: ExperimentContext) -> ExperimentOutcome:
    """Box data or unitary-twisted box data; both must reproduce the Fejér kernels."""
    system = ctx.system
    sizes = [int(n) for n in ctx.param("sizes", [2, 4, 8])]
    rep, data = _approximation_data(ctx, sizes)
    net = approx_data_net(rep, data, sizes)
    f = element_from_parameters(ctx)
    report = _convergence(ctx, net, f)
    fejer = fejer_net(system, sizes)
    kernel_gap = 0.0
    unit = system.algebra.unit()
    for T, K in zip(net.multipliers, fejer.multipliers):
        for g in f.support:
            kernel_gap = max(kernel_gap, T(g, unit).distance(K(g, unit)))
    results = {
        "data": ctx.param("data", "box"),
        "rank": rep.rank,
        "convergence": report.to_dict(),
        "fejer_kernel_gap": kernel_gap,
        "bounds": net.bounds,
    }
    passed = report.dominated and kernel_gap <= ALGEBRA_TOL
    return ExperimentOutcome(passed, results, {"convergence": report.to_frame()})


# -- decay ---------------------------------------------------------------------------

def run_decay_probe(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    spec = ctx.param("weight", {"tag": "power", "params": {"s": 1}})
    weight = make_weight(spec["tag"], spec.get("params"), ctx.length)
    radius = float(ctx.param("radius", 2))
    budget = int(ctx.param("sample_budget", 16))
    probe = decay_constant_probe(system, weight, radius, budget, ctx.rng, ctx.n_jobs)
    results = {"probe": probe.to_dict()}
    passed = probe.l1_route_holds
    if system.algebra.is_commutative and system.trivial_action:
        chain = commutative_decay_chain(system, weight, radius, budget, ctx.rng)
        results["commutative_chain"] = chain.to_dict()
        passed = passed and chain.holds
    frame = pd.DataFrame({"sample": range(len(probe.ratios)), "ratio": probe.ratios})
    return ExperimentOutcome(passed, results, {"ratios": frame})


def run_content_probe(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    group = system.group
    budget = int(ctx.param("sample_budget", 4))
    subsets = ctx.param("subsets")
    if subsets is not None:
        chain = [[group.normal_form(str(w)) for w in subset] for subset in subsets]
    else:
        chain = [list(group.ball(R)) for R in ctx.param("chain_radii", [0, 1])]
    estimates = nested_content_probes(system, chain, budget, ctx.rng, ctx.n_jobs)
    rows = [
        {"size": len(e.subset), "lower": e.lower, "upper_universal": e.upper_universal, "upper_scalar": e.upper_scalar}
        for e in estimates
    ]
    monotone = all(b.lower >= a.lower - 1e-12 for a, b in zip(estimates, estimates[1:]))
    passed = monotone and all(e.within_bounds for e in estimates)
    extra = ctx.param("extra_subset")
    results = {"estimates": [e.to_dict(group) for e in estimates], "monotone": monotone}
    if extra is not None:
        single = content_probe(system, [group.normal_form(str(w)) for w in extra], budget, ctx.rng, n_jobs=ctx.n_jobs)
        results["extra"] = single.to_dict(group)
        passed = passed and single.within_bounds
    tables = {"content": pd.DataFrame(rows)}
    product = _random_on_ball(ctx) * _random_on_ball(ctx)
    tables["tail"] = tail_profile(product, make_length(group), max_shell=int(ctx.param("tail_shells", 6)))
    return ExperimentOutcome(passed, results, tables)


def run_commutative_inequality(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    radius = float(ctx.param("radius", 2))
    sweep = commutative_inequality_sweep(system, int(ctx.param("trials", 200)), radius, ctx.rng, ctx.n_jobs)
    results = {"inequality": sweep.to_dict()}
    twisted_trials = int(ctx.param("twisted_trials", 0))
    if twisted_trials:
        experiment = twisted_inequality_experiment(system, twisted_trials, radius, ctx.rng, ctx.n_jobs)
        results["twisted_experiment"] = experiment.to_dict()
    return ExperimentOutcome(sweep.passed, results)


# -- ideals ----------------------------------------------------------------------------

def _shipped_nets(system: TwistedSystem, length: Optional[LengthFunction] = None):
    group = system.group
    nets = [identity_net(system)]
    if group.ships_folner:
        nets.append(fejer_net(system, [1, 2, 4]))
    else:
        nets.append(length_kernel_net(system, length or make_length(group), [0.5, 0.9], radius=3))
    if group.family == "Z^d":
        nets.append(abel_poisson_net(system, "l1", [0.5, 0.9]))
    return nets


def run_ideals(ctx: ExperimentContext) -> ExperimentOutcome:
    system = ctx.system
    group = system.group
    samples = int(ctx.param("samples", 100))
    ideals = enumerate_invariant_ideals(system)
    support = _support_of(system, ctx.param("support_radius", 1))
    nets = _shipped_nets(system, ctx.length)
    rows = []
    passed = True
    for ideal in ideals:
        if ideal.is_zero:
            continue
        stays = True
        for _ in range(max(1, samples // max(1, len(ideals)))):
            f = random_in_ideal(system, ideal, support, ctx.rng)
            for net in nets:
                stays = stays and all(ideal_membership(T.apply(f), ideal) for T in net.multipliers)
        preserved = all(preserves_ideal(T, ideal, support, rng=ctx.rng) for net in nets for T in net.multipliers)
        in_kernel = None
        if not ideal.is_whole:
            quotient = quotient_system(system, ideal)
            in_kernel = quotient.in_kernel(random_in_ideal(system, ideal, support, ctx.rng))
        ok = stays and preserved and in_kernel is not False
        passed = passed and ok
        rows.append({"blocks": str(list(ideal.blocks)), "coefficients_stay": stays, "preserved": preserved, "in_kernel": in_kernel})
    generators = [delta(system, group.identity, ideal.unit()) for ideal in ideals if not ideal.is_zero and not ideal.is_whole]
    results = {"n_ideals": len(ideals), "ideals": [i.describe() for i in ideals]}
    if generators:
        probe = e_invariance_probe(generators[:1], int(ctx.param("e_samples", 20)), ctx.rng)
        results["e_invariance"] = probe.to_dict()
        passed = passed and probe.passed
    return ExperimentOutcome(passed, results, {"ideals": pd.DataFrame(rows)})


def run_psl_preset(ctx: ExperimentContext) -> ExperimentOutcome:
    preset = psl_preset()
    system = preset.system
    validation = validate_system(system, rng=ctx.rng)
    p, q, split = central_projection_split(preset.s, preset.generators)
    ideals = enumerate_invariant_ideals(system)
    results = {
        "validation": validation.to_dict(system.group),
        "split": split.to_dict(),
        "p": p.describe(),
        "q": q.describe(),
        "n_ideals": len(ideals),
    }
    passed = validation.passed and split.max_residual <= ALGEBRA_TOL
    return ExperimentOutcome(passed, results)


EXPERIMENT_RUNNERS: Dict[str, Callable[[ExperimentContext], ExperimentOutcome]] = {
    "validate": run_validate,
    "arithmetic-suite": run_arithmetic_suite,
    "norms": run_norms,
    "fejer": run_fejer,
    "abel-poisson": run_abel_poisson,
    "approx-net": run_approx_net,
    "decay-probe": run_decay_probe,
    "content-probe": run_content_probe,
    "commutative-inequality": run_commutative_inequality,
    "ideals": run_ideals,
    "psl-preset": run_psl_preset,
}
