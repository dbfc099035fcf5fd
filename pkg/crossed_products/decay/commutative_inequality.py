import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from config import ALGEBRA_TOL, DEFAULT_SEED, INEQUALITY_TOL, JOBLIB_N_JOBS
from crossed_products.coefficients.block_algebra import AlgElement, AlgState, pure_states
from crossed_products.convolution.regular_representation import apply_regular
from crossed_products.convolution.twisted_convolution import CcElement, random_cc
from crossed_products.groups.discrete_groups import GroupElement
from crossed_products.ideals.invariant_ideals import orbit_structure
from crossed_products.systems.twisted_system import ConditionViolation, TwistedSystem

logger = logging.getLogger(__name__)


@dataclass
class InequalityResult:
    lhs: float
    rhs: float
    pointwise_residual: Optional[float] = None

    @property
    def residual(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.pointwise_residual is not None and self.pointwise_residual < -INEQUALITY_TOL:
            return False
        return self.residual >= -INEQUALITY_TOL

    def to_dict(self) -> Dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "pointwise_residual": self.pointwise_residual,
            "passed": self.passed,
        }


def _check_commutative(system: TwistedSystem):
    if not system.algebra.is_commutative:
        raise ValueError(f"{system.name} has a noncommutative coefficient algebra {system.algebra.dims}")


def _action_samples(system: TwistedSystem) -> List[GroupElement]:
    group = system.group
    return list(group.elements()) if group.is_finite else list(group.alphabet.values())


def fixed_point_defect(system: TwistedSystem, a: AlgElement) -> float:
    """max ‖α_k(a) − a‖ over the generators (all elements on finite groups)."""
    return max((system.alpha(k)(a).distance(a) for k in _action_samples(system)), default=0.0)


def _profile(values: Dict[GroupElement, AlgElement], omega: AlgState) -> Dict[GroupElement, float]:
    return {g: omega.seminorm(a) for g, a in values.items()}


def scalar_convolution(group, phi: Dict[GroupElement, float], psi: Dict[GroupElement, float]) -> Dict[GroupElement, float]:
    """(φ ∗ ψ)(h) = Σ_g φ(g)ψ(g⁻¹h) for finitely supported φ, ψ."""
    out: Dict[GroupElement, float] = {}
    for g, x in phi.items():
        for k, y in psi.items():
            h = group.multiply(g, k)
            out[h] = out.get(h, 0.0) + x * y
    return out


def _l2(values) -> float:
    return float(np.sqrt(sum(v * v for v in values)))


def _inequality(f: CcElement, xi: CcElement, omega: AlgState, coefficients, pointwise: bool) -> InequalityResult:
    group = f.system.group
    image = _profile(dict(apply_regular(f, xi).items()), omega)
    bound = scalar_convolution(group, _profile(coefficients, omega), _profile(dict(xi.items()), omega))
    result = InequalityResult(lhs=_l2(image.values()), rhs=_l2(bound.values()))
    if pointwise:
        support = set(image) | set(bound)
        result.pointwise_residual = min((bound.get(h, 0.0) - image.get(h, 0.0) for h in support), default=0.0)
    return result


def commutative_inequality_check(f: CcElement, xi: CcElement, omega: AlgState, pointwise: bool = False) -> InequalityResult:
    """
    ‖|Λ(f)ξ|_ω‖₂ ≤ ‖|f|_ω ∗ |ξ|_ω‖₂ for commutative A and A^α-valued f, computed exactly over
    the finite supports. With `pointwise`, the per-element comparison is reported too; it is
    only guaranteed when ξ is supported at one point.
    """
    f._check(xi)
    system = f.system
    _check_commutative(system)
    for g, a in f.items():
        defect = fixed_point_defect(system, a)
        if defect > ALGEBRA_TOL:
            raise ConditionViolation(
                f"f({system.group.format_element(g)}) is not fixed by the action", defect, witness=g
            )
    result = _inequality(f, xi, omega, dict(f.items()), pointwise)
    if not result.passed:
        logger.error(f"Commutative inequality fails on {system.name}: residual {result.residual:.3e}")
    return result


def random_fixed_element(system: TwistedSystem, rng: np.random.Generator) -> AlgElement:
    """A random element of A^α: constant on every α-orbit of points."""
    values = np.zeros(system.algebra.n_blocks, dtype=complex)
    for orbit in orbit_structure(system):
        values[list(orbit)] = rng.standard_normal() + 1j * rng.standard_normal()
    return system.algebra.from_diagonal(values)


@dataclass
class InequalitySweep:
    system: str
    trials: int
    min_residual: float
    counterexamples: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> Dict:
        return {
            "system": self.system,
            "trials": self.trials,
            "min_residual": self.min_residual,
            "counterexamples": self.counterexamples,
            "passed": self.passed,
        }


def _random_support(system: TwistedSystem, radius: float, rng: np.random.Generator) -> List[GroupElement]:
    ball = system.length.ball(radius)
    size = int(rng.integers(1, len(ball) + 1))
    return [ball[i] for i in sorted(rng.choice(len(ball), size=size, replace=False))]


def _trial(system: TwistedSystem, radius: float, seed, twisted: bool) -> List[Dict]:
    rng = np.random.default_rng(seed)
    group = system.group
    if twisted:
        f = random_cc(system, _random_support(system, radius, rng), rng)
        coefficients = {g: system.alpha_inv(g)(a) for g, a in f.items()}
    else:
        f = CcElement(system, {g: random_fixed_element(system, rng) for g in _random_support(system, radius, rng)})
        coefficients = dict(f.items())
    xi = random_cc(system, _random_support(system, radius, rng), rng)
    rows = []
    for omega in pure_states(system.algebra, 0):
        result = _inequality(f, xi, omega, coefficients, pointwise=len(xi) == 1)
        rows.append(
            {
                "state": omega.block,
                "residual": result.residual,
                "pointwise_residual": result.pointwise_residual,
                "f": f.describe(),
                "xi": xi.describe(),
                "group": group.name,
            }
        )
    return rows


def _sweep(system: TwistedSystem, trials: int, radius: float, rng, n_jobs, twisted: bool) -> InequalitySweep:
    _check_commutative(system)
    rng = rng or np.random.default_rng(DEFAULT_SEED)
    seeds = np.random.SeedSequence(int(rng.integers(2**32))).spawn(trials)
    batches = Parallel(n_jobs=n_jobs or JOBLIB_N_JOBS, prefer="threads")(
        delayed(_trial)(system, radius, seed, twisted) for seed in seeds
    )
    rows = [row for batch in batches for row in batch]
    failing = [
        row
        for row in rows
        if row["residual"] < -INEQUALITY_TOL
        or (row["pointwise_residual"] is not None and row["pointwise_residual"] < -INEQUALITY_TOL)
    ]
    return InequalitySweep(
        system=system.name,
        trials=trials,
        min_residual=min((row["residual"] for row in rows), default=0.0),
        counterexamples=failing,
    )


def commutative_inequality_sweep(
    system: TwistedSystem,
    trials: int,
    radius: float = 2,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
) -> InequalitySweep:
    """Random A^α-valued f and random ξ in ball(radius), checked at every point evaluation."""
    sweep = _sweep(system, trials, radius, rng, n_jobs, twisted=False)
    if not sweep.passed:
        logger.error(f"{len(sweep.counterexamples)} violations of the commutative inequality on {system.name}")
    return sweep


def twisted_inequality_experiment(
    system: TwistedSystem,
    trials: int,
    radius: float = 2,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
) -> InequalitySweep:
    """
    Experimental: ‖|Λ(f)ξ|_ω‖₂ ≤ ‖|f^α|_ω ∗ |ξ|_ω‖₂ with f^α(g) = α_g⁻¹(f(g)) for arbitrary f.
    This is an open conjecture; counterexamples are recorded, not raised.
    """
    sweep = _sweep(system, trials, radius, rng, n_jobs, twisted=True)
    if sweep.counterexamples:
        logger.warning(f"Twisted inequality: {len(sweep.counterexamples)} counterexamples on {system.name}")
    else:
        logger.info(f"Twisted inequality held on {trials} trials over {system.name}")
    return sweep
