import logging
from typing import Optional

import numpy as np

from crossed_products.coefficients.block_algebra import AlgAutomorphism, AlgebraSpec
from crossed_products.groups.discrete_groups import DiscreteGroup, LengthFunction, make_group, make_length
from crossed_products.systems.section_cocycle import section_system, sl2z_extension
from crossed_products.systems.twisted_system import (
    TwistedSystem,
    inner_action,
    make_system,
    parse_angle,
    permutation_action,
    table_action,
    table_cocycle,
    theta_cocycle,
    unit_phase,
    with_perturbed_cocycle,
)
from experiments.experiment_config import ActionConfig, AutomorphismConfig, CocycleConfig, GroupConfig, SystemConfig

logger = logging.getLogger(__name__)


def build_group(config: GroupConfig) -> DiscreteGroup:
    return make_group(config.family, **config.params())


def _diagonal(turns, d):
    return np.diag([unit_phase(parse_angle(t)) for t in turns]) if turns is not None else np.eye(d)


def _build_automorphism(config: AutomorphismConfig, algebra: AlgebraSpec) -> AlgAutomorphism:
    phases = config.phases
    if phases is not None and [len(t) for t in phases] != list(algebra.dims):
        raise ValueError(f"Table phases must have one entry per matrix row of each block {algebra.dims}")
    unitaries = [_diagonal(phases[j] if phases else None, d) for j, d in enumerate(algebra.dims)]
    return AlgAutomorphism(algebra, tuple(config.permutation), tuple(unitaries))


def _build_action(config: ActionConfig, group: DiscreteGroup, algebra: AlgebraSpec):
    if config.kind == "trivial":
        return None
    if config.kind == "table":
        table = {group.normal_form(word): _build_automorphism(entry, algebra) for word, entry in config.table.items()}
        return table_action(group, algebra, table)
    if config.kind == "permutation":
        for letter, perm in config.permutations.items():
            if sorted(perm) != list(range(algebra.n_blocks)):
                raise ValueError(f"Permutation for {letter!r} is not a permutation of {algebra.n_blocks} blocks: {perm}")
        return permutation_action(group, algebra, config.permutations)
    unitaries = {}
    for letter, turns in config.phases.items():
        if [len(t) for t in turns] != list(algebra.dims):
            raise ValueError(f"Phases for {letter!r} must have one entry per matrix row of each block {algebra.dims}")
        unitaries[letter] = algebra.from_blocks([np.diag([unit_phase(t) for t in block]) for block in turns])
    return inner_action(group, algebra, unitaries)


def _build_cocycle(config: CocycleConfig, group: DiscreteGroup, algebra: AlgebraSpec):
    if config.kind == "theta":
        return theta_cocycle(group, algebra, config.theta)
    if config.kind != "table":
        return None
    table = {}
    for entry in config.table:
        turns = entry.turns if isinstance(entry.turns, list) else [entry.turns] * algebra.n_blocks
        if len(turns) != algebra.n_blocks:
            raise ValueError(f"Cocycle entry ({entry.g}, {entry.h}) needs one phase per block, got {len(turns)}")
        value = algebra.from_blocks([unit_phase(parse_angle(t)) * np.eye(d) for t, d in zip(turns, algebra.dims)])
        table[(group.normal_form(entry.g), group.normal_form(entry.h))] = value
    return table_cocycle(group, algebra, table)


def _provenance(config: CocycleConfig) -> str:
    if config.kind == "theta":
        return f"theta-bicharacter({config.theta})"
    if config.kind == "table":
        return f"cocycle-table({len(config.table)} entries)"
    return "trivial"


def build_system(config: SystemConfig) -> TwistedSystem:
    """Assemble Σ from a validated system block; bad parameters surface as ValueError."""
    if config.cocycle.kind == "section":
        system = section_system(sl2z_extension())
    else:
        group = build_group(config.group)
        algebra = AlgebraSpec(tuple(config.algebra))
        action = _build_action(config.action, group, algebra)
        cocycle = _build_cocycle(config.cocycle, group, algebra)
        system = make_system(
            algebra,
            group,
            action=action,
            cocycle=cocycle,
            provenance=_provenance(config.cocycle),
        )
    if config.cocycle.perturb is not None:
        perturb = config.cocycle.perturb
        group = system.group
        system = with_perturbed_cocycle(system, group.normal_form(perturb.g), group.normal_form(perturb.h), perturb.phase)
    if config.name:
        system = system.fresh(name=config.name)
    logger.info(f"Built system {system.name} ({system.provenance})")
    return system


def build_length(system: TwistedSystem, config: Optional[SystemConfig]) -> LengthFunction:
    tag = config.group.length if config is not None and config.group is not None else None
    return make_length(system.group, tag)
