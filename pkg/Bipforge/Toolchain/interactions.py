"""
Interaction semantics of connectors and propositional interaction logic.
"""

import logging
from functools import reduce
from itertools import product
from typing import Iterable, List, Optional, Sequence

from Bipforge.Toolchain import config
from Bipforge.Toolchain.errors import EmptySet, ModelError, UniverseTooLarge
from Bipforge.Toolchain.models import (
    Atom,
    Configuration,
    ConnectorNode,
    Interaction,
    InteractionSet,
    Not,
    Or,
    PilFormula,
    PortInstance,
    conj,
    render_interaction,
    sorted_interactions,
)
from Bipforge.Toolchain.utils import non_empty_subsets

logger = logging.getLogger(__name__)


# ============================================================================
# CONNECTORS
# ============================================================================

def _combine(children: Sequence[ConnectorNode]) -> InteractionSet:
    """One interaction from each child, unioned"""
    per_child = [interactions_of_connector(child) for child in children]
    return frozenset(frozenset().union(*picked) for picked in product(*per_child))


def interactions_of_connector(connector: ConnectorNode) -> InteractionSet:
    """
    Interactions of a (possibly hierarchical) connector.

    A leaf gives its own port. A node whose children are all synchrons
    needs every child; otherwise any selection of children holding at least
    one trigger is allowed, each selected child giving one of its own
    interactions.
    """
    if connector.is_leaf:
        return frozenset([frozenset([connector.port])])

    children = connector.children
    if not any(child.is_trigger for child in children):
        return _combine(children)

    result = set()
    for selection in non_empty_subsets(children):
        if any(child.is_trigger for child in selection):
            result |= _combine(selection)
    return frozenset(result)


def interactions_of_configuration(configuration: Configuration) -> InteractionSet:
    result = set()
    for connector in configuration:
        result |= interactions_of_connector(connector)
    return frozenset(result)


def render_interactions(interactions: Iterable[Interaction]) -> str:
    """One interaction per line, ports in canonical order"""
    return '\n'.join(render_interaction(a) for a in sorted_interactions(interactions))


# ============================================================================
# INTERACTION LOGIC
# ============================================================================

def eval_pil(formula: PilFormula, interaction: Interaction) -> bool:
    """Truth of `formula` when exactly the ports of `interaction` are true"""
    return formula.evaluate(interaction)


def satisfies(interactions: InteractionSet, formula: PilFormula) -> bool:
    if not interactions:
        logger.warning("Satisfaction checked against an empty interaction set; holds vacuously")
    return all(formula.evaluate(a) for a in interactions)


def formula_of_interactions(interactions: InteractionSet, universe: Iterable[PortInstance]) -> PilFormula:
    """
    Disjunction of full monomials, one per interaction: members appear as
    atoms, the rest of the universe negated.
    """
    if not interactions:
        raise EmptySet("cannot build a formula for an empty interaction set")
    ports = sorted(set(universe))
    stray = set().union(*interactions) - set(ports)
    if stray:
        raise ModelError(f"interactions mention ports outside the universe: {', '.join(map(str, sorted(stray)))}")

    monomials = []
    for interaction in sorted_interactions(interactions):
        literals = [Atom(p) if p in interaction else Not(Atom(p)) for p in ports]
        monomials.append(reduce(conj, literals))
    return reduce(Or, monomials)


def models_of_formula(formula: PilFormula, universe: Iterable[PortInstance],
                      bound: Optional[int] = None) -> InteractionSet:
    """
    Every non-empty subset of the universe satisfying `formula`, by
    exhaustive enumeration.
    """
    ports = sorted(set(universe))
    bound = config['UNIVERSE_BOUND'] if bound is None else bound
    if len(ports) > bound:
        raise UniverseTooLarge(len(ports), bound, 'formula universe')
    return frozenset(
        frozenset(subset) for subset in non_empty_subsets(ports)
        if formula.evaluate(frozenset(subset))
    )


def monomials(formula: PilFormula) -> List[PilFormula]:
    """Top-level disjuncts of a formula, left to right"""
    if isinstance(formula, Or):
        return monomials(formula.left) + monomials(formula.right)
    return [formula]
