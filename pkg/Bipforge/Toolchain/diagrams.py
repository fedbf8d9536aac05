"""
Architecture diagram semantics.

Encodability of a diagram (exactly one conforming architecture), expansion
of that unique configuration, a brute-force enumeration of every conforming
configuration and the conformance check of a given architecture.
"""

import logging
from collections import Counter
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from Bipforge.Toolchain import config
from Bipforge.Toolchain.errors import LimitExceeded, NotEncodable
from Bipforge.Toolchain.models import (
    Architecture,
    Configuration,
    ConnectorMotif,
    ConnectorNode,
    Diagnostic,
    Diagram,
    EncodabilityReport,
    EndReport,
    MotifEnd,
    PortInstance,
    Severity,
    Typing,
    port_instances,
)
from Bipforge.Toolchain.utils import product_of_combinations

logger = logging.getLogger(__name__)


def matching_factor(end: MotifEnd, cards: Mapping[str, int]) -> Fraction:
    """Number of connectors the end implies: n * d / m, kept exact"""
    n = len(port_instances(end.port, cards))
    return Fraction(n * end.degree, end.multiplicity)


def max_connectors(motif: ConnectorMotif, cards: Mapping[str, int]) -> int:
    """Number of distinct connectors the motif can form"""
    total = 1
    for end in motif.ends:
        total *= comb(len(port_instances(end.port, cards)), end.multiplicity)
    return total


def _end_diagnostics(motif: ConnectorMotif, end: MotifEnd, report: EndReport, n: int) -> List[Diagnostic]:
    node = f"diagram/motif {motif.id}/{end.port}"
    span = end.span or motif.span
    diagnostics = []
    if not report.cond1:
        diagnostics.append(Diagnostic(
            Severity.ERROR, 'MULTIPLICITY_EXCEEDS_CARDINALITY',
            f"multiplicity {end.multiplicity} of end [{end.port}] exceeds its cardinality {n}",
            span, node,
        ))
    if not report.integral:
        diagnostics.append(Diagnostic(
            Severity.ERROR, 'NON_INTEGRAL_MATCHING_FACTOR',
            f"matching factor {report.matching_factor} of end [{end.port}] is not an integer",
            span, node,
        ))
    if not report.cond2:
        diagnostics.append(Diagnostic(
            Severity.ERROR, 'NOT_ENCODABLE',
            f"matching factor {report.matching_factor} ≠ max connectors {report.max_connectors}",
            span, node,
        ))
    return diagnostics


def check_encodable(diagram: Diagram, cards: Mapping[str, int]) -> EncodabilityReport:
    """
    Per end of every motif: multiplicity within cardinality, an integral
    matching factor, and a matching factor equal to the number of distinct
    connectors of the motif. The diagram is encodable when every end passes.

    Args:
        diagram: Architecture diagram to check
        cards: Number of instances per component type

    Returns:
        Report with one entry per motif end, the verdict and one
        diagnostic per failed condition
    """
    ends = []
    diagnostics = []
    for motif in diagram.motifs:
        most = max_connectors(motif, cards)
        for end in motif.ends:
            n = len(port_instances(end.port, cards))
            s = matching_factor(end, cards)
            report = EndReport(
                motif=motif.id,
                port=end.port,
                matching_factor=s,
                max_connectors=most,
                cond1=end.multiplicity <= n,
                cond2=s == most,
            )
            ends.append(report)
            diagnostics.extend(_end_diagnostics(motif, end, report, n))
    verdict = all(end.ok for end in ends)
    logger.info("Encodability: %s over %d end(s)", 'encodable' if verdict else 'not encodable', len(ends))
    return EncodabilityReport(tuple(ends), verdict, tuple(diagnostics))


def motif_connectors(motif: ConnectorMotif, cards: Mapping[str, int]) -> List[ConnectorNode]:
    """Every connector the motif can form, leaves typed by their end"""
    typing = {end.port: end.typing for end in motif.ends}
    groups = [(port_instances(end.port, cards), end.multiplicity) for end in motif.ends]
    connectors = []
    for picked in product_of_combinations(groups):
        leaves = [ConnectorNode.leaf(p, typing[p.port_type]) for p in sorted(picked)]
        connectors.append(ConnectorNode.group(leaves, Typing.SYNCHRON, motif.id))
    return connectors


def expand_unique(diagram: Diagram, cards: Mapping[str, int]) -> Configuration:
    """The unique conforming configuration of an encodable diagram"""
    report = check_encodable(diagram, cards)
    if not report.verdict:
        first = next((d for d in report.diagnostics if d.is_error), None)
        reason = f": {first.message}" if first is not None else ""
        raise NotEncodable(f"diagram is not encodable{reason}", report)
    connectors = []
    for motif in diagram.motifs:
        connectors.extend(motif_connectors(motif, cards))
    if not connectors:
        raise NotEncodable("diagram has no connector motifs to expand", report)
    return Configuration.of(connectors)


# ============================================================================
# ENUMERATION
# ============================================================================

class _Budget:
    """Counts visited search nodes against the enumeration limit"""

    def __init__(self, limit: int):
        self.limit = limit
        self.visited = 0
        self.found = 0

    def visit(self):
        self.visited += 1
        if self.visited > self.limit:
            raise LimitExceeded(self.limit, self.found)


def _enumerate_motif(motif: ConnectorMotif, cards: Mapping[str, int], budget: _Budget,
                     max_results: Optional[int]) -> List[Tuple[ConnectorNode, ...]]:
    factors = {matching_factor(end, cards) for end in motif.ends}
    if len(factors) != 1:
        return []
    factor = factors.pop()
    if factor.denominator != 1:
        return []
    if factor == 0:
        return [()]

    candidates = motif_connectors(motif, cards)
    members = [c.ports() for c in candidates]
    degree = {}
    for end in motif.ends:
        for p in port_instances(end.port, cards):
            degree[p] = end.degree
    instances = sorted(degree)
    containing: Dict[PortInstance, List[int]] = {p: [] for p in instances}
    for index, ports in enumerate(members):
        for p in ports:
            containing[p].append(index)

    results: List[Tuple[int, ...]] = []

    def usable(index, remaining, available):
        return index in available and all(remaining[q] > 0 for q in members[index])

    def feasible(remaining, available):
        for p in instances:
            if remaining[p] > sum(1 for i in containing[p] if usable(i, remaining, available)):
                return False
        return True

    def search(remaining, available, chosen) -> bool:
        budget.visit()
        pending = next((p for p in instances if remaining[p] > 0), None)
        if pending is None:
            results.append(tuple(chosen))
            budget.found += 1
            return max_results is not None and len(results) >= max_results
        options = [i for i in containing[pending] if usable(i, remaining, available)]
        rest = available - set(containing[pending])
        for combo in combinations(options, remaining[pending]):
            after = dict(remaining)
            for i in combo:
                for q in members[i]:
                    after[q] -= 1
            if any(value < 0 for value in after.values()):
                continue
            if not feasible(after, rest):
                continue
            if search(after, rest, chosen + list(combo)):
                return True
        return False

    search(dict(degree), frozenset(range(len(candidates))), [])
    return [tuple(candidates[i] for i in found) for found in results]


def _configuration_key(configuration: Configuration):
    return tuple(c.sort_key() for c in configuration)


def enumerate_configurations(diagram: Diagram, cards: Mapping[str, int],
                             limit: Optional[int] = None,
                             max_results: Optional[int] = None) -> List[Configuration]:
    """
    Every configuration conforming to the diagram, found by backtracking.

    Each step takes the lowest port instance that still needs connectors and
    decides all of its connectors at once, so no configuration is produced
    twice. A multi-motif diagram yields the product of its per-motif
    configurations.

    Args:
        diagram: Architecture diagram
        cards: Number of instances per component type
        limit: Visited-node bound (default from ENUMERATION_LIMIT)
        max_results: Stop after this many configurations

    Returns:
        Configurations in canonical order; empty when none conforms or
        when no motif yields a connector

    Raises LimitExceeded once the search visits more than `limit` nodes.
    """
    budget = _Budget(config['ENUMERATION_LIMIT'] if limit is None else limit)
    per_motif: List[Sequence[Tuple[ConnectorNode, ...]]] = []
    for motif in diagram.motifs:
        found = _enumerate_motif(motif, cards, budget, max_results)
        if not found:
            logger.debug("Motif %s admits no configuration", motif.id)
            return []
        per_motif.append(found)

    configurations = []
    for parts in product(*per_motif):
        connectors = [c for part in parts for c in part]
        if connectors:
            configurations.append(Configuration.of(connectors))
        if max_results is not None and len(configurations) >= max_results:
            break
    configurations.sort(key=_configuration_key)
    logger.debug("Enumeration visited %d node(s), found %d configuration(s)",
                 budget.visited, len(configurations))
    return configurations


# ============================================================================
# CONFORMANCE
# ============================================================================

def _fits(connector: ConnectorNode, motif: ConnectorMotif) -> bool:
    """Whether a flat connector has the shape the motif prescribes"""
    if connector.motif is not None and connector.motif != motif.id:
        return False
    leaves = [connector] if connector.is_leaf else list(connector.children)
    if not all(leaf.is_leaf for leaf in leaves):
        return False
    counts = Counter(leaf.port.port_type for leaf in leaves)
    for end in motif.ends:
        if counts.pop(end.port, 0) != end.multiplicity:
            return False
    if counts:
        return False
    return all(leaf.typing is motif.end_for(leaf.port.port_type).typing for leaf in leaves)


def conforms(architecture: Architecture, diagram: Diagram, cards: Mapping[str, int]) -> bool:
    """
    Whether the architecture has the right instances and its connectors can
    be split among the motifs so that every connector has the motif's exact
    multiplicities and every instance the motif's exact degree.
    """
    expected = {(name, i) for name, n in cards.items() for i in range(1, n + 1)}
    if len(architecture.components) != len(expected) or set(architecture.components) != expected:
        logger.info("Architecture instances do not match the cardinalities %s", dict(cards))
        return False

    connectors = list(architecture.configuration)
    for connector in connectors:
        if any(p.instance not in expected for p in connector.ports()):
            logger.info("Connector refers to an undeclared component instance")
            return False

    options = [[m for m in diagram.motifs if _fits(c, m)] for c in connectors]
    if any(not fitting for fitting in options):
        logger.info("Some connector fits no connector motif")
        return False

    target = {}
    for motif in diagram.motifs:
        for end in motif.ends:
            for p in port_instances(end.port, cards):
                target[(motif.id, p)] = end.degree
    used = Counter()

    def assign(position: int) -> bool:
        if position == len(connectors):
            return all(used[key] == degree for key, degree in target.items())
        ports = connectors[position].ports()
        for motif in options[position]:
            keys = [(motif.id, p) for p in ports]
            if any(used[key] >= target[key] for key in keys):
                continue
            used.update(keys)
            if assign(position + 1):
                return True
            used.subtract(keys)
        return False

    return assign(0)
