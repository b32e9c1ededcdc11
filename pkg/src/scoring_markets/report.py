"""Verdict containers shared by the structural and market-axiom checkers"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Axiom(str, enum.Enum):
    IC = 'IC'
    PI = 'PI'
    WCL = 'WCL'
    ARB = 'ARB'
    TN = 'TN'
    PN = 'PN'
    WN = 'WN'
    BTB = 'BTB'
    # structural checks
    CONVEX = 'CONVEX'
    OPEN = 'OPEN'
    QUASI_OPEN = 'QUASI_OPEN'
    SUBGROUP = 'SUBGROUP'
    PRICE_BOUND = 'PRICE_BOUND'


class Verdict(str, enum.Enum):
    HOLDS = 'holds'
    FAILS = 'fails'
    HOLDS_AT_BUDGET = 'holds-at-budget'

    @property
    def holds(self):
        return self is not Verdict.FAILS

    def matches(self, expected):
        expected = Verdict(expected)
        if expected is Verdict.FAILS:
            return self is Verdict.FAILS
        if expected is Verdict.HOLDS:
            return self.holds
        return self is Verdict.HOLDS_AT_BUDGET


def to_plain(value):
    """Recursively turn numpy values, tuples and contracts into YAML-friendly data"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return '+inf' if value > 0 else '-inf'
        if math.isnan(value):
            return 'nan'
        return value
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    if hasattr(value, 'to_dict'):
        return to_plain(value.to_dict())
    return value


@dataclass
class AxiomReport:
    axiom: Axiom
    verdict: Verdict
    witness: dict = field(default_factory=dict)
    margin: float = math.nan
    budget: int = 0
    subject: str = ''
    notes: list = field(default_factory=list)

    @property
    def holds(self):
        return self.verdict.holds

    @classmethod
    def holding(cls, axiom, exhaustive, **kwargs):
        verdict = Verdict.HOLDS if exhaustive else Verdict.HOLDS_AT_BUDGET
        return cls(Axiom(axiom), verdict, **kwargs)

    @classmethod
    def failing(cls, axiom, witness, **kwargs):
        if not witness:
            raise ValueError("A failing report needs a witness")
        return cls(Axiom(axiom), Verdict.FAILS, witness=witness, **kwargs)

    def to_dict(self):
        return {
            'axiom': self.axiom.value,
            'subject': self.subject,
            'verdict': self.verdict.value,
            'margin': to_plain(self.margin),
            'budget': self.budget,
            'witness': to_plain(self.witness),
            'notes': list(self.notes),
        }

    def __str__(self):
        return "{}[{}]: {} (margin {:.3g}, budget {})".format(
            self.axiom.value, self.subject, self.verdict.value, self.margin, self.budget)
