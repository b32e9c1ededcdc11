"""Market axioms for scoring-rule and cost-function prediction markets"""

__version__ = '0.1.0'
