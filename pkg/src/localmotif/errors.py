"""Exception hierarchy shared by the library and the CLI."""


class MotifError(Exception):
    """Base class for domain errors raised by localmotif."""


class SizeError(MotifError, ValueError):
    """Pattern or subgraph size outside the supported range."""


class DomainError(MotifError, ValueError):
    """Numeric argument outside the domain of a bound or statistic."""


class EstimationError(MotifError, ValueError):
    """Null-model parameters cannot be estimated from the given data."""


class ContractError(MotifError, ValueError):
    """Inputs that are individually valid but inconsistent with each other."""
