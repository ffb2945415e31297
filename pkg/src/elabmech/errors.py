"""Exception hierarchy shared by every module of the package."""


class ElabError(Exception):
    """Base class for all errors raised by elabmech."""


class NotAPartialOrder(ElabError):
    pass


class NotALattice(ElabError):
    pass


class UnknownElement(ElabError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotComparable(ElabError):
    pass


class MissingValue(ElabError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyOutcomeSpace(ElabError):
    pass


class InadmissibleReport(ElabError):
    def __init__(self, agent, report, reason):
        super().__init__(f"agent {agent}: report {report} is inadmissible ({reason})")
        self.agent = agent
        self.report = report
        self.reason = reason


class StageOverflow(ElabError):
    pass


class CapExceeded(ElabError):
    """A combinatorial enumeration hit its configured cap."""

    def __init__(self, message, explored=None):
        super().__init__(message)
        self.explored = explored


# Same condition under the name used by the m-table recursion.
CombinatorialCap = CapExceeded


class ScenarioError(ElabError):
    pass


class ScenarioSyntaxError(ScenarioError):
    pass


class SchemaError(ScenarioError):
    pass


class ValidationError(ScenarioError):
    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = list(problems)
