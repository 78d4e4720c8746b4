"""Exception and warning classes shared by the toolkit.

Every error a user can trigger with bad input derives from
:class:`SecadtError`; the command-line front end maps those to exit status 1.
"""


class SecadtError(Exception):
    """Base class for domain errors."""


# trees and terms

class TreeSyntaxError(SecadtError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class TreeStructureError(SecadtError):
    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class MalformedTermError(SecadtError):
    pass


class ScenarioLimitError(SecadtError):
    pass


class LabelNotFoundError(SecadtError):
    pass


class MissingAssignmentError(SecadtError):
    def __init__(self, atom):
        self.atom = atom
        super().__init__(f"substitution has no value for atom {atom}")


# knowledge base

class KBError(SecadtError):
    pass


class KBFileMissingError(KBError):
    pass


class KBParseError(KBError):
    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f" [{path}" + (f", row {row}]" if row is not None else "]")
        super().__init__(f"{message}{where}")


class KBIntegrityError(KBError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} integrity violation(s):\n{lines}")


class UnknownEntityError(KBError):
    pass


class MissingSectionError(KBError):
    def __init__(self, step, relation, context):
        self.step = step
        self.relation = relation
        self.context = context
        super().__init__(
            f"step {step!r} has no {relation} section for context {context!r}"
        )


# tree generation

class UnresolvedAlternativeError(SecadtError):
    def __init__(self, groups):
        self.groups = list(groups)
        listing = ", ".join(f"{g.step}#{g.ordinal} {list(g.members)}" for g in self.groups)
        super().__init__(f"no pattern chosen for alternative group(s): {listing}")


class InvalidSelectionError(SecadtError):
    pass


class PatternConflictError(SecadtError):
    pass


# test generation and verdicts

class GherkinSyntaxError(SecadtError):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ResultsFileError(SecadtError):
    pass


class UnknownCaseError(ResultsFileError):
    pass


class MissingVerdictError(SecadtError):
    pass


# diagrams, properties, traces

class DiagramError(SecadtError):
    pass


class LtlSyntaxError(SecadtError):
    def __init__(self, message, position=None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class TraceFileError(SecadtError):
    pass


# warnings

class SecadtWarning(UserWarning):
    pass


class GenerationWarning(SecadtWarning):
    pass


class MissingVerdictWarning(SecadtWarning):
    pass


class UnmatchedConstructWarning(SecadtWarning):
    pass


class NoEvidenceWarning(SecadtWarning):
    pass
