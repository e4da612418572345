# satrag
# See full license in LICENSE.txt.

"""
Exception hierarchy.

Everything derives from RuntimeError so code that catches RuntimeError keeps working.
The three families below map onto the command line exit codes.
"""


class SatragError(RuntimeError):
    exit_code = 1


class InputError(SatragError):
    """Bad input, bad configuration or an unusable intermediate result (exit 1)."""
    exit_code = 1


class ProviderError(SatragError):
    """An embedding or completion provider failed (exit 2)."""
    exit_code = 2


class GraphValidationError(SatragError):
    """A freshly built graph did not pass validation (exit 3)."""
    exit_code = 3

    def __init__(self, msg, report=None):
        super(GraphValidationError, self).__init__(msg)
        self.report = report


# ingest

class MalformedInput(InputError):

    def __init__(self, msg, source=None, line=None):
        super(MalformedInput, self).__init__(msg)
        self.source = source
        self.line = line

    def __str__(self):
        msg = super(MalformedInput, self).__str__()
        if self.source and self.line is not None:
            return "%s:%s: %s" % (self.source, self.line, msg)
        if self.source:
            return "%s: %s" % (self.source, msg)
        return msg


class EmptyDocument(InputError):
    pass


class MultipleTables(InputError):
    pass


class HeaderDetectionAmbiguous(InputError):
    pass


# cellgroups / sat graph

class NotADataCell(InputError):
    pass


class NoAttribute(InputError):
    pass


class IoFailure(InputError):
    pass


class VersionMismatch(InputError):
    pass


class CorruptIndex(InputError):
    pass


# retrieval

class NoSlots(InputError):
    pass


class AnchorNotResolved(InputError):
    pass


class EmptyIntersection(InputError):
    pass


# fusion

class EmptyEvidence(InputError):
    pass


# providers

class ProviderFailure(ProviderError):
    pass


class EmptyCompletion(ProviderError):
    pass


class InputTooLong(InputError):
    pass


class UnparseableSubject(InputError):
    pass


# eval

class EmptyGold(InputError):
    pass


# dataset generation

class UnparseableEntity(InputError):
    pass


class UnparseableValidation(InputError):
    pass


class InsufficientCandidates(InputError):
    pass


# configuration

class ConfigError(InputError):
    pass
