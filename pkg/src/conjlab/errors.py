"""Exception hierarchy shared by every module.

Each error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""

from __future__ import annotations


class ConjlabError(Exception):
    """Base class. ``exit_code`` 3 means bad input, 2 means an undecided computation."""

    exit_code = 3

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class InputError(ConjlabError):
    exit_code = 3


class ResolutionError(ConjlabError):
    exit_code = 2


class DenominatorNotInvertible(InputError):
    pass


class EvenDenominator(InputError):
    pass


class InvalidSlope(InputError):
    pass


class InvalidInterval(InputError):
    pass


class SlopeTooLarge(InputError):
    pass


class IncompatibleChain(InputError):
    pass


class ZeroRunTooLarge(InputError):
    pass


class PrecisionExhausted(ResolutionError):
    pass


class Unresolved(ResolutionError):
    pass


class NotStabilizing(ResolutionError):
    def __init__(self, reached: int, wanted: int):
        super().__init__(f"residue chain stabilized to {reached} digits, wanted {wanted}")
        self.reached = reached
        self.wanted = wanted

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["reached"] = self.reached
        return d
