"""Errors raised by the triage pipeline (as opposed to language errors)."""


class FuzzeraidError(Exception):
    """Base class for pipeline-level failures."""


class NotACrash(FuzzeraidError):
    """Signature generation was asked to explain a run that did not crash."""


class SliceNotReproducing(FuzzeraidError):
    """The function-level slice lost the failure; indicates a tooling bug."""


class NotReproducing(FuzzeraidError):
    """reduce() was handed a program that does not reproduce the target."""


class UnmappableFrame(FuzzeraidError):
    """A fingerprint frame's statement does not exist in the target program."""


class SeedNotCrashing(FuzzeraidError):
    """A corpus seed input expected to crash completed normally."""


class LabelMissing(FuzzeraidError):
    """Scoring encountered a crash id with no ground-truth label."""
