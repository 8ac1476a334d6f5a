"""Exception hierarchy shared across the package.

Every error raised by guesslab derives from :class:`GuesslabError`, so callers
can catch the whole family with one clause.  Plain ``ValueError`` is reserved
for argument mistakes that have no domain meaning (wrong container shape,
unparseable literals, and the like).
"""

from __future__ import annotations


class GuesslabError(Exception):
    """Base class for all guesslab errors."""


# --- commands, models and records -------------------------------------------

class CommandNotInSet(GuesslabError):
    """A command was used with a function that is not defined on it."""


class BadOutcomeIndex(GuesslabError):
    """Outcome index out of range (indices are 1-based per command)."""


class DimensionMismatch(GuesslabError):
    """Vectors or matrices do not share the expected dimension."""


class NotUnitary(GuesslabError):
    """A matrix expected to be unitary fails the unitarity check."""


class InvalidRecord(GuesslabError):
    """An outcome record violates its invariants (duplicate values, bad counts)."""


class InvalidPadding(GuesslabError):
    """Padding eigenvalues collide with recorded values or each other."""


class InvalidWitnessVector(GuesslabError):
    """A witness vector is not a unit vector inside its designated eigenspace."""


# --- statistics ---------------------------------------------------------------

class LengthMismatch(GuesslabError):
    """Two distributions or tally vectors differ in length."""


class SpectraMismatch(GuesslabError):
    """Measurement spectra (or recorded outcome values) cannot be aligned."""


class BadSampleSize(GuesslabError):
    """A sample or trial count is zero, negative, or otherwise unusable."""


class BadEpsilon(GuesslabError):
    """A spectral-norm gap outside the meaningful range (0, 2]."""


# --- model sets ----------------------------------------------------------------

class EmptyModelSet(GuesslabError):
    """An operation that needs candidates received an empty model set."""


class NotMaterialized(GuesslabError):
    """A set operation requires explicit members, not a parametric family."""


class BadSplit(GuesslabError):
    """A command split does not cover the model's command set consistently."""


# --- net fragments ---------------------------------------------------------------

class NetValidationError(GuesslabError):
    """A net fragment violates a structural invariant."""


class NotEnabled(GuesslabError):
    """Attempt to fire an event that is not enabled at the given marking."""


class CapacityViolation(GuesslabError):
    """Attempt to place a token on an occupied state (capacity is one)."""


class NoToken(GuesslabError):
    """Attempt to extract a token from an empty state."""


class InvalidColor(GuesslabError):
    """A token color outside the declared color set of its state."""


class BadPartition(GuesslabError):
    """A color partition does not cover a state's color set exactly."""


class StateSpaceTooLarge(GuesslabError):
    """Reachability analysis exceeded its configured marking bound."""


class BadPhase(GuesslabError):
    """Signal coupling endpoints must pair a tock event with a tick event."""


# --- instruments and the harness -------------------------------------------------

class BadRecordShape(GuesslabError):
    """Raw detector records do not match the instrument's detector layout."""


class InvalidConfig(GuesslabError):
    """A harness configuration failed validation."""
