"""Exception types shared across the engine."""


class SecJoinError(Exception):
    """Base class for all engine errors."""


class FlavorMismatch(SecJoinError):
    """Two shares with different flavors were combined."""


class WidthMismatch(SecJoinError):
    """Two shared vectors with incompatible bit widths were combined."""


class SizeMismatch(SecJoinError):
    """Vector lengths (or permutation sizes) do not line up."""


class DealerExhausted(SecJoinError):
    """The dealer's correlation budget ran out mid-protocol."""


class ProtocolDesync(SecJoinError):
    """One party expected a message the other never sent (programming error)."""


class NotAPermutation(SecJoinError):
    """A value that must reconstruct to a permutation does not (debug check)."""


class PreconditionViolated(SecJoinError):
    """A protocol precondition failed (debug check)."""


class KeyModified(SecJoinError):
    """A view refresh tried to change a join-key column."""


class DomainTooLarge(SecJoinError):
    """A bitmap-based protocol was asked for a domain above its cap."""


class UnknownPrimitive(SecJoinError):
    """The plaintext oracle was asked for a primitive it does not know."""


class DuplicatePrimaryKey(SecJoinError):
    """A primary-key column contains repeated values."""


class ViewStale(SecJoinError):
    """A stored view no longer matches the base table it was built from."""


class ParseError(SecJoinError):
    """Malformed CSV or query-spec input."""
