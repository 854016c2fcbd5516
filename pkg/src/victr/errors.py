class InvariantError(RuntimeError):
    """An internal consistency guarantee was violated (not a bad input)."""
