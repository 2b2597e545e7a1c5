class InvariantViolation(RuntimeError):
    """A check found a counterexample to an exact identity or implication."""
