"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """An input violates a documented precondition or file schema."""


class ValidityWindowError(ValidationError):
    """The short-time linear density matrix was requested outside its
    validity window (tau > 0.5)."""


class NumericFailure(RuntimeError):
    """Integration produced a non-finite state.

    Carries the step index at which the blow-up was detected and the
    indices of the offending trajectories (empty tuple when unknown).
    """

    def __init__(self, message: str, step_index: int | None = None,
                 trajectory_indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.step_index = step_index
        self.trajectory_indices = tuple(trajectory_indices)

    def __reduce__(self):
        # keep picklable across process-pool boundaries
        return (self.__class__,
                (self.args[0], self.step_index, self.trajectory_indices))
