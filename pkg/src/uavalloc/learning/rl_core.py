"""Shared reinforcement-learning machinery.

Replay buffers, minibatch sampling, the epsilon-greedy schedule, action
noise, discounting helpers, seed derivation and post-hoc convergence
criteria used by both agents.
"""

import math
import zlib
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..core.errors import InvalidArgumentError, NotReadyError, ShapeError

Action = Union[int, np.ndarray]

_INITIAL_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class Transition:
    """One (state, action, reward, next state, terminal) record."""

    state: np.ndarray
    action: Action
    reward: float
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self) -> None:
        if np.shape(self.state) != np.shape(self.next_state):
            raise ShapeError(
                f"state {np.shape(self.state)} and next_state "
                f"{np.shape(self.next_state)} differ"
            )
        if not math.isfinite(self.reward):
            raise InvalidArgumentError(f"Non-finite reward {self.reward}")


@dataclass(frozen=True, eq=False)
class Batch:
    """A minibatch stored column-wise."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return int(self.rewards.shape[0])

    def __iter__(self) -> Iterator[Transition]:
        for i in range(len(self)):
            action = self.actions[i]
            yield Transition(
                self.states[i],
                int(action) if action.ndim == 0 else action,
                float(self.rewards[i]),
                self.next_states[i],
                bool(self.terminals[i]),
            )


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions.

    Storage grows in chunks up to ``capacity``; once full, the oldest
    transition is overwritten. The shape of the first pushed transition
    fixes the buffer's layout.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidArgumentError("capacity must be at least 1")
        self.capacity = int(capacity)
        self.size = 0
        self._next = 0
        self._states: Optional[np.ndarray] = None
        self._actions: Optional[np.ndarray] = None
        self._rewards = np.empty(0)
        self._next_states: Optional[np.ndarray] = None
        self._terminals = np.empty(0, dtype=bool)
        self._discrete = True

    def __len__(self) -> int:
        return self.size

    def _allocate(self, t: Transition) -> None:
        n = min(self.capacity, _INITIAL_CHUNK)
        state_dim = np.shape(t.state)
        self._discrete = np.ndim(t.action) == 0
        self._states = np.empty((n, *state_dim))
        self._next_states = np.empty((n, *state_dim))
        if self._discrete:
            self._actions = np.empty(n, dtype=np.int64)
        else:
            self._actions = np.empty((n, *np.shape(t.action)))
        self._rewards = np.empty(n)
        self._terminals = np.empty(n, dtype=bool)

    def _grow(self) -> None:
        assert self._states is not None
        new = min(self.capacity, 2 * self._states.shape[0])

        def grow(a: np.ndarray) -> np.ndarray:
            out = np.empty((new, *a.shape[1:]), dtype=a.dtype)
            out[: a.shape[0]] = a
            return out

        self._states = grow(self._states)
        self._next_states = grow(self._next_states)  # type: ignore[arg-type]
        self._actions = grow(self._actions)  # type: ignore[arg-type]
        self._rewards = grow(self._rewards)
        self._terminals = grow(self._terminals)

    def push(self, t: Transition) -> None:
        """Append ``t``, evicting the oldest transition once full.

        Raises:
            ShapeError: If ``t`` does not match the layout of earlier pushes
        """
        if self._states is None:
            self._allocate(t)
        assert self._states is not None and self._actions is not None
        if np.shape(t.state) != self._states.shape[1:]:
            raise ShapeError(
                f"State shape {np.shape(t.state)} does not match buffer "
                f"{self._states.shape[1:]}"
            )
        if (np.ndim(t.action) == 0) != self._discrete or (
            not self._discrete and np.shape(t.action) != self._actions.shape[1:]
        ):
            raise ShapeError(f"Action shape {np.shape(t.action)} does not match")
        if self._next >= self._states.shape[0]:
            self._grow()
        i = self._next
        self._states[i] = t.state
        self._next_states[i] = t.next_state  # type: ignore[index]
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._terminals[i] = t.terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _take(self, idx: np.ndarray) -> Batch:
        assert self._states is not None
        return Batch(
            self._states[idx],
            self._actions[idx],  # type: ignore[index]
            self._rewards[idx],
            self._next_states[idx],  # type: ignore[index]
            self._terminals[idx],
        )

    def __iter__(self) -> Iterator[Transition]:
        """Iterate from the oldest to the newest stored transition."""
        if self.size == 0:
            return iter(())
        start = self._next if self.size == self.capacity else 0
        order = (start + np.arange(self.size)) % self.capacity
        return iter(self._take(order))


def push(buffer: ReplayBuffer, t: Transition) -> None:
    """Store ``t`` in ``buffer``."""
    buffer.push(t)


def sample_minibatch(buffer: ReplayBuffer, w: int, rng: np.random.Generator) -> Batch:
    """Draw ``w`` transitions uniformly with replacement.

    Raises:
        NotReadyError: If the buffer holds fewer than ``w`` transitions
    """
    if w < 1:
        raise InvalidArgumentError("Minibatch size must be at least 1")
    if len(buffer) < w:
        raise NotReadyError(
            f"Replay buffer holds {len(buffer)} transitions, need {w}"
        )
    return buffer._take(rng.integers(0, len(buffer), size=w))


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from ``eps_start`` to ``eps_end`` over ``decay_horizon`` steps."""

    eps_start: float
    eps_end: float
    decay_horizon: int

    def __post_init__(self) -> None:
        if not 1.0 >= self.eps_start >= self.eps_end >= 0.0:
            raise InvalidArgumentError("Need 1 >= eps_start >= eps_end >= 0")
        if self.decay_horizon < 0:
            raise InvalidArgumentError("decay_horizon must be >= 0")

    @classmethod
    def for_budget(
        cls, eps_start: float, eps_end: float, fraction: float, total_steps: int
    ) -> "EpsilonSchedule":
        """Decay over ``fraction`` of a training budget of ``total_steps``."""
        return cls(eps_start, eps_end, int(round(fraction * total_steps)))


def epsilon_at(sched: EpsilonSchedule, step: int) -> float:
    """Exploration rate after ``step`` environment steps."""
    if step < 0:
        raise InvalidArgumentError("step must be >= 0")
    if sched.decay_horizon == 0 or step >= sched.decay_horizon:
        return sched.eps_end
    frac = step / sched.decay_horizon
    return sched.eps_start + frac * (sched.eps_end - sched.eps_start)


@dataclass
class NoiseProcess:
    """Gaussian or Ornstein-Uhlenbeck exploration noise.

    The OU variant keeps its state between draws; call ``reset`` at the
    start of every episode.
    """

    sigma: float
    kind: str = "gaussian"
    theta: float = 0.15
    _state: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise InvalidArgumentError("sigma must be >= 0")
        if self.kind not in ("gaussian", "ou"):
            raise InvalidArgumentError(f"Unknown noise kind {self.kind!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgumentError("theta must lie in [0, 1]")

    def reset(self) -> None:
        self._state = None


def noise_sample(n: NoiseProcess, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one ``dim``-dimensional exploration noise vector."""
    if dim < 1:
        raise InvalidArgumentError("dim must be at least 1")
    if n.sigma == 0.0:
        return np.zeros(dim)
    if n.kind == "gaussian":
        return rng.normal(0.0, n.sigma, size=dim)
    x = n._state if n._state is not None and n._state.shape == (dim,) else np.zeros(dim)
    x = x - n.theta * x + n.sigma * rng.standard_normal(dim)
    n._state = x
    return x.copy()


def td_targets(
    rewards: np.ndarray, next_values: np.ndarray, terminals: np.ndarray, gamma: float
) -> np.ndarray:
    """One-step targets r + gamma * V(s'), without bootstrap on terminals."""
    rewards = np.asarray(rewards, dtype=np.float64)
    keep = 1.0 - np.asarray(terminals, dtype=np.float64)
    return rewards + gamma * keep * np.asarray(next_values, dtype=np.float64)


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Discounted sum of an episode's rewards."""
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent, reproducible sub-seed for a named stream."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(label.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _trailing(series: Sequence[float], window: int, fn: str) -> np.ndarray:
    values = np.asarray(series, dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(values, window)
    return view.mean(axis=1) if fn == "mean" else view.std(axis=1)


def mean_convergence_episode(
    series: Sequence[float], window: int, rel_tol: float = 0.1
) -> Optional[int]:
    """First episode after which the trailing mean stays near its final value.

    Returns:
        The 1-based episode ending the first window whose mean, and every
        later window's mean, lies within ``rel_tol`` of the last window's
        mean; None when the series is shorter than ``window``
    """
    if window < 1:
        raise InvalidArgumentError("window must be at least 1")
    if len(series) < window:
        return None
    means = _trailing(series, window, "mean")
    final = means[-1]
    tol = rel_tol * max(abs(final), 1e-12)
    outside = np.flatnonzero(np.abs(means - final) > tol)
    first = 0 if outside.size == 0 else int(outside[-1]) + 1
    return first + window


def variance_convergence_episode(
    series: Sequence[float], window: int, max_std: float
) -> Optional[int]:
    """First episode from which the trailing standard deviation stays small.

    Returns:
        The 1-based episode ending the first window whose std, and every
        later window's std, is at most ``max_std``; None if the last window
        is still above it or the series is too short
    """
    if window < 2:
        raise InvalidArgumentError("window must be at least 2")
    if len(series) < window:
        return None
    stds = _trailing(series, window, "std")
    above = np.flatnonzero(stds > max_std)
    if above.size and above[-1] == stds.size - 1:
        return None
    first = 0 if above.size == 0 else int(above[-1]) + 1
    return first + window
