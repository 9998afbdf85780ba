"""Epsilon-greedy Q-learning agent with experience replay and a target net.

All randomness (initialization, exploration, replay sampling) derives from
one seed, so two agents built with the same seed and fed the same
transitions behave identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qnet import network as qnet

REPLAY_CAPACITY = 20000
TARGET_SYNC_PERIOD = 200  # learn-calls between target network syncs


@dataclass(frozen=True)
class Experience:
    state_vec: np.ndarray
    action: int
    reward: float
    next_state_vec: np.ndarray
    terminal: bool


@dataclass
class ExplorationSchedule:
    epsilon: float = 1.0
    decay: float = 0.995
    epsilon_min: float = 0.01

    def step(self) -> None:
        self.epsilon = max(self.epsilon * self.decay, self.epsilon_min)


class ReplayBuffer:
    """Fixed-capacity FIFO store of transitions, held in preallocated
    arrays so batches can be gathered without per-item boxing."""

    def __init__(self, capacity: int = REPLAY_CAPACITY, state_dim: int = 6):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=np.bool_)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, state_vec, action: int, reward: float, next_state_vec, terminal: bool) -> None:
        i = self._next
        self.states[i] = state_vec
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state_vec
        self.terminals[i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample without replacement (no duplicate indices)."""
        return rng.choice(self._size, size=batch_size, replace=False)


class DQNAgent:
    """Decision-maker: epsilon-greedy over the online Q-network, trained
    from replayed transitions against a periodically synced target net."""

    def __init__(
        self,
        state_dim: int = 6,
        n_actions: int = 5,
        hidden_dim: int = 24,
        cfg: qnet.TrainingConfig | None = None,
        exploration: ExplorationSchedule | None = None,
        replay_capacity: int = REPLAY_CAPACITY,
        target_sync_period: int = TARGET_SYNC_PERIOD,
        bootstrap_valid_fn=None,
        seed: int = 0,
    ):
        self.cfg = cfg or qnet.TrainingConfig()
        self.exploration = exploration or ExplorationSchedule()
        self.n_actions = n_actions
        self.target_sync_period = target_sync_period
        # Optional (batch of next-state vectors) -> bool mask; restricts the
        # bootstrap max to actions that are not no-ops in the successor
        # state, so fitted value halos on impossible actions cannot leak
        # into the targets.
        self.bootstrap_valid_fn = bootstrap_valid_fn
        self.seed = seed
        root = np.random.default_rng(seed)
        init_seed = int(root.integers(2**31))
        self._explore_rng = np.random.default_rng(int(root.integers(2**31)))
        self._sample_rng = np.random.default_rng(int(root.integers(2**31)))
        self.net = qnet.QNetwork(state_dim, hidden_dim, n_actions, seed=init_seed)
        self.target_net = self.net.clone()
        self.buffer = ReplayBuffer(replay_capacity, state_dim)
        self.learn_calls = 0

    @property
    def epsilon(self) -> float:
        return self.exploration.epsilon

    def select_action(self, state_vec: np.ndarray, valid: np.ndarray | None = None) -> int:
        """Random action with probability epsilon, else the greedy one
        (ties broken toward the lowest action index).

        ``valid`` optionally restricts both the random draw and the argmax
        to a boolean subset of the actions (no-op actions carry stale value
        estimates from neighboring states, so callers that know the
        environment's pool counts can mask them out).
        """
        if self.exploration.epsilon > 0.0 and self._explore_rng.random() < self.exploration.epsilon:
            if valid is None:
                return int(self._explore_rng.integers(self.n_actions))
            choices = np.flatnonzero(valid)
            return int(choices[self._explore_rng.integers(choices.size)])
        q = qnet.forward(self.net, state_vec)
        if valid is not None:
            q = np.where(valid, q, -np.inf)
        return int(np.argmax(q))

    def remember(self, exp: Experience) -> None:
        if not 0 <= exp.action < self.n_actions:
            raise ValueError(f"action {exp.action} out of range")
        self.buffer.add(exp.state_vec, exp.action, exp.reward, exp.next_state_vec, exp.terminal)

    def observe(self, state_vec, action: int, reward: float, next_state_vec, terminal: bool) -> None:
        """Convenience hook matching the environment's experience callback."""
        self.remember(Experience(state_vec, action, reward, next_state_vec, terminal))

    def learn(self) -> float | None:
        """One replayed gradient step; skipped (returns None) until the
        buffer holds a full batch. Terminal transitions regress to the bare
        reward, the rest bootstrap through the target network."""
        batch = self.cfg.batch_size
        if len(self.buffer) < batch:
            return None
        idx = self.buffer.sample_indices(batch, self._sample_rng)
        states = self.buffer.states[idx]
        actions = self.buffer.actions[idx]
        rewards = self.buffer.rewards[idx]
        next_states = self.buffer.next_states[idx]
        terminals = self.buffer.terminals[idx]

        q_next = qnet.forward_batch(self.target_net, next_states)
        if self.bootstrap_valid_fn is not None:
            q_next = np.where(self.bootstrap_valid_fn(next_states), q_next, -np.inf)
        bootstrap = np.where(terminals, 0.0, q_next.max(axis=1))
        y = rewards + self.cfg.gamma * bootstrap
        targets = np.zeros((batch, self.n_actions))
        targets[np.arange(batch), actions] = y
        loss = qnet.train_batch(self.net, states, targets, actions, self.cfg)

        self.learn_calls += 1
        if self.learn_calls % self.target_sync_period == 0:
            self.target_net.copy_weights_from(self.net)
        return loss

    def decay_epsilon(self) -> None:
        self.exploration.step()

    def save(self, path: str) -> None:
        qnet.save_checkpoint(
            self.net,
            path,
            extra_meta={
                "epsilon": self.exploration.epsilon,
                "epsilon_min": self.exploration.epsilon_min,
                "epsilon_decay": self.exploration.decay,
                "learn_calls": self.learn_calls,
                "agent_seed": self.seed,
            },
        )

    @classmethod
    def load(cls, path: str, replay_capacity: int = REPLAY_CAPACITY) -> "DQNAgent":
        net, meta = qnet.load_checkpoint(path)
        sizes = meta["layer_sizes"]
        agent = cls(
            state_dim=sizes[0],
            n_actions=sizes[3],
            hidden_dim=sizes[1],
            exploration=ExplorationSchedule(
                epsilon=meta["epsilon"], decay=meta["epsilon_decay"], epsilon_min=meta["epsilon_min"]
            ),
            replay_capacity=replay_capacity,
            seed=meta.get("agent_seed", 0),
        )
        agent.net = net
        agent.target_net = net.clone()
        agent.learn_calls = meta["learn_calls"]
        return agent
