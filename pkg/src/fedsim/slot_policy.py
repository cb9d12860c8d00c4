"""Request-slot selection for mid-training fresh-model fetches.

A device asks the server for the current global model at one local epoch
l* per round. The first round's slot comes from a server-side tabular
softmax policy trained with a score-function (REINFORCE) update against
a moving baseline; later rounds refine the slot per device with tabular
Q-learning over {add, stay, minus} actions. Candidate slots are
1 .. max_epochs-1 so at least one epoch always trains on the merged
model.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgumentError

ACTIONS = ("add", "stay", "minus")
_ACTION_DELTA = {"add": 1, "stay": 0, "minus": -1}


@dataclass(frozen=True)
class MetaPolicy:
    logits: np.ndarray  # one per candidate slot 1..n_slots
    baseline_b: float = 0.0
    rho: float = 0.5
    eta_rl: float = 0.001
    epsilon: float = 0.1

    @classmethod
    def uniform(cls, max_epochs, rho=0.5, eta_rl=0.001, epsilon=0.1):
        if max_epochs < 2:
            raise InvalidArgumentError("max_epochs must be >= 2")
        return cls(
            logits=np.zeros(max_epochs - 1), rho=rho, eta_rl=eta_rl, epsilon=epsilon
        )

    @property
    def n_slots(self):
        return len(self.logits)


@dataclass(frozen=True)
class QTable:
    max_slot: int  # slots live in [1, max_epochs - 1]
    values: dict = field(default_factory=dict)  # (slot, action) -> value
    phi: float = 0.5
    psi: float = 0.9
    epsilon: float = 0.1

    @classmethod
    def fresh(cls, max_epochs, phi=0.5, psi=0.9, epsilon=0.1):
        if max_epochs < 2:
            raise InvalidArgumentError("max_epochs must be >= 2")
        return cls(max_slot=max_epochs - 1, phi=phi, psi=psi, epsilon=epsilon)

    def value(self, slot, action):
        return self.values.get((slot, action), 0.0)


def softmax(logits):
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def select_slot_meta(policy, rng):
    """Epsilon-greedy slot from the softmax policy.

    Greedy pick is the highest-probability slot, lowest index winning
    ties; exploration is uniform over all candidate slots.
    """
    if rng.random() < policy.epsilon:
        return int(rng.integers(1, policy.n_slots + 1))
    return int(np.argmax(policy.logits)) + 1


def select_slot_q(q, current_slot, rng):
    """Epsilon-greedy action at current_slot, applied and clamped.

    Greedy ties break in the fixed order (add, stay, minus). Returns
    (new_slot, action).
    """
    if not 1 <= current_slot <= q.max_slot:
        raise InvalidArgumentError(
            f"current_slot {current_slot} outside [1, {q.max_slot}]"
        )
    if rng.random() < q.epsilon:
        action = ACTIONS[int(rng.integers(0, len(ACTIONS)))]
    else:
        action = ACTIONS[int(np.argmax([q.value(current_slot, a) for a in ACTIONS]))]
    slot = min(max(current_slot + _ACTION_DELTA[action], 1), q.max_slot)
    return slot, action


def reward(loss_before, loss_after):
    """Loss improvement from merging; positive when the merge helped."""
    if not (np.isfinite(loss_before) and np.isfinite(loss_after)):
        raise InvalidArgumentError("losses must be finite")
    return loss_before - loss_after


def update_baseline(b, r, rho):
    """Exponential moving average (1-rho)*b + rho*r."""
    if not 0.0 < rho < 1.0:
        raise InvalidArgumentError("rho must be in (0, 1)")
    return (1.0 - rho) * b + rho * r


def update_meta(policy, chosen_slot, r):
    """REINFORCE step on the softmax logits, then baseline update.

    logits += eta_rl * (r - b) * grad log p(chosen_slot), so the chosen
    slot's probability rises exactly when r exceeds the baseline.
    """
    if not 1 <= chosen_slot <= policy.n_slots:
        raise InvalidArgumentError(f"chosen_slot {chosen_slot} outside [1, {policy.n_slots}]")
    score = -softmax(policy.logits)
    score[chosen_slot - 1] += 1.0
    logits = policy.logits + policy.eta_rl * (r - policy.baseline_b) * score
    return replace(
        policy, logits=logits, baseline_b=update_baseline(policy.baseline_b, r, policy.rho)
    )


def update_q(q, prev_slot, prev_action, new_slot, r):
    """Q-learning update toward r + psi * max_a Q(new_slot, a)."""
    old = q.value(prev_slot, prev_action)
    best_next = max(q.value(new_slot, a) for a in ACTIONS)
    values = dict(q.values)
    values[(prev_slot, prev_action)] = old + q.phi * (r + q.psi * best_next - old)
    return replace(q, values=values)


def meta_to_json(policy):
    return json.dumps(
        {
            "logits": policy.logits.tolist(),
            "baseline_b": policy.baseline_b,
            "rho": policy.rho,
            "eta_rl": policy.eta_rl,
            "epsilon": policy.epsilon,
        }
    )


def meta_from_json(text):
    doc = json.loads(text)
    return MetaPolicy(
        logits=np.asarray(doc["logits"], dtype=np.float64),
        baseline_b=doc["baseline_b"],
        rho=doc["rho"],
        eta_rl=doc["eta_rl"],
        epsilon=doc["epsilon"],
    )


def qtable_to_json(q):
    return json.dumps(
        {
            "max_slot": q.max_slot,
            "values": {f"{slot}:{action}": v for (slot, action), v in sorted(q.values.items())},
            "phi": q.phi,
            "psi": q.psi,
            "epsilon": q.epsilon,
        }
    )


def qtable_from_json(text):
    doc = json.loads(text)
    values = {}
    for key, v in doc["values"].items():
        slot, action = key.split(":")
        values[(int(slot), action)] = v
    return QTable(
        max_slot=doc["max_slot"],
        values=values,
        phi=doc["phi"],
        psi=doc["psi"],
        epsilon=doc["epsilon"],
    )
