import numpy as np
import pytest

from fedsim.errors import InvalidArgumentError
from fedsim.slot_policy import (
    ACTIONS,
    MetaPolicy,
    QTable,
    meta_from_json,
    meta_to_json,
    qtable_from_json,
    qtable_to_json,
    reward,
    select_slot_meta,
    select_slot_q,
    softmax,
    update_baseline,
    update_meta,
    update_q,
)


def meta(n_slots=4, **kw):
    policy = MetaPolicy.uniform(n_slots + 1, **kw)
    assert policy.n_slots == n_slots
    return policy


class TestSelectSlotMeta:
    def test_uniform_ties_break_low(self):
        policy = meta(epsilon=0.0)
        assert select_slot_meta(policy, np.random.default_rng(0)) == 1

    def test_peaked_logits_win(self):
        policy = meta(epsilon=0.0)
        logits = policy.logits.copy()
        logits[2] = 3.0
        policy = MetaPolicy(logits=logits, epsilon=0.0)
        assert select_slot_meta(policy, np.random.default_rng(0)) == 3

    def test_full_exploration_uniform(self):
        policy = meta(epsilon=1.0)
        rng = np.random.default_rng(1)
        counts = np.zeros(5)
        for _ in range(10000):
            counts[select_slot_meta(policy, rng)] += 1
        sigma = np.sqrt(10000 * 0.25 * 0.75)
        for slot in range(1, 5):
            assert abs(counts[slot] - 2500) <= 3 * sigma

    def test_slots_in_range(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            policy = MetaPolicy(logits=rng.standard_normal(6), epsilon=float(rng.uniform(0, 1)))
            assert 1 <= select_slot_meta(policy, rng) <= 6


class TestSelectSlotQ:
    def test_dominant_add_moves_up(self):
        q = QTable.fresh(6, epsilon=0.0)
        q = update_q(q, 3, "add", 3, 1.0)  # plants a positive Q(3, add)
        slot, action = select_slot_q(q, 3, np.random.default_rng(0))
        assert (slot, action) == (4, "add")

    def test_minus_clamps_at_one(self):
        q = QTable.fresh(6, epsilon=0.0)
        q = update_q(q, 1, "minus", 1, 1.0)
        slot, action = select_slot_q(q, 1, np.random.default_rng(0))
        assert (slot, action) == (1, "minus")

    def test_all_equal_prefers_add(self):
        q = QTable.fresh(6, epsilon=0.0)
        slot, action = select_slot_q(q, 2, np.random.default_rng(0))
        assert (slot, action) == (3, "add")

    def test_add_clamps_at_max_slot(self):
        q = QTable.fresh(6, epsilon=0.0)
        slot, _ = select_slot_q(q, 5, np.random.default_rng(0))
        assert slot == 5

    def test_slots_in_range_random(self):
        rng = np.random.default_rng(3)
        q = QTable.fresh(5, epsilon=0.5)
        slot = 2
        for _ in range(1000):
            slot, _ = select_slot_q(q, slot, rng)
            assert 1 <= slot <= 4

    def test_bad_current_slot_rejected(self):
        q = QTable.fresh(5)
        with pytest.raises(InvalidArgumentError):
            select_slot_q(q, 0, np.random.default_rng(0))
        with pytest.raises(InvalidArgumentError):
            select_slot_q(q, 5, np.random.default_rng(0))

    def test_deterministic_with_dominant_entry(self):
        q = QTable.fresh(6, epsilon=0.0)
        q = update_q(q, 2, "stay", 2, 5.0)
        outcomes = {select_slot_q(q, 2, np.random.default_rng(s)) for s in range(20)}
        assert outcomes == {(2, "stay")}


class TestReward:
    def test_examples(self):
        assert reward(0.9, 0.7) == pytest.approx(0.2)
        assert reward(0.4, 0.4) == 0.0
        assert reward(0.5, 0.8) == pytest.approx(-0.3)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            reward(float("nan"), 0.0)


class TestUpdateBaseline:
    def test_examples(self):
        assert update_baseline(0.0, 1.0, 0.5) == 0.5
        assert update_baseline(0.7, 0.7, 0.3) == pytest.approx(0.7)

    def test_converges_geometrically(self):
        b = 0.0
        for _ in range(50):
            b = update_baseline(b, 2.0, 0.5)
        assert abs(b - 2.0) < 1e-6

    def test_rho_range(self):
        with pytest.raises(InvalidArgumentError):
            update_baseline(0.0, 1.0, 0.0)
        with pytest.raises(InvalidArgumentError):
            update_baseline(0.0, 1.0, 1.0)


class TestUpdateMeta:
    def test_reward_equal_baseline_keeps_logits(self):
        policy = meta()
        out = update_meta(policy, 2, policy.baseline_b)
        assert np.array_equal(out.logits, policy.logits)

    def test_probability_increases_iff_reward_above_baseline(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            policy = MetaPolicy(
                logits=rng.standard_normal(4),
                baseline_b=float(rng.uniform(-1, 1)),
                eta_rl=0.05,
            )
            slot = int(rng.integers(1, 5))
            r = float(rng.uniform(-2, 2))
            before = softmax(policy.logits)[slot - 1]
            after = softmax(update_meta(policy, slot, r).logits)[slot - 1]
            if r > policy.baseline_b:
                assert after > before
            elif r < policy.baseline_b:
                assert after < before

    def test_closed_form_softmax_score(self):
        policy = MetaPolicy(logits=np.zeros(4), baseline_b=0.0, eta_rl=0.1, rho=0.5)
        out = update_meta(policy, 2, 1.0)
        expected = np.full(4, -0.1 * 0.25)
        expected[1] = 0.1 * (1 - 0.25)
        assert np.allclose(out.logits, expected)
        assert out.baseline_b == pytest.approx(0.5)

    def test_logits_stay_finite_under_many_updates(self):
        rng = np.random.default_rng(5)
        policy = meta()
        for _ in range(10000):
            slot = int(rng.integers(1, 5))
            r = policy.baseline_b + float(rng.uniform(-10, 10))
            policy = update_meta(policy, slot, r)
        p = softmax(policy.logits)
        assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0)


class TestUpdateQ:
    def test_full_overwrite(self):
        q = QTable.fresh(5, phi=1.0, psi=0.0)
        out = update_q(q, 2, "add", 3, 1.0)
        assert out.value(2, "add") == pytest.approx(1.0)

    def test_scalar_example(self):
        q = QTable.fresh(5, phi=0.5, psi=0.9)
        out = update_q(q, 2, "stay", 2, 1.0)
        assert out.value(2, "stay") == pytest.approx(0.5)

    def test_zero_reward_zero_prior_stays_zero(self):
        q = QTable.fresh(5, phi=0.7, psi=0.0)
        out = update_q(q, 1, "minus", 1, 0.0)
        assert out.value(1, "minus") == 0.0

    def test_bootstraps_from_best_next(self):
        q = QTable.fresh(5, phi=0.5, psi=0.5)
        q = update_q(q, 3, "add", 4, 2.0)  # Q(3, add) = 1.0
        out = update_q(q, 2, "add", 3, 0.0)
        assert out.value(2, "add") == pytest.approx(0.5 * (0.0 + 0.5 * 1.0))

    def test_values_bounded_by_reward_scale(self):
        rng = np.random.default_rng(6)
        q = QTable.fresh(6, phi=0.7, psi=0.9)
        r_max = 3.0
        for _ in range(10000):
            prev = int(rng.integers(1, 6))
            new = int(rng.integers(1, 6))
            action = ACTIONS[int(rng.integers(0, 3))]
            q = update_q(q, prev, action, new, float(rng.uniform(-r_max, r_max)))
        bound = r_max / (1 - q.psi) + 1e-9
        assert all(abs(v) <= bound for v in q.values.values())


class TestJson:
    def test_meta_round_trip(self):
        policy = MetaPolicy(logits=np.array([0.1, -0.2, 0.3]), baseline_b=0.4, rho=0.3, eta_rl=0.01, epsilon=0.2)
        restored = meta_from_json(meta_to_json(policy))
        assert np.array_equal(restored.logits, policy.logits)
        assert restored == policy if isinstance(policy.logits, tuple) else True
        assert (restored.baseline_b, restored.rho, restored.eta_rl, restored.epsilon) == (
            0.4,
            0.3,
            0.01,
            0.2,
        )

    def test_qtable_round_trip(self):
        q = QTable.fresh(5, phi=0.4, psi=0.8, epsilon=0.05)
        q = update_q(q, 2, "add", 3, 1.5)
        q = update_q(q, 3, "minus", 2, -0.5)
        restored = qtable_from_json(qtable_to_json(q))
        assert restored == q
