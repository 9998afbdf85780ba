import numpy as np
import pytest

from ephemsim.economics import CostModel, step_reward
from ephemsim.environment import (
    Action,
    EnvState,
    RequestPolicy,
    ResourceUnit,
    advance_time,
    apply_action,
    decide_step,
    encode_state,
    refresh_availability,
    reset,
    run_episode,
    units_from_actual,
    units_from_prediction,
    valid_actions,
    valid_actions_from_vec,
)
from ephemsim.traces import GeneratorProfile, HostSpec, generate_synthetic

from conftest import flat_window, make_window
from oracles import exhaustive_best_total_reward


def state(rem=0, e=0, s=0, ae=0, as_=0, p=0.5):
    return EnvState(res_rem=rem, res_alloc_e=e, res_alloc_s=s, res_avail_e=ae, res_avail_s=as_, p=p)


def test_units_from_prediction_balanced_host():
    w = flat_window(HostSpec(24, 96), used=0.5, pred=0.5, length=4)
    assert units_from_prediction(w, 0) == 6


def test_units_zero_when_saturated():
    w = flat_window(HostSpec(24, 96), used=1.0, pred=1.0, length=4)
    assert units_from_prediction(w, 0) == 0


def test_units_exactly_one():
    w = flat_window(HostSpec(2, 8), used=0.0, pred=0.0, length=4)
    assert units_from_prediction(w, 0) == 1


def test_units_actual_vs_predicted_differ():
    w = make_window(HostSpec(24, 96), [(0.75, 0.75, 0.5, 0.5)] * 4)
    assert units_from_prediction(w, 0) == 6
    assert units_from_actual(w, 0) == 3


def test_apply_alloc_ephemeral():
    got = apply_action(state(rem=3, ae=5, as_=2), Action.ALLOC_EPHEMERAL, request=3)
    assert got == state(rem=2, e=1, ae=4, as_=2)


def test_apply_alloc_on_empty_pool_is_noop():
    s = state(rem=3, ae=5, as_=0)
    assert apply_action(s, Action.ALLOC_STABLE, request=3) == s


def test_apply_noop_is_identity():
    s = state(rem=1, e=2, s=1, ae=3, as_=4)
    assert apply_action(s, Action.NOOP, request=3) == s


def test_apply_remove_returns_unit_and_restores_rem():
    s = state(rem=0, e=3, ae=0)
    got = apply_action(s, Action.REMOVE_EPHEMERAL, request=3)
    assert got.res_alloc_e == 2 and got.res_avail_e == 1 and got.res_rem == 1


def test_apply_remove_overallocated_surplus_keeps_rem_zero():
    # request 2 with 4 allocated: dropping one unit still covers the request
    s = state(rem=0, e=4, ae=0)
    got = apply_action(s, Action.REMOVE_EPHEMERAL, request=2)
    assert got.res_rem == 0 and got.res_alloc_e == 3


def test_apply_remove_stable_symmetric():
    s = state(rem=0, s=2, as_=1)
    got = apply_action(s, Action.REMOVE_STABLE, request=2)
    assert got.res_alloc_s == 1 and got.res_avail_s == 2 and got.res_rem == 1


def test_decide_step_noop_policy():
    s = state(rem=2, ae=5)
    result = decide_step(s, lambda _: Action.NOOP, request=2)
    assert result.actions == [Action.NOOP]
    assert result.state == s


def test_decide_step_cap_rule():
    s = state(rem=3, ae=10)
    result = decide_step(s, lambda _: Action.ALLOC_EPHEMERAL, request=3, k_max=2)
    assert len(result.actions) == 2
    assert result.state.res_alloc_e == 2


def test_decide_step_continues_past_met_request():
    # over-allocation permitted: the loop only stops on Noop or the cap
    s = state(rem=3, ae=10)
    result = decide_step(s, lambda _: Action.ALLOC_EPHEMERAL, request=3, k_max=32)
    assert len(result.actions) == 32
    assert result.state.res_alloc_e == 10  # pool exhausted, remainder no-ops
    assert result.state.res_rem == 0


def test_advance_time_reclaims_down_to_actual_capacity():
    # predicted 10 units, actual 7, 9 allocated -> lose 2
    host = HostSpec(20, 80)
    w = make_window(host, [(0.3, 0.3, 0.0, 0.0)] * 4)  # pred cap 10, actual cap 7
    s = state(rem=1, e=9, ae=1)
    out = advance_time(s, w, 0, CostModel(), request=10)
    assert out.lost_units == 2
    assert out.next_state.res_alloc_e == 7
    assert out.next_state.res_rem == 3  # grew by the loss
    assert out.violated
    assert not out.terminal


def test_advance_time_no_loss_when_capacity_holds():
    host = HostSpec(20, 80)
    w = flat_window(host, used=0.0, pred=0.0, length=4)
    s = state(rem=0, e=5, ae=5)
    out = advance_time(s, w, 0, CostModel(), request=5)
    assert out.lost_units == 0
    assert not out.violated
    assert out.next_state.res_avail_e == 5


def test_advance_time_loss_absorbed_by_surplus():
    host = HostSpec(20, 80)
    w = make_window(host, [(0.3, 0.3, 0.0, 0.0)] * 4)  # actual cap 7
    s = state(rem=0, e=9, ae=1)
    out = advance_time(s, w, 0, CostModel(), request=6)
    assert out.lost_units == 2
    assert out.next_state.res_rem == 0  # 7 still covers the request of 6
    assert not out.violated


def test_advance_time_terminal_on_last_step():
    w = flat_window(HostSpec(20, 80), used=0.0, pred=0.0, length=3)
    out = advance_time(state(e=1, ae=9), w, 2, CostModel(), request=1)
    assert out.terminal


def test_advance_time_reward_matches_post_loss_state():
    host = HostSpec(20, 80)
    w = make_window(host, [(0.3, 0.3, 0.0, 0.0)] * 4)
    model = CostModel()
    s = state(rem=0, e=9, s=2, ae=1, as_=0)
    out = advance_time(s, w, 0, model, request=10)
    expected = step_reward(7, 2, 1, model)
    assert out.reward == expected


def test_reset_all_available_request():
    w = flat_window(HostSpec(40, 160), used=0.0, pred=0.0, length=4)  # 20 units
    s, request = reset(w, stable_capacity=16)
    assert request == 20
    assert s == state(rem=20, ae=20, as_=16, p=1.0)


def test_reset_zero_capacity_window():
    w = flat_window(HostSpec(40, 160), used=1.0, pred=1.0, length=4)
    s, request = reset(w, stable_capacity=0)
    assert request == 0 and s.res_avail_e == 0 and s.res_rem == 0


def test_reset_uses_pessimistic_prior_by_default():
    w = flat_window(HostSpec(40, 160), used=0.5, pred=0.5, length=4)
    s, _ = reset(w, stable_capacity=2)
    assert s.p == 1.0


def test_encode_zero_state():
    v = encode_state(state(p=0.0), e_capacity=10, s_capacity=10)
    assert np.array_equal(v, np.zeros(6))


def test_encode_normalization_example():
    v = encode_state(state(rem=5, e=5, s=0, ae=5, as_=10, p=0.5), e_capacity=10, s_capacity=10)
    assert np.allclose(v, [0.25, 0.5, 0.0, 0.5, 1.0, 0.5])


def test_encode_passes_p_through():
    for p in (0.0, 0.25, 1.0):
        v = encode_state(state(p=p), e_capacity=4, s_capacity=4)
        assert v[5] == p


def test_valid_actions_masks_noops():
    mask = valid_actions(state(rem=1, e=2, s=0, ae=0, as_=3))
    assert list(mask) == [False, True, True, False, True]


def test_valid_actions_from_vec_matches_state_mask():
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = state(
            rem=int(rng.integers(0, 4)),
            e=int(rng.integers(0, 4)),
            s=int(rng.integers(0, 3)),
            ae=int(rng.integers(0, 4)),
            as_=int(rng.integers(0, 3)),
            p=float(rng.random()),
        )
        vec = encode_state(s, e_capacity=8, s_capacity=4)
        assert np.array_equal(valid_actions_from_vec(vec)[0], valid_actions(s))


def test_request_policies(host):
    w = flat_window(HostSpec(40, 160), used=0.0, pred=0.5, length=4)
    assert RequestPolicy("all_available").request_units(w) == 10
    assert RequestPolicy("fixed", amount=7).request_units(w) == 7
    rng = np.random.default_rng(3)
    assert RequestPolicy("poisson", lam=4.0).request_units(w, rng=rng) >= 0
    with pytest.raises(ValueError):
        RequestPolicy("poisson", lam=4.0).request_units(w)
    with pytest.raises(ValueError):
        RequestPolicy("hourly").request_units(w)


def _random_episode_invariants(seed, host):
    rng = np.random.default_rng(seed)
    profile = GeneratorProfile(
        base_load=float(rng.uniform(0.2, 0.5)),
        diurnal_amplitude=float(rng.uniform(0.0, 0.2)),
        noise_scale=float(rng.uniform(0.0, 0.1)),
        p_true=float(rng.uniform(0, 1)),
        window_len=int(rng.integers(4, 10)),
    )
    window = generate_synthetic(seed, 1, profile, host)[0]
    stable_capacity = int(rng.integers(0, 5))
    request = int(rng.integers(0, 8))
    state_, _ = reset(window, stable_capacity, RequestPolicy("fixed", amount=request))
    s = state_
    stable_total = s.res_alloc_s + s.res_avail_s
    for t in range(len(window)):
        if t > 0:
            s = refresh_availability(s, window, t)
        for _ in range(int(rng.integers(1, 6))):
            a = Action(int(rng.integers(0, 5)))
            s = apply_action(s, a, request)
            assert min(s.res_rem, s.res_alloc_e, s.res_alloc_s, s.res_avail_e, s.res_avail_s) >= 0
            assert s.res_alloc_s + s.res_avail_s == stable_total
        out = advance_time(s, window, t, CostModel(), request)
        s = out.next_state
        assert s.res_alloc_s + s.res_avail_s == stable_total
        assert s.res_alloc_e + s.res_avail_e == units_from_actual(window, t)
        assert out.violated == (s.res_rem > 0)
        assert min(s.res_rem, s.res_alloc_e, s.res_alloc_s, s.res_avail_e, s.res_avail_s) >= 0
    assert out.terminal


def test_conservation_random_episodes(host):
    for seed in range(200):
        _random_episode_invariants(seed, host)


def test_run_episode_deterministic(host):
    window = generate_synthetic(3, 1, GeneratorProfile(window_len=24), host)[0]

    def policy_factory(seed):
        rng = np.random.default_rng(seed)
        return lambda s, vec: Action(int(rng.integers(0, 5)))

    a = run_episode(window, policy_factory(5), CostModel(), stable_capacity=4)
    b = run_episode(window, policy_factory(5), CostModel(), stable_capacity=4)
    assert a == b


def test_random_policies_bounded_by_exhaustive_best(host):
    model = CostModel()
    small = HostSpec(8, 32)
    profile = GeneratorProfile(base_load=0.4, diurnal_amplitude=0.2, noise_scale=0.1, p_true=0.5, window_len=3)
    window = generate_synthetic(9, 1, profile, small)[0]
    request = units_from_prediction(window, 0)
    best = exhaustive_best_total_reward(window, model, stable_capacity=2, request=request, k_max=2)
    for seed in range(200):
        rng = np.random.default_rng(seed)
        stats = run_episode(
            window,
            lambda s, vec: Action(int(rng.integers(0, 5))),
            model,
            stable_capacity=2,
            k_max=2,
        )
        assert stats.total_reward <= best + 1e-12


def test_event_rows_schema(host):
    window = generate_synthetic(4, 1, GeneratorProfile(window_len=12), host)[0]
    rows = []
    run_episode(window, lambda s, vec: Action.NOOP, CostModel(), stable_capacity=2, event_rows=rows)
    assert len(rows) == 12
    assert list(rows[0]) == ["t", "actions", "rem", "alloc_e", "alloc_s", "lost_units", "reward", "violated"]
