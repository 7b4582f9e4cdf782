import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lssopt.budget import BudgetLedger
from lssopt.core import (
    ActiveQueue,
    EpochSchedules,
    LssConfig,
    bootstrap,
    check_queue_invariants,
    enlarge_and_trim,
    init_state,
    epoch_step,
    run,
    shrink_box,
)
from lssopt.domain import BoxDomain, get_objective, toy_g
from lssopt.errors import ConfigError
from lssopt.history import EvaluationHistory, state_key

FAST_ARMS = ({"kind": "krr", "bandwidth": 0.08, "ridge": 1e-3},)
UNIT = BoxDomain.unit(1)


def fast_cfg(**kw):
    base = dict(arms=FAST_ARMS, initial_states=((0.1,),) * 3)
    base.update(kw)
    return LssConfig(**base)


def keys(states):
    return [state_key(s) for s in states]


def test_queue_fifo_and_tags():
    q = ActiveQueue([[0.1], [0.2]])
    t = q.enqueue([0.3])
    assert q.tags == sorted(q.tags) and t == max(q.tags)
    assert q.dequeue()[1][0] == 0.1
    assert [0.3] in q and [0.1] not in q
    assert len(q) == 2


@given(st.lists(st.one_of(st.floats(0, 1), st.none()), max_size=60))
def test_fifo_discipline(ops):
    q = ActiveQueue()
    inserted, removed = [], []
    for op in ops:
        if op is None:
            if len(q):
                removed.append(float(q.dequeue()[1][0]))
        else:
            q.enqueue([op])
            inserted.append(op)
    assert removed == inserted[: len(removed)]
    assert all(a < b for a, b in zip(q.tags, q.tags[1:]))


def test_figure_four_scenario():
    # queue (t1, t2, t3); pick t1's low child and t2's high child; t1 is the incumbent
    t1, t2, t3 = np.array([0.9]), np.array([0.3]), np.array([0.5])
    t1_low, t2_high = np.array([0.88]), np.array([0.45])
    costs = {0.9: 0.2, 0.3: 0.56, 0.5: 0.36, 0.88: 0.25, 0.45: 0.9}
    objective = lambda s: costs[float(s[0])]
    hist = EvaluationHistory(1)
    for s in (t1, t2, t3):
        hist.record(s, objective(s), 0)
    q = ActiveQueue([t1, t2, t3])
    led = BudgetLedger()
    new = enlarge_and_trim(q, hist, [t1_low, t2_high], 3, objective, 1, led)
    assert keys(q.states) == keys([t1_low, t2_high, t1])
    assert new == 2 and led.expensive_calls == 2
    check_queue_invariants(q, hist)


def test_no_evaluations_leaves_queue_untouched():
    hist = EvaluationHistory(1)
    states = [np.array([x]) for x in (0.1, 0.3, 0.5)]
    for s in states:
        hist.record(s, toy_g(s), 0)
    q = ActiveQueue(states)
    led = BudgetLedger()
    before = (keys(q.states), q.tags, hist.m_functional(), len(hist))
    enlarge_and_trim(q, hist, [], 3, toy_g, 1, led)
    assert (keys(q.states), q.tags, hist.m_functional(), len(hist)) == before
    assert led.expensive_calls == 0


def test_duplicate_choice_costs_no_call():
    hist = EvaluationHistory(1)
    states = [np.array([x]) for x in (0.1, 0.3, 0.5)]
    for s in states:
        hist.record(s, toy_g(s), 0)
    q = ActiveQueue(states)
    led = BudgetLedger()
    new = enlarge_and_trim(q, hist, [np.array([0.3]), np.array([0.7])], 3, toy_g, 1, led)
    assert new == 1 and led.expensive_calls == 1
    assert len(q) == 3


def test_shrink_box_examples():
    assert shrink_box(UNIT, [0.3], 1.0) == UNIT
    b = shrink_box(UNIT, [0.5], 0.5)
    assert b.lower == pytest.approx((0.25,)) and b.upper == pytest.approx((0.75,))
    c = shrink_box(UNIT, [0.05], 0.5)
    assert c.lower == pytest.approx((0.0,)) and c.upper == pytest.approx((0.5,))
    inner = BoxDomain((0.2,), (0.6,))
    d = shrink_box(inner, [0.95], 0.5, bounds=UNIT)
    assert d.upper == pytest.approx((1.0,)) and d.lower == pytest.approx((0.8,))


def test_bootstrap_dedup_and_counts():
    rng = np.random.default_rng(0)
    led = BudgetLedger()
    hist, q = bootstrap(UNIT, toy_g, rng, led, initial_states=[(0.1,)] * 3)
    assert len(hist) == 3 and led.expensive_calls == 3
    assert len({state_key(s) for s in hist.states}) == 3
    assert [0.1] in q
    led2 = BudgetLedger()
    draws = []
    hist2, q2 = bootstrap(UNIT, lambda s: draws.append(1) or toy_g(s), rng, led2,
                          initial_states=[(0.1,), (0.2,), (0.3,)])
    assert len(draws) == 3 and led2.expensive_calls == 3 and len(q2) == 3
    check_queue_invariants(q2, hist2)


def test_schedules_validation():
    with pytest.raises(ConfigError):
        EpochSchedules(e_schedule=(4,), a_schedule=(3,))
    with pytest.raises(ConfigError):
        EpochSchedules(a_schedule=(3, 4))
    with pytest.raises(ConfigError):
        EpochSchedules(box_shrink=(0.0,))
    s = EpochSchedules(e_schedule=(3, 2), a_schedule=(4, 3), k_low=(5, 7))
    assert (s.a(0), s.a(1), s.a(9), s.e(9), s.k(1)) == (4, 3, 3, 2, (7, 10))
    with pytest.raises(ConfigError):
        LssConfig(min_history=2).validate()
    with pytest.raises(ConfigError):
        LssConfig(initial_states=((0.1, 0.2),)).validate()


def test_budget_equal_to_bootstrap_runs_no_epochs():
    res = run(fast_cfg(budget=3))
    assert res.trace == [] and res.halted == "budget"
    assert res.incumbent_cost == min(res.history.costs)
    assert res.ledger.expensive_calls == 3


def test_max_epochs_rows():
    res = run(fast_cfg(max_epochs=10))
    assert len(res.trace) == 10 and res.halted == "max_epochs"
    assert [r.epoch for r in res.trace] == list(range(1, 11))


def test_early_stop():
    res = run(fast_cfg(max_epochs=200, early_stop_patience=2, schedules=EpochSchedules(e_schedule=(0,))))
    assert res.halted == "early_stop" and len(res.trace) == 2


def test_zero_evaluation_epochs_change_nothing():
    cfg = fast_cfg(schedules=EpochSchedules(e_schedule=(0,)))
    state = init_state(cfg, get_objective("toy1d"))
    before = (keys(state.queue.states), len(state.history), state.history.m_functional())
    for _ in range(3):
        epoch_step(state, get_objective("toy1d"), cfg)
    assert (keys(state.queue.states), len(state.history), state.history.m_functional()) == before


def test_reproducible_traces():
    a = run(fast_cfg(seed=4, budget=30))
    b = run(fast_cfg(seed=4, budget=30))
    assert [r.csv_row() for r in a.trace] == [r.csv_row() for r in b.trace]
    assert np.array_equal(a.history.states, b.history.states)


def test_accounting_identity_and_budget():
    cfg = fast_cfg(seed=2, budget=40, schedules=EpochSchedules(k_low=(4, 6), k_high=(8,), a_schedule=(3,)))
    res = run(cfg)
    assert res.ledger.expensive_calls <= 40
    cheap = sum((r.k_low + r.k_high) * r.agents for r in res.trace)
    assert res.ledger.cheap_calls == cheap
    assert res.ledger.expensive_calls == res.bootstrap_evaluations + sum(r.new_evaluations for r in res.trace)
    assert all(r.new_evaluations <= r.e_low + r.e_high for r in res.trace)
    ms = res.m_series()
    assert all(b <= a for a, b in zip(ms, ms[1:]))
    assert res.final_m == min(res.history.costs)


def test_queue_length_follows_schedule():
    cfg = fast_cfg(max_epochs=4, schedules=EpochSchedules(e_schedule=(3, 2), a_schedule=(4, 3, 2), k_low=(3,), k_high=(3,)),
                   initial_states=None)
    state = init_state(cfg, get_objective("toy1d"))
    assert len(state.queue) == 4
    lengths = []
    for _ in range(3):
        epoch_step(state, get_objective("toy1d"), cfg)
        check_queue_invariants(state.queue, state.history)
        lengths.append(len(state.queue))
    assert lengths == [3, 2, 2]


def test_box_shrinking_keeps_incumbent_inside():
    cfg = fast_cfg(max_epochs=25, schedules=EpochSchedules(box_shrink=(0.5,), model_reselect_every=5))
    obj = get_objective("toy1d")
    state = init_state(cfg, obj)
    for _ in range(25):
        epoch_step(state, obj, cfg, obj.domain)
        assert state.domain.contains(state.history.incumbent.state)
    assert state.domain.lengths[0] == pytest.approx(0.5 ** 5)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([1, 2]))
def test_queue_invariants_hold_every_epoch(seed, dim):
    obj = get_objective("toy1d" if dim == 1 else f"toyNd:{dim}")
    cfg = LssConfig(objective=obj.name, dim=dim, seed=seed, budget=20, arms=FAST_ARMS)
    state = init_state(cfg, obj)
    while state.ledger.expensive_calls < cfg.budget:
        row = epoch_step(state, obj, cfg)
        check_queue_invariants(state.queue, state.history)
        assert len(state.queue) == cfg.schedules.a(row.epoch)
