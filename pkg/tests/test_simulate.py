import json

import pytest

from surveil import (
    EvasivePolicy,
    GoalSeekingPolicy,
    RandomPolicy,
    ScriptedPolicy,
    SimulationError,
    StrategyRunner,
    cegar_loop,
    parse_spec,
    render_trace,
    simulate,
    trace_jsonl,
)


@pytest.fixture(scope="module")
def controller(game5):
    out = cegar_loop(game5, parse_spec("G p<=5"))
    assert out.verdict == "realizable"
    return out


def make_runner(game5, controller):
    return StrategyRunner(
        game5, controller.arena, controller.strategy, controller.final_partition
    )


def test_simulation_checks_hold_for_random_target(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, RandomPolicy(seed=1), steps=40)
    assert len(trace.steps) == 41
    # the synthesized objective bounds the belief's invisible part
    for ts in trace.steps:
        invisible = {l for l in ts.belief if not game5.vis(ts.agent, l)}
        assert len(invisible) <= 5


def test_simulation_checks_hold_for_evasive_target(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, EvasivePolicy(grid5), steps=40)
    assert trace.steps[0].target == grid5.target_init


def test_scripted_target(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, ScriptedPolicy([17, 16]), steps=2)
    assert [ts.target for ts in trace.steps] == [18, 17, 16]


def test_scripted_target_rejects_illegal_move(game5, grid5, controller):
    runner = make_runner(game5, controller)
    with pytest.raises(SimulationError):
        simulate(game5, grid5, runner, ScriptedPolicy([24]), steps=1)


def test_scripted_target_exhaustion(game5, grid5, controller):
    runner = make_runner(game5, controller)
    with pytest.raises(SimulationError):
        simulate(game5, grid5, runner, ScriptedPolicy([17]), steps=2)


def test_goal_seeking_target_reaches_goal(game5, grid5, controller):
    runner = make_runner(game5, controller)
    policy = GoalSeekingPolicy(grid5, goal_cells={0})
    trace = simulate(game5, grid5, runner, policy, steps=15)
    assert any(ts.target == 0 for ts in trace.steps)


def test_replay_soundness_over_seeds(game5, grid5, controller):
    """The in-loop belief assertions hold for 100 random targets."""
    for seed in range(100):
        runner = make_runner(game5, controller)
        simulate(game5, grid5, runner, RandomPolicy(seed=seed), steps=15)


def test_simulation_deterministic(game5, grid5, controller):
    runs = []
    for _ in range(2):
        runner = make_runner(game5, controller)
        trace = simulate(game5, grid5, runner, RandomPolicy(seed=7), steps=25)
        runs.append(trace_jsonl(trace))
    assert runs[0] == runs[1]


def test_render_text_frames(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, RandomPolicy(seed=3), steps=4)
    text = render_trace(trace, "text")
    frames = text.strip().split("\n\n")
    assert len(frames) == 5
    first = frames[0].splitlines()
    assert first[0] == "step 0"
    assert len(first) == 1 + grid5.rows
    assert all(len(line) == grid5.cols for line in first[1:])
    assert first[1 + 2].count("#") == 3


def test_render_svg_deterministic(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, RandomPolicy(seed=3), steps=4)
    svg = render_trace(trace, "svg")
    assert svg.startswith("<svg")
    runner2 = make_runner(game5, controller)
    trace2 = simulate(game5, grid5, runner2, RandomPolicy(seed=3), steps=4)
    assert render_trace(trace2, "svg") == svg


def test_render_unknown_format(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, RandomPolicy(seed=3), steps=1)
    with pytest.raises(ValueError):
        render_trace(trace, "png")


def test_trace_jsonl_shape(game5, grid5, controller):
    runner = make_runner(game5, controller)
    trace = simulate(game5, grid5, runner, RandomPolicy(seed=5), steps=6)
    lines = trace_jsonl(trace).strip().splitlines()
    assert len(lines) == 7
    for n, line in enumerate(lines):
        rec = json.loads(line)
        assert rec["step"] == n
        assert rec["target"] in rec["belief"]
