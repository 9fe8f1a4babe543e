"""Command line front end.

Subcommands: ``synth`` (abstraction-refinement synthesis), ``oracle``
(exact belief-game solving), ``simulate``, ``render``, and ``validate``.
Exit codes: 0 realizable / ok, 10 unrealizable, 20 state or iteration
budget exceeded, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources

from .belief import (
    BudgetExceeded,
    build_belief_game,
    check_observable,
    predicates_from_grid,
)
from .cegar import IterationBudgetExceeded, cegar_loop
from .grid import MapError, build_game_structure, parse_config, parse_grid
from .objective import SpecError, parse_spec
from .simulate import (
    EvasivePolicy,
    GoalSeekingPolicy,
    RandomPolicy,
    SimulationError,
    StrategyRunner,
    load_runner,
    render_trace,
    simulate,
    trace_jsonl,
)
from .solver import export_strategy, make_arena, solve
from .structure import validate_assumptions

EXIT_OK = 0
EXIT_UNREALIZABLE = 10
EXIT_BUDGET = 20
EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def bundled_map(name: str):
    """Text of a bundled data file (``paper5x5.txt`` and friends)."""
    return resources.files("surveil.maps").joinpath(name).read_text()


def _read(path: str) -> str:
    if path.startswith("bundled:"):
        return bundled_map(path.split(":", 1)[1])
    with open(path) as fh:
        return fh.read()


def _load_problem(args):
    map_text = _read(args.map)
    cfg_text = _read(args.config) if args.config else ""
    grid = parse_grid(map_text)
    motion, vision = parse_config(cfg_text)
    G = build_game_structure(grid, motion, vision)
    report = validate_assumptions(G)
    if not report.ok:
        raise MapError(
            "game structure assumptions violated: "
            + "; ".join(str(v) for v in report.violations[:5])
        )
    spec_text = _read(args.spec) if getattr(args, "spec", None) else None
    objective = parse_spec(spec_text) if spec_text is not None else None
    predicates = predicates_from_grid(grid)
    for p in predicates.values():
        check_observable(G, p)
    digest = hashlib.sha256((map_text + "\n" + cfg_text).encode()).hexdigest()
    return grid, G, objective, predicates, digest


def _write_out(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_synth(args) -> int:
    grid, G, objective, predicates, digest = _load_problem(args)
    try:
        outcome = cegar_loop(
            G,
            objective,
            predicates=predicates,
            max_states=args.max_states,
            max_iters=args.max_iters,
        )
    except (BudgetExceeded, IterationBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    for line in outcome.transcript:
        print(line)
    if args.dump_partition:
        for bid in sorted(outcome.final_partition.blocks):
            cells = sorted(outcome.final_partition.blocks[bid])
            print("block " + ",".join(str(c) for c in cells))
    if outcome.verdict == "realizable":
        payload = export_strategy(
            outcome.arena, outcome.strategy, digest, outcome.final_partition
        )
        _write_out(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    print("unrealizable", file=sys.stderr)
    dump = _counterexample_json(outcome)
    _write_out(args, json.dumps(dump, indent=2, sort_keys=True) + "\n")
    return EXIT_UNREALIZABLE


def _counterexample_json(outcome) -> dict:
    """JSON dump of the concrete counterexample behind an unrealizable
    verdict: a target strategy tree (safety) or a belief-annotated graph
    (recurrence objectives)."""

    def label_json(label):
        return label if isinstance(label, int) else sorted(label)

    cex = outcome.counterexample
    if hasattr(cex, "root"):  # tree
        def node_json(n):
            return {
                "state": [n.state[0], label_json(n.state[1])],
                "choice": None if n.choice is None else label_json(n.choice),
                "belief": None if n.annotation is None else sorted(n.annotation),
                "children": [node_json(c) for c in n.children],
            }

        body = {"kind": "tree", "root": node_json(cex.root)}
    else:  # analysis graph
        nodes = [
            {"agent": l_a, "belief": sorted(b), "mode": list(cex.modes[i])}
            for i, (l_a, b) in enumerate(cex.beliefs)
        ]
        body = {
            "kind": "graph",
            "initial": cex.initial,
            "nodes": nodes,
            "edges": {str(i): sorted(js) for i, js in cex.edges.items()},
        }
    body["verdict"] = "unrealizable"
    body["blocks"] = {
        str(bid): sorted(cells)
        for bid, cells in outcome.final_partition.blocks.items()
    }
    return body


def cmd_oracle(args) -> int:
    grid, G, objective, predicates, digest = _load_problem(args)
    try:
        game = build_belief_game(G, max_states=args.max_states)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    arena = make_arena(game, G, objective, predicates)
    result = solve(arena, objective)
    print(f"states={len(arena)} realizable={result.agent_wins}")
    if result.agent_wins:
        if args.out:
            payload = export_strategy(arena, result.agent_strategy, digest)
            _write_out(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    return EXIT_UNREALIZABLE


def _synthesize_runner(args, grid, G, objective, predicates):
    outcome = cegar_loop(
        G,
        objective,
        predicates=predicates,
        max_states=args.max_states,
        max_iters=args.max_iters,
    )
    if outcome.verdict != "realizable":
        return None
    return StrategyRunner(
        G, outcome.arena, outcome.strategy, outcome.final_partition
    )


def _run_simulation(args):
    grid, G, objective, predicates, digest = _load_problem(args)
    if getattr(args, "strategy", None):
        with open(args.strategy) as fh:
            payload = json.load(fh)
        runner = load_runner(G, payload, expected_digest=digest)
    elif objective is None:
        raise SimulationError("either --spec or --strategy is required")
    else:
        runner = _synthesize_runner(args, grid, G, objective, predicates)
    if runner is None:
        return None, None
    if args.policy == "random":
        policy = RandomPolicy(args.seed)
    elif args.policy == "evasive":
        policy = EvasivePolicy(grid)
    else:
        policy = GoalSeekingPolicy(grid)
    trace = simulate(G, grid, runner, policy, args.steps)
    return grid, trace


def cmd_simulate(args) -> int:
    try:
        grid, trace = _run_simulation(args)
    except (BudgetExceeded, IterationBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if trace is None:
        print("unrealizable", file=sys.stderr)
        return EXIT_UNREALIZABLE
    _write_out(args, trace_jsonl(trace))
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        grid, trace = _run_simulation(args)
    except (BudgetExceeded, IterationBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if trace is None:
        print("unrealizable", file=sys.stderr)
        return EXIT_UNREALIZABLE
    _write_out(args, render_trace(trace, args.format))
    return EXIT_OK


def cmd_validate(args) -> int:
    map_text = _read(args.map)
    cfg_text = _read(args.config) if args.config else ""
    grid = parse_grid(map_text)
    motion, vision = parse_config(cfg_text)
    G = build_game_structure(grid, motion, vision)
    report = validate_assumptions(G)
    print(
        f"cells={len(grid.free_cells)} total={report.total} "
        f"invisible_independent={report.invisible_independent}"
    )
    for v in report.violations[:20]:
        print(f"violation: {v}")
    return EXIT_OK if report.ok else EXIT_USAGE


def _add_common(p, spec_required=True):
    p.add_argument("--map", required=True, help="map file (or bundled:NAME)")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--spec", required=spec_required, help="specification file")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--max-states", type=int, default=1_000_000)
    p.add_argument("--max-iters", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surveil", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a controller by refinement")
    _add_common(p)
    p.add_argument("--dump-partition", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle", help="solve the exact belief game")
    _add_common(p)
    p.set_defaults(func=cmd_oracle, max_states=2_000_000)

    for name, func in (("simulate", cmd_simulate), ("render", cmd_render)):
        p = sub.add_parser(name)
        _add_common(p, spec_required=False)
        p.add_argument(
            "--strategy", help="controller JSON from synth (else synthesize here)"
        )
        p.add_argument("--steps", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--policy", choices=("random", "evasive", "goal"), default="random"
        )
        if name == "render":
            p.add_argument("--format", choices=("text", "svg"), default="text")
        p.set_defaults(func=func)

    p = sub.add_parser("validate", help="check the game structure assumptions")
    p.add_argument("--map", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        MapError,
        SpecError,
        SimulationError,
        FileNotFoundError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
