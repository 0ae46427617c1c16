"""`vacgrip` command line: device emulation, traces, sims, data tools.

Subcommands:
  device         serve one channel's controller emulator over TCP
  pneumo plot    CSV pressure trace of the close/open/suction phases
  sim run        roll a scene forward under a scripted or hold policy
  harness run    seeded trial suite for one task, CSV + summary
  data stats     toggle-sparsity statistics over an episode directory
  data validate  structural check of one episode file (+ replay check)
  serve          teleop WebSocket service

Machine-readable output goes to stdout, diagnostics to stderr. Exit
codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import socket
import sys

from .config import Config, load_config


def _diag(msg: str):
    print(msg, file=sys.stderr)


# -- subcommand implementations -------------------------------------------------


def cmd_device(args, cfg: Config) -> int:
    from .firmware import DeviceEmulator, run_device_loop
    from .pneumatics import PressureState, step_pressure
    from .protocol import Channel

    channel = Channel.LEFT if args.channel == "left" else Channel.RIGHT
    host, _, port = args.listen.rpartition(":")
    host = host or "127.0.0.1"

    # Standalone pressure model: the line state advances with wall time.
    import time

    params = cfg.pneumatic_params(dt=0.01)
    state = {"ps": PressureState(), "last": time.monotonic(), "emu": None}
    if args.material:
        from dataclasses import replace

        mat = cfg.materials()[args.material]
        state["ps"] = replace(
            state["ps"], cup_sealed=(True, True), contact_material=(mat, mat)
        )

    def pressure() -> float:
        now = time.monotonic()
        steps = int((now - state["last"]) / params.dt)
        if steps > 0 and state["emu"] is not None:
            ps = state["ps"]
            for _ in range(min(steps, 1000)):
                ps = step_pressure(ps, state["emu"].state, params)
            state["ps"] = ps
            state["last"] = now
        return state["ps"].gauge_pressure

    emu = DeviceEmulator(channel, pressure_source=pressure)
    state["emu"] = emu
    server = socket.create_server((host, int(port)))
    _diag(f"device emulator ({args.channel}) listening on {host}:{port}")
    try:
        while True:
            conn, peer = server.accept()
            _diag(f"client connected: {peer}")
            with conn:
                run_device_loop(conn.makefile("rb"), conn.makefile("wb", buffering=0), emu)
            _diag("client disconnected")
    except KeyboardInterrupt:
        return 0
    finally:
        server.close()


def cmd_pneumo_plot(args, cfg: Config) -> int:
    from .pneumatics import phase_trace

    materials = cfg.materials()
    if args.material not in materials:
        _diag(f"unknown material {args.material!r}; table has {sorted(materials)}")
        return 1
    params = cfg.pneumatic_params(dt=1.0 / cfg.rate_hz)
    rows = phase_trace(materials[args.material], params)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["time_s", "pressure_kpa", "phase"])
        for t, p, phase in rows:
            writer.writerow([f"{t:.6f}", f"{p:.6f}", phase])
    finally:
        if args.out:
            out.close()
    _diag(f"{len(rows)} samples, final pressure {rows[-1][1]:.2f} kPa")
    return 0


def cmd_sim_run(args, cfg: Config) -> int:
    from .harness import RolloutRecorder, ScriptedPolicy, _run_scripted, build_scene, get_task
    from .scene import load_scene

    try:
        path = cfg.scene_path(args.scene)
    except FileNotFoundError as exc:
        _diag(str(exc))
        return 1
    scene = load_scene(path, materials=cfg.materials())

    task = None
    if args.policy in ("scripted", "grasp-only"):
        task_id = _task_for_scene(scene.name)
        if task_id is None:
            _diag(f"no scripted policy for scene {scene.name!r}; use --policy hold")
            return 1
        task = get_task(task_id)
        if args.policy == "grasp-only":
            from .harness import grasp_only

            task = grasp_only(task)
        if args.seed is not None:
            scene = build_scene(task, args.seed, materials=cfg.materials())

    recorder = RolloutRecorder(scene, task, record_episode=args.out is not None)
    if task is not None:
        outcomes = _run_scripted(ScriptedPolicy(task.policy), scene, recorder)
    else:
        outcomes = []
        for _ in range(int(args.steps)):
            action = scene.hold_action()
            recorder.on_step(scene, action)
            scene.step(action)

    if args.out and recorder.episode is not None:
        from .episodes import write_episode

        write_episode(recorder.episode, args.out)
        _diag(f"episode written to {args.out}")

    print(
        json.dumps(
            {
                "scene": scene.name,
                "policy": args.policy,
                "steps": scene.tick_count,
                "duration_s": round(scene.time_s, 4),
                "outcomes": [
                    {"primitive": d, "ok": ok, "reason": r} for d, ok, r in outcomes
                ],
                "events": [list(e) for e in scene.events],
            }
        )
    )
    return 0


def _task_for_scene(name: str):
    for task_id in (1, 2, 3, 4):
        if name == f"task{task_id}":
            return task_id
    return None


def cmd_harness_run(args, cfg: Config) -> int:
    from .harness import run_suite, summary_table

    if not 1 <= args.task <= 4:
        _diag("task must be 1..4")
        return 1
    seed_base = args.seed_base if args.seed_base is not None else cfg.seed
    suites = []
    for variant in args.variants.split(","):
        variant = variant.strip()
        if variant not in ("hybrid", "grasp_only"):
            _diag(f"unknown variant {variant!r}")
            return 1
        suites.append(
            run_suite(
                args.task,
                trials=args.trials,
                seed_base=seed_base,
                variant=variant,
                jitter=not args.no_jitter,
            )
        )
    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerow(["task", "variant", "seed", "success", "cause", "duration_s", "error_offset_m"])
    for suite in suites:
        for row in suite.rows():
            writer.writerow(
                [
                    row["task"],
                    suite.variant,
                    row["seed"],
                    int(row["success"]),
                    row["cause"],
                    row["duration_s"],
                    row["error_offset_m"],
                ]
            )
    for suite in suites:
        summary = (
            f"task {suite.task_id} [{suite.variant}]: {suite.successes}/{len(suite.trials)} "
            f"({suite.rate * 100:.1f}%), causes {suite.cause_breakdown()}"
        )
        if suite.mean_error_offset() is not None:
            summary += f", mean lid offset {suite.mean_error_offset() * 100:.1f} cm"
        _diag(summary)
    _diag("\n" + summary_table(suites))
    return 0


def cmd_data_stats(args, cfg: Config) -> int:
    from .actions import toggle_sparsity
    from .episodes import list_episode_files, read_episode

    files = list_episode_files(args.directory)
    if not files:
        _diag(f"no .ep files under {args.directory}")
        return 1
    episodes = [read_episode(p) for p in files]
    stats = toggle_sparsity(episodes, horizon=args.horizon, stride=args.stride)
    print(json.dumps({"files": len(files), **stats.to_dict()}))
    return 0


def cmd_data_validate(args, cfg: Config) -> int:
    from .episodes import CorruptRecord, SchemaVersionMismatch, read_episode, validate_episode
    from .teleop import replay_matches

    try:
        ep = read_episode(args.file)
        validate_episode(ep)
    except CorruptRecord as exc:
        _diag(f"corrupt: {exc} (step index {exc.step_index})")
        return 1
    except SchemaVersionMismatch as exc:
        _diag(f"schema mismatch: {exc}")
        return 1
    replayable = "initial_scene" in ep.metadata
    replay_ok = None
    if replayable and not args.no_replay:
        replay_ok = replay_matches(ep)
    print(
        json.dumps(
            {
                "file": str(args.file),
                "task_id": ep.task_id,
                "steps": len(ep),
                "valid": True,
                "replay_exact": replay_ok,
            }
        )
    )
    if replay_ok is False:
        _diag("replay diverged from recorded proprio stream")
        return 1
    return 0


def cmd_serve(args, cfg: Config) -> int:
    import uvicorn

    from .server import create_app

    try:
        path = cfg.scene_path(args.scene)
    except FileNotFoundError as exc:
        _diag(str(exc))
        return 1
    app = create_app(
        path,
        episodes_dir=args.episodes_dir or cfg.episodes_dir,
        rate_hz=args.rate or cfg.rate_hz,
        lockstep=args.lockstep,
        ui_dir=args.ui_dir,
        confirm_timeout_s=(args.confirm_timeout_ms or cfg.confirm_timeout_ms) / 1000.0,
    )
    uvicorn.run(app, host=args.host, port=args.port or cfg.port, log_level="warning")
    return 0


# -- argument wiring -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacgrip",
        description="Hybrid suction-gripper stack: device emulator, pneumatics, sim, data tools.",
    )
    parser.add_argument("--config", help="YAML config path (or set VACGRIP_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("device", help="serve a channel controller emulator over TCP")
    p.add_argument("--channel", choices=["left", "right"], required=True)
    p.add_argument("--listen", default="127.0.0.1:9000", metavar="HOST:PORT")
    p.add_argument("--material", help="simulate cups sealed on this material")
    p.set_defaults(fn=cmd_device)

    pneumo = sub.add_parser("pneumo", help="pneumatic analysis tools")
    pneumo_sub = pneumo.add_subparsers(dest="pneumo_command", required=True)
    p = pneumo_sub.add_parser("plot", help="CSV close/open/suction phase trace")
    p.add_argument("--material", required=True)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(fn=cmd_pneumo_plot)

    simp = sub.add_parser("sim", help="scene simulation")
    sim_sub = simp.add_subparsers(dest="sim_command", required=True)
    p = sim_sub.add_parser("run", help="roll a scene under a policy")
    p.add_argument("--scene", required=True, help="scene name (task1..task4) or path")
    p.add_argument("--policy", choices=["scripted", "grasp-only", "hold"], default="scripted")
    p.add_argument("--steps", type=int, default=60, help="tick count for --policy hold")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the rollout as an episode file")
    p.set_defaults(fn=cmd_sim_run)

    har = sub.add_parser("harness", help="task evaluation suites")
    har_sub = har.add_subparsers(dest="harness_command", required=True)
    p = har_sub.add_parser("run", help="seeded trial suite for one task")
    p.add_argument("--task", type=int, required=True)
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--seed-base", type=int, default=None)
    p.add_argument("--variants", default="hybrid", help="comma list: hybrid,grasp_only")
    p.add_argument("--no-jitter", action="store_true")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(fn=cmd_harness_run)

    data = sub.add_parser("data", help="episode dataset tools")
    data_sub = data.add_subparsers(dest="data_command", required=True)
    p = data_sub.add_parser("stats", help="toggle sparsity over an episode directory")
    p.add_argument("directory")
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--stride", type=int, default=None)
    p.set_defaults(fn=cmd_data_stats)
    p = data_sub.add_parser("validate", help="check one episode file")
    p.add_argument("file")
    p.add_argument("--no-replay", action="store_true")
    p.set_defaults(fn=cmd_data_validate)

    p = sub.add_parser("serve", help="teleop WebSocket service")
    p.add_argument("--scene", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--episodes-dir", default=None)
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--confirm-timeout-ms", type=float, default=None)
    p.add_argument(
        "--lockstep",
        action="store_true",
        help="advance one tick per driver input (deterministic scripting)",
    )
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        _diag(f"config error: {exc}")
        return 1
    try:
        return args.fn(args, cfg)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
