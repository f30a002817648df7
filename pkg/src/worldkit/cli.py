"""Command-line tooling: serve the session API, run scripted sessions,
replay-verify logs, and export session documents.

Session logs are JSON lines: a config header, then one line per turn
holding the turn input, the wire envelope, and its digest. Replays
rebuild the pipeline from the header and fail on any digest drift.
"""

from __future__ import annotations

import base64
import json
import os
import sys
from pathlib import Path

import click

from .core import canonical_json, digest64, envelope_from_wire, envelope_to_wire
from .kernel import DEMO_MAP_TEXT
from .pipeline import Pipeline, PipelineConfig, TurnInput
from .representation import export_points, render_depth, to_wkpc

TOKEN_SHORTHAND = {
    "F": "move_forward",
    "B": "move_backward",
    "ML": "move_left",
    "MR": "move_right",
    "TL": "turn_left",
    "TR": "turn_right",
}


def parse_actions(spec: str) -> list[str]:
    tokens = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        tokens.append(TOKEN_SHORTHAND.get(part.upper(), part))
    return tokens


def _load_map(map_path: str | None) -> str:
    if map_path is None:
        return DEMO_MAP_TEXT
    return Path(map_path).read_text()


def write_pgm(path: Path, width: int, height: int, pixels: bytes) -> None:
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode() + pixels)


def _frames_from_wire(envelope_obj: dict) -> list[dict]:
    return [a["frame"] for a in envelope_obj["artifacts"] if "frame" in a]


def load_log(path: Path) -> tuple[dict, list[dict]]:
    lines = path.read_text().strip("\n").split("\n")
    header = json.loads(lines[0])
    if "config" not in header:
        raise click.ClickException("log header missing config")
    return header["config"], [json.loads(line) for line in lines[1:]]


def replay_log(path: Path) -> list[str]:
    """Re-execute a session log; returns a list of mismatch descriptions."""
    config_obj, turns = load_log(path)
    pipeline = Pipeline.build(PipelineConfig.from_dict(config_obj))
    problems = []
    for i, entry in enumerate(turns):
        logged = envelope_from_wire(entry["envelope"])
        logged_digest = digest64(canonical_json(envelope_to_wire(logged)))
        if logged_digest != entry["digest"]:
            problems.append(f"turn {i}: logged envelope does not match its digest")
        replayed = pipeline.call_once(TurnInput.from_dict(entry["input"]))
        replayed_digest = digest64(canonical_json(envelope_to_wire(replayed)))
        if replayed_digest != entry["digest"]:
            problems.append(f"turn {i}: replayed envelope digest {replayed_digest} "
                            f"!= logged {entry['digest']}")
    return problems


def _rebuild_session(path: Path) -> Pipeline:
    config_obj, turns = load_log(path)
    pipeline = Pipeline.build(PipelineConfig.from_dict(config_obj))
    for entry in turns:
        pipeline.call_once(TurnInput.from_dict(entry["input"]))
    return pipeline


@click.group()
def main():
    """World-model session tooling."""


@main.command()
@click.option("--port", default=8000, show_default=True, help="Listen port; WORLDKIT_PORT wins.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with default session config fields.")
def serve(port: int, host: str, config_path: str | None):
    """Serve the HTTP session API."""
    import uvicorn

    from .service import create_app

    defaults = json.loads(Path(config_path).read_text()) if config_path else None
    port = resolve_port(port)
    uvicorn.run(create_app(defaults), host=host, port=port, log_level="warning")


def resolve_port(flag_port: int) -> int:
    """WORLDKIT_PORT overrides the --port flag when set."""
    env = os.environ.get("WORLDKIT_PORT")
    return int(env) if env else flag_port


@main.command()
@click.option("--task", default="navigate", show_default=True)
@click.option("--map", "map_path", type=click.Path(exists=True), default=None,
              help="Map text file; defaults to the built-in demo map.")
@click.option("--actions", default="", help="Comma-separated tokens (shorthand F,B,ML,MR,TL,TR ok); one turn each.")
@click.option("--text", default=None, help="Turn text for act/sonify tasks.")
@click.option("--query-kind", default=None)
@click.option("--query-text", default=None)
@click.option("--seed", required=True, type=int)
@click.option("--p-slip", default=None, type=float, help="Override kernel slip probability.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def run(task, map_path, actions, text, query_kind, query_text, seed, p_slip, out_dir):
    """Run a scripted session and write its log and frames."""
    config_obj = {"task": task, "map": _load_map(map_path), "seed": seed}
    if p_slip is not None:
        config_obj["kernel"] = {"p_slip": p_slip}
    config = PipelineConfig.from_dict(config_obj)
    pipeline = Pipeline.build(config)

    inputs: list[TurnInput] = []
    if task == "navigate":
        for token in parse_actions(actions):
            inputs.append(TurnInput(actions=(token,)))
    elif task == "reason":
        if not (query_kind and query_text):
            raise click.ClickException("reason runs need --query-kind and --query-text")
        inputs.append(TurnInput.from_dict({"query": {"kind": query_kind, "text": query_text}}))
    else:
        inputs.append(TurnInput(text=text))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames_dir = out / "frames"
    frames_dir.mkdir(exist_ok=True)
    log_path = out / "session.jsonl"
    terminal = False
    with log_path.open("w") as log:
        log.write(json.dumps({"config": config.to_dict()}, sort_keys=True) + "\n")
        for i, turn_input in enumerate(inputs):
            envelope = pipeline.call_once(turn_input)
            wire = envelope_to_wire(envelope)
            log.write(json.dumps({
                "turn": envelope.turn,
                "input": turn_input.to_dict(),
                "envelope": wire,
                "digest": digest64(canonical_json(wire)),
            }, sort_keys=True) + "\n")
            for f, frame in enumerate(_frames_from_wire(wire)):
                write_pgm(frames_dir / f"turn{i:04d}_frame{f:02d}.pgm",
                          frame["width"], frame["height"], base64.b64decode(frame["pixels"]))
            terminal = envelope.terminal and "error" not in envelope.metadata
            if terminal:
                break
    click.echo(f"wrote {log_path} ({'terminal' if terminal else 'open'} after "
               f"{pipeline.session.turn} turns, cumulative reward "
               f"{pipeline.session.cumulative_reward!r})")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
def replay(log_path):
    """Re-execute a session log and verify envelope digests."""
    try:
        problems = replay_log(Path(log_path))
    except Exception as exc:  # malformed logs are verification failures
        click.echo(f"replay failed: {exc}", err=True)
        sys.exit(1)
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        sys.exit(1)
    click.echo("replay ok: all envelope digests match")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--format", "fmt", type=click.Choice(["pointcloud", "depth", "memory-log"]),
              required=True)
@click.option("--yaw", default=0.0, show_default=True)
@click.option("--rays", default=32, show_default=True)
@click.option("--fov", default=90.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write here instead of stdout.")
def export(log_path, fmt, yaw, rays, fov, out_path):
    """Re-execute a log, then export a session document."""
    pipeline = _rebuild_session(Path(log_path))
    if fmt == "pointcloud":
        document = to_wkpc(export_points(pipeline.session.grid).points)
    elif fmt == "depth":
        pose = pipeline.session.state.pose
        depth = render_depth(pipeline.session.grid, (pose.x + 0.5, pose.y + 0.5),
                             yaw, rays, fov)
        document = json.dumps({
            "rays": depth.rays, "fov": depth.fov, "yaw": yaw,
            "camera": {"x": pose.x + 0.5, "y": pose.y + 0.5},
            "depths": list(depth.depths),
        }, sort_keys=True) + "\n"
    else:
        document = pipeline.memory.export_log(pipeline.session.id)
    if out_path:
        Path(out_path).write_text(document)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(document, nl=False)


if __name__ == "__main__":
    main()
