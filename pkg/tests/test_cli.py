from __future__ import annotations

import json
import math
import socket

from click.testing import CliRunner

from storysync.cli import main
from storysync.engine import parse_log_line
from storysync.gesture import read_clip

from test_script import declares, tsv

runner = CliRunner()


def write_script(tmp_path, *rows):
    path = tmp_path / "show.ssync.tsv"
    path.write_text(tsv(*declares(), *rows))
    return path


# --- validate -----------------------------------------------------------------

def test_validate_reference_script_exit_0(assets_dir):
    result = runner.invoke(main, ["validate", str(assets_dir / "remind_lite.ssync.tsv")])
    assert result.exit_code == 0, result.output


def test_validate_dangling_branch_exit_1(tmp_path):
    path = write_script(tmp_path, 'r1\tmain\tauto\tspeak\tAVATAR\ttext=a voice=V\t"P" ; a "A" 0 zz')
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == 1
    line = next(l for l in result.output.splitlines() if "DanglingBranchTarget" in l)
    severity, row_id, code, _message = line.split("\t")
    assert (severity, row_id, code) == ("error", "r1", "DanglingBranchTarget")


def test_validate_missing_file_exit_2(tmp_path):
    result = runner.invoke(main, ["validate", str(tmp_path / "ghost.ssync.tsv")])
    assert result.exit_code == 2


def test_validate_parse_failure_exit_2(tmp_path):
    path = tmp_path / "bad.ssync.tsv"
    path.write_text("not\teven\ta\theader\n")
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == 2


# --- run -------------------------------------------------------------------------

def test_run_headless_auto_operator_reference(assets_dir, tmp_path):
    log_path = tmp_path / "run.cuelog"
    result = runner.invoke(main, [
        "run", "--headless", "--auto-operator",
        "--log", str(log_path), str(assets_dir / "remind_lite.ssync.tsv"),
    ])
    assert result.exit_code == 0, result.output
    lines = [parse_log_line(l) for l in log_path.read_text().splitlines()]
    final_phase = [e for e in lines if e.payload.get("change") == "phase"][-1]
    assert final_phase.payload["phase"] == "done"
    assert "points=500" in result.output


def test_run_gate_without_operator_exit_3_names_row(tmp_path):
    path = write_script(tmp_path, "rgate\tmain\toperator_gate:go\tspeak\tAVATAR\ttext=a voice=V\t")
    result = runner.invoke(main, ["run", "--headless", "--operator-script", "/dev/null", str(path)])
    assert result.exit_code == 3
    assert "rgate" in result.output


def test_run_requires_an_operator_source(tmp_path):
    path = write_script(tmp_path, "r1\tmain\tauto\tspeak\tAVATAR\ttext=a voice=V\t")
    result = runner.invoke(main, ["run", "--headless", str(path)])
    assert result.exit_code == 2


def test_run_validation_failure_exit_2(tmp_path):
    path = write_script(tmp_path, "r1\tmain\tauto\tspeak\tGHOST\ttext=a voice=V\t")
    result = runner.invoke(main, ["run", "--headless", "--auto-operator", str(path)])
    assert result.exit_code == 2


def test_run_operator_script_file(tmp_path):
    path = write_script(
        tmp_path,
        "r1\tmain\toperator_gate:go\taward_points\t\tamount=4\t",
    )
    ops = tmp_path / "ops.jsonl"
    ops.write_text(json.dumps({"t": 10, "input": {"type": "operator_signal", "name": "go"}}) + "\n")
    result = runner.invoke(main, ["run", "--headless", "--operator-script", str(ops), str(path)])
    assert result.exit_code == 0
    assert "points=4" in result.output


def test_serve_bind_failure_exit_4(tmp_path):
    path = write_script(tmp_path, "r1\tmain\toperator_gate:go\tspeak\tAVATAR\ttext=a voice=V\t")
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        result = runner.invoke(main, ["run", "--serve", "--bind", f"127.0.0.1:{port}", str(path)])
        assert result.exit_code == 4
    finally:
        blocker.close()


# --- convert ---------------------------------------------------------------------

def ramp_csv(tmp_path, n=61, rate=60.0):
    lines = ["Timecode,jawOpen"]
    for i in range(n):
        lines.append(f"{i/rate:.10f},{i/(n-1):.10f}")
    path = tmp_path / "ramp.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_convert_ramp_frame_count(tmp_path):
    path = ramp_csv(tmp_path)  # exactly 1 s at 60 Hz
    out = tmp_path / "ramp.gesture.json"
    result = runner.invoke(main, ["convert", str(path), "-o", str(out), "--rate", "30"])
    assert result.exit_code == 0, result.output
    clip = read_clip(out)
    assert len(clip.frames) == math.floor(1.0 * 30) + 1
    assert "31 frames" in result.output


def test_convert_pairs_audio(tmp_path):
    path = ramp_csv(tmp_path)
    out = tmp_path / "r.gesture.json"
    result = runner.invoke(main, [
        "convert", str(path), "-o", str(out),
        "--audio", "voice.wav", "--audio-duration-ms", "1500",
    ])
    assert result.exit_code == 0
    clip = read_clip(out)
    assert clip.paired_audio == "voice.wav"
    assert clip.duration_ms == 1500.0


def test_convert_unmapped_param_exit_1(tmp_path):
    path = ramp_csv(tmp_path)
    mapping = tmp_path / "map.json"
    mapping.write_text(json.dumps({"entries": {"browInnerUp": {"target": "B"}}}))
    result = runner.invoke(main, ["convert", str(path), "--mapping", str(mapping)])
    assert result.exit_code == 1
    assert "UnmappedParam" in result.output


def test_convert_unreadable_capture_exit_2(tmp_path):
    result = runner.invoke(main, ["convert", str(tmp_path / "ghost.csv")])
    assert result.exit_code == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("Timecode,jawOpen\n")
    result = runner.invoke(main, ["convert", str(bad)])
    assert result.exit_code == 2
    assert "EmptyCapture" in result.output


def test_validate_then_run_never_parse_fails(tmp_path):
    # validation completeness: whatever validate accepts, run accepts
    import random
    from gen_scripts import random_script
    from storysync.script import serialize_script

    for seed in range(5):
        script_text = serialize_script(random_script(random.Random(seed)))
        path = tmp_path / f"gen{seed}.ssync.tsv"
        path.write_text(script_text)
        v = runner.invoke(main, ["validate", str(path)])
        assert v.exit_code == 0, v.output
        r = runner.invoke(main, ["run", "--headless", "--auto-operator", str(path)])
        assert r.exit_code == 0, r.output


def test_env_var_overrides(tmp_path, assets_dir):
    path = assets_dir / "remind_lite.ssync.tsv"
    # STORYSYNC_TIME_SCALE is consumed: serve mode refuses a non-finite scale
    result = runner.invoke(main, ["run", "--serve", str(path)], env={"STORYSYNC_TIME_SCALE": "inf"})
    assert result.exit_code == 2
    assert "finite" in result.output
    result = runner.invoke(main, ["run", str(path)], env={"STORYSYNC_AUTO_OPERATOR": "1"})
    assert result.exit_code == 0
    assert "points=500" in result.output
