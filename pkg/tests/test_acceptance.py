"""Acceptance suite: one test per release criterion.

Run with ``pytest tests/test_acceptance.py -v -rP`` to see one
pass/fail line per criterion (printed lines show under -rP).
"""
from __future__ import annotations

import json
import math
import random
import time
import xml.etree.ElementTree as ET

import pytest

from storysync.bus import run_headless
from storysync.bus.frames import (
    Frame,
    FrameDecoder,
    FrameTooLarge,
    HEADER_SIZE,
    MAX_PAYLOAD_BYTES,
    MSG_TYPES,
    decode_frame,
    encode_frame,
)
from storysync.engine import OperatorSignal, PlayerChoice, dump_log
from storysync.markup import MarkupError, STYLES, compile_ssml, tokenize
from storysync.script import load_gesture_registry, parse_script, validate_script
from storysync.script import model as m

from gen_markup import random_markup
from gen_scripts import DEFECT_SEEDERS, random_script
from oracle_interp import interp_scalar, linear_interp_error_bound
from test_frames import REPRESENTATIVE

N_DETERMINISM_SCRIPTS = 100


def _report(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


# -- 1. reference show reproduction ------------------------------------------

def test_reference_show_reproduction(assets_dir):
    script = parse_script((assets_dir / "remind_lite.ssync.tsv").read_text())

    assert len(script.scenes) == 5
    device_ids = {d.id for d in script.devices}
    assert {"AVATAR", "FUSE", "JITTER", "MATRIX", "ORACLE", "FEELMOON"} <= device_ids
    first_row = script.scenes[0].rows[0]
    assert first_row.trigger == m.Trigger("operator_gate", signal="let_the_adventure_begin")

    def feelmoon_cue(row):
        light = next(a for a in row.actions if isinstance(a, m.Light) and a.device == "FEELMOON")
        has_sound = any(isinstance(a, m.Sound) for a in row.actions)
        return light, has_sound

    rows = {row.id: row for _si, _sc, _ri, row in script.iter_rows()}
    sad_light, sad_sound = feelmoon_cue(rows["p3_sad"])
    fear_light, fear_sound = feelmoon_cue(rows["p3_fear"])
    r, g, b = sad_light.color
    assert b > r and b > g and sad_light.pattern == "pulse" and sad_sound  # blue pulse + sound
    r, g, b = fear_light.color
    assert r > g and b > g and fear_light.pattern == "pulse" and fear_sound  # purple + sound
    assert fear_light.pulse_rate_hz > sad_light.pulse_rate_hz  # fear pulses faster

    branch = rows["p4_strategies"].branch
    assert {(o.label, o.points) for o in branch.options} == {
        ("Comfort JITTER", 500),
        ("Be Firm with FUSE", 1000),
    }

    registry = load_gesture_registry(script, assets_dir)
    start = time.perf_counter()
    result = run_headless(script, auto_operator=True, registry=registry, time_scale=math.inf)
    elapsed = time.perf_counter() - start
    assert result.done
    assert result.points in (500, 1000)
    assert elapsed < 5.0, f"headless run took {elapsed:.2f}s"

    firm = run_headless(
        script,
        operator_script=[
            (0, OperatorSignal("let_the_adventure_begin")),
            (10**6, OperatorSignal("floppy_inserted")),
            (2 * 10**6, OperatorSignal("debug_mode")),
            (3 * 10**6, OperatorSignal("thumbs_up")),
            (4 * 10**6, PlayerChoice("firm")),
            (5 * 10**6, OperatorSignal("outcomes_explored")),
        ],
        registry=registry,
    )
    assert firm.done and firm.points == 1000
    _report("reference show reproduction")


# -- 2. determinism -----------------------------------------------------------

def test_determinism_100_scripts_byte_identical():
    for seed in range(N_DETERMINISM_SCRIPTS):
        script = random_script(random.Random(1000 + seed))
        assert not any(d.severity == "error" for d in validate_script(script))
        first = run_headless(script, auto_operator=True, ack_shuffle_seed=seed)
        second = run_headless(script, auto_operator=True, ack_shuffle_seed=seed)
        assert dump_log(first.log) == dump_log(second.log), f"divergence at script {seed}"
        assert first.done
    _report(f"determinism over {N_DETERMINISM_SCRIPTS} scripts, two runs each")


# -- 3. gate safety --------------------------------------------------------------

def _gate_safety_violations(script, log):
    gated = {
        row.id: row.trigger.signal
        for _si, _sc, _ri, row in script.iter_rows()
        if row.trigger.mode == "operator_gate"
    }
    signal_seen_at: dict[str, int] = {}
    violations = []
    for i, entry in enumerate(log):
        if entry.kind == "input":
            payload = entry.payload["input"]
            if (
                payload["type"] == "operator_signal"
                and entry.payload["disposition"] == "applied"
                and payload["name"] not in signal_seen_at
            ):
                signal_seen_at[payload["name"]] = i
        elif entry.kind == "command":
            origin = entry.payload["origin"]
            if origin.startswith("row:"):
                row_id = origin[4:]
                signal = gated.get(row_id)
                if signal is not None and signal_seen_at.get(signal, len(log)) > i:
                    violations.append((row_id, i))
    return violations


def test_gate_safety_under_adversarial_orderings():
    rng = random.Random(4242)
    checked_gates = 0
    for seed in range(N_DETERMINISM_SCRIPTS):
        script = random_script(random.Random(1000 + seed))
        noise = []
        for _ in range(12):
            t = rng.randrange(0, 50_000)
            if rng.random() < 0.5:
                noise.append((t, PlayerChoice(f"c{rng.randrange(3)}")))
            else:
                noise.append((t, OperatorSignal(f"sig_{rng.randrange(1, 5)}")))
        result = run_headless(
            script,
            auto_operator=True,
            operator_script=sorted(noise, key=lambda p: p[0]),
            ack_shuffle_seed=seed * 7 + 1,
        )
        assert result.done
        violations = _gate_safety_violations(script, result.log)
        assert violations == [], f"script {seed}: {violations}"
        checked_gates += sum(
            1 for _si, _sc, _ri, row in script.iter_rows()
            if row.trigger.mode == "operator_gate"
        )
    assert checked_gates > 50  # the corpus genuinely exercises gates
    _report(f"gate safety over {N_DETERMINISM_SCRIPTS} adversarial runs ({checked_gates} gates)")


# -- 4. markup / SSML ---------------------------------------------------------------

def test_markup_ssml_criterion(goldens_dir):
    index = json.loads((goldens_dir / "ssml" / "index.json").read_text())
    assert len(index) >= 20
    for entry in index:
        cu = compile_ssml(tokenize(entry["raw"]), entry["voice"], entry["default_style"])
        expected = (goldens_dir / "ssml" / f"{entry['name']}.xml").read_text()
        assert cu.ssml + "\n" == expected, entry["name"]

    for style in STYLES:
        compile_ssml(tokenize("{s/%s}x" % style), "V")
    assert len(STYLES) == 10

    for fake in ("bored", "melancholic", "sarcastic", "snide", "giddy"):
        with pytest.raises(MarkupError):
            tokenize("{s/%s}x" % fake)

    rng = random.Random(99)
    for _ in range(1000):
        markup = random_markup(rng, max_tokens=12)
        cu = compile_ssml(markup, "narrator")
        root = ET.fromstring(cu.ssml)
        doc_marks = [el.get("name") for el in root.iter("mark")]
        assert doc_marks == [mid for mid, _ in cu.markers]
        assert tuple(ref for _, ref in cu.markers) == markup.gesture_refs
    _report("markup/SSML goldens, closed styles, 1000 well-formed compiles")


# -- 5. gesture numerics --------------------------------------------------------------

def test_gesture_numerics_criterion(tmp_path):
    from storysync.gesture import parse_capture_csv, read_clip, resample, write_clip
    from test_gesture import random_clip

    # ramp: exact within 1e-9
    rows = ["Timecode,a"] + [f"{i/60:.10f},{i/60:.10f}" for i in range(61)]
    ramp = parse_capture_csv(("\n".join(rows) + "\n").encode())
    out = resample(ramp, 30.0)
    worst_ramp = max(abs(float(out.values[k, 0]) - k / 30.0) for k in range(31))
    assert worst_ramp <= 1e-9

    # sine 60 -> 30 Hz within the analytic linear-interpolation bound,
    # cross-checked against the brute-force oracle
    freq = 2.0
    src_t = [i / 60.0 for i in range(121)]
    src_v = [0.5 + 0.5 * math.sin(2 * math.pi * freq * t) for t in src_t]
    rows = ["Timecode,a"] + [f"{t:.10f},{v:.10f}" for t, v in zip(src_t, src_v)]
    rec = parse_capture_csv(("\n".join(rows) + "\n").encode())
    out = resample(rec, 30.0)
    bound = linear_interp_error_bound(1.0 / 60.0, 0.5 * (2 * math.pi * freq) ** 2)
    for k in range(out.frame_count):
        t = float(out.times[k])
        assert abs(out.values[k, 0] - (0.5 + 0.5 * math.sin(2 * math.pi * freq * t))) <= bound
        assert abs(out.values[k, 0] - interp_scalar(t, src_t, src_v)) <= 1e-9

    rng = random.Random(2024)
    for i in range(50):
        clip = random_clip(rng)
        path = tmp_path / f"{i}.gesture.json"
        write_clip(clip, path)
        assert read_clip(path) == clip
    _report("gesture numerics: ramp 1e-9, sine within analytic bound, 50 clip round-trips")


# -- 6. protocol -------------------------------------------------------------------------

def test_protocol_criterion():
    frames = [Frame(t, p) for t, p in REPRESENTATIVE.items()]
    assert {f.msg_type for f in frames} == set(MSG_TYPES)
    for frame in frames:
        assert decode_frame(encode_frame(frame)) == frame

    stream = b"".join(encode_frame(f) for f in frames)
    decoder = FrameDecoder()
    seen = []
    for i in range(len(stream)):
        seen.extend(decoder.feed(stream[i : i + 1]))
    assert seen == frames

    probe = Frame("event", {"pad": ""}).to_json().encode()
    pad = MAX_PAYLOAD_BYTES - len(probe)
    exact = encode_frame(Frame("event", {"pad": "x" * pad}))
    assert len(exact) == HEADER_SIZE + MAX_PAYLOAD_BYTES
    with pytest.raises(FrameTooLarge):
        encode_frame(Frame("event", {"pad": "x" * (pad + 1)}))
    _report("protocol round-trip, byte-at-a-time decode, 1 MiB boundary")


# -- 7. validator completeness ------------------------------------------------------------

def test_validator_completeness(assets_dir):
    per_class = 5
    for code, seeder in DEFECT_SEEDERS.items():
        for k in range(per_class):
            rng = random.Random(5000 + k)
            clean = random_script(rng, allow_gates=False)
            assert all(d.code != code for d in validate_script(clean)), (
                f"{code} false positive on clean generated script {k}"
            )
            seeded = seeder(clean, rng)
            found = [d for d in validate_script(seeded) if d.code == code]
            assert found, f"{code} missed on seeded script {k}"

    reference = parse_script((assets_dir / "remind_lite.ssync.tsv").read_text())
    diagnostics = validate_script(reference)
    assert diagnostics == [], f"false positives on reference script: {diagnostics}"
    _report(f"validator completeness: {per_class} instances x {len(DEFECT_SEEDERS)} defect classes")
