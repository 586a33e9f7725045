"""Record the webpad round-trip fixture against the real recognition service.

Produces tests/fixtures/recognize_session.json: a scripted pointer session
(canvas-space polylines), the affine map the pad applies, the exact request
payload that mapping produces, and the raw response bytes the live service
returned for it.  The webpad tests replay the session and assert both sides
byte-for-byte, so this script is the only place the Python service is
touched — run it again only when the service wire format changes.

Usage: python3 scripts/record_fixture.py  (from the frontend/ directory)
"""

import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.request
from pathlib import Path

from inkrec.classifier import ClassifierConfig, train_all
from inkrec.classifier import save_bundle
from inkrec.hmm import TrainConfig
from inkrec.ink import Dataset
from inkrec.rules import Rule, RuleSet, save_rules
from inkrec.synth import ShapeSpec, generate

SCALE = 2.0
OFFSET_X = 12.0
OFFSET_Y = 8.0
K = 2

SPECS = [ShapeSpec("ln", "line", angle=0.2, noise=0.01),
         ShapeSpec("lp", "loop", noise=0.01)]


def canvas_strokes() -> list[list[list[float]]]:
    """Scripted pointer polylines, quantized to quarter CSS pixels.

    Quarter-pixel coordinates and power-of-two scales keep the affine map
    exact in IEEE doubles, so Python and JavaScript compute identical
    payload numbers.
    """
    strokes = []
    for spec in SPECS:
        trace = generate(spec, 1, 1, 1, 7).samples[0].trace
        pts = []
        for x, y in trace.xy:
            cx = round(((float(x) - OFFSET_X) / SCALE) * 4.0) / 4.0
            cy = round(((float(y) - OFFSET_Y) / SCALE) * 4.0) / 4.0
            pts.append([cx, cy])
        strokes.append(pts)
    return strokes


def payload_strokes(canvas: list[list[list[float]]]) -> list[list[list[float]]]:
    return [[[x * SCALE + OFFSET_X, y * SCALE + OFFSET_Y] for x, y in stroke]
            for stroke in canvas]


def main() -> None:
    out_path = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recognize_session.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        samples = []
        for spec in SPECS:
            samples.extend(generate(spec, 6, 1, 1, 42).samples)
        cfg = ClassifierConfig(n_states=3,
                               train=TrainConfig(max_iterations=4, target_mixtures=2))
        classifier = train_all(Dataset(samples), cfg)
        save_bundle(classifier, root / "bundle")
        save_rules(RuleSet([Rule(("ln", "lp"), "akA", "অ")]), root / "rules.json")

        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        proc = subprocess.Popen(
            [sys.executable, "-m", "inkrec.cli", "serve",
             "--bundle", str(root / "bundle"), "--rules", str(root / "rules.json"),
             "--port", str(port)],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            for _ in range(60):
                try:
                    with urllib.request.urlopen(f"{base}/api/health", timeout=2) as r:
                        if json.load(r)["status"] == "ok":
                            break
                except OSError:
                    time.sleep(0.5)
            else:
                raise RuntimeError("service did not come up")

            canvas = canvas_strokes()
            request = {"strokes": payload_strokes(canvas), "k": K}
            body = json.dumps(request).encode("utf-8")
            req = urllib.request.Request(
                f"{base}/api/recognize", data=body,
                headers={"content-type": "application/json"})
            with urllib.request.urlopen(req, timeout=10) as r:
                response_body = r.read().decode("utf-8")
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    fixture = {
        "affine": {"scaleX": SCALE, "scaleY": SCALE, "offsetX": OFFSET_X, "offsetY": OFFSET_Y},
        "k": K,
        "canvas_strokes": canvas_strokes(),
        "request_strokes": payload_strokes(canvas_strokes()),
        "response_body": response_body,
    }
    out_path.write_text(json.dumps(fixture, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out_path}")
    print(f"response: {response_body[:160]}...")


if __name__ == "__main__":
    main()
