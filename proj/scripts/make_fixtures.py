#!/usr/bin/env python3
"""Regenerates the synthetic fixture images, mock scenarios, and eval datasets.

Outputs are committed; rerun only when the fixtures need to change.
"""

import hashlib
import json
import math
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def image_hash(img):
    rgba = img.convert("RGBA")
    w, h = rgba.size
    return hashlib.sha256(f"{w}x{h}:".encode() + rgba.tobytes()).hexdigest()


def save(img, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, optimize=False)
    return image_hash(Image.open(path))


def circle(cx, cy, r, n=16):
    return [[round(cx + r * math.cos(2 * math.pi * k / n), 2), round(cy + r * math.sin(2 * math.pi * k / n), 2)] for k in range(n)]


def person_outline(x, y, w, h):
    cx = x + w / 2
    return [[cx - 5, y], [cx + 5, y], [cx + 6, y + 12], [x + w, y + 20], [x + w, y + h],
            [cx + 2, y + h], [cx, y + 50], [cx - 2, y + h], [x, y + h], [x, y + 20], [cx - 6, y + 12]]


def pose(x, y, w, h, visible=17):
    cx = x + w / 2
    pts = [
        (cx, y + 6), (cx - 2, y + 4), (cx + 2, y + 4), (cx - 4, y + 5), (cx + 4, y + 5),
        (x + 4, y + 18), (x + w - 4, y + 18), (x + 2, y + 32), (x + w - 2, y + 32),
        (x + 2, y + 44), (x + w - 2, y + 44), (cx - 5, y + 46), (cx + 5, y + 46),
        (cx - 6, y + 60), (cx + 6, y + 60), (cx - 6, y + h - 2), (cx + 6, y + h - 2),
    ]
    return [[round(px, 1), round(py, 1), i < visible] for i, (px, py) in enumerate(pts)]


def family():
    img = Image.new("RGBA", (160, 120), (0, 0, 0, 255))
    d = ImageDraw.Draw(img)
    for yy in range(120):
        shade = (110 + yy // 2, 160 + yy // 3, 230 - yy) if yy < 70 else (60, 140 - (yy - 70), 50)
        d.line([(0, yy), (159, yy)], fill=shade + (255,))
    for x0, tone in ((20, (200, 150, 120)), (110, (150, 100, 80))):
        d.rectangle([x0, 50, x0 + 29, 109], fill=(40, 60, 140, 255))
        d.ellipse([x0 + 7, 30, x0 + 22, 48], fill=tone + (255,))
    d.ellipse([65, 50, 84, 69], fill=(240, 200, 170, 255))
    d.point([(71, 57), (78, 57)], fill=(20, 20, 20, 255))
    d.rectangle([60, 90, 109, 109], fill=(180, 30, 30, 255))
    d.rectangle([75, 100, 94, 105], fill=(250, 250, 250, 255))
    d.text((77, 99), "AB12", fill=(0, 0, 0, 255))
    return img


IDENTIFICATION = """```json
[
  {
    "privacy_risk_id": 1,
    "privacyRisk": "Reveals your identity",
    "severity": "Medium",
    "threatActors": ["public users", "acquaintances"],
    "sensitiveElements": [
      {"id": 1, "element": "baby face", "riskCause": "The child's face is clearly recognizable", "markedByUser": true}
    ]
  },
  {
    "privacy_risk_id": 2,
    "privacyRisk": "Reveals where you are",
    "severity": "Medium",
    "threatActors": ["public users"],
    "sensitiveElements": [
      {"id": 2, "element": "license plate", "riskCause": "The plate can be traced to a home address", "markedByUser": false}
    ]
  },
  {
    "privacy_risk_id": 3,
    "privacyRisk": "Shows others nearby",
    "severity": "Low",
    "threatActors": ["public users"],
    "sensitiveElements": [
      {"id": 3, "element": "person", "riskCause": "Adults in the photo did not agree to be shared", "markedByUser": false}
    ]
  }
]
```"""

RECOMMENDATION = json.dumps([
    {"privacy_risk_id": 1, "recommendations": [
        {"element": 1, "manipulation_type": "Generative Replacement",
         "type_description": "Swap the face for a soft toy face",
         "prompt": "a plush teddy bear face, soft daylight",
         "advantages": ["Keeps the scene natural"], "disadvantages": ["Changes the moment"]},
        {"element": 1, "manipulation_type": "Blurring", "type_description": "Soften the face",
         "prompt": "", "advantages": ["Quick and familiar"], "disadvantages": ["Clearly edited"]}]},
    {"privacy_risk_id": 2, "recommendations": [
        {"element": 2, "manipulation_type": "Pixelating", "type_description": "Pixelate the plate",
         "prompt": "", "advantages": ["Plate unreadable"], "disadvantages": ["Visible blocks"]},
        {"element": 2, "manipulation_type": "Masking", "type_description": "Cover the plate",
         "prompt": "", "advantages": ["Fully hidden"], "disadvantages": ["Looks heavy-handed"]}]},
    {"privacy_risk_id": 3, "recommendations": [
        {"element": 3, "manipulation_type": "Silhouette", "type_description": "Turn adults into silhouettes",
         "prompt": "", "advantages": ["Keeps group shape"], "disadvantages": ["Loses expressions"]},
        {"element": 3, "manipulation_type": "Dot Representation", "type_description": "Show adults as light dots",
         "prompt": "", "advantages": ["Keeps posture"], "disadvantages": ["Abstract look"]}]},
], indent=2)


def family_scenario(h):
    return {"images": {h: {
        "detections": [
            {"label": "person", "box": [20, 30, 30, 80], "confidence": 0.93},
            {"label": "person", "box": [110, 30, 30, 80], "confidence": 0.88},
            {"label": "face", "box": [65, 50, 20, 20], "confidence": 0.81},
            {"label": "car", "box": [60, 90, 50, 20], "confidence": 0.9},
            {"label": "license plate", "box": [75, 100, 20, 6], "confidence": 0.72},
        ],
        "grounding": {
            "baby face": [{"box": [65, 50, 20, 20], "confidence": 0.87}],
            "license plate": [{"box": [75, 100, 20, 6], "confidence": 0.9}],
            "person": [{"box": [110, 30, 30, 80], "confidence": 0.85},
                       {"box": [20, 30, 30, 80], "confidence": 0.92}],
        },
        "segments": [
            {"box": [65, 50, 20, 20], "contour": {"points": circle(75, 60, 10), "holes": []}},
            {"box": [20, 30, 30, 80], "contour": {"points": person_outline(20, 30, 30, 80), "holes": []}},
            {"box": [110, 30, 30, 80], "contour": {"points": person_outline(110, 30, 30, 80), "holes": []}},
        ],
        "poses": [
            {"box": [20, 30, 30, 80], "keypoints": pose(20, 30, 30, 80)},
            {"box": [110, 30, 30, 80], "keypoints": pose(110, 30, 30, 80, visible=3)},
        ],
        "identification": [IDENTIFICATION],
        "recommendation": [RECOMMENDATION],
    }}, "chat": {}, "generator": {"refuse_prompts": ["weapon"]}}


def solid(i, size=16):
    return Image.new("RGBA", (size, size), ((37 * i) % 256, (91 * i + 13) % 256, (53 * i + 101) % 256, 255))


# (label, sensitive, category, severity)
SYNTH_POOL = [
    ("face", True, 0, 6), ("license plate", True, 1, 5), ("medication bottle", True, 2, 4),
    ("people in background", True, 3, 3), ("computer screen", True, 4, 7), ("tattoo", True, 5, 2),
    ("passport", True, 0, 7), ("street sign", True, 1, 4), ("diary page", True, 2, 6),
    ("stranger", True, 3, 1), ("bank card", True, 4, 5), ("name badge", True, 0, 3),
    ("tree", False, 5, 1), ("cup", False, 5, 1), ("sofa", False, 5, 2), ("cloud", False, 5, 1),
]


def synthetic(out):
    lines = []
    for i in range(25):
        picks = [SYNTH_POOL[(i * 3 + k) % len(SYNTH_POOL)] for k in range(3)]
        seen = set()
        objs = []
        for label, s, c, v in picks:
            if label in seen:
                continue
            seen.add(label)
            objs.append({"label": label, "sensitive": s, "category": c, "severity": v})
        name = f"synth_{i:02d}.png"
        save(solid(i + 1), out / "images" / name)
        lines.append(json.dumps({"id": f"synth-{i:02d}", "image": f"images/{name}", "objects": objs}))
    (out / "synthetic.jsonl").write_text("\n".join(lines) + "\n")


def report(risks):
    arr = []
    for rid, (label, element, sev) in enumerate(risks, start=1):
        arr.append({"privacy_risk_id": rid, "privacyRisk": label, "severity": sev, "threatActors": ["public users"],
                    "sensitiveElements": [{"id": rid, "element": element, "riskCause": "visible in the photo",
                                           "markedByUser": False}]})
    return json.dumps(arr, indent=2)


def planted(out):
    cases = [
        ("planted-a", [("face", True, 0, 6), ("tree", False, 5, 1), ("license plate", True, 1, 4)],
         [("Reveals your identity", "face", "High"), ("Reveals where you are", "license plate", "Medium")]),
        ("planted-b", [("screen", True, 4, 7), ("cup", False, 5, 1), ("lamp", False, 5, 2)],
         [("Exposes private data", "computer screen", "High"), ("Reveals personal details", "cup", "Low")]),
        ("planted-c", [("passport", True, 0, 7), ("sofa", False, 5, 1), ("window", False, 5, 1)],
         [("Shows others nearby", "dog", "Low")]),
    ]
    lines = []
    scenario = {"images": {}}
    for n, (cid, objs, risks) in enumerate(cases):
        name = f"{cid}.png"
        h = save(solid(100 + n), out / "images" / name)
        lines.append(json.dumps({"id": cid, "image": f"images/{name}", "objects": [
            {"label": l, "sensitive": s, "category": c, "severity": v} for l, s, c, v in objs]}))
        scenario["images"][h] = {"identification": [report(risks)]}
    (out / "planted.jsonl").write_text("\n".join(lines) + "\n")
    (out / "planted_scenario.json").write_text(json.dumps(scenario, indent=2) + "\n")


def main():
    h = save(family(), ROOT / "images" / "family.png")
    (ROOT / "scenarios" / "family.json").write_text(json.dumps(family_scenario(h), indent=2) + "\n")
    save(Image.new("RGBA", (8, 8), (0, 0, 0, 255)), ROOT / "images" / "blank.png")
    synthetic(ROOT / "eval")
    planted(ROOT / "eval")


if __name__ == "__main__":
    main()
