#!/usr/bin/env python3
"""Regenerate the Munsell hue-sector table and the 20-color reference table.

Requires `colour-science` (pip install colour-science). Run from the repo root:

    python3 scripts/regen_munsell_table.py

Writes crates/core/assets/munsell_sectors.json and prints the reference
classification of the named test colors (frozen in colorlab unit tests).
"""
import colorsys
import json
import warnings

import numpy as np
import colour

# value/chroma at which family boundaries are sampled
ANCHOR = "5/10"

FAMILIES = ["R", "YR", "Y", "GY", "G", "BG", "B", "PB", "P", "RP"]

warnings.filterwarnings("ignore")

C = colour.CCS_ILLUMINANTS["CIE 1931 2 Degree Standard Observer"]["C"]
D65 = colour.CCS_ILLUMINANTS["CIE 1931 2 Degree Standard Observer"]["D65"]


def munsell_to_srgb(spec):
    xyY = colour.munsell_colour_to_xyY(spec)
    XYZ = colour.xyY_to_XYZ(xyY)
    XYZ = colour.chromatic_adaptation(
        XYZ, colour.xy_to_XYZ(C), colour.xy_to_XYZ(D65), method="Von Kries"
    )
    rgb = colour.XYZ_to_sRGB(XYZ)
    return np.clip(rgb, 0.0, 1.0)


def hsv_hue(rgb):
    h, _, _ = colorsys.rgb_to_hsv(*rgb)
    return h * 360.0


def srgb_to_munsell(rgb255):
    rgb = np.asarray(rgb255, dtype=float) / 255.0
    XYZ = colour.sRGB_to_XYZ(rgb)
    XYZ = colour.chromatic_adaptation(
        XYZ, colour.xy_to_XYZ(D65), colour.xy_to_XYZ(C), method="Von Kries"
    )
    xyY = colour.XYZ_to_xyY(XYZ)
    return colour.xyY_to_munsell_colour(xyY)


def family_of(notation):
    for fam in sorted(FAMILIES, key=len, reverse=True):
        head = notation.split(" ")[0]
        if head.endswith(fam):
            return fam
    return None


def main():
    centers = {f: hsv_hue(munsell_to_srgb(f"5{f} {ANCHOR}")) for f in FAMILIES}
    # Family k starts at the 10-step boundary of its predecessor (10RP = 0R, ...).
    lower = {
        f: round(hsv_hue(munsell_to_srgb(f"10{FAMILIES[i - 1]} {ANCHOR}")), 4)
        for i, f in enumerate(FAMILIES)
    }
    table = {
        "version": 2,
        "source": f"Munsell renotation family boundaries 10X {ANCHOR}, illuminant C adapted to D65 sRGB",
        "centers_deg": {f: round(centers[f], 4) for f in FAMILIES},
        "lower_bounds_deg": lower,
    }
    with open("crates/core/assets/munsell_sectors.json", "w") as fh:
        json.dump(table, fh, indent=2)
        fh.write("\n")
    print(json.dumps(table, indent=2))

    named = [
        ("red", (255, 0, 0)), ("worked_sky", (77, 153, 231)), ("orange", (255, 165, 0)),
        ("gold", (255, 215, 0)), ("yellow", (255, 255, 0)), ("olive", (128, 128, 0)),
        ("yellowgreen", (154, 205, 50)), ("green", (0, 128, 0)), ("seagreen", (46, 139, 87)), ("teal", (0, 128, 128)), ("turquoise", (64, 224, 208)),
        ("steelblue", (70, 130, 180)), ("royalblue", (65, 105, 225)), ("navy", (0, 0, 128)),
        ("purple", (128, 0, 128)), ("darkviolet", (148, 0, 211)), ("magenta", (255, 0, 255)),
        ("deeppink", (255, 20, 147)), ("crimson", (220, 20, 60)), ("chocolate", (210, 105, 30)),
        ("skyblue", (135, 206, 235)), ("indigo", (75, 0, 130)), ("salmon", (250, 128, 114)),
    ]
    for name, rgb in named:
        try:
            m = srgb_to_munsell(rgb)
        except Exception as exc:  # noqa: BLE001
            m = f"ERR {exc.__class__.__name__}"
        h = hsv_hue(np.asarray(rgb) / 255.0)
        print(f"{name:12s} {rgb} hsv_h={h:7.2f} munsell={m} family={family_of(m) if not m.startswith('ERR') else None}")


if __name__ == "__main__":
    main()
