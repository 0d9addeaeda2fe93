#!/usr/bin/env python3
"""Render the digit '4' from a set of TrueType fonts into 28x28 binary masks.

The masks are framed the way MNIST digits are: the glyph is scaled so its
larger side spans 20 px and is then shifted so its center of mass sits at
pixel (14, 14). Output is a C++ include file with one ASCII-art bitmap per
font ('#' = ink). Re-run only when the font list changes:

    python3 tools/glyphs/render_glyphs.py > core/src/glyph_bitmaps.inc
"""
import os
import sys

import matplotlib
import numpy as np
from PIL import Image, ImageDraw, ImageFont

FONT_DIR = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "fonts", "ttf")
FONTS = [
    "DejaVuSans.ttf", "DejaVuSans-Bold.ttf", "DejaVuSans-Oblique.ttf", "DejaVuSans-BoldOblique.ttf",
    "DejaVuSansMono.ttf", "DejaVuSansMono-Bold.ttf", "DejaVuSansMono-Oblique.ttf",
    "DejaVuSansMono-BoldOblique.ttf", "DejaVuSerif.ttf", "DejaVuSerif-Bold.ttf",
    "DejaVuSerif-Italic.ttf", "DejaVuSerif-BoldItalic.ttf", "STIXGeneral.ttf", "STIXGeneralBol.ttf",
    "STIXGeneralItalic.ttf", "STIXGeneralBolIta.ttf", "cmr10.ttf", "cmb10.ttf", "cmss10.ttf",
    "cmtt10.ttf",
]
SUPERSAMPLE = 8
BOX = 20
SIDE = 28


def render(font_path):
    font = ImageFont.truetype(font_path, 64 * SUPERSAMPLE // 4)
    canvas = Image.new("L", (64 * SUPERSAMPLE, 64 * SUPERSAMPLE), 0)
    ImageDraw.Draw(canvas).text((8 * SUPERSAMPLE, 4 * SUPERSAMPLE), "4", fill=255, font=font)
    glyph = canvas.crop(canvas.getbbox())
    scale = BOX / max(glyph.size)
    size = (max(1, round(glyph.size[0] * scale)), max(1, round(glyph.size[1] * scale)))
    small = np.asarray(glyph.resize(size, Image.LANCZOS), dtype=np.float64) / 255.0
    ink = small >= 0.5
    ys, xs = np.nonzero(ink)
    cy, cx = ys.mean(), xs.mean()
    out = np.zeros((SIDE, SIDE), dtype=bool)
    oy = int(round(SIDE / 2 - 0.5 - cy))
    ox = int(round(SIDE / 2 - 0.5 - cx))
    for y, x in zip(ys, xs):
        ty, tx = y + oy, x + ox
        if 0 <= ty < SIDE and 0 <= tx < SIDE:
            out[ty, tx] = True
    return out


def main():
    print("// Generated by tools/glyphs/render_glyphs.py. Do not edit by hand.")
    print("// Typeset '4' glyphs, 28x28, '#' = ink.")
    for name in FONTS:
        mask = render(os.path.join(FONT_DIR, name))
        print(f"// {name}")
        print("{")
        for row in mask:
            print('    "' + "".join("#" if v else "." for v in row) + '",')
        print("},")
    return 0


if __name__ == "__main__":
    sys.exit(main())
